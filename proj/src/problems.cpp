#include "nlaccel/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "nlaccel/errors.hpp"

namespace nlaccel {

namespace {

Vector gaussian_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    // column-major fill keeps the draw order independent of Eigen internals
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

Matrix orthonormal_columns(const Matrix& g) {
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(g.rows(), g.cols());
    const Matrix r = qr.matrixQR();
    for (Eigen::Index j = 0; j < g.cols(); ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

// log(1 + exp(-t))
double softplus_neg(double t) { return std::max(-t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

// 1 / (1 + exp(t))
double sigmoid_neg(double t) {
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(t));
}

}  // namespace

Matrix random_orthogonal(Eigen::Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return orthonormal_columns(gaussian_matrix(d, d, rng));
}

Objective QuadraticProblem::objective() const {
    Objective obj;
    obj.dimension = A.rows();
    const Matrix hess = A;
    const Vector xs = x_star;
    obj.value = [hess, xs](const Vector& x) {
        const Vector e = x - xs;
        return 0.5 * e.dot(hess * e);
    };
    obj.gradient = [hess, xs](const Vector& x) { return Vector(hess * (x - xs)); };
    obj.L_smooth = L_smooth;
    obj.mu = mu;
    obj.hessian = A;
    obj.x_star = x_star;
    return obj;
}

QuadraticProblem quadratic_from_spectrum(const Vector& eigenvalues, std::uint64_t seed) {
    if (eigenvalues.size() == 0) throw std::invalid_argument("empty spectrum");
    if (eigenvalues.minCoeff() <= 0.0) throw std::invalid_argument("spectrum must be positive");
    const Eigen::Index d = eigenvalues.size();
    std::mt19937_64 rng(seed);
    const Matrix Q = orthonormal_columns(gaussian_matrix(d, d, rng));
    QuadraticProblem p;
    p.A = Q * eigenvalues.asDiagonal() * Q.transpose();
    p.A = 0.5 * (p.A + p.A.transpose());
    p.mu = eigenvalues.minCoeff();
    p.L_smooth = eigenvalues.maxCoeff();
    p.x_star = gaussian_vector(d, rng).normalized();
    p.b = p.A * p.x_star;
    return p;
}

QuadraticProblem synthetic_quadratic(Eigen::Index d, double condition, std::uint64_t seed, double L_smooth) {
    if (d < 1) throw std::invalid_argument("dimension must be positive");
    if (!(condition >= 1.0)) throw std::invalid_argument("condition must be >= 1");
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    Vector eig(d);
    const double lo = std::log(L_smooth / condition), hi = std::log(L_smooth);
    std::uniform_real_distribution<double> uniform(lo, hi);
    eig(0) = L_smooth / condition;
    for (Eigen::Index i = 1; i + 1 < d; ++i) eig(i) = std::exp(uniform(rng));
    eig(d - 1) = L_smooth;
    if (d == 1) eig(0) = L_smooth;
    std::sort(eig.data(), eig.data() + d);
    if (condition == 1.0) {
        QuadraticProblem p;
        p.A = L_smooth * Matrix::Identity(d, d);
        p.mu = p.L_smooth = L_smooth;
        std::mt19937_64 xr(seed);
        p.x_star = gaussian_vector(d, xr).normalized();
        p.b = p.A * p.x_star;
        return p;
    }
    QuadraticProblem p = quadratic_from_spectrum(eig, seed);
    p.mu = eig(0);
    p.L_smooth = eig(d - 1);
    return p;
}

double logistic_value(const LogisticProblem& p, const Vector& x) {
    const Vector t = p.labels.cwiseProduct(p.A * x);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) sum += softplus_neg(t(i));
    return sum + 0.5 * p.mu * x.squaredNorm();
}

Vector logistic_gradient(const LogisticProblem& p, const Vector& x) {
    const Vector t = p.labels.cwiseProduct(p.A * x);
    Vector s(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) s(i) = -p.labels(i) * sigmoid_neg(t(i));
    return p.A.transpose() * s + p.mu * x;
}

double LogisticProblem::L_smooth() const {
    const double n = spectral_norm(A);
    return 0.25 * n * n + mu;
}

Matrix LogisticProblem::hessian(const Vector& x) const {
    const Vector t = labels.cwiseProduct(A * x);
    Vector w(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        const double s = sigmoid_neg(t(i));
        w(i) = s * (1.0 - s);
    }
    Matrix h = A.transpose() * w.asDiagonal() * A;
    h.diagonal().array() += mu;
    return h;
}

Objective LogisticProblem::objective() const {
    Objective obj;
    obj.dimension = A.cols();
    const LogisticProblem copy = *this;
    obj.value = [copy](const Vector& x) { return logistic_value(copy, x); };
    obj.gradient = [copy](const Vector& x) { return logistic_gradient(copy, x); };
    obj.L_smooth = L_smooth();
    obj.mu = mu;
    return obj;
}

LogisticProblem synthetic_logistic(Eigen::Index n, Eigen::Index d, double inv_condition, std::uint64_t seed,
                                   const SyntheticLogisticOptions& options) {
    if (n < 1 || d < 1 || n < d) throw std::invalid_argument("need n >= d >= 1");
    if (!(inv_condition > 1.0)) throw std::invalid_argument("inverse condition number must exceed 1");
    if (!(options.smallest_singular > 0.0 && options.smallest_singular <= 1.0))
        throw std::invalid_argument("smallest singular value must lie in (0, 1]");
    std::mt19937_64 rng(seed);
    const Matrix U = orthonormal_columns(gaussian_matrix(n, d, rng));
    const Matrix V = orthonormal_columns(gaussian_matrix(d, d, rng));
    Vector s(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double frac = d == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(d - 1);
        s(i) = std::pow(options.smallest_singular, frac);
    }
    LogisticProblem p;
    p.A = U * s.asDiagonal() * V.transpose();
    const Vector w = gaussian_vector(d, rng);
    const Vector margin = p.A * w;
    const double spread = std::sqrt(margin.squaredNorm() / static_cast<double>(n));
    const Vector noise = gaussian_vector(n, rng);
    p.labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        p.labels(i) = margin(i) + options.label_noise * spread * noise(i) >= 0.0 ? 1.0 : -1.0;
    const double smooth = 0.25 * s(0) * s(0);
    p.mu = smooth / (inv_condition - 1.0);
    return p;
}

LogisticProblem parse_dataset(std::istream& in, const DatasetOptions& options) {
    std::vector<double> labels;
    std::vector<std::map<long, double>> rows;
    long max_index = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream tokens(line);
        std::string tok;
        if (!(tokens >> tok)) continue;
        double label = 0.0;
        try {
            std::size_t used = 0;
            label = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError(line_no, "bad label '" + tok + "'");
        }
        if (label != 1.0 && label != -1.0) throw ParseError(line_no, "label must be +1 or -1");
        std::map<long, double> row;
        while (tokens >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) throw ParseError(line_no, "expected idx:val, got '" + tok + "'");
            long idx = 0;
            double val = 0.0;
            try {
                std::size_t used = 0;
                idx = std::stol(tok.substr(0, colon), &used);
                if (used != colon) throw std::invalid_argument(tok);
                const std::string vs = tok.substr(colon + 1);
                val = std::stod(vs, &used);
                if (used != vs.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ParseError(line_no, "bad entry '" + tok + "'");
            }
            if (idx < 1) throw ParseError(line_no, "feature indices are 1-based");
            if (!std::isfinite(val)) throw ParseError(line_no, "non-finite value");
            if (!row.emplace(idx, val).second) throw ParseError(line_no, "duplicate feature index " + std::to_string(idx));
            max_index = std::max(max_index, idx);
        }
        labels.push_back(label);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw EmptyDataset("dataset has no samples");
    if (max_index == 0) throw EmptyDataset("dataset has no features");
    LogisticProblem p;
    p.A = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
    p.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        p.labels(static_cast<Eigen::Index>(i)) = labels[i];
        for (const auto& [idx, val] : rows[i]) p.A(static_cast<Eigen::Index>(i), idx - 1) = val;
    }
    if (options.normalize_rows) {
        for (Eigen::Index i = 0; i < p.A.rows(); ++i) {
            const double nrm = p.A.row(i).norm();
            if (nrm > 0.0) p.A.row(i) /= nrm;
        }
    }
    if (options.scale_gram) {
        const double nrm = spectral_norm(p.A);
        if (nrm > 0.0) p.A /= nrm;
    }
    p.mu = options.mu;
    return p;
}

LogisticProblem load_dataset(const std::string& path, const DatasetOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path);
    return parse_dataset(in, options);
}

void write_dataset(const std::string& path, const LogisticProblem& problem) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot write dataset " + path);
    for (Eigen::Index i = 0; i < problem.A.rows(); ++i) {
        std::fputs(problem.labels(i) > 0 ? "+1" : "-1", f);
        for (Eigen::Index j = 0; j < problem.A.cols(); ++j)
            if (problem.A(i, j) != 0.0) std::fprintf(f, " %ld:%.17g", static_cast<long>(j + 1), problem.A(i, j));
        std::fputc('\n', f);
    }
    std::fclose(f);
}

Vector logistic_dual_prox(const Vector& z, double sigma, double tolerance, ProxReport* report) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    // With s = -1/(1+e^t) the optimality condition becomes
    // F(t) = sigma t + s(t) - z = 0, increasing, bracketed by [z/sigma, (z+1)/sigma].
    Vector out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        double lo = z(i) / sigma, hi = (z(i) + 1.0) / sigma;
        double t = 0.5 * (lo + hi);
        bool done = false;
        int it = 0;
        for (; it < 100; ++it) {
            const double sn = sigmoid_neg(t);
            const double F = sigma * t - sn - z(i);
            if (std::abs(F) <= tolerance) {
                done = true;
                break;
            }
            if (F > 0.0) hi = t; else lo = t;
            const double dF = sigma + sn * (1.0 - sn);
            double next = t - F / dF;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (next == t) {
                done = true;
                break;
            }
            t = next;
        }
        if (report) {
            if (!done) ++report->failures;
            report->max_iterations_used = std::max(report->max_iterations_used, it);
        }
        out(i) = -sigmoid_neg(t);
    }
    return out;
}

Vector RidgeProblem::solution() const {
    return sym_solve_shifted(A.transpose() * A, mu, A.transpose() * b);
}

Objective RidgeProblem::objective() const {
    Objective obj;
    obj.dimension = A.cols();
    const Matrix a = A;
    const Vector rhs = b;
    const double m = mu;
    obj.value = [a, rhs, m](const Vector& x) { return 0.5 * (a * x - rhs).squaredNorm() + 0.5 * m * x.squaredNorm(); };
    obj.gradient = [a, rhs, m](const Vector& x) { return Vector(a.transpose() * (a * x - rhs) + m * x); };
    const double nrm = spectral_norm(A);
    obj.L_smooth = nrm * nrm + mu;
    obj.mu = mu;
    Matrix h = A.transpose() * A;
    h.diagonal().array() += mu;
    obj.hessian = h;
    obj.x_star = solution();
    return obj;
}

RidgeProblem synthetic_ridge(Eigen::Index m, Eigen::Index n, double mu, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    RidgeProblem p;
    p.A = gaussian_matrix(m, n, rng) / std::sqrt(static_cast<double>(m));
    p.b = gaussian_vector(m, rng);
    p.mu = mu;
    return p;
}

TVField tv_gradient(const Matrix& image) {
    const Eigen::Index h = image.rows(), w = image.cols();
    TVField f{Matrix::Zero(h, w), Matrix::Zero(h, w)};
    if (h > 1) f.gx.topRows(h - 1) = image.bottomRows(h - 1) - image.topRows(h - 1);
    if (w > 1) f.gy.leftCols(w - 1) = image.rightCols(w - 1) - image.leftCols(w - 1);
    return f;
}

Matrix tv_divergence(const TVField& field) {
    const Eigen::Index h = field.gx.rows(), w = field.gx.cols();
    Matrix d = Matrix::Zero(h, w);
    if (h > 1) {
        d.topRows(h - 1) += field.gx.topRows(h - 1);
        d.bottomRows(h - 1) -= field.gx.topRows(h - 1);
    }
    if (w > 1) {
        d.leftCols(w - 1) += field.gy.leftCols(w - 1);
        d.rightCols(w - 1) -= field.gy.leftCols(w - 1);
    }
    return d;
}

TVField tv_dual_prox(const TVField& field) {
    TVField out = field;
    const Matrix scale = (field.gx.array().square() + field.gy.array().square()).sqrt().max(1.0).matrix();
    out.gx.array() /= scale.array();
    out.gy.array() /= scale.array();
    return out;
}

double tv_primal_value(const Matrix& x, const TVDenoiseProblem& problem) {
    if (x.rows() != problem.noisy.rows() || x.cols() != problem.noisy.cols())
        throw DimensionMismatch("image shape differs from problem");
    const TVField g = tv_gradient(x);
    const double tv = (g.gx.array().square() + g.gy.array().square()).sqrt().sum();
    return tv + 0.5 * problem.mu * (x - problem.noisy).squaredNorm();
}

TVDenoiseProblem noisy_image(std::uint64_t seed, Eigen::Index h, Eigen::Index w, double noise_level, double mu) {
    if (h < 2 || w < 2) throw std::invalid_argument("image must be at least 2x2");
    if (noise_level < 0.0) throw std::invalid_argument("noise level must be nonnegative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TVDenoiseProblem p;
    p.mu = mu;
    p.truth = Matrix::Constant(h, w, 0.3);
    const int count = 2 + static_cast<int>(rng() % 3);
    for (int k = 0; k < count; ++k) {
        const auto rh = std::max<Eigen::Index>(1, static_cast<Eigen::Index>((0.15 + 0.35 * unit(rng)) * static_cast<double>(h)));
        const auto rw = std::max<Eigen::Index>(1, static_cast<Eigen::Index>((0.15 + 0.35 * unit(rng)) * static_cast<double>(w)));
        const auto r0 = static_cast<Eigen::Index>(unit(rng) * static_cast<double>(h - rh));
        const auto c0 = static_cast<Eigen::Index>(unit(rng) * static_cast<double>(w - rw));
        p.truth.block(r0, c0, rh, rw).setConstant(0.2 + 0.6 * unit(rng));
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    p.noisy = p.truth;
    if (noise_level > 0.0) {
        for (Eigen::Index j = 0; j < w; ++j)
            for (Eigen::Index i = 0; i < h; ++i)
                p.noisy(i, j) = std::clamp(p.truth(i, j) + noise_level * normal(rng), 0.0, 1.0);
    }
    return p;
}

Vector flatten(const Matrix& image) { return Eigen::Map<const Vector>(image.data(), image.size()); }

Matrix unflatten(const Vector& v, Eigen::Index h, Eigen::Index w) {
    if (v.size() != h * w) throw DimensionMismatch("vector size differs from image size");
    return Eigen::Map<const Matrix>(v.data(), h, w);
}

Vector flatten(const TVField& field) {
    Vector out(2 * field.gx.size());
    out.head(field.gx.size()) = flatten(field.gx);
    out.tail(field.gy.size()) = flatten(field.gy);
    return out;
}

TVField unflatten_field(const Vector& v, Eigen::Index h, Eigen::Index w) {
    if (v.size() != 2 * h * w) throw DimensionMismatch("vector size differs from field size");
    return TVField{unflatten(v.head(h * w), h, w), unflatten(v.tail(h * w), h, w)};
}

namespace {

std::string next_pgm_token(std::istream& in) {
    std::string tok;
    char ch;
    while (in.get(ch)) {
        if (ch == '#') {
            std::string rest;
            std::getline(in, rest);
            if (!tok.empty()) return tok;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(ch);
    }
    return tok;
}

}  // namespace

Matrix read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image " + path);
    const std::string magic = next_pgm_token(in);
    if (magic != "P2" && magic != "P5") throw ParseError(1, "not a PGM file: " + path);
    long w = 0, h = 0, maxval = 0;
    try {
        w = std::stol(next_pgm_token(in));
        h = std::stol(next_pgm_token(in));
        maxval = std::stol(next_pgm_token(in));
    } catch (const std::exception&) {
        throw ParseError(1, "bad PGM header in " + path);
    }
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw ParseError(1, "bad PGM header in " + path);
    Matrix img(h, w);
    for (long i = 0; i < h; ++i) {
        for (long j = 0; j < w; ++j) {
            long v = 0;
            if (magic == "P2") {
                const std::string tok = next_pgm_token(in);
                if (tok.empty()) throw ParseError(1, "truncated PGM data in " + path);
                v = std::stol(tok);
            } else if (maxval < 256) {
                const int c = in.get();
                if (c == EOF) throw ParseError(1, "truncated PGM data in " + path);
                v = c;
            } else {
                const int hi = in.get(), lo = in.get();
                if (lo == EOF) throw ParseError(1, "truncated PGM data in " + path);
                v = (hi << 8) | lo;
            }
            img(i, j) = static_cast<double>(v) / static_cast<double>(maxval);
        }
    }
    return img;
}

void write_pgm(const std::string& path, const Matrix& image, bool ascii) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image " + path);
    out << (ascii ? "P2" : "P5") << "\n" << image.cols() << " " << image.rows() << "\n255\n";
    for (Eigen::Index i = 0; i < image.rows(); ++i) {
        for (Eigen::Index j = 0; j < image.cols(); ++j) {
            const int v = static_cast<int>(std::lround(std::clamp(image(i, j), 0.0, 1.0) * 255.0));
            if (ascii) out << v << (j + 1 == image.cols() ? '\n' : ' ');
            else out.put(static_cast<char>(v));
        }
    }
    if (!out) throw IoError("failed writing image " + path);
}

}  // namespace nlaccel
