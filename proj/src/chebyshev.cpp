#include "nlaccel/chebyshev.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "nlaccel/errors.hpp"

namespace nlaccel {

Complex PolynomialCoeffs::operator()(Complex z) const {
    Complex acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * z + c[i];
    return acc;
}

Complex PolynomialCoeffs::sum() const {
    Complex s = 0.0;
    for (const auto& v : c) s += v;
    return s;
}

ComplexMatrix PolynomialCoeffs::apply(const Matrix& G) const {
    const Eigen::Index n = G.rows();
    const ComplexMatrix Gc = G.cast<Complex>();
    ComplexMatrix acc = ComplexMatrix::Zero(n, n);
    for (std::size_t i = c.size(); i-- > 0;) {
        acc = acc * Gc;
        acc.diagonal().array() += c[i];
    }
    return acc;
}

double segment_minmax(double kappa, int k) {
    if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
    if (k < 0) throw std::invalid_argument("degree must be nonnegative");
    if (k == 0) return 1.0;
    if (kappa == 1.0) return 0.0;
    const double t0 = (1.0 + kappa) / (1.0 - kappa);
    double prev = 1.0, cur = t0;
    for (int j = 1; j < k; ++j) {
        const double next = 2.0 * t0 * cur - prev;
        prev = cur;
        cur = next;
        if (!std::isfinite(cur)) return 0.0;
    }
    return 1.0 / std::abs(cur);
}

double segment_minmax_rho(double kappa, int k) {
    if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
    const double rho = (1.0 - std::sqrt(kappa)) / (1.0 + std::sqrt(kappa));
    const double pk = std::pow(rho, k);
    return 2.0 * pk / (1.0 + pk * pk);
}

Complex complex_chebyshev(Complex z, int k) {
    if (k < 0) throw std::invalid_argument("degree must be nonnegative");
    if (k == 0) return 1.0;
    if (k == 1) return z;
    // z = (v + 1/v) / 2, pick |v| >= 1
    const Complex root = std::sqrt(z * z - 1.0);
    Complex v = z + root;
    if (std::abs(v) < 1.0) v = z - root;
    const Complex vk = std::pow(v, k);
    return 0.5 * (vk + 1.0 / vk);
}

bool fischer_conditions(double ratio_r, double normalization, int k) {
    if (k < 5 || !(ratio_r > 1.0) || !std::isfinite(ratio_r)) return false;
    const double s2 = std::sqrt(2.0);
    const double first = 0.5 * (std::pow(ratio_r, s2) + std::pow(ratio_r, -s2));
    const double ar = 0.5 * (ratio_r + 1.0 / ratio_r);
    const double second = (2.0 * ar * ar - 1.0 + std::sqrt(2.0 * ar * ar * ar * ar - ar * ar + 1.0)) / (2.0 * ar);
    const double xi = std::abs(normalization);
    return xi >= first || xi >= second;
}

EllipseMinmax ellipse_minmax(const EllipseRegion& region, int k) {
    if (k < 0) throw std::invalid_argument("degree must be nonnegative");
    if (region.contains(Complex(1.0, 0.0), 0.0)) throw NormalizationInsideRegion("1 lies in the region");
    EllipseMinmax out;
    if (k == 0) return out;
    const Complex one_rel = Complex(1.0, 0.0) - region.center;
    if (region.focal_d == 0.0) {
        // disk: p(z) = ((z - c) / (1 - c))^k
        out.value = std::pow(region.semi_major_a / std::abs(one_rel), k);
        return out;
    }
    const Complex focus_dir = region.real_major ? Complex(region.focal_d, 0.0) : Complex(0.0, region.focal_d);
    const Complex xi = one_rel / focus_dir;
    const double r = region.ratio_r;
    const double top = 0.5 * (std::pow(r, k) + std::pow(r, -k));
    out.value = top / std::abs(complex_chebyshev(xi, k));
    out.fischer_applicable = std::abs(xi.imag()) <= 1e-12 * std::abs(xi) && fischer_conditions(r, xi.real(), k);
    return out;
}

ConstrainedMinmax constrained_minmax_points(const std::vector<Complex>& points, int k, double tau) {
    if (k < 0) throw std::invalid_argument("degree must be nonnegative");
    if (tau < 0.0 || std::isnan(tau)) throw std::invalid_argument("tau must be nonnegative");
    if (points.empty()) throw std::invalid_argument("no sample points");
    ConstrainedMinmax out;
    const Eigen::Index m = static_cast<Eigen::Index>(points.size());
    const Eigen::Index n = k + 1;
    if (k == 0) {
        out.poly.c = {Complex(1.0, 0.0)};
        out.value = 1.0;
        return out;
    }
    // V(j, i) = z_j^i
    ComplexMatrix V(m, n);
    for (Eigen::Index j = 0; j < m; ++j) {
        Complex p = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            V(j, i) = p;
            p *= points[static_cast<std::size_t>(j)];
        }
    }
    const Vector c0 = Vector::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::HouseholderQR<Matrix> ones_qr(Matrix::Ones(n, 1));
    const Matrix B = Matrix(ones_qr.householderQ()).rightCols(k);
    const double radius = std::isinf(tau) ? std::numeric_limits<double>::infinity()
                                          : std::sqrt(tau * (tau + 2.0) / static_cast<double>(n));
    if (radius == 0.0) {
        // only the uniform polynomial is feasible
        for (Eigen::Index i = 0; i < n; ++i) out.poly.c.emplace_back(c0(i), 0.0);
        out.value = (V * c0.cast<Complex>()).cwiseAbs().maxCoeff();
        return out;
    }

    auto evaluate = [&](const Vector& c, Vector* grad) {
        const ComplexVector vals = V * c.cast<Complex>();
        Eigen::Index arg = 0;
        const double best = vals.cwiseAbs().maxCoeff(&arg);
        if (grad) {
            const Complex pv = vals(arg);
            const double scale = best > 0.0 ? 1.0 / best : 0.0;
            *grad = (V.row(arg).transpose() * std::conj(pv)).real() * scale;
        }
        return best;
    };

    Vector best_c = c0;
    double best_value = evaluate(c0, nullptr);
    if (radius == 0.0) {
        out.value = best_value;
        out.poly.c.assign(best_c.data(), best_c.data() + n);
        return out;
    }
    // central-cut ellipsoid method in the affine coordinates u, c = c0 + B u
    const double start = std::min(radius, 1e8);
    Matrix P = start * start * Matrix::Identity(k, k);
    Vector u = Vector::Zero(k);
    const double dim = static_cast<double>(k);
    const int max_iter = 4000 + 1500 * k * k;
    int it = 0;
    for (; it < max_iter; ++it) {
        Vector g;
        const double unorm = u.norm();
        if (unorm > radius) {
            g = u / unorm;
        } else {
            const Vector c = c0 + B * u;
            Vector gc;
            const double val = evaluate(c, &gc);
            if (val < best_value) {
                best_value = val;
                best_c = c;
            }
            g = B.transpose() * gc;
        }
        const Vector Pg = P * g;
        const double gPg = g.dot(Pg);
        if (!(gPg > 0.0)) break;
        const double width = std::sqrt(gPg);
        if (width < 1e-12 * std::max(best_value, 1e-300)) break;
        const Vector step = Pg / width;
        if (k == 1) {
            u -= 0.5 * step;
            P *= 0.25;
        } else {
            u -= step / (dim + 1.0);
            P = (dim * dim / (dim * dim - 1.0)) * (P - (2.0 / (dim + 1.0)) * step * step.transpose());
            P = 0.5 * (P + P.transpose());
        }
    }
    out.iterations = it;
    out.value = best_value;
    out.poly.c.assign(best_c.data(), best_c.data() + n);
    return out;
}

ConstrainedMinmax constrained_minmax(const NumericalRangeBoundary& boundary, int k, double tau, std::size_t n_samples) {
    std::vector<Complex> pts = densify_hull(boundary.hull, n_samples);
    pts.insert(pts.end(), boundary.points.begin(), boundary.points.end());
    return constrained_minmax_points(pts, k, tau);
}

CrouzeixReport crouzeix_check(const Matrix& G, const PolynomialCoeffs& poly, const NumericalRangeBoundary& boundary) {
    CrouzeixReport rep;
    rep.lhs = spectral_norm(real_embedding(poly.apply(G)));
    double sampled = 0.0;
    for (const auto& z : boundary.points) sampled = std::max(sampled, std::abs(poly(z)));
    rep.rhs = kCrouzeixConstant * sampled;
    rep.holds = rep.lhs <= rep.rhs;
    return rep;
}

void write_minmax_surface(std::ostream& out, const PolynomialCoeffs& poly, double re_lo, double re_hi, double im_lo,
                          double im_hi, std::size_t n) {
    out << "re,im,abs_p\n";
    char buf[128];
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const double re = re_lo + (re_hi - re_lo) * static_cast<double>(a) / denom;
            const double im = im_lo + (im_hi - im_lo) * static_cast<double>(b) / denom;
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", re, im, std::abs(poly(Complex(re, im))));
            out << buf;
        }
    }
}

}  // namespace nlaccel
