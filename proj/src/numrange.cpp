#include "nlaccel/numrange.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "nlaccel/errors.hpp"

namespace nlaccel {

namespace {

double cross(Complex o, Complex a, Complex b) {
    return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
}

Complex rayleigh_top(const Matrix& sym, const Matrix& skew, const Matrix& G, double theta) {
    const Eigen::Index n = G.rows();
    // H = cos(theta) S + i sin(theta) K, embedded as [[Re, -Im], [Im, Re]]
    Matrix doubled(2 * n, 2 * n);
    const Matrix re = std::cos(theta) * sym;
    const Matrix im = std::sin(theta) * skew;
    doubled << re, -im, im, re;
    doubled = 0.5 * (doubled + doubled.transpose());
    const ExtremeEigen top = sym_eig_extreme(doubled);
    const Vector u = top.max_eigenvector.head(n);
    const Vector w = top.max_eigenvector.tail(n);
    const double nrm = u.squaredNorm() + w.squaredNorm();
    const double real = u.dot(G * u) + w.dot(G * w);
    const double imag = u.dot(G * w) - w.dot(G * u);
    return Complex(real / nrm, imag / nrm);
}

}  // namespace

std::vector<Complex> convex_hull(std::vector<Complex> points) {
    std::sort(points.begin(), points.end(), [](Complex a, Complex b) {
        return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() <= 1) return points;
    double scale = 0.0;
    for (const auto& p : points) scale = std::max(scale, std::abs(p));
    const double eps = 1e-14 * std::max(scale * scale, 1e-300);
    std::vector<Complex> hull(2 * points.size());
    std::size_t k = 0;
    for (const auto& p : points) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= eps) --k;
        hull[k++] = p;
    }
    for (std::size_t i = points.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], points[i]) <= eps) --k;
        hull[k++] = points[i];
    }
    hull.resize(k - 1);
    if (hull.size() == 2 && std::abs(hull[0] - hull[1]) == 0.0) hull.resize(1);
    if (hull.empty()) hull.push_back(points.front());
    return hull;
}

double hull_area(const std::vector<Complex>& hull) {
    if (hull.size() < 3) return 0.0;
    double area = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Complex a = hull[i], b = hull[(i + 1) % hull.size()];
        area += a.real() * b.imag() - b.real() * a.imag();
    }
    return 0.5 * std::abs(area);
}

double support_function(const std::vector<Complex>& hull, double theta) {
    const Complex rot = std::polar(1.0, theta);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& z : hull) best = std::max(best, (rot * z).real());
    return best;
}

bool hull_contains(const std::vector<Complex>& hull, Complex z, double tol) {
    if (hull.empty()) return false;
    if (hull.size() == 1) return std::abs(z - hull[0]) <= tol;
    if (hull.size() == 2) {
        const Complex a = hull[0], b = hull[1];
        const double len2 = std::norm(b - a);
        double t = ((z - a) * std::conj(b - a)).real() / len2;
        t = std::clamp(t, 0.0, 1.0);
        return std::abs(z - (a + t * (b - a))) <= tol;
    }
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Complex a = hull[i], b = hull[(i + 1) % hull.size()];
        if (cross(a, b, z) < -tol * std::abs(b - a)) return false;
    }
    return true;
}

double hausdorff_convex(const std::vector<Complex>& a, const std::vector<Complex>& b, std::size_t n_directions) {
    double worst = 0.0;
    for (std::size_t k = 0; k < n_directions; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_directions);
        worst = std::max(worst, std::abs(support_function(a, theta) - support_function(b, theta)));
    }
    return worst;
}

std::vector<Complex> densify_hull(const std::vector<Complex>& hull, std::size_t n_points) {
    if (hull.size() <= 1) return hull;
    std::vector<Complex> loop = hull;
    if (hull.size() == 2) loop = {hull[0], hull[1]};
    double perimeter = 0.0;
    const std::size_t edges = hull.size() == 2 ? 1 : hull.size();
    for (std::size_t i = 0; i < edges; ++i) perimeter += std::abs(loop[(i + 1) % loop.size()] - loop[i]);
    std::vector<Complex> out;
    for (std::size_t i = 0; i < edges; ++i) {
        const Complex a = loop[i], b = loop[(i + 1) % loop.size()];
        const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(
            std::ceil(static_cast<double>(n_points) * std::abs(b - a) / perimeter)));
        for (std::size_t s = 0; s < pieces; ++s) out.push_back(a + (b - a) * (static_cast<double>(s) / static_cast<double>(pieces)));
    }
    if (hull.size() == 2) out.push_back(hull[1]);
    return out;
}

NumericalRangeBoundary boundary_points(const Matrix& G, std::size_t n_angles) {
    if (G.rows() != G.cols() || G.rows() == 0) throw DimensionMismatch("numerical range needs a square matrix");
    if (n_angles < 8) throw std::invalid_argument("need at least 8 angles");
    const Matrix sym = 0.5 * (G + G.transpose());
    const Matrix skew = 0.5 * (G - G.transpose());
    NumericalRangeBoundary out;
    out.thetas.reserve(n_angles);
    out.points.reserve(n_angles);
    for (std::size_t k = 0; k < n_angles; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_angles);
        out.thetas.push_back(theta);
        out.points.push_back(rayleigh_top(sym, skew, G, theta));
    }
    out.hull = convex_hull(out.points);
    out.max_real = -std::numeric_limits<double>::infinity();
    for (const auto& z : out.hull) out.max_real = std::max(out.max_real, z.real());
    return out;
}

NumericalRangeBoundary boundary_points_adaptive(const Matrix& G, std::size_t start, double area_tol, std::size_t max_angles) {
    NumericalRangeBoundary current = boundary_points(G, start);
    for (std::size_t n = 2 * start; n <= max_angles; n *= 2) {
        NumericalRangeBoundary finer = boundary_points(G, n);
        const double change = std::abs(hull_area(finer.hull) - hull_area(current.hull));
        current = std::move(finer);
        if (change < area_tol) break;
    }
    return current;
}

double max_real_part(const Matrix& G) {
    if (G.rows() != G.cols()) throw DimensionMismatch("max_real_part needs a square matrix");
    return sym_eig_extreme(0.5 * (G + G.transpose())).max_eigenvalue;
}

EllipseRegion ellipse_from_axes(Complex center, double real_semi, double imag_semi) {
    EllipseRegion e;
    e.center = center;
    e.x_end = center - real_semi;
    e.y_end = center + real_semi;
    e.w_end = center - Complex(0.0, imag_semi);
    e.z_end = center + Complex(0.0, imag_semi);
    e.real_major = real_semi >= imag_semi;
    e.semi_major_a = std::max(real_semi, imag_semi);
    e.semi_minor_b = std::min(real_semi, imag_semi);
    e.focal_d = std::sqrt(std::max(0.0, e.semi_major_a * e.semi_major_a - e.semi_minor_b * e.semi_minor_b));
    if (e.focal_d > 0.0) {
        const double q = e.semi_major_a / e.focal_d;
        e.ratio_r = q + std::sqrt(std::max(0.0, q * q - 1.0));
    } else {
        e.ratio_r = std::numeric_limits<double>::infinity();
    }
    return e;
}

EllipseRegion ellipse_2x2(double a, double b, double c, double d) {
    const double real_semi = 0.5 * std::sqrt((a - d) * (a - d) + (b + c) * (b + c));
    const double imag_semi = 0.5 * std::abs(b - c);
    return ellipse_from_axes(Complex(0.5 * (a + d), 0.0), real_semi, imag_semi);
}

bool EllipseRegion::contains(Complex z, double tol) const {
    const double h1 = real_semi_axis(), h2 = imag_semi_axis();
    const Complex rel = z - center;
    if (h1 == 0.0 && h2 == 0.0) return std::abs(rel) <= tol;
    if (h2 == 0.0) return std::abs(rel.imag()) <= tol && std::abs(rel.real()) <= h1 + tol;
    if (h1 == 0.0) return std::abs(rel.real()) <= tol && std::abs(rel.imag()) <= h2 + tol;
    const double u = rel.real() / h1, v = rel.imag() / h2;
    return u * u + v * v <= 1.0 + tol;
}

std::vector<Complex> EllipseRegion::sample(std::size_t n) const {
    std::vector<Complex> out;
    out.reserve(n);
    const double h1 = real_semi_axis(), h2 = imag_semi_axis();
    for (std::size_t k = 0; k < n; ++k) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        out.push_back(center + Complex(h1 * std::cos(t), h2 * std::sin(t)));
    }
    return out;
}

BlockOperator nesterov_operator(const Matrix& A, double beta) {
    if (A.rows() != A.cols()) throw DimensionMismatch("A must be square");
    const ExtremeEigen ext = sym_eig_extreme(A);
    if (ext.min_eigenvalue < -1e-12 || ext.max_eigenvalue >= 1.0)
        throw SpectrumOutOfRange("spectrum of A must lie in [0, 1)");
    const Eigen::Index d = A.rows();
    BlockOperator op;
    op.kind = BlockKind::NesterovFull;
    op.G = Matrix::Zero(2 * d, 2 * d);
    op.G.topRightCorner(d, d) = A;
    op.G.bottomLeftCorner(d, d) = -beta * Matrix::Identity(d, d);
    op.G.bottomRightCorner(d, d) = (1.0 + beta) * A;
    return op;
}

std::vector<BlockOperator> nesterov_eigen_blocks(const Vector& spectrum, double beta) {
    std::vector<BlockOperator> out;
    for (Eigen::Index j = 0; j < spectrum.size(); ++j) {
        const double lam = spectrum(j);
        if (!(lam >= 0.0 && lam < 1.0)) throw SpectrumOutOfRange("eigenvalue outside [0, 1)");
        BlockOperator op;
        op.kind = BlockKind::NesterovEigenBlock;
        op.G.resize(2, 2);
        op.G << 0.0, lam, -beta, (1.0 + beta) * lam;
        out.push_back(op);
    }
    return out;
}

double nesterov_max_real(double L_over_mu) {
    if (!(L_over_mu >= 1.0)) throw std::invalid_argument("L/mu must be at least 1");
    const double lam = 1.0 - 1.0 / L_over_mu;
    const double root = std::sqrt(L_over_mu);
    const double beta = (root - 1.0) / (root + 1.0);
    const double lead = (1.0 + beta) * lam;
    return 0.5 * (lead + std::sqrt(lead * lead + (lam - beta) * (lam - beta)));
}

BlockOperator cp_operator(const Matrix& A, double sigma, double tau_step, double mu) {
    if (!(sigma > 0.0) || !(tau_step > 0.0) || mu < 0.0) throw std::invalid_argument("need sigma, tau > 0 and mu >= 0");
    const Eigen::Index m = A.rows(), n = A.cols();
    const double ds = 1.0 + sigma, dt = 1.0 + tau_step * mu;
    BlockOperator op;
    op.kind = BlockKind::ChambollePockQuadratic;
    op.G.resize(m + n, m + n);
    op.G.topLeftCorner(m, m) = Matrix::Identity(m, m) / ds;
    op.G.topRightCorner(m, n) = sigma * A / ds;
    op.G.bottomLeftCorner(n, m) = tau_step * A.transpose() / (ds * dt);
    op.G.bottomRightCorner(n, n) = Matrix::Identity(n, n) / dt - tau_step * sigma * A.transpose() * A / (ds * dt);
    return op;
}

Matrix cp_iteration_jacobian(const Matrix& A, double sigma, double tau_step, double mu) {
    Matrix J = cp_operator(A, sigma, tau_step, mu).G;
    J.bottomLeftCorner(A.cols(), A.rows()) *= -1.0;
    return J;
}

NumericalRangeBoundary power_range(const Matrix& G, int p, std::size_t n_angles) {
    if (p < 1) throw std::invalid_argument("power must be at least 1");
    Matrix P = G;
    for (int k = 1; k < p; ++k) P = P * G;
    return boundary_points(P, n_angles);
}

bool acceleration_feasible(const NumericalRangeBoundary& boundary) { return boundary.max_real < 1.0 - 1e-9; }

void write_boundary_csv(std::ostream& out, const NumericalRangeBoundary& boundary) {
    out << "theta,re,im\n";
    char buf[128];
    for (std::size_t k = 0; k < boundary.points.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", boundary.thetas[k], boundary.points[k].real(),
                      boundary.points[k].imag());
        out << buf;
    }
}

}  // namespace nlaccel
