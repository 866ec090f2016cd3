#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <limits>
#include <numbers>
#include <sstream>

#include "nlaccel/chebyshev.hpp"
#include "nlaccel/errors.hpp"
#include "oracles.hpp"

using namespace nlaccel;

namespace {

Complex cheb_recurrence(Complex z, int k) {
    if (k == 0) return 1.0;
    Complex prev = 1.0, cur = z;
    for (int i = 1; i < k; ++i) {
        const Complex next = 2.0 * z * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

// Minimax of |p| over [0, hi] with p(1) = 1 by zooming grid search on the free coefficients.
double grid_minimax_segment(double hi, int k) {
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(hi * i / 400.0);
    auto sup = [&](const std::vector<double>& free) {
        std::vector<double> c(free);
        double s = 0.0;
        for (double v : free) s += v;
        c.push_back(1.0 - s);
        double best = 0.0;
        for (double t : grid) best = std::max(best, std::abs(oracle::poly_eval(c, t)));
        return best;
    };
    std::vector<double> center(static_cast<std::size_t>(k), 0.0);
    double width = 8.0, best = sup(center);
    for (int round = 0; round < 60; ++round) {
        std::vector<double> winner = center;
        const int steps = 20;
        if (k == 1) {
            for (int i = -steps; i <= steps; ++i) {
                std::vector<double> c{center[0] + width * i / steps};
                const double v = sup(c);
                if (v < best) best = v, winner = c;
            }
        } else {
            for (int i = -steps; i <= steps; ++i)
                for (int j = -steps; j <= steps; ++j) {
                    std::vector<double> c{center[0] + width * i / steps, center[1] + width * j / steps};
                    const double v = sup(c);
                    if (v < best) best = v, winner = c;
                }
        }
        center = winner;
        width *= 0.6;
    }
    return best;
}

std::vector<Complex> segment_points(double lo, double hi, int n) {
    std::vector<Complex> out;
    for (int i = 0; i < n; ++i) out.emplace_back(lo + (hi - lo) * i / (n - 1), 0.0);
    return out;
}

}  // namespace

TEST_CASE("segment minimax values") {
    CHECK(segment_minmax(1.0, 1) == 0.0);
    CHECK(segment_minmax(0.3, 0) == 1.0);
    CHECK(segment_minmax(0.25, 1) == doctest::Approx(3.0 / 5.0).epsilon(1e-14));
    CHECK(segment_minmax(1.0 / 9.0, 2) == doctest::Approx(8.0 / 17.0).epsilon(1e-14));
    CHECK(std::abs(grid_minimax_segment(0.75, 1) - 0.6) <= 1e-6);
    // a 401-point grid can only undershoot the continuous maximum slightly
    CHECK(std::abs(grid_minimax_segment(8.0 / 9.0, 2) - 8.0 / 17.0) <= 1e-4);
    CHECK_THROWS(segment_minmax(0.0, 2));
    CHECK_THROWS(segment_minmax(1.5, 2));
}

TEST_CASE("segment minimax matches the rho form") {
    for (double kappa : {0.9, 0.5, 0.1, 0.01})
        for (int k = 0; k <= 10; ++k) {
            const double rho = (1 - std::sqrt(kappa)) / (1 + std::sqrt(kappa));
            const double expected = 2 * std::pow(rho, k) / (1 + std::pow(rho, 2 * k));
            CHECK(std::abs(segment_minmax(kappa, k) - expected) <= 1e-12);
            CHECK(std::abs(segment_minmax_rho(kappa, k) - expected) <= 1e-12);
            CHECK(segment_minmax(kappa, k) <= 2 * std::pow(rho, k) + 1e-15);
        }
}

TEST_CASE("complex Chebyshev polynomials") {
    for (int k = 0; k <= 6; ++k) CHECK(std::abs(complex_chebyshev(1.0, k) - 1.0) <= 1e-12);
    CHECK(complex_chebyshev(5.0 / 3.0, 1).real() == doctest::Approx(5.0 / 3.0));
    CHECK(complex_chebyshev(5.0 / 4.0, 2).real() == doctest::Approx(17.0 / 8.0));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const Complex z(n(rng), n(rng));
        for (int k = 0; k <= 8; ++k) {
            const Complex ref = cheb_recurrence(z, k);
            CHECK(std::abs(complex_chebyshev(z, k) - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
        }
    }
    // inside [-1, 1] the value is cos(k arccos x)
    for (double x : {-0.9, -0.2, 0.0, 0.4, 0.99})
        CHECK(std::abs(complex_chebyshev(x, 5) - std::cos(5 * std::acos(x))) <= 1e-12);
}

TEST_CASE("ellipse minimax") {
    const double kappa = 0.2;
    const EllipseRegion seg = ellipse_from_axes(Complex((1 - kappa) / 2, 0), (1 - kappa) / 2, 0.0);
    for (int k = 0; k <= 8; ++k) CHECK(std::abs(ellipse_minmax(seg, k).value - segment_minmax(kappa, k)) <= 1e-8);

    const EllipseRegion e = ellipse_from_axes(Complex(0.3, 0), 0.5, 0.2);
    CHECK(ellipse_minmax(e, 0).value == 1.0);
    // the shifted Chebyshev polynomial attains the reported value on the boundary
    for (int k = 1; k <= 6; ++k) {
        const double d = e.focal_d;
        const Complex norm = cheb_recurrence((e.center - 1.0) / d, k);
        double sup = 0.0;
        for (const auto& z : e.sample(4000)) sup = std::max(sup, std::abs(cheb_recurrence((e.center - z) / d, k) / norm));
        CHECK(ellipse_minmax(e, k).value == doctest::Approx(sup).epsilon(1e-6));
    }
    CHECK_THROWS_AS(ellipse_minmax(ellipse_from_axes(Complex(0.8, 0), 0.5, 0.1), 3), NormalizationInsideRegion);
}

TEST_CASE("ellipse minimax with imaginary major axis and circles") {
    const EllipseRegion tall = ellipse_from_axes(Complex(0.2, 0), 0.1, 0.5);
    for (int k = 1; k <= 5; ++k) {
        const double d = tall.focal_d;
        const Complex norm = cheb_recurrence((tall.center - 1.0) / Complex(0, d), k);
        double sup = 0.0;
        for (const auto& z : tall.sample(4000))
            sup = std::max(sup, std::abs(cheb_recurrence((tall.center - z) / Complex(0, d), k) / norm));
        CHECK(ellipse_minmax(tall, k).value == doctest::Approx(sup).epsilon(1e-6));
    }
    const EllipseRegion disc = ellipse_from_axes(Complex(0.1, 0), 0.4, 0.4);
    for (int k = 1; k <= 5; ++k) CHECK(ellipse_minmax(disc, k).value == doctest::Approx(std::pow(0.4 / 0.9, k)));
}

TEST_CASE("higher eccentricity never slows the rate") {
    const double a = 0.5;
    for (int k : {2, 5, 8}) {
        double prev = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 20; ++i) {
            const double d = a * i / 20.0;
            const EllipseRegion e = ellipse_from_axes(Complex(0.3, 0), a, std::sqrt(a * a - d * d));
            const double v = ellipse_minmax(e, k).value;
            CHECK(v <= prev * (1 + 1e-12));
            prev = v;
        }
    }
}

TEST_CASE("Fischer applicability") {
    CHECK(!fischer_conditions(2.0, 10.0, 4));
    CHECK(!fischer_conditions(1.0, 10.0, 6));
    CHECK(fischer_conditions(2.0, 10.0, 6));
    CHECK(!fischer_conditions(2.0, 1.01, 6));
    const EllipseRegion e = ellipse_from_axes(Complex(0.3, 0), 0.5, 0.2);
    CHECK(!ellipse_minmax(e, 3).fischer_applicable);
    const EllipseRegion tall = ellipse_from_axes(Complex(0.2, 0), 0.1, 0.5);
    CHECK(!ellipse_minmax(tall, 6).fischer_applicable);
}

TEST_CASE("constrained minimax at tau zero is the uniform polynomial") {
    const EllipseRegion e = ellipse_from_axes(Complex(0.2, 0), 0.4, 0.3);
    const std::vector<Complex> pts = e.sample(300);
    for (int k = 1; k <= 4; ++k) {
        const ConstrainedMinmax r = constrained_minmax_points(pts, k, 0.0);
        for (const auto& c : r.poly.c) CHECK(std::abs(c - 1.0 / (k + 1)) <= 1e-9);
        const std::vector<double> uniform(static_cast<std::size_t>(k + 1), 1.0 / (k + 1));
        CHECK(r.value == doctest::Approx(oracle::sup_abs(uniform, pts)).epsilon(1e-9));
    }
}

TEST_CASE("constrained minimax without an effective bound recovers the segment value") {
    for (double kappa : {0.5, 0.1})
        for (int k : {1, 2, 3, 4}) {
            const ConstrainedMinmax r = constrained_minmax_points(segment_points(0.0, 1.0 - kappa, 400), k, 1e4);
            CHECK(std::abs(r.value - segment_minmax(kappa, k)) <= 1e-3);
            CHECK(std::abs(r.poly.sum() - 1.0) <= 1e-10);
        }
}

TEST_CASE("constrained minimax is nonincreasing in tau") {
    const EllipseRegion e = ellipse_from_axes(Complex(0.3, 0), 0.5, 0.25);
    const std::vector<Complex> pts = e.sample(256);
    double prev = std::numeric_limits<double>::infinity();
    for (double tau : {0.0, 0.1, 0.5, 2.0, 10.0}) {
        const ConstrainedMinmax r = constrained_minmax_points(pts, 3, tau);
        double norm = 0.0;
        for (const auto& c : r.poly.c) norm += std::norm(c);
        CHECK(std::sqrt(norm) <= (1 + tau) / 2.0 + 1e-9);
        CHECK(r.value <= prev + 1e-9);
        prev = r.value;
    }
    const double free = constrained_minmax_points(pts, 3, std::numeric_limits<double>::infinity()).value;
    CHECK(free <= prev + 1e-9);
}

TEST_CASE("constrained minimax is stable under doubled sampling") {
    const Matrix G = 0.6 * oracle::random_matrix(6, 6, 2) / oracle::random_matrix(6, 6, 2).norm();
    const NumericalRangeBoundary b = boundary_points(G, 128);
    for (double tau : {0.5, 5.0}) {
        const double coarse = constrained_minmax(b, 4, tau, 256).value;
        const double fine = constrained_minmax(boundary_points(G, 256), 4, tau, 512).value;
        CHECK(std::abs(coarse - fine) <= 1e-3);
    }
}

TEST_CASE("Crouzeix bound") {
    const Matrix G = oracle::random_matrix(5, 5, 1);
    const NumericalRangeBoundary b = boundary_points(G, 128);
    PolynomialCoeffs one{{1.0}};
    const CrouzeixReport r1 = crouzeix_check(G, one, b);
    CHECK(r1.lhs == doctest::Approx(1.0));
    CHECK(r1.rhs == doctest::Approx(kCrouzeixConstant));
    CHECK(r1.holds);

    // normal matrix: ||G|| is the spectral radius, bounded by max |z| on the hull
    const Matrix S = oracle::random_symmetric(5, 4);
    const NumericalRangeBoundary bs = boundary_points(S, 128);
    PolynomialCoeffs z{{0.0, 1.0}};
    const CrouzeixReport rn = crouzeix_check(S, z, bs);
    double hull_max = 0.0;
    for (const auto& p : bs.hull) hull_max = std::max(hull_max, std::abs(p));
    CHECK(rn.lhs <= hull_max + 1e-10);

    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> dim(2, 8), deg(1, 5);
    std::normal_distribution<double> n(0.0, 1.0);
    int failures = 0;
    for (int t = 0; t < 100; ++t) {
        const int d = dim(rng), k = deg(rng);
        const Matrix M = oracle::random_matrix(d, d, 1000 + t);
        PolynomialCoeffs p;
        for (int i = 0; i <= k; ++i) p.c.emplace_back(n(rng), n(rng));
        failures += crouzeix_check(M, p, boundary_points(M, 128)).holds ? 0 : 1;
    }
    CHECK(failures == 0);
}

TEST_CASE("polynomial evaluation") {
    PolynomialCoeffs p{{1.0, -2.0, 0.5}};
    CHECK(p.degree() == 2);
    CHECK(std::abs(p(Complex(2.0, 0.0)) - (1.0 - 4.0 + 2.0)) <= 1e-14);
    CHECK(std::abs(p.sum() - (-0.5)) <= 1e-14);
    const Matrix G = oracle::random_matrix(4, 4, 3);
    const Matrix ref = Matrix::Identity(4, 4) - 2.0 * G + 0.5 * G * G;
    CHECK((p.apply(G).real() - ref).norm() <= 1e-12);
    CHECK(p.apply(G).imag().norm() == 0.0);
}

TEST_CASE("minimax surface CSV") {
    std::ostringstream out;
    write_minmax_surface(out, PolynomialCoeffs{{0.5, 0.5}}, -1, 1, -1, 1, 5);
    const std::string s = out.str();
    CHECK(s.rfind("re,im,abs_p\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 26);
}
