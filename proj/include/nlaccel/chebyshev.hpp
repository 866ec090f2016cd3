#pragma once

#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "nlaccel/linalg.hpp"
#include "nlaccel/numrange.hpp"

namespace nlaccel {

// Monomial coefficients c_0..c_k.
struct PolynomialCoeffs {
    std::vector<Complex> c;

    int degree() const { return static_cast<int>(c.size()) - 1; }
    Complex operator()(Complex z) const;
    Complex sum() const;
    // p(G) by Horner, G real
    ComplexMatrix apply(const Matrix& G) const;
};

struct Segment {
    double lo = 0.0;
    double hi = 0.0;
};

struct ChebyshevQuery {
    int degree_k = 0;
    double kappa = 1.0;
    std::variant<EllipseRegion, Segment> region;
    std::optional<double> tau_bound;
};

// 1 / |T_k((1 + kappa) / (1 - kappa))|
double segment_minmax(double kappa, int k);
// 2 rho^k / (1 + rho^{2k}), rho = (1 - sqrt kappa) / (1 + sqrt kappa)
double segment_minmax_rho(double kappa, int k);

Complex complex_chebyshev(Complex z, int k);

struct EllipseMinmax {
    double value = 1.0;
    bool fischer_applicable = false;  // optimality conditions of the Chebyshev candidate hold
};

EllipseMinmax ellipse_minmax(const EllipseRegion& region, int k);
bool fischer_conditions(double ratio_r, double normalization, int k);

struct ConstrainedMinmax {
    double value = 1.0;
    PolynomialCoeffs poly;
    int iterations = 0;
};

// Minimises max |p| over points spread along the hull of the boundary, subject to
// p(1) = 1 and ||coefficients||_2 <= (1 + tau) / sqrt(k + 1). Real coefficients.
ConstrainedMinmax constrained_minmax(const NumericalRangeBoundary& boundary, int k, double tau, std::size_t n_samples = 512);
ConstrainedMinmax constrained_minmax_points(const std::vector<Complex>& points, int k, double tau);

inline constexpr double kCrouzeixConstant = 11.08;

struct CrouzeixReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

CrouzeixReport crouzeix_check(const Matrix& G, const PolynomialCoeffs& poly, const NumericalRangeBoundary& boundary);

// CSV rows re,im,abs_p over a rectangular grid.
void write_minmax_surface(std::ostream& out, const PolynomialCoeffs& poly, double re_lo, double re_hi, double im_lo,
                          double im_hi, std::size_t n);

}  // namespace nlaccel
