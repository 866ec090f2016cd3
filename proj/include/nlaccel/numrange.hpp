#pragma once

#include <iosfwd>
#include <vector>

#include "nlaccel/linalg.hpp"

namespace nlaccel {

struct NumericalRangeBoundary {
    std::vector<double> thetas;
    std::vector<Complex> points;  // p_theta, one per angle
    std::vector<Complex> hull;    // counter-clockwise; 1 or 2 vertices when degenerate
    double max_real = 0.0;
};

NumericalRangeBoundary boundary_points(const Matrix& G, std::size_t n_angles = 256);
// Doubles the angle grid from start until the hull area changes by less than area_tol.
NumericalRangeBoundary boundary_points_adaptive(const Matrix& G, std::size_t start = 256, double area_tol = 1e-8,
                                                std::size_t max_angles = 16384);

std::vector<Complex> convex_hull(std::vector<Complex> points);
double hull_area(const std::vector<Complex>& hull);
// max over the hull of Re(e^{i theta} z)
double support_function(const std::vector<Complex>& hull, double theta);
bool hull_contains(const std::vector<Complex>& hull, Complex z, double tol = 0.0);
// Hausdorff distance of two convex sets through their support functions.
double hausdorff_convex(const std::vector<Complex>& a, const std::vector<Complex>& b, std::size_t n_directions = 4096);
// Points spread along the hull perimeter (vertices included).
std::vector<Complex> densify_hull(const std::vector<Complex>& hull, std::size_t n_points);

// lambda_max((G + G^T) / 2)
double max_real_part(const Matrix& G);

struct EllipseRegion {
    Complex x_end, y_end;  // real axis ends
    Complex w_end, z_end;  // imaginary axis ends
    Complex center;
    double focal_d = 0.0;       // center-to-focus distance
    double semi_major_a = 0.0;
    double semi_minor_b = 0.0;
    double ratio_r = 0.0;       // a/d = (r + 1/r) / 2; infinite for circles
    bool real_major = true;     // foci on the horizontal line through the center

    double real_semi_axis() const { return 0.5 * std::abs(y_end - x_end); }
    double imag_semi_axis() const { return 0.5 * std::abs(z_end - w_end); }
    bool contains(Complex z, double tol = 1e-12) const;
    std::vector<Complex> sample(std::size_t n) const;
};

EllipseRegion ellipse_2x2(double a, double b, double c, double d);
EllipseRegion ellipse_from_axes(Complex center, double real_semi, double imag_semi);

enum class BlockKind { NesterovFull, NesterovEigenBlock, ChambollePockQuadratic, Generic };

struct BlockOperator {
    Matrix G;
    BlockKind kind = BlockKind::Generic;
};

// [[0, A], [-beta I, (1 + beta) A]] acting on (x, y); A symmetric with spectrum in [0, 1).
BlockOperator nesterov_operator(const Matrix& A, double beta);
std::vector<BlockOperator> nesterov_eigen_blocks(const Vector& spectrum, double beta);
double nesterov_max_real(double L_over_mu);

// Operator in the form stated for the quadratic primal-dual iteration on (y, x).
// Its lower-left block carries +tau A^T.
BlockOperator cp_operator(const Matrix& A, double sigma, double tau_step, double mu);
// Exact Jacobian of one ridge Chambolle-Pock step with theta = 0 on (y, x);
// its lower-left block is -tau A^T / ((1 + sigma)(1 + tau mu)).
Matrix cp_iteration_jacobian(const Matrix& A, double sigma, double tau_step, double mu);

NumericalRangeBoundary power_range(const Matrix& G, int p, std::size_t n_angles = 256);
bool acceleration_feasible(const NumericalRangeBoundary& boundary);

void write_boundary_csv(std::ostream& out, const NumericalRangeBoundary& boundary);

}  // namespace nlaccel
