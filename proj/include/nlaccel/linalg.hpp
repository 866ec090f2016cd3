#pragma once

#include <complex>
#include <functional>

#include <Eigen/Dense>

namespace nlaccel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

// (M + shift I) v = rhs for symmetric M. Throws NotPositiveDefinite.
Vector sym_solve_shifted(const Matrix& M, double shift, const Vector& rhs);

struct ExtremeEigen {
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    Vector max_eigenvector;
};

ExtremeEigen sym_eig_extreme(const Matrix& M);

double spectral_norm(const Matrix& M);

// Largest singular value of an operator given only by its action and the
// action of its adjoint.
double spectral_norm_power(const std::function<Vector(const Vector&)>& apply,
                           const std::function<Vector(const Vector&)>& apply_adjoint,
                           Eigen::Index cols, int max_iter = 5000, double tol = 1e-12,
                           unsigned seed = 7);

// Real symmetric embedding [[Re, -Im], [Im, Re]] of a complex matrix.
Matrix real_embedding(const ComplexMatrix& M);

bool all_finite(const Vector& v);

}  // namespace nlaccel
