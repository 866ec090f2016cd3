#include "nlaccel/linalg.hpp"

#include <cmath>
#include <random>

#include "nlaccel/errors.hpp"

namespace nlaccel {

namespace {

void require_symmetric(const Matrix& M) {
    if (M.rows() != M.cols()) throw DimensionMismatch("matrix is not square");
    const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("matrix is not symmetric");
}

}  // namespace

Vector sym_solve_shifted(const Matrix& M, double shift, const Vector& rhs) {
    require_symmetric(M);
    if (rhs.size() != M.rows()) throw DimensionMismatch("rhs size does not match matrix");
    if (shift < 0.0) throw std::invalid_argument("shift must be nonnegative");
    Matrix shifted = M;
    shifted.diagonal().array() += shift;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("nonpositive pivot in Cholesky factorization");
    const Matrix& factor = llt.matrixLLT();
    for (Eigen::Index i = 0; i < factor.rows(); ++i)
        if (!(factor(i, i) > 0.0)) throw NotPositiveDefinite("nonpositive pivot in Cholesky factorization");
    Vector v = llt.solve(rhs);
    // one refinement sweep
    Vector res = rhs - shifted * v;
    v += llt.solve(res);
    return v;
}

ExtremeEigen sym_eig_extreme(const Matrix& M) {
    require_symmetric(M);
    if (M.rows() == 0) throw DimensionMismatch("empty matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(M);
    if (solver.info() != Eigen::Success) throw ConvergenceFailure("symmetric eigensolver did not converge");
    ExtremeEigen out;
    const Eigen::Index n = M.rows();
    out.min_eigenvalue = solver.eigenvalues()(0);
    out.max_eigenvalue = solver.eigenvalues()(n - 1);
    out.max_eigenvector = solver.eigenvectors().col(n - 1).normalized();
    return out;
}

double spectral_norm(const Matrix& M) {
    if (M.size() == 0) throw DimensionMismatch("empty matrix");
    if (M.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    const Matrix gram = M.rows() < M.cols() ? Matrix(M * M.transpose()) : Matrix(M.transpose() * M);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw ConvergenceFailure("symmetric eigensolver did not converge");
    return std::sqrt(std::max(solver.eigenvalues().maxCoeff(), 0.0));
}

double spectral_norm_power(const std::function<Vector(const Vector&)>& apply,
                           const std::function<Vector(const Vector&)>& apply_adjoint,
                           Eigen::Index cols, int max_iter, double tol, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(cols);
    for (Eigen::Index i = 0; i < cols; ++i) v(i) = normal(rng);
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector w = apply_adjoint(apply(v));
        const double next = w.norm();
        if (next == 0.0) return 0.0;
        v = w / next;
        if (std::abs(next - estimate) <= tol * next) return std::sqrt(next);
        estimate = next;
    }
    return std::sqrt(estimate);
}

Matrix real_embedding(const ComplexMatrix& M) {
    const Eigen::Index r = M.rows(), c = M.cols();
    Matrix out(2 * r, 2 * c);
    out.topLeftCorner(r, c) = M.real();
    out.topRightCorner(r, c) = -M.imag();
    out.bottomLeftCorner(r, c) = M.imag();
    out.bottomRightCorner(r, c) = M.real();
    return out;
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace nlaccel
