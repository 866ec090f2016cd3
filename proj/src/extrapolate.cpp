#include "nlaccel/extrapolate.hpp"

#include <cmath>

#include "nlaccel/errors.hpp"

namespace nlaccel {

IterateWindow::IterateWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("window capacity must be positive");
}

void IterateWindow::push(const Vector& x, const Vector& y_prev) {
    if (x.size() != y_prev.size()) throw DimensionMismatch("x and y have different sizes");
    if (!xs_.empty() && x.size() != xs_.front().size())
        throw DimensionMismatch("iterate size differs from window dimension");
    xs_.push_back(x);
    ys_.push_back(y_prev);
    if (xs_.size() > capacity_) {
        xs_.pop_front();
        ys_.pop_front();
    }
}

void IterateWindow::clear() {
    xs_.clear();
    ys_.clear();
}

Eigen::Index IterateWindow::dimension() const { return xs_.empty() ? 0 : xs_.front().size(); }

Matrix IterateWindow::X() const {
    Matrix out(dimension(), static_cast<Eigen::Index>(xs_.size()));
    for (std::size_t j = 0; j < xs_.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = xs_[j];
    return out;
}

Matrix IterateWindow::Y() const {
    Matrix out(dimension(), static_cast<Eigen::Index>(ys_.size()));
    for (std::size_t j = 0; j < ys_.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = ys_[j];
    return out;
}

Matrix residuals(const IterateWindow& window) {
    if (window.empty()) throw EmptyWindow("residuals of an empty window");
    Matrix R(window.dimension(), static_cast<Eigen::Index>(window.size()));
    for (std::size_t j = 0; j < window.size(); ++j)
        R.col(static_cast<Eigen::Index>(j)) = window.x(j) - window.y(j);
    return R;
}

namespace {

ExtrapolationCoefficients averaging_coefficients(Eigen::Index n) {
    ExtrapolationCoefficients out;
    out.c = Vector::Constant(n, 1.0 / static_cast<double>(n));
    return out;
}

// z = (A^T A)^{-1} 1 from an upper-triangular factor T with A P = Q T.
Vector gram_inverse_ones(const Matrix& T, const Eigen::PermutationMatrix<Eigen::Dynamic>& perm) {
    const Eigen::Index n = T.cols();
    Vector ones = Vector::Ones(n);
    Vector w = T.topLeftCorner(n, n).triangularView<Eigen::Upper>().transpose().solve(ones);
    Vector z = T.topLeftCorner(n, n).triangularView<Eigen::Upper>().solve(w);
    return perm * z;
}

}  // namespace

ExtrapolationCoefficients rna_coefficients(const Matrix& R, double lambda) {
    const Eigen::Index n = R.cols();
    if (n == 0) throw EmptyWindow("no residual columns");
    if (lambda < 0.0 || std::isnan(lambda)) throw std::invalid_argument("lambda must be nonnegative");
    const double norm = spectral_norm(R);
    if (norm == 0.0) {
        auto out = averaging_coefficients(n);
        out.converged = true;
        out.lambda = lambda;
        return out;
    }
    if (std::isinf(lambda)) {
        auto out = averaging_coefficients(n);
        out.lambda = lambda;
        out.averaging = true;
        return out;
    }
    const Matrix scaled = R / norm;
    Vector z;
    if (lambda == 0.0) {
        if (R.rows() < n) throw SingularSystem("more columns than rows with lambda = 0");
        Eigen::ColPivHouseholderQR<Matrix> qr(scaled);
        const Matrix T = qr.matrixR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
        // |t_ii|^2 is the pivot of the Gram matrix scaled by ||R^T R||
        if (T.diagonal().cwiseAbs().minCoeff() <= 1e-7)
            throw SingularSystem("R^T R is numerically singular");
        z = gram_inverse_ones(T, qr.colsPermutation());
    } else {
        Matrix augmented(scaled.rows() + n, n);
        augmented.topRows(scaled.rows()) = scaled;
        augmented.bottomRows(n) = std::sqrt(lambda) * Matrix::Identity(n, n);
        Eigen::HouseholderQR<Matrix> qr(augmented);
        const Matrix T = qr.matrixQR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
        Eigen::PermutationMatrix<Eigen::Dynamic> identity(n);
        identity.setIdentity();
        z = gram_inverse_ones(T, identity);
    }
    ExtrapolationCoefficients out;
    out.c = z / z.sum();
    out.lambda = lambda;
    return out;
}

ExtrapolationCoefficients minimal_residual_coefficients(const Matrix& R) {
    const Eigen::Index n = R.cols();
    if (n == 0) throw EmptyWindow("no residual columns");
    const double norm = spectral_norm(R);
    if (norm == 0.0) {
        auto out = averaging_coefficients(n);
        out.converged = true;
        return out;
    }
    ExtrapolationCoefficients out = averaging_coefficients(n);
    if (n == 1) return out;
    // c = 1/n + B u with B an orthonormal basis of the complement of 1
    Eigen::HouseholderQR<Matrix> ones_qr(Matrix::Ones(n, 1));
    const Matrix B = Matrix(ones_qr.householderQ()).rightCols(n - 1);
    const Matrix scaled = R / norm;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(scaled * B);
    const Vector u = cod.solve(-scaled * out.c);
    out.c += B * u;
    out.c /= out.c.sum();
    return out;
}

Vector extrapolate_point(const IterateWindow& window, const ExtrapolationCoefficients& coeffs) {
    if (static_cast<std::size_t>(coeffs.c.size()) != window.size())
        throw DimensionMismatch("coefficient length differs from window width");
    if (std::abs(coeffs.c.sum() - 1.0) > 1e-10) throw std::invalid_argument("coefficients must sum to one");
    Vector xc = Vector::Zero(window.dimension());
    Vector yc = Vector::Zero(window.dimension());
    for (std::size_t j = 0; j < window.size(); ++j) {
        xc += coeffs.c(static_cast<Eigen::Index>(j)) * window.x(j);
        yc += coeffs.c(static_cast<Eigen::Index>(j)) * window.y(j);
    }
    if (coeffs.eta == 1.0) return xc;
    if (coeffs.eta == 0.0) return yc;
    return (1.0 - coeffs.eta) * yc + coeffs.eta * xc;
}

double coefficient_norm_bound(double lambda, std::size_t n) {
    if (!(lambda > 0.0) || n == 0) throw std::invalid_argument("need lambda > 0 and n >= 1");
    return std::sqrt(1.0 + 1.0 / lambda) / std::sqrt(static_cast<double>(n));
}

LambdaSearch lambda_from_tau(const Matrix& R, double tau) {
    const Eigen::Index n = R.cols();
    if (n == 0) throw EmptyWindow("no residual columns");
    if (tau < 0.0 || std::isnan(tau)) throw std::invalid_argument("tau must be nonnegative");
    LambdaSearch out;
    if (std::isinf(tau)) return out;
    const double target = (1.0 + tau) / std::sqrt(static_cast<double>(n));
    if (minimal_residual_coefficients(R).c.norm() <= target) return out;
    if (tau == 0.0) {
        out.lambda = kLambdaCap;
        out.capped = true;
        return out;
    }
    auto norm_at = [&](double lambda) { return rna_coefficients(R, lambda).c.norm(); };
    if (norm_at(kLambdaCap) > target) {
        out.lambda = kLambdaCap;
        out.capped = true;
        return out;
    }
    if (norm_at(kLambdaFloor) <= target) {
        out.lambda = kLambdaFloor;
        return out;
    }
    double lo = std::log(kLambdaFloor), hi = std::log(kLambdaCap);
    const double target_sq = target * target;
    for (int it = 0; it < 200; ++it) {
        out.iterations = it + 1;
        const double mid = 0.5 * (lo + hi);
        const double nrm = norm_at(std::exp(mid));
        if (std::abs(nrm * nrm - target_sq) <= 1e-12 * target_sq) {
            lo = hi = mid;
            break;
        }
        if (nrm > target) lo = mid; else hi = mid;
        if (hi - lo < 1e-15) break;
    }
    out.lambda = std::exp(0.5 * (lo + hi));
    return out;
}

ExtrapolationCoefficients cna_coefficients(const Matrix& R, double tau) {
    const Eigen::Index n = R.cols();
    if (n == 0) throw EmptyWindow("no residual columns");
    if (tau < 0.0 || std::isnan(tau)) throw std::invalid_argument("tau must be nonnegative");
    ExtrapolationCoefficients out;
    if (spectral_norm(R) == 0.0) {
        out = averaging_coefficients(n);
        out.converged = true;
    } else if (tau == 0.0) {
        out = averaging_coefficients(n);
        out.lambda = std::numeric_limits<double>::infinity();
        out.averaging = true;
    } else {
        const LambdaSearch search = lambda_from_tau(R, tau);
        if (search.lambda == 0.0) {
            try {
                out = rna_coefficients(R, 0.0);
            } catch (const SingularSystem&) {
                out = minimal_residual_coefficients(R);
            }
        } else {
            out = rna_coefficients(R, search.lambda);
            out.averaging = search.capped;
        }
    }
    out.tau = tau;
    return out;
}

RnaResult rna(const IterateWindow& window, const RnaOptions& options) {
    const Matrix R = residuals(window);
    RnaResult out;
    try {
        out.coeffs = rna_coefficients(R, options.lambda);
    } catch (const SingularSystem&) {
        if (options.lambda != 0.0) throw;
        out.coeffs = minimal_residual_coefficients(R);
        out.limit_fallback = true;
    }
    out.coeffs.eta = options.eta;
    out.point = extrapolate_point(window, out.coeffs);
    return out;
}

}  // namespace nlaccel
