#pragma once

#include <cstddef>
#include <deque>
#include <limits>

#include "nlaccel/linalg.hpp"

namespace nlaccel {

// Bounded FIFO history of pairs (x_i, y_{i-1}).
class IterateWindow {
public:
    explicit IterateWindow(std::size_t capacity = 10);

    void push(const Vector& x, const Vector& y_prev);
    void clear();

    std::size_t size() const { return xs_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return xs_.empty(); }
    Eigen::Index dimension() const;

    const Vector& x(std::size_t j) const { return xs_[j]; }
    const Vector& y(std::size_t j) const { return ys_[j]; }

    Matrix X() const;
    Matrix Y() const;

private:
    std::size_t capacity_;
    std::deque<Vector> xs_;
    std::deque<Vector> ys_;
};

struct ExtrapolationCoefficients {
    Vector c;
    double lambda = 0.0;
    double tau = std::numeric_limits<double>::infinity();
    double eta = 1.0;
    bool converged = false;   // residuals were all zero
    bool averaging = false;   // lambda hit the upper cap of the search
};

// Column j is x_j - y_{j-1}.
Matrix residuals(const IterateWindow& window);

// lambda is relative: the system solved is R^T R + lambda ||R||_2^2 I.
ExtrapolationCoefficients rna_coefficients(const Matrix& R, double lambda);

// Limit of rna_coefficients as lambda -> 0+. Defined for every R, including
// rank-deficient ones: minimum-norm minimiser of ||Rc|| over sum(c) = 1.
ExtrapolationCoefficients minimal_residual_coefficients(const Matrix& R);

// Y c + eta R c.
Vector extrapolate_point(const IterateWindow& window, const ExtrapolationCoefficients& coeffs);

ExtrapolationCoefficients cna_coefficients(const Matrix& R, double tau);

struct LambdaSearch {
    double lambda = 0.0;
    bool capped = false;
    int iterations = 0;
};

inline constexpr double kLambdaFloor = 1e-16;
inline constexpr double kLambdaCap = 1e12;

LambdaSearch lambda_from_tau(const Matrix& R, double tau);

double coefficient_norm_bound(double lambda, std::size_t n);

struct RnaOptions {
    double lambda = 1e-8;
    double eta = 1.0;
};

struct RnaResult {
    Vector point;
    ExtrapolationCoefficients coeffs;
    bool limit_fallback = false;
};

// Full extrapolation step. With lambda = 0 and a singular window the
// minimal-residual limit is used instead of failing.
RnaResult rna(const IterateWindow& window, const RnaOptions& options = {});

}  // namespace nlaccel
