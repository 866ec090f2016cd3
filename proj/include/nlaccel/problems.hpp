#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "nlaccel/linalg.hpp"

namespace nlaccel {

// Smooth objective with oracles. Quadratics also carry their Hessian and
// minimiser so linear forms can be built for tests.
struct Objective {
    Eigen::Index dimension = 0;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    double L_smooth = 1.0;
    double mu = 0.0;
    std::optional<Matrix> hessian;
    std::optional<Vector> x_star;
};

struct QuadraticProblem {
    Matrix A;
    Vector b;
    double mu = 0.0;
    double L_smooth = 1.0;
    Vector x_star;

    double kappa() const { return mu / L_smooth; }
    // f(x) = 1/2 (x - x*)^T A (x - x*)
    Objective objective() const;
};

QuadraticProblem synthetic_quadratic(Eigen::Index d, double condition, std::uint64_t seed, double L_smooth = 1.0);
QuadraticProblem quadratic_from_spectrum(const Vector& eigenvalues, std::uint64_t seed);

Matrix random_orthogonal(Eigen::Index d, std::uint64_t seed);

struct LogisticProblem {
    Matrix A;       // n x d, one sample per row
    Vector labels;  // +-1
    double mu = 0.0;

    double L_smooth() const;
    Objective objective() const;
    Matrix hessian(const Vector& x) const;
};

double logistic_value(const LogisticProblem& p, const Vector& x);
Vector logistic_gradient(const LogisticProblem& p, const Vector& x);

struct SyntheticLogisticOptions {
    double smallest_singular = 0.1;  // singular values log-spaced in [this, 1]
    double label_noise = 0.5;
};

// mu is chosen so that L/mu equals inv_condition.
LogisticProblem synthetic_logistic(Eigen::Index n, Eigen::Index d, double inv_condition, std::uint64_t seed,
                                   const SyntheticLogisticOptions& options = {});

struct DatasetOptions {
    bool normalize_rows = true;
    bool scale_gram = false;  // rescale so that ||A^T A|| = 1
    double mu = 0.0;
};

// "+1 3:0.5 7:1.2" per line, 1-based feature indices.
LogisticProblem load_dataset(const std::string& path, const DatasetOptions& options = {});
LogisticProblem parse_dataset(std::istream& in, const DatasetOptions& options = {});
void write_dataset(const std::string& path, const LogisticProblem& problem);

struct ProxReport {
    int failures = 0;
    int max_iterations_used = 0;
};

// Prox of sigma * f^* for f(u) = sum log(1 + exp(-u_i)), coordinate-wise
// safeguarded Newton. Labels are assumed folded into the data matrix.
Vector logistic_dual_prox(const Vector& z, double sigma, double tolerance = 1e-12, ProxReport* report = nullptr);

inline constexpr double kLogisticDualStrongConvexity = 4.0;
inline constexpr double kRidgeDualStrongConvexity = 1.0;

// min 1/2 ||Ax - b||^2 + mu/2 ||x||^2
struct RidgeProblem {
    Matrix A;
    Vector b;
    double mu = 1.0;

    Vector solution() const;
    Objective objective() const;
};

RidgeProblem synthetic_ridge(Eigen::Index m, Eigen::Index n, double mu, std::uint64_t seed);

struct TVField {
    Matrix gx;  // vertical forward difference
    Matrix gy;  // horizontal forward difference
};

TVField tv_gradient(const Matrix& image);
Matrix tv_divergence(const TVField& field);
TVField tv_dual_prox(const TVField& field);

struct TVDenoiseProblem {
    Matrix noisy;
    Matrix truth;
    double mu = 8.0;
    static constexpr double grad_norm_sq = 8.0;
};

double tv_primal_value(const Matrix& x, const TVDenoiseProblem& problem);
TVDenoiseProblem noisy_image(std::uint64_t seed, Eigen::Index h, Eigen::Index w, double noise_level, double mu = 8.0);

// Flattening used by the primal-dual drivers (column-major).
Vector flatten(const Matrix& image);
Matrix unflatten(const Vector& v, Eigen::Index h, Eigen::Index w);
Vector flatten(const TVField& field);
TVField unflatten_field(const Vector& v, Eigen::Index h, Eigen::Index w);

// Gray-level images in [0, 1]. Reads P2 and P5; writes P5 unless ascii.
Matrix read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Matrix& image, bool ascii = false);

}  // namespace nlaccel
