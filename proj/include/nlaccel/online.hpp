#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "nlaccel/drivers.hpp"
#include "nlaccel/extrapolate.hpp"

namespace nlaccel {

struct RegularizationSchedule {
    double exponent_r = 0.0;
    double exponent_s = 0.0;
};

// lambda = D^r
double schedule_lambda(const RegularizationSchedule& schedule, double D_estimate);
// tau = D^-s
double schedule_tau(const RegularizationSchedule& schedule, double D_estimate);

struct OnlineState {
    IterateWindow window;
    double lambda = 1e-8;  // relative multiplier of ||R||^2
    double eta = 1.0;
    // D proxy: last residual norm over the first one, so D starts at 1 and vanishes
    std::optional<RegularizationSchedule> schedule;
    double reference_residual = 0.0;
    Vector y;  // current point y_{N-1}
    std::size_t iteration = 0;
};

OnlineState make_online_state(const Vector& x0, std::size_t capacity = 10, double lambda = 1e-8, double eta = 1.0);

struct OnlineDiagnostics {
    ExtrapolationCoefficients coeffs;
    double last_coefficient = 0.0;
    Eigen::Index window_rank = 0;
    double lambda_used = 0.0;
    double residual_norm = 0.0;  // ||x_N - y_{N-1}||
    bool retried = false;
    bool limit_fallback = false;
};

struct OnlineStepResult {
    Vector y;
    Vector x;  // the fresh image g(y_{N-1})
    OnlineDiagnostics diagnostics;
};

OnlineStepResult online_rna_step(OnlineState& state, const FixedPointOperator& op);

Eigen::Index numerical_rank(const Matrix& R, double relative_tol = 1e-10);

enum class LastCoefficientStatus { NonzeroLast, RankDeficientConverged };

struct LastCoefficientReport {
    LastCoefficientStatus status = LastCoefficientStatus::NonzeroLast;
    Eigen::Index rank = 0;
    double last_ratio = 0.0;      // |c_N| / ||c||
    double residual_ratio = 0.0;  // ||Rc|| / ||R||
};

LastCoefficientReport last_coefficient_check(const Matrix& R, const ExtrapolationCoefficients& coeffs);

// x_0..x_k and y_0..y_{k-1} of a run of the general template.
struct MomentumHistory {
    std::vector<Vector> xs;
    std::vector<Vector> ys;
};

// h(z) <= 0 accepts the extrapolation.
using DescentCondition = std::function<double(const Vector& z)>;

struct GuardResult {
    Vector y;
    Vector z;
    bool extrapolated = false;
};

// z_k = (x_extr - sum_{j<k} alpha_j x_j - sum_j beta_j y_{j-1}) / alpha_k
GuardResult guarded_momentum_step(const Vector& x_extr, const MomentumHistory& history, const CombinationRow& row,
                                  const DescentCondition& condition);

// Runs a base rule with RNA extrapolation guarded at every step.
struct GuardedMomentumState {
    IterateWindow window;
    MomentumHistory history;
    double lambda = 1e-8;
    double eta = 1.0;
};

GuardedMomentumState make_guarded_state(const Vector& x0, std::size_t capacity = 10, double lambda = 1e-8);
GuardResult guarded_momentum_advance(GuardedMomentumState& state, const std::function<CombinationRow(std::size_t)>& rule,
                                     const DescentCondition& condition, const FixedPointOperator& op);

struct AdaptiveNesterovState {
    IterateWindow window;
    Vector x_prev;  // anchor x_{i-1} of the momentum term
    Vector y_prev;
    double lambda = 1e-8;
    double eta = 1.0;
    std::size_t iteration = 0;
};

AdaptiveNesterovState make_adaptive_state(const Vector& x0, std::size_t capacity = 10, double lambda = 1e-8);

struct AdaptiveStepResult {
    Vector y;
    Vector x;       // anchor x_i: z when the extrapolation is taken, else the gradient step
    Vector x_grad;  // y_{i-1} - grad f(y_{i-1}) / L
    Vector z;
    Vector y_extr;
    bool extrapolated = false;
    double f_reference = 0.0;  // f(y_{i-1})
    double grad_reference = 0.0;
    double f_z = 0.0;
};

AdaptiveStepResult adaptive_nesterov_step(AdaptiveNesterovState& state, const NesterovParams& params, const Objective& objective);

}  // namespace nlaccel
