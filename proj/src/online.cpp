#include "nlaccel/online.hpp"

#include <cmath>

#include "nlaccel/errors.hpp"

namespace nlaccel {

double schedule_lambda(const RegularizationSchedule& schedule, double D_estimate) {
    if (!(D_estimate > 0.0)) throw std::invalid_argument("distance estimate must be positive");
    if (schedule.exponent_r < 0.0) throw std::invalid_argument("exponent r must be nonnegative");
    return std::pow(D_estimate, schedule.exponent_r);
}

double schedule_tau(const RegularizationSchedule& schedule, double D_estimate) {
    if (!(D_estimate > 0.0)) throw std::invalid_argument("distance estimate must be positive");
    if (schedule.exponent_s < 0.0) throw std::invalid_argument("exponent s must be nonnegative");
    return std::pow(D_estimate, -schedule.exponent_s);
}

OnlineState make_online_state(const Vector& x0, std::size_t capacity, double lambda, double eta) {
    OnlineState s{IterateWindow(capacity), lambda, eta, std::nullopt, 0.0, x0, 0};
    return s;
}

Eigen::Index numerical_rank(const Matrix& R, double relative_tol) {
    if (R.size() == 0) return 0;
    Eigen::ColPivHouseholderQR<Matrix> qr(R);
    qr.setThreshold(relative_tol);
    return qr.rank();
}

OnlineStepResult online_rna_step(OnlineState& state, const FixedPointOperator& op) {
    OnlineStepResult out;
    out.x = op.apply(state.y);
    if (!out.x.allFinite()) throw NonFiniteIterate("non-finite image in online step");
    state.window.push(out.x, state.y);
    const Matrix R = residuals(state.window);
    OnlineDiagnostics& diag = out.diagnostics;
    diag.residual_norm = (out.x - state.y).norm();
    double lambda = state.lambda;
    if (state.reference_residual == 0.0) state.reference_residual = diag.residual_norm;
    if (state.schedule && diag.residual_norm > 0.0)
        lambda = schedule_lambda(*state.schedule, diag.residual_norm / state.reference_residual);
    RnaResult res;
    try {
        res = rna(state.window, RnaOptions{lambda, state.eta});
    } catch (const SingularSystem&) {
        lambda *= 10.0;
        diag.retried = true;
        res = rna(state.window, RnaOptions{lambda, state.eta});
    }
    diag.coeffs = res.coeffs;
    diag.lambda_used = lambda;
    diag.limit_fallback = res.limit_fallback;
    diag.last_coefficient = res.coeffs.c(res.coeffs.c.size() - 1);
    diag.window_rank = numerical_rank(R);
    out.y = res.point;
    if (!out.y.allFinite()) throw NonFiniteIterate("non-finite extrapolation in online step");
    state.y = out.y;
    ++state.iteration;
    return out;
}

LastCoefficientReport last_coefficient_check(const Matrix& R, const ExtrapolationCoefficients& coeffs) {
    if (coeffs.c.size() != R.cols()) throw DimensionMismatch("coefficient length differs from window width");
    LastCoefficientReport rep;
    rep.rank = numerical_rank(R);
    const double cn = coeffs.c.norm();
    rep.last_ratio = cn > 0.0 ? std::abs(coeffs.c(coeffs.c.size() - 1)) / cn : 0.0;
    const double rn = spectral_norm(R);
    rep.residual_ratio = rn > 0.0 ? (R * coeffs.c).norm() / rn : 0.0;
    rep.status = rep.rank == R.cols() ? LastCoefficientStatus::NonzeroLast : LastCoefficientStatus::RankDeficientConverged;
    return rep;
}

GuardResult guarded_momentum_step(const Vector& x_extr, const MomentumHistory& history, const CombinationRow& row,
                                  const DescentCondition& condition) {
    const auto k = static_cast<std::size_t>(row.alpha.size());
    if (k == 0 || static_cast<std::size_t>(row.beta.size()) != k) throw DimensionMismatch("malformed combination row");
    if (history.xs.size() < k + 1 || history.ys.size() < k) throw DimensionMismatch("history shorter than the row");
    const double lead = row.alpha(static_cast<Eigen::Index>(k - 1));
    if (lead == 0.0) throw ZeroLeadingCoefficient("alpha_k is zero");
    Vector rest = Vector::Zero(x_extr.size());
    for (std::size_t j = 1; j <= k; ++j) {
        if (j < k) rest += row.alpha(static_cast<Eigen::Index>(j - 1)) * history.xs[j];
        rest += row.beta(static_cast<Eigen::Index>(j - 1)) * history.ys[j - 1];
    }
    GuardResult out;
    out.z = (x_extr - rest) / lead;
    if (condition(out.z) <= 0.0) {
        out.y = x_extr;
        out.extrapolated = true;
    } else {
        out.y = rest + lead * history.xs[k];
    }
    return out;
}

GuardedMomentumState make_guarded_state(const Vector& x0, std::size_t capacity, double lambda) {
    GuardedMomentumState s{IterateWindow(capacity), {}, lambda, 1.0};
    s.history.xs.push_back(x0);
    s.history.ys.push_back(x0);
    return s;
}

GuardResult guarded_momentum_advance(GuardedMomentumState& state, const std::function<CombinationRow(std::size_t)>& rule,
                                     const DescentCondition& condition, const FixedPointOperator& op) {
    const std::size_t k = state.history.xs.size();
    const Vector& y_prev = state.history.ys.back();
    Vector x = op.apply(y_prev);
    state.window.push(x, y_prev);
    state.history.xs.push_back(x);
    const RnaResult extr = rna(state.window, RnaOptions{state.lambda, state.eta});
    const CombinationRow row = rule(k);
    validate_row(row, k);
    GuardResult out = guarded_momentum_step(extr.point, state.history, row, condition);
    state.history.ys.push_back(out.y);
    return out;
}

AdaptiveNesterovState make_adaptive_state(const Vector& x0, std::size_t capacity, double lambda) {
    AdaptiveNesterovState s{IterateWindow(capacity), x0, x0, lambda, 1.0, 0};
    return s;
}

AdaptiveStepResult adaptive_nesterov_step(AdaptiveNesterovState& state, const NesterovParams& params, const Objective& objective) {
    const double L = params.L_smooth, beta = params.beta_momentum;
    AdaptiveStepResult out;
    const Vector grad = objective.gradient(state.y_prev);
    out.f_reference = objective.value(state.y_prev);
    out.grad_reference = grad.norm();
    out.x_grad = state.y_prev - grad / L;
    state.window.push(out.x_grad, state.y_prev);
    out.y_extr = rna(state.window, RnaOptions{state.lambda, state.eta}).point;
    out.z = (out.y_extr + beta * state.x_prev) / (1.0 + beta);
    out.f_z = objective.value(out.z);
    const double threshold = out.f_reference - grad.squaredNorm() / (2.0 * L);
    if (out.y_extr.allFinite() && out.f_z <= threshold) {
        out.extrapolated = true;
        out.x = out.z;
        out.y = out.y_extr;
    } else {
        out.x = out.x_grad;
        out.y = (1.0 + beta) * out.x_grad - beta * state.x_prev;
    }
    state.x_prev = out.x;
    state.y_prev = out.y;
    ++state.iteration;
    return out;
}

}  // namespace nlaccel
