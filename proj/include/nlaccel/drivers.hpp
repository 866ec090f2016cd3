#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nlaccel/extrapolate.hpp"
#include "nlaccel/problems.hpp"

namespace nlaccel {

struct LinearForm {
    Matrix G;
    Vector x_star;
};

struct FixedPointOperator {
    std::function<Vector(const Vector&)> apply;
    Eigen::Index dimension = 0;
    std::optional<LinearForm> linear_form;
};

// apply(x) = x - step * grad f(x)
FixedPointOperator gradient_operator(const Objective& objective, double step);
// apply(x) = G (x - x*) + x*
FixedPointOperator linear_operator(const Matrix& G, const Vector& x_star);

// One row of the template y_i = sum_j alpha_j x_j + sum_j beta_j y_{j-1},
// j = 1..i. Both vectors have length i.
struct CombinationRow {
    Vector alpha;
    Vector beta;
};

struct CombinationRule {
    std::vector<CombinationRow> rows;
};

CombinationRow gradient_row(std::size_t i);
CombinationRow nesterov_row(std::size_t i, double beta_momentum);
void validate_row(const CombinationRow& row, std::size_t i);

// Upper-triangular L with Y = X L in the basis [x_0, x_1, .., x_k].
struct LMatrix {
    Matrix L;
};

LMatrix build_L(const CombinationRule& history);
// prod_{j<=i} ||L_j||_2 for i = 1..k, L_j the leading (j+1)x(j+1) block.
std::vector<double> cumulative_L_norms(const LMatrix& L);

struct NesterovParams {
    double L_smooth = 1.0;
    double mu = 1.0;
    double beta_momentum = 0.0;
};

NesterovParams make_nesterov_params(double L_smooth, double mu);

struct NesterovState {
    Vector x_prev;
    Vector y_prev;
    std::size_t iteration = 0;  // number of completed steps
};

struct NesterovStepResult {
    Vector x;
    Vector y;
    CombinationRow row;
};

NesterovStepResult nesterov_step(const NesterovState& state, const NesterovParams& params, const Objective& objective);

// Produces y_i from x_i = g(y_{i-1}) and emits the row used.
class Stepper {
public:
    virtual ~Stepper() = default;
    virtual void reset(const Vector& x0) = 0;
    virtual Vector combine(std::size_t i, const Vector& x_i) = 0;
    virtual CombinationRow row(std::size_t i) const = 0;
};

class GradientStepper : public Stepper {
public:
    void reset(const Vector&) override {}
    Vector combine(std::size_t, const Vector& x_i) override { return x_i; }
    CombinationRow row(std::size_t i) const override { return gradient_row(i); }
};

class NesterovStepper : public Stepper {
public:
    explicit NesterovStepper(double beta_momentum) : beta_(beta_momentum) {}
    void reset(const Vector& x0) override { x_prev_ = x0; }
    Vector combine(std::size_t i, const Vector& x_i) override;
    CombinationRow row(std::size_t i) const override { return nesterov_row(i, beta_); }

private:
    double beta_;
    Vector x_prev_;
};

// Replays an explicit rule, keeping the full history.
class RuleStepper : public Stepper {
public:
    explicit RuleStepper(CombinationRule rule) : rule_(std::move(rule)) {}
    void reset(const Vector& x0) override;
    Vector combine(std::size_t i, const Vector& x_i) override;
    CombinationRow row(std::size_t i) const override;

private:
    CombinationRule rule_;
    std::vector<Vector> xs_;
    std::vector<Vector> ys_;
};

struct LogRecord {
    std::size_t iter = 0;
    double f = 0.0;
    double resid = 0.0;
    double ms = 0.0;
    int branch = -1;  // -1 when the mode has no branch
};

struct ConvergenceLog {
    std::vector<LogRecord> records;
    bool has_branch = false;
    std::string termination = "completed";
};

struct RunOptions {
    std::size_t window = 10;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    bool record_history = false;
    const Objective* objective = nullptr;
};

struct RunResult {
    IterateWindow window;
    ConvergenceLog log;
    Matrix X;  // x_1..x_k when history is recorded
    Matrix Y;  // y_0..y_{k-1}
    Matrix E;  // injected errors e_1..e_k
    CombinationRule rule;
    Vector last_y;
};

// x_i = g(y_{i-1}) + e_i with e_i ~ N(0, sigma^2/d) per coordinate. The log
// holds f(x_i) when an objective is attached (else ||r_i||) and ||r_i||.
RunResult run_iterations(const FixedPointOperator& op, Stepper& stepper, const Vector& x0, std::size_t k,
                         const RunOptions& options = {});

struct PerturbationRecord {
    Matrix E;
    Matrix P;
    double sigma_noise = 0.0;
    double alpha_exp = 1.0;
    double gamma_coeff = 0.0;
    double D = 0.0;
    double M_hess = 0.0;
};

// Matched clean and noisy runs from the same start; P = R_noisy - R_clean.
PerturbationRecord perturbation_record(const FixedPointOperator& op, const std::function<std::unique_ptr<Stepper>()>& make_stepper,
                                       const Vector& x0, std::size_t k, double sigma, std::uint64_t seed);

struct PerturbationMargin {
    double lhs = 0.0;
    double rhs = 0.0;
};

std::vector<PerturbationMargin> perturbation_margins(const PerturbationRecord& record, double G_norm,
                                                     const std::vector<double>& L_bars);
// ||P_i|| <= 2 ||E_i|| Lbar_i sum_{j=1..i} ||G||^j for every i
bool perturbation_bound_check(const PerturbationRecord& record, double G_norm, const std::vector<double>& L_bars);

using ProxOracle = std::function<Vector(const Vector&, double)>;

// Saddle problem min_x max_y <Ax, y> + g(x) - f^*(y).
struct PrimalDualProblem {
    Eigen::Index primal_dim = 0;
    Eigen::Index dual_dim = 0;
    std::function<Vector(const Vector&)> apply_A;
    std::function<Vector(const Vector&)> apply_At;
    ProxOracle prox_dual;    // Prox of sigma f^*
    ProxOracle prox_primal;  // Prox of tau g
    std::function<double(const Vector&)> primal_value;
    double op_norm = 1.0;
};

struct CPParams {
    double sigma = 1.0;
    double tau_step = 1.0;
    double theta = 1.0;
    double gamma = 0.0;
    double delta = 0.0;
    bool adaptive = false;
    bool theta_follows_schedule = false;  // adaptive mode: theta = theta_k
};

struct CPState {
    Vector y;
    Vector x;
    Vector x_bar;
};

CPParams cp_constant_params(double op_norm, double gamma, double delta);
CPState chambolle_pock_step(const CPState& state, CPParams& params, const PrimalDualProblem& problem);

PrimalDualProblem ridge_primal_dual(const RidgeProblem& problem);
PrimalDualProblem logistic_primal_dual(const LogisticProblem& problem, double prox_tolerance = 1e-10);
PrimalDualProblem tv_primal_dual(const TVDenoiseProblem& problem);

// (y - Prox_f^tau(y)) / tau
Vector moreau_conjugate_prox(const ProxOracle& prox_f, double tau_step, const Vector& y);

struct LbfgsState {
    Vector x;
    double f = 0.0;
    Vector g;
    std::deque<Vector> s;
    std::deque<Vector> y;
    std::size_t memory = 10;
    bool converged = false;
    int evaluations = 0;
};

LbfgsState lbfgs_init(const Objective& objective, const Vector& x0, std::size_t memory = 10);
LbfgsState lbfgs_baseline_step(const LbfgsState& state, const Objective& objective);

}  // namespace nlaccel
