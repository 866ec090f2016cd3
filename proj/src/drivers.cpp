#include "nlaccel/drivers.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "nlaccel/errors.hpp"

namespace nlaccel {

FixedPointOperator gradient_operator(const Objective& objective, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
    FixedPointOperator op;
    op.dimension = objective.dimension;
    auto grad = objective.gradient;
    op.apply = [grad, step](const Vector& x) { return Vector(x - step * grad(x)); };
    if (objective.hessian && objective.x_star) {
        const Eigen::Index d = objective.dimension;
        op.linear_form = LinearForm{Matrix::Identity(d, d) - step * *objective.hessian, *objective.x_star};
    }
    return op;
}

FixedPointOperator linear_operator(const Matrix& G, const Vector& x_star) {
    if (G.rows() != G.cols() || G.rows() != x_star.size()) throw DimensionMismatch("G and x* sizes differ");
    FixedPointOperator op;
    op.dimension = G.rows();
    op.apply = [G, x_star](const Vector& x) { return Vector(G * (x - x_star) + x_star); };
    op.linear_form = LinearForm{G, x_star};
    return op;
}

CombinationRow gradient_row(std::size_t i) {
    const auto n = static_cast<Eigen::Index>(i);
    CombinationRow row{Vector::Zero(n), Vector::Zero(n)};
    row.alpha(n - 1) = 1.0;
    return row;
}

CombinationRow nesterov_row(std::size_t i, double beta_momentum) {
    const auto n = static_cast<Eigen::Index>(i);
    CombinationRow row{Vector::Zero(n), Vector::Zero(n)};
    row.alpha(n - 1) = 1.0 + beta_momentum;
    // x_0 = y_0, so the first step weighs y_0 through beta
    if (n == 1) row.beta(0) = -beta_momentum;
    else row.alpha(n - 2) = -beta_momentum;
    return row;
}

void validate_row(const CombinationRow& row, std::size_t i) {
    const auto n = static_cast<Eigen::Index>(i);
    if (row.alpha.size() != n || row.beta.size() != n)
        throw DimensionMismatch("combination row " + std::to_string(i) + " has wrong length");
    if (std::abs(row.alpha.sum() + row.beta.sum() - 1.0) > 1e-10)
        throw InconsistentCoefficients("combination row " + std::to_string(i) + " does not sum to one");
    if (row.alpha(n - 1) == 0.0)
        throw InconsistentCoefficients("leading coefficient of row " + std::to_string(i) + " is zero");
}

LMatrix build_L(const CombinationRule& history) {
    const auto k = static_cast<Eigen::Index>(history.rows.size());
    Matrix L = Matrix::Zero(k + 1, k + 1);
    L(0, 0) = 1.0;
    for (Eigen::Index i = 1; i <= k; ++i) {
        const CombinationRow& row = history.rows[static_cast<std::size_t>(i - 1)];
        validate_row(row, static_cast<std::size_t>(i));
        Vector col = L.topLeftCorner(i, i) * row.beta;
        col.tail(i - 1) += row.alpha.head(i - 1);
        L.block(0, i, i, 1) = col;
        L(i, i) = row.alpha(i - 1);
        const double sum = L.col(i).sum();
        if (std::abs(sum - 1.0) > 1e-10)
            throw InconsistentCoefficients("column " + std::to_string(i) + " of L sums to " + std::to_string(sum));
    }
    return LMatrix{L};
}

std::vector<double> cumulative_L_norms(const LMatrix& L) {
    std::vector<double> out;
    double prod = 1.0;
    for (Eigen::Index i = 1; i < L.L.rows(); ++i) {
        prod *= spectral_norm(L.L.topLeftCorner(i + 1, i + 1));
        out.push_back(prod);
    }
    return out;
}

NesterovParams make_nesterov_params(double L_smooth, double mu) {
    if (!(L_smooth > 0.0) || !(mu > 0.0) || mu > L_smooth) throw std::invalid_argument("need 0 < mu <= L");
    NesterovParams p;
    p.L_smooth = L_smooth;
    p.mu = mu;
    p.beta_momentum = (std::sqrt(L_smooth) - std::sqrt(mu)) / (std::sqrt(L_smooth) + std::sqrt(mu));
    return p;
}

NesterovStepResult nesterov_step(const NesterovState& state, const NesterovParams& params, const Objective& objective) {
    NesterovStepResult out;
    out.x = state.y_prev - objective.gradient(state.y_prev) / params.L_smooth;
    out.y = out.x + params.beta_momentum * (out.x - state.x_prev);
    out.row = nesterov_row(state.iteration + 1, params.beta_momentum);
    return out;
}

Vector NesterovStepper::combine(std::size_t, const Vector& x_i) {
    Vector y = x_i + beta_ * (x_i - x_prev_);
    x_prev_ = x_i;
    return y;
}

void RuleStepper::reset(const Vector& x0) {
    xs_.assign(1, x0);
    ys_.assign(1, x0);
}

Vector RuleStepper::combine(std::size_t i, const Vector& x_i) {
    if (i != xs_.size()) throw std::logic_error("rule stepper called out of order");
    xs_.push_back(x_i);
    const CombinationRow r = row(i);
    validate_row(r, i);
    Vector y = Vector::Zero(x_i.size());
    for (std::size_t j = 1; j <= i; ++j) {
        y += r.alpha(static_cast<Eigen::Index>(j - 1)) * xs_[j];
        y += r.beta(static_cast<Eigen::Index>(j - 1)) * ys_[j - 1];
    }
    ys_.push_back(y);
    return y;
}

CombinationRow RuleStepper::row(std::size_t i) const {
    if (i == 0 || i > rule_.rows.size()) throw std::out_of_range("rule has no row " + std::to_string(i));
    return rule_.rows[i - 1];
}

RunResult run_iterations(const FixedPointOperator& op, Stepper& stepper, const Vector& x0, std::size_t k,
                         const RunOptions& options) {
    if (k < 1) throw std::invalid_argument("need at least one iteration");
    const Eigen::Index d = x0.size();
    RunResult out{IterateWindow(options.window), {}, {}, {}, {}, {}, {}};
    if (options.record_history) {
        out.X.resize(d, static_cast<Eigen::Index>(k));
        out.Y.resize(d, static_cast<Eigen::Index>(k));
    }
    if (options.noise_sigma > 0.0) out.E = Matrix::Zero(d, static_cast<Eigen::Index>(k));
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double noise_scale = options.noise_sigma / std::sqrt(static_cast<double>(d));
    const auto start = std::chrono::steady_clock::now();
    stepper.reset(x0);
    Vector y = x0;
    for (std::size_t i = 1; i <= k; ++i) {
        Vector x = op.apply(y);
        if (options.noise_sigma > 0.0) {
            Vector e(d);
            for (Eigen::Index j = 0; j < d; ++j) e(j) = noise_scale * normal(rng);
            x += e;
            out.E.col(static_cast<Eigen::Index>(i - 1)) = e;
        }
        if (!x.allFinite()) {
            out.log.termination = "non-finite iterate at " + std::to_string(i);
            throw NonFiniteIterate(out.log.termination);
        }
        const double resid = (x - y).norm();
        out.window.push(x, y);
        if (options.record_history) {
            out.X.col(static_cast<Eigen::Index>(i - 1)) = x;
            out.Y.col(static_cast<Eigen::Index>(i - 1)) = y;
        }
        out.rule.rows.push_back(stepper.row(i));
        y = stepper.combine(i, x);
        LogRecord rec;
        rec.iter = i;
        rec.resid = resid;
        rec.f = options.objective ? options.objective->value(x) : resid;
        rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        out.log.records.push_back(rec);
    }
    out.last_y = y;
    return out;
}

PerturbationRecord perturbation_record(const FixedPointOperator& op, const std::function<std::unique_ptr<Stepper>()>& make_stepper,
                                       const Vector& x0, std::size_t k, double sigma, std::uint64_t seed) {
    RunOptions clean_opts;
    clean_opts.record_history = true;
    RunOptions noisy_opts = clean_opts;
    noisy_opts.noise_sigma = sigma;
    noisy_opts.seed = seed;
    auto clean_stepper = make_stepper();
    auto noisy_stepper = make_stepper();
    const RunResult clean = run_iterations(op, *clean_stepper, x0, k, clean_opts);
    const RunResult noisy = run_iterations(op, *noisy_stepper, x0, k, noisy_opts);
    PerturbationRecord rec;
    rec.sigma_noise = sigma;
    rec.E = sigma > 0.0 ? noisy.E : Matrix::Zero(x0.size(), static_cast<Eigen::Index>(k));
    rec.P = (noisy.X - noisy.Y) - (clean.X - clean.Y);
    return rec;
}

std::vector<PerturbationMargin> perturbation_margins(const PerturbationRecord& record, double G_norm,
                                                     const std::vector<double>& L_bars) {
    const Eigen::Index k = record.P.cols();
    if (static_cast<Eigen::Index>(L_bars.size()) < k) throw DimensionMismatch("need one L-bar per iteration");
    std::vector<PerturbationMargin> out;
    double power = 1.0, series = 0.0;
    for (Eigen::Index i = 1; i <= k; ++i) {
        power *= G_norm;
        series += power;
        PerturbationMargin m;
        m.lhs = spectral_norm(record.P.leftCols(i));
        m.rhs = 2.0 * spectral_norm(record.E.leftCols(i)) * L_bars[static_cast<std::size_t>(i - 1)] * series;
        out.push_back(m);
    }
    return out;
}

bool perturbation_bound_check(const PerturbationRecord& record, double G_norm, const std::vector<double>& L_bars) {
    for (const auto& m : perturbation_margins(record, G_norm, L_bars))
        if (m.lhs > m.rhs) return false;
    return true;
}

CPParams cp_constant_params(double op_norm, double gamma, double delta) {
    if (!(op_norm > 0.0) || !(gamma > 0.0) || !(delta > 0.0))
        throw std::invalid_argument("constant steps need positive norm and strong convexity constants");
    CPParams p;
    p.gamma = gamma;
    p.delta = delta;
    p.sigma = std::sqrt(gamma / delta) / op_norm;
    p.tau_step = std::sqrt(delta / gamma) / op_norm;
    p.theta = 1.0 / (1.0 + 2.0 * std::sqrt(gamma * delta) / op_norm);
    return p;
}

CPState chambolle_pock_step(const CPState& state, CPParams& params, const PrimalDualProblem& problem) {
    CPState next;
    next.y = problem.prox_dual(state.y + params.sigma * problem.apply_A(state.x_bar), params.sigma);
    next.x = problem.prox_primal(state.x - params.tau_step * problem.apply_At(next.y), params.tau_step);
    double theta = params.theta;
    if (params.adaptive) {
        const double theta_k = 1.0 / std::sqrt(1.0 + 2.0 * params.gamma * params.tau_step);
        if (params.theta_follows_schedule) theta = theta_k;
        params.sigma /= theta_k;
        params.tau_step *= theta_k;
        params.theta = theta;
    }
    next.x_bar = next.x + theta * (next.x - state.x);
    return next;
}

PrimalDualProblem ridge_primal_dual(const RidgeProblem& problem) {
    PrimalDualProblem pd;
    const Matrix A = problem.A;
    const Vector b = problem.b;
    const double mu = problem.mu;
    pd.primal_dim = A.cols();
    pd.dual_dim = A.rows();
    pd.apply_A = [A](const Vector& x) { return Vector(A * x); };
    pd.apply_At = [A](const Vector& y) { return Vector(A.transpose() * y); };
    pd.prox_dual = [b](const Vector& v, double sigma) { return Vector((v - sigma * b) / (1.0 + sigma)); };
    pd.prox_primal = [mu](const Vector& v, double tau) { return Vector(v / (1.0 + tau * mu)); };
    pd.primal_value = [A, b, mu](const Vector& x) { return 0.5 * (A * x - b).squaredNorm() + 0.5 * mu * x.squaredNorm(); };
    pd.op_norm = spectral_norm(A);
    return pd;
}

PrimalDualProblem logistic_primal_dual(const LogisticProblem& problem, double prox_tolerance) {
    PrimalDualProblem pd;
    const Matrix folded = problem.labels.asDiagonal() * problem.A;
    const double mu = problem.mu;
    pd.primal_dim = folded.cols();
    pd.dual_dim = folded.rows();
    pd.apply_A = [folded](const Vector& x) { return Vector(folded * x); };
    pd.apply_At = [folded](const Vector& y) { return Vector(folded.transpose() * y); };
    pd.prox_dual = [prox_tolerance](const Vector& v, double sigma) {
        ProxReport report;
        Vector out = logistic_dual_prox(v, sigma, prox_tolerance, &report);
        if (report.failures > 0)
            throw ProxFailure(std::to_string(report.failures) + " coordinates missed the dual prox tolerance");
        return out;
    };
    pd.prox_primal = [mu](const Vector& v, double tau) { return Vector(v / (1.0 + tau * mu)); };
    const LogisticProblem copy = problem;
    pd.primal_value = [copy](const Vector& x) { return logistic_value(copy, x); };
    pd.op_norm = spectral_norm(folded);
    return pd;
}

PrimalDualProblem tv_primal_dual(const TVDenoiseProblem& problem) {
    PrimalDualProblem pd;
    const Eigen::Index h = problem.noisy.rows(), w = problem.noisy.cols();
    const Vector b = flatten(problem.noisy);
    const double mu = problem.mu;
    pd.primal_dim = h * w;
    pd.dual_dim = 2 * h * w;
    pd.apply_A = [h, w](const Vector& x) { return flatten(tv_gradient(unflatten(x, h, w))); };
    pd.apply_At = [h, w](const Vector& p) { return Vector(-flatten(tv_divergence(unflatten_field(p, h, w)))); };
    pd.prox_dual = [h, w](const Vector& v, double) { return flatten(tv_dual_prox(unflatten_field(v, h, w))); };
    pd.prox_primal = [b, mu](const Vector& v, double tau) { return Vector((v + tau * mu * b) / (1.0 + tau * mu)); };
    const TVDenoiseProblem copy = problem;
    pd.primal_value = [copy, h, w](const Vector& x) { return tv_primal_value(unflatten(x, h, w), copy); };
    pd.op_norm = std::sqrt(TVDenoiseProblem::grad_norm_sq);
    return pd;
}

Vector moreau_conjugate_prox(const ProxOracle& prox_f, double tau_step, const Vector& y) {
    if (!(tau_step > 0.0)) throw std::invalid_argument("tau must be positive");
    return (y - prox_f(y, tau_step)) / tau_step;
}

LbfgsState lbfgs_init(const Objective& objective, const Vector& x0, std::size_t memory) {
    LbfgsState s;
    s.x = x0;
    s.f = objective.value(x0);
    s.g = objective.gradient(x0);
    s.memory = memory;
    s.evaluations = 1;
    s.converged = s.g.norm() == 0.0;
    return s;
}

LbfgsState lbfgs_baseline_step(const LbfgsState& state, const Objective& objective) {
    LbfgsState next = state;
    if (state.g.norm() == 0.0) {
        next.converged = true;
        return next;
    }
    // two-loop recursion
    const std::size_t m = state.s.size();
    Vector q = state.g;
    std::vector<double> a(m), rho(m);
    for (std::size_t idx = m; idx-- > 0;) {
        rho[idx] = 1.0 / state.y[idx].dot(state.s[idx]);
        a[idx] = rho[idx] * state.s[idx].dot(q);
        q -= a[idx] * state.y[idx];
    }
    if (m > 0) q *= state.s.back().dot(state.y.back()) / state.y.back().squaredNorm();
    for (std::size_t idx = 0; idx < m; ++idx) {
        const double b = rho[idx] * state.y[idx].dot(q);
        q += (a[idx] - b) * state.s[idx];
    }
    Vector dir = -q;
    double slope = state.g.dot(dir);
    if (!(slope < 0.0)) {
        next.s.clear();
        next.y.clear();
        dir = -state.g;
        slope = -state.g.squaredNorm();
    }
    double t = 1.0;
    for (int halving = 0;; ++halving) {
        if (halving >= 50) throw LineSearchFailure("Armijo condition not met after 50 halvings");
        const Vector trial = state.x + t * dir;
        const double ft = objective.value(trial);
        ++next.evaluations;
        if (std::isfinite(ft) && ft <= state.f + 1e-4 * t * slope) {
            next.x = trial;
            next.f = ft;
            break;
        }
        t *= 0.5;
    }
    next.g = objective.gradient(next.x);
    const Vector sv = next.x - state.x;
    const Vector yv = next.g - state.g;
    if (sv.dot(yv) > 1e-12 * sv.norm() * yv.norm()) {
        next.s.push_back(sv);
        next.y.push_back(yv);
        if (next.s.size() > next.memory) {
            next.s.pop_front();
            next.y.pop_front();
        }
    }
    next.converged = next.g.norm() == 0.0;
    return next;
}

}  // namespace nlaccel
