#include "nlaccel/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "nlaccel/errors.hpp"
#include "nlaccel/online.hpp"

namespace nlaccel {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& raw) {
    const std::string s = trim(unquote(trim(raw)));
    if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + s + "'");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& raw) {
    const std::string s = trim(unquote(trim(raw)));
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + s + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string s = trim(unquote(trim(raw)));
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& raw) {
    std::string s = trim(raw);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']') throw ConfigError(key + ": unterminated list");
        s = s.substr(1, s.size() - 2);
    }
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_double(key, item));
    }
    return out;
}

std::string list_text(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
    return s + "]";
}

struct Field {
    const char* section;
    const char* key;
    bool affects_numbers;
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define NL_STR(sec, name, member)                                                                           \
    Field {                                                                                                 \
        sec, #name, true, [](ExperimentConfig& c, const std::string&, const std::string& v) {               \
            c.member = unquote(trim(v));                                                                    \
        },                                                                                                  \
            [](const ExperimentConfig& c) { return c.member; }                                              \
    }
#define NL_DBL(sec, name, member)                                                                           \
    Field {                                                                                                 \
        sec, #name, true, [](ExperimentConfig& c, const std::string& k, const std::string& v) {             \
            c.member = parse_double(k, v);                                                                  \
        },                                                                                                  \
            [](const ExperimentConfig& c) { return fmt_double(c.member); }                                  \
    }
#define NL_INT(sec, name, member)                                                                           \
    Field {                                                                                                 \
        sec, #name, true, [](ExperimentConfig& c, const std::string& k, const std::string& v) {             \
            c.member = parse_int(k, v);                                                                     \
        },                                                                                                  \
            [](const ExperimentConfig& c) { return std::to_string(c.member); }                              \
    }
#define NL_BOOL(sec, name, member)                                                                          \
    Field {                                                                                                 \
        sec, #name, true, [](ExperimentConfig& c, const std::string& k, const std::string& v) {             \
            c.member = parse_bool(k, v);                                                                    \
        },                                                                                                  \
            [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }              \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f{
            NL_STR("problem", kind, problem.kind),
            NL_INT("problem", dimension, problem.dimension),
            NL_INT("problem", samples, problem.samples),
            NL_DBL("problem", condition, problem.condition),
            NL_DBL("problem", mu, problem.mu),
            NL_STR("problem", dataset, problem.dataset),
            NL_BOOL("problem", normalize_rows, problem.normalize_rows),
            NL_BOOL("problem", scale_gram, problem.scale_gram),
            NL_INT("problem", height, problem.height),
            NL_INT("problem", width, problem.width),
            NL_DBL("problem", noise, problem.noise),
            NL_STR("problem", image, problem.image),
            NL_DBL("problem", smallest_singular, problem.smallest_singular),
            NL_DBL("problem", label_noise, problem.label_noise),
            NL_STR("algorithm", base, algorithm.base),
            NL_STR("algorithm", mode, algorithm.mode),
            NL_INT("algorithm", window, algorithm.window),
            NL_DBL("algorithm", lambda_rel, algorithm.lambda_rel),
            NL_DBL("algorithm", eta, algorithm.eta),
            NL_DBL("algorithm", tau, algorithm.tau),
            NL_INT("algorithm", iterations, algorithm.iterations),
            NL_DBL("algorithm", stop_resid, algorithm.stop_resid),
            Field{"algorithm", "seed", true,
                  [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                      const auto s = parse_int(k, v);
                      if (s < 0) throw ConfigError(k + ": must be nonnegative");
                      c.algorithm.seed = static_cast<std::uint64_t>(s);
                  },
                  [](const ExperimentConfig& c) { return std::to_string(c.algorithm.seed); }},
            NL_BOOL("output", record_time, record_time),
            Field{"output", "tolerances", false,
                  [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.tolerances = parse_list(k, v); },
                  [](const ExperimentConfig& c) { return list_text(c.tolerances); }},
            Field{"output", "dir", false,
                  [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_dir = unquote(trim(v)); },
                  [](const ExperimentConfig& c) { return c.output_dir; }},
            Field{"output", "label", false,
                  [](ExperimentConfig& c, const std::string&, const std::string& v) { c.label = unquote(trim(v)); },
                  [](const ExperimentConfig& c) { return c.label; }},
        };
        return f;
    }();
    return table;
}

#undef NL_STR
#undef NL_DBL
#undef NL_INT
#undef NL_BOOL

const Field* find_field(const std::string& section, const std::string& key) {
    for (const auto& f : fields())
        if (section == f.section && key == f.key) return &f;
    return nullptr;
}

bool one_of(const std::string& v, std::initializer_list<const char*> options) {
    for (const char* o : options)
        if (v == o) return true;
    return false;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---- problem construction ----

struct Built {
    std::optional<Objective> smooth;
    std::optional<PrimalDualProblem> pd;
    Vector x0;
    Vector y0;
    CPParams params;
};

LogisticProblem build_logistic(const ExperimentConfig& cfg) {
    const auto& p = cfg.problem;
    if (!p.dataset.empty()) {
        DatasetOptions opts;
        opts.normalize_rows = p.normalize_rows;
        opts.scale_gram = p.scale_gram;
        opts.mu = p.mu;
        return load_dataset(p.dataset, opts);
    }
    SyntheticLogisticOptions opts;
    opts.smallest_singular = p.smallest_singular;
    opts.label_noise = p.label_noise;
    return synthetic_logistic(p.samples, p.dimension, p.condition, cfg.algorithm.seed, opts);
}

Built build(const ExperimentConfig& cfg) {
    const auto& p = cfg.problem;
    const auto& base = cfg.algorithm.base;
    const bool primal_dual = base == "pdgm" || base == "pdgm_momentum";
    Built b;
    if (p.kind == "quadratic") {
        if (primal_dual) throw ConfigError("primal-dual bases need problem.kind ridge, logistic or tv");
        const QuadraticProblem q = synthetic_quadratic(p.dimension, p.condition, cfg.algorithm.seed);
        b.smooth = q.objective();
        b.x0 = Vector::Zero(p.dimension);
        return b;
    }
    if (p.kind == "ridge") {
        const RidgeProblem r = synthetic_ridge(p.samples, p.dimension, p.mu, cfg.algorithm.seed);
        if (!primal_dual) {
            b.smooth = r.objective();
            b.x0 = Vector::Zero(r.A.cols());
            return b;
        }
        b.pd = ridge_primal_dual(r);
        if (base == "pdgm") {
            b.params.sigma = b.params.tau_step = 1.0 / b.pd->op_norm;
            b.params.theta = 0.0;
        } else {
            b.params = cp_constant_params(b.pd->op_norm, r.mu, kRidgeDualStrongConvexity);
        }
        b.x0 = Vector::Zero(b.pd->primal_dim);
        b.y0 = Vector::Zero(b.pd->dual_dim);
        return b;
    }
    if (p.kind == "logistic") {
        const LogisticProblem lp = build_logistic(cfg);
        if (!primal_dual) {
            b.smooth = lp.objective();
            b.x0 = Vector::Zero(lp.A.cols());
            return b;
        }
        if (!(lp.mu > 0.0)) throw ConfigError("primal-dual logistic needs mu > 0");
        b.pd = logistic_primal_dual(lp);
        if (base == "pdgm") {
            b.params.sigma = b.params.tau_step = 1.0 / b.pd->op_norm;
            b.params.theta = 0.0;
        } else {
            b.params = cp_constant_params(b.pd->op_norm, lp.mu, kLogisticDualStrongConvexity);
        }
        b.x0 = Vector::Zero(b.pd->primal_dim);
        b.y0 = Vector::Zero(b.pd->dual_dim);
        return b;
    }
    // tv
    if (!primal_dual) throw ConfigError("problem.kind tv needs base pdgm or pdgm_momentum");
    TVDenoiseProblem tv;
    if (!p.image.empty()) {
        tv.truth = read_pgm(p.image);
        std::mt19937_64 rng(cfg.algorithm.seed);
        std::normal_distribution<double> normal(0.0, p.noise);
        tv.noisy = tv.truth;
        for (Eigen::Index i = 0; i < tv.noisy.size(); ++i) tv.noisy.data()[i] += normal(rng);
        tv.mu = p.mu;
    } else {
        tv = noisy_image(cfg.algorithm.seed, p.height, p.width, p.noise, p.mu);
    }
    b.pd = tv_primal_dual(tv);
    b.params.adaptive = true;
    if (base == "pdgm") {
        b.params.gamma = 0.2 * tv.mu;
        b.params.theta = 0.0;
        b.params.tau_step = 0.02;
        b.params.sigma = 4.0 / (b.params.tau_step * TVDenoiseProblem::grad_norm_sq);
        b.params.theta_follows_schedule = false;
    } else {
        b.params.gamma = 0.7 * tv.mu;
        b.params.sigma = b.params.tau_step = 1.0 / std::sqrt(TVDenoiseProblem::grad_norm_sq);
        b.params.theta = 1.0;
        b.params.theta_follows_schedule = true;
    }
    b.x0 = flatten(tv.noisy);
    b.y0 = Vector::Zero(b.pd->dual_dim);
    return b;
}

std::optional<Vector> extrapolate(const IterateWindow& window, const AlgorithmSpec& a) {
    try {
        Vector point;
        if (std::isfinite(a.tau)) {
            ExtrapolationCoefficients c = cna_coefficients(residuals(window), a.tau);
            c.eta = a.eta;
            point = extrapolate_point(window, c);
        } else {
            point = rna(window, RnaOptions{a.lambda_rel, a.eta}).point;
        }
        if (!point.allFinite()) return std::nullopt;
        return point;
    } catch (const SingularSystem&) {
        return std::nullopt;
    }
}

class Recorder {
public:
    explicit Recorder(bool timed) : timed_(timed), start_(std::chrono::steady_clock::now()) {}

    LogRecord make(std::size_t iter, double f, double resid, int branch = -1) const {
        if (!std::isfinite(f) || !std::isfinite(resid))
            throw NonFiniteIterate("non-finite value at iteration " + std::to_string(iter));
        LogRecord r;
        r.iter = iter;
        r.f = f;
        r.resid = resid;
        r.branch = branch;
        r.ms = timed_ ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count() : 0.0;
        return r;
    }

private:
    bool timed_;
    std::chrono::steady_clock::time_point start_;
};

bool stop_now(const AlgorithmSpec& a, const LogRecord& r) { return a.stop_resid > 0.0 && r.resid <= a.stop_resid; }

void run_smooth(const ExperimentConfig& cfg, const Objective& obj, const Vector& x0, ExperimentResult& out) {
    const AlgorithmSpec& a = cfg.algorithm;
    const auto K = static_cast<std::size_t>(a.iterations);
    const auto N = static_cast<std::size_t>(a.window);
    const Recorder rec(cfg.record_time);
    auto at = [&](std::size_t i, const Vector& p, int branch = -1) {
        return rec.make(i, obj.value(p), obj.gradient(p).norm(), branch);
    };

    if (a.base == "lbfgs") {
        LbfgsState s = lbfgs_init(obj, x0);
        for (std::size_t i = 1; i <= K; ++i) {
            s = lbfgs_baseline_step(s, obj);
            const LogRecord r = rec.make(i, s.f, s.g.norm());
            out.log.records.push_back(r);
            if (s.converged || stop_now(a, r)) break;
        }
        out.base_log = out.log;
        return;
    }

    const FixedPointOperator op = gradient_operator(obj, 1.0 / obj.L_smooth);
    if (a.mode == "online") {
        OnlineState st = make_online_state(x0, N, a.lambda_rel, a.eta);
        for (std::size_t i = 1; i <= K; ++i) {
            const OnlineStepResult step = online_rna_step(st, op);
            const LogRecord r = at(i, step.y);
            out.log.records.push_back(r);
            if (stop_now(a, r)) break;
        }
        out.base_log = out.log;
        return;
    }
    const NesterovParams np = make_nesterov_params(obj.L_smooth, obj.mu);
    if (a.mode == "guarded") {
        AdaptiveNesterovState st = make_adaptive_state(x0, N, a.lambda_rel);
        st.eta = a.eta;
        out.log.has_branch = true;
        for (std::size_t i = 1; i <= K; ++i) {
            const AdaptiveStepResult step = adaptive_nesterov_step(st, np, obj);
            const LogRecord r = at(i, step.x, step.extrapolated ? 1 : 0);
            out.log.records.push_back(r);
            if (stop_now(a, r)) break;
        }
        out.base_log = out.log;
        return;
    }

    const double beta = a.base == "nesterov" ? np.beta_momentum : 0.0;
    IterateWindow window(N);
    Vector y = x0, x_prev = x0;
    for (std::size_t i = 1; i <= K; ++i) {
        Vector x = op.apply(y);
        if (!x.allFinite()) throw NonFiniteIterate("non-finite iterate at " + std::to_string(i));
        window.push(x, y);
        Vector y_next = a.base == "nesterov" ? Vector(x + beta * (x - x_prev)) : x;
        x_prev = x;
        const LogRecord base_rec = at(i, x);
        out.base_log.records.push_back(base_rec);
        LogRecord r = base_rec;
        if (a.mode == "offline") {
            if (auto e = extrapolate(window, a)) r = at(i, *e);
        } else if (a.mode == "restart" && window.size() == N) {
            if (auto e = extrapolate(window, a)) {
                x = *e;
                y_next = x;
                x_prev = x;
                r = at(i, x);
            }
            window.clear();
        }
        out.log.records.push_back(r);
        y = std::move(y_next);
        if (stop_now(a, r)) break;
    }
}

Vector stack(const Vector& y, const Vector& x) {
    Vector z(y.size() + x.size());
    z << y, x;
    return z;
}

// Offline values are taken at the extrapolated primal part; resid stays the
// base fixed-point residual since evaluating the map at the extrapolated point
// would advance the adaptive steps.
void run_primal_dual(const ExperimentConfig& cfg, const PrimalDualProblem& pd, CPParams params, const Vector& y0,
                     const Vector& x0, ExperimentResult& out) {
    const AlgorithmSpec& a = cfg.algorithm;
    const auto K = static_cast<std::size_t>(a.iterations);
    const auto N = static_cast<std::size_t>(a.window);
    const Recorder rec(cfg.record_time);
    const Eigen::Index m = pd.dual_dim, n = pd.primal_dim;

    if (a.mode == "online") {
        FixedPointOperator op;
        op.dimension = m + n;
        op.apply = [&](const Vector& z) {
            const Vector x = z.tail(n);
            const CPState next = chambolle_pock_step(CPState{z.head(m), x, x}, params, pd);
            return stack(next.y, next.x);
        };
        OnlineState st = make_online_state(stack(y0, x0), N, a.lambda_rel, a.eta);
        for (std::size_t i = 1; i <= K; ++i) {
            const OnlineStepResult step = online_rna_step(st, op);
            const LogRecord r = rec.make(i, pd.primal_value(step.y.tail(n)), step.diagnostics.residual_norm);
            out.log.records.push_back(r);
            if (stop_now(a, r)) break;
        }
        out.base_log = out.log;
        return;
    }

    CPState s{y0, x0, x0};
    IterateWindow window(N);
    for (std::size_t i = 1; i <= K; ++i) {
        CPState next = chambolle_pock_step(s, params, pd);
        if (!next.x.allFinite() || !next.y.allFinite())
            throw NonFiniteIterate("non-finite iterate at " + std::to_string(i));
        const Vector z_prev = stack(s.y, s.x);
        const Vector z = stack(next.y, next.x);
        const double resid = (z - z_prev).norm();
        const LogRecord base_rec = rec.make(i, pd.primal_value(next.x), resid);
        out.base_log.records.push_back(base_rec);
        LogRecord r = base_rec;
        window.push(z, z_prev);
        if (a.mode == "offline") {
            if (auto e = extrapolate(window, a)) r = rec.make(i, pd.primal_value(e->tail(n)), resid);
        } else if (a.mode == "restart" && window.size() == N) {
            if (auto e = extrapolate(window, a)) {
                next.y = e->head(m);
                next.x = e->tail(n);
                next.x_bar = next.x;
                r = rec.make(i, pd.primal_value(next.x), resid);
            }
            window.clear();
        }
        out.log.records.push_back(r);
        s = std::move(next);
        if (stop_now(a, r)) break;
    }
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string section;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!one_of(section, {"problem", "algorithm", "output"}))
                throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside of a section");
        const std::string key = trim(line.substr(0, eq));
        const Field* f = find_field(section, key);
        if (!f) throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + section + "." + key);
        f->set(cfg, section + "." + key, line.substr(eq + 1));
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    try {
        return parse_config(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
    const Field* match = nullptr;
    const auto dot = key.find('.');
    if (dot != std::string::npos) {
        match = find_field(key.substr(0, dot), key.substr(dot + 1));
    } else {
        for (const auto& f : fields()) {
            if (key != f.key) continue;
            if (match) throw ConfigError("ambiguous key " + key);
            match = &f;
        }
    }
    if (!match) throw ConfigError("unknown key " + key);
    match->set(config, std::string(match->section) + "." + match->key, value);
}

void validate_config(const ExperimentConfig& c) {
    const auto& p = c.problem;
    const auto& a = c.algorithm;
    if (!one_of(p.kind, {"quadratic", "logistic", "ridge", "tv"})) throw ConfigError("problem.kind: unknown kind " + p.kind);
    if (!one_of(a.base, {"gd", "nesterov", "pdgm", "pdgm_momentum", "lbfgs"}))
        throw ConfigError("algorithm.base: unknown base " + a.base);
    if (!one_of(a.mode, {"none", "offline", "restart", "online", "guarded"}))
        throw ConfigError("algorithm.mode: unknown mode " + a.mode);
    if (p.dimension < 1) throw ConfigError("problem.dimension must be positive");
    if (p.samples < 1) throw ConfigError("problem.samples must be positive");
    if (!(p.condition >= 1.0)) throw ConfigError("problem.condition must be at least 1");
    if (!(p.mu >= 0.0)) throw ConfigError("problem.mu must be nonnegative");
    if (p.kind == "ridge" && !(p.mu > 0.0)) throw ConfigError("problem.mu must be positive for ridge");
    if (p.height < 2 || p.width < 2) throw ConfigError("problem.height and problem.width must be at least 2");
    if (!(p.noise >= 0.0)) throw ConfigError("problem.noise must be nonnegative");
    if (!(p.smallest_singular > 0.0 && p.smallest_singular <= 1.0))
        throw ConfigError("problem.smallest_singular must lie in (0, 1]");
    if (!(p.label_noise >= 0.0)) throw ConfigError("problem.label_noise must be nonnegative");
    if (a.window < 1) throw ConfigError("algorithm.window must be positive");
    if (!(a.lambda_rel >= 0.0)) throw ConfigError("algorithm.lambda_rel must be nonnegative");
    if (!(a.eta > 0.0)) throw ConfigError("algorithm.eta must be positive");
    if (!(a.tau >= 0.0)) throw ConfigError("algorithm.tau must be nonnegative");
    if (a.iterations < 1) throw ConfigError("algorithm.iterations must be positive");
    if (!(a.stop_resid >= 0.0)) throw ConfigError("algorithm.stop_resid must be nonnegative");
    for (double t : c.tolerances)
        if (!(t > 0.0)) throw ConfigError("output.tolerances must be positive");
    const bool primal_dual = a.base == "pdgm" || a.base == "pdgm_momentum";
    if (p.kind == "tv" && !primal_dual) throw ConfigError("problem.kind tv needs base pdgm or pdgm_momentum");
    if (p.kind == "quadratic" && primal_dual) throw ConfigError("primal-dual bases need problem.kind ridge, logistic or tv");
    if (a.base == "lbfgs" && a.mode != "none") throw ConfigError("lbfgs runs only with mode none");
    if (a.mode == "guarded" && a.base != "nesterov") throw ConfigError("mode guarded needs base nesterov");
    if (a.mode == "online" && !one_of(a.base, {"gd", "pdgm"})) throw ConfigError("mode online needs base gd or pdgm");
    if (one_of(a.mode, {"online", "guarded"}) && std::isfinite(a.tau))
        throw ConfigError("algorithm.tau applies to offline and restart modes only");
}

std::string canonical_config(const ExperimentConfig& config) {
    std::string out;
    for (const auto& f : fields()) {
        if (!f.affects_numbers) continue;
        out += std::string(f.section) + "." + f.key + "=" + f.get(config) + "\n";
    }
    return out;
}

std::string config_hash(const ExperimentConfig& config) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_config(config))));
    return buf;
}

std::string run_name(const ExperimentConfig& config) {
    const std::string stem =
        config.label.empty() ? config.problem.kind + "_" + config.algorithm.base + "_" + config.algorithm.mode : config.label;
    return stem + "_" + config_hash(config);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    validate_config(config);
    ExperimentResult out;
    out.name = run_name(config);
    const Built b = build(config);
    try {
        if (b.smooth)
            run_smooth(config, *b.smooth, b.x0, out);
        else
            run_primal_dual(config, *b.pd, b.params, b.y0, b.x0, out);
    } catch (const NonFiniteIterate& e) {
        out.aborted = true;
        out.log.termination = e.what();
    } catch (const ProxFailure& e) {
        out.aborted = true;
        out.log.termination = e.what();
    } catch (const LineSearchFailure& e) {
        out.aborted = true;
        out.log.termination = e.what();
    }
    if (out.aborted) out.base_log.termination = out.log.termination;
    return out;
}

std::vector<ExperimentResult> run_experiments(const std::vector<ExperimentConfig>& configs, unsigned threads) {
    std::vector<ExperimentResult> results(configs.size());
    std::vector<std::exception_ptr> errors(configs.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(configs.size(), 1)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            try {
                results[i] = run_experiment(configs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

double best_value(const std::vector<ConvergenceLog>& logs) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& log : logs)
        for (const auto& r : log.records) best = std::min(best, r.f);
    return best;
}

double reference_optimum(const ExperimentConfig& config) {
    static std::mutex lock;
    static std::map<std::string, double> cache;
    ExperimentConfig ref = config;
    ref.algorithm.mode = "none";
    ref.algorithm.iterations = 5 * config.algorithm.iterations;
    ref.algorithm.stop_resid = 0.0;
    ref.record_time = false;
    const std::string key = canonical_config(ref);
    {
        std::lock_guard<std::mutex> guard(lock);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const ExperimentResult res = run_experiment(ref);
    const double value = best_value({res.log});
    std::lock_guard<std::mutex> guard(lock);
    cache[key] = value;
    return value;
}

ToleranceTable tolerance_table(const std::vector<std::pair<std::string, ConvergenceLog>>& logs,
                               const std::vector<double>& tolerances, double f_star) {
    ToleranceTable table;
    table.tolerances = tolerances;
    table.f_star = f_star;
    for (const auto& [name, log] : logs) {
        ToleranceRow row;
        row.name = name;
        for (double eps : tolerances) {
            std::optional<std::size_t> hit;
            for (const auto& r : log.records) {
                if (r.f - f_star <= eps) {
                    hit = r.iter;
                    break;
                }
            }
            row.first_iter.push_back(hit);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string format_table_markdown(const ToleranceTable& table) {
    std::string out = "| run |";
    char buf[64];
    for (double t : table.tolerances) {
        std::snprintf(buf, sizeof buf, " %g |", t);
        out += buf;
    }
    out += "\n|---|";
    for (std::size_t i = 0; i < table.tolerances.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& row : table.rows) {
        out += "| " + row.name + " |";
        for (const auto& v : row.first_iter) out += v ? " " + std::to_string(*v) + " |" : std::string(" N/A |");
        out += "\n";
    }
    return out;
}

void write_log_csv(std::ostream& out, const ConvergenceLog& log) {
    out << (log.has_branch ? "iter,f,resid,ms,branch\n" : "iter,f,resid,ms\n");
    char buf[160];
    for (const auto& r : log.records) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g", r.iter, r.f, r.resid, r.ms);
        out << buf;
        if (log.has_branch) out << ',' << r.branch;
        out << '\n';
    }
}

void write_log_csv(const std::string& path, const ConvergenceLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_log_csv(out, log);
    if (!out) throw IoError("write failed for " + path);
}

ConvergenceLog read_log_csv(std::istream& in) {
    ConvergenceLog log;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "missing header");
    line = trim(line);
    if (line == "iter,f,resid,ms,branch")
        log.has_branch = true;
    else if (line != "iter,f,resid,ms")
        throw ParseError(1, "unexpected header '" + line + "'");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != (log.has_branch ? 5u : 4u)) throw ParseError(lineno, "wrong number of columns");
        LogRecord r;
        try {
            r.iter = static_cast<std::size_t>(std::stoull(cells[0]));
            r.f = std::stod(cells[1]);
            r.resid = std::stod(cells[2]);
            r.ms = std::stod(cells[3]);
            if (log.has_branch) r.branch = std::stoi(cells[4]);
        } catch (const std::exception&) {
            throw ParseError(lineno, "malformed number");
        }
        if (!log.records.empty() && r.iter <= log.records.back().iter)
            throw ParseError(lineno, "iteration numbers must increase");
        log.records.push_back(r);
    }
    return log;
}

ConvergenceLog read_log_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return read_log_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line, path + ": " + e.what());
    }
}

ReportFiles emit_reports(const std::vector<ExperimentResult>& runs, const std::vector<NamedBoundary>& boundaries,
                         const std::string& out_dir, const std::vector<double>& tolerances) {
    namespace fs = std::filesystem;
    static std::mutex registry_lock;
    static std::map<std::string, std::unique_ptr<std::mutex>> dir_locks;
    std::mutex* dir_lock = nullptr;
    {
        std::lock_guard<std::mutex> guard(registry_lock);
        auto& slot = dir_locks[fs::absolute(out_dir).lexically_normal().string()];
        if (!slot) slot = std::make_unique<std::mutex>();
        dir_lock = slot.get();
    }
    std::lock_guard<std::mutex> guard(*dir_lock);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    ReportFiles files;
    std::vector<std::pair<std::string, ConvergenceLog>> named;
    std::vector<ConvergenceLog> logs;
    for (const auto& run : runs) {
        const std::string path = (fs::path(out_dir) / (run.name + ".csv")).string();
        write_log_csv(path, run.log);
        files.curves.push_back(path);
        named.emplace_back(run.name, run.log);
        logs.push_back(run.log);
    }
    for (const auto& b : boundaries) {
        const std::string path = (fs::path(out_dir) / ("range_" + b.name + ".csv")).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path);
        write_boundary_csv(out, b.boundary);
        files.boundaries.push_back(path);
    }
    const double f_star = logs.empty() ? 0.0 : best_value(logs);
    const ToleranceTable table = tolerance_table(named, tolerances, f_star);
    files.summary = (fs::path(out_dir) / "summary.md").string();
    std::ofstream out(files.summary, std::ios::binary);
    if (!out) throw IoError("cannot write " + files.summary);
    out << "# Iterations to reach f - f* <= eps\n\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", f_star);
    out << "f* = " << buf << " (best value over the runs below)\n\n";
    out << format_table_markdown(table);
    for (const auto& run : runs)
        if (run.aborted) out << "\n" << run.name << ": " << run.log.termination << "\n";
    if (!out) throw IoError("write failed for " + files.summary);
    return files;
}

}  // namespace nlaccel
