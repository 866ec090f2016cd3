#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlaccel/bench.hpp"
#include "nlaccel/errors.hpp"
#include "nlaccel/problems.hpp"

using namespace nlaccel;
namespace fs = std::filesystem;

namespace {

ExperimentConfig cfg_from(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

ExperimentConfig small_quadratic(const std::string& mode, std::int64_t iters = 60) {
    ExperimentConfig c;
    c.problem.kind = "quadratic";
    c.problem.dimension = 20;
    c.problem.condition = 100;
    c.algorithm.base = "gd";
    c.algorithm.mode = mode;
    c.algorithm.window = 5;
    c.algorithm.iterations = iters;
    c.algorithm.seed = 4;
    return c;
}

bool same_records(const ConvergenceLog& a, const ConvergenceLog& b) {
    if (a.records.size() != b.records.size()) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const LogRecord &x = a.records[i], &y = b.records[i];
        if (x.iter != y.iter || x.f != y.f || x.resid != y.resid || x.ms != y.ms || x.branch != y.branch) return false;
    }
    return true;
}

ConvergenceLog log_of(const std::vector<double>& fs) {
    ConvergenceLog log;
    for (std::size_t i = 0; i < fs.size(); ++i) log.records.push_back(LogRecord{i + 1, fs[i], 1.0, 0.0, -1});
    return log;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "nlaccel_test_bench" / name;
    fs::remove_all(dir);
    return dir;
}

// independent FNV-1a 64
std::uint64_t fnv(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

TEST_CASE("config parsing") {
    const ExperimentConfig c = cfg_from(R"(
# comment
[problem]
kind = logistic
dimension = 30
samples = 120   # trailing comment
condition = 1e4

[algorithm]
base = nesterov
mode = offline
window = 7
lambda_rel = 1e-6
iterations = 300
seed = 11

[output]
tolerances = [1e-3, 1e-5]
dir = results
label = demo
)");
    CHECK(c.problem.kind == "logistic");
    CHECK(c.problem.dimension == 30);
    CHECK(c.problem.samples == 120);
    CHECK(c.problem.condition == 1e4);
    CHECK(c.algorithm.base == "nesterov");
    CHECK(c.algorithm.mode == "offline");
    CHECK(c.algorithm.window == 7);
    CHECK(c.algorithm.lambda_rel == 1e-6);
    CHECK(c.algorithm.iterations == 300);
    CHECK(c.algorithm.seed == 11);
    CHECK(c.tolerances == std::vector<double>{1e-3, 1e-5});
    CHECK(c.output_dir == "results");
    CHECK(c.label == "demo");
    CHECK(std::isinf(c.algorithm.tau));
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(cfg_from("[problem]\ndimensions = 10\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("kind = quadratic\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[nowhere]\nkind = quadratic\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[problem]\ndimension = ten\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[problem]\ndimension = -3\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[problem]\nkind\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[algorithm]\nwindow = 0\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[algorithm]\nmode = sideways\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[problem]\nkind = tv\n[algorithm]\nbase = gd\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[problem]\nkind = quadratic\n[algorithm]\nbase = pdgm\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[algorithm]\nbase = lbfgs\nmode = offline\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[algorithm]\nbase = gd\nmode = guarded\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[algorithm]\nbase = nesterov\nmode = online\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[algorithm]\nmode = online\ntau = 1\n"), ConfigError);
    CHECK_THROWS_AS(cfg_from("[output]\ntolerances = [1e-2, -1]\n"), ConfigError);
    CHECK_NOTHROW(cfg_from("[problem]\nkind = tv\n[algorithm]\nbase = pdgm\nmode = restart\n"));
    CHECK_THROWS_AS(load_config((fs::temp_directory_path() / "nlaccel_no_such.toml").string()), IoError);
}

TEST_CASE("overrides") {
    ExperimentConfig c;
    apply_override(c, "algorithm.window", "4");
    CHECK(c.algorithm.window == 4);
    apply_override(c, "iterations", "77");
    CHECK(c.algorithm.iterations == 77);
    apply_override(c, "output.dir", "elsewhere");
    CHECK(c.output_dir == "elsewhere");
    apply_override(c, "problem.kind", "ridge");
    CHECK(c.problem.kind == "ridge");
    CHECK_THROWS_AS(apply_override(c, "algorithm.nope", "1"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "nope", "1"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "window", "many"), ConfigError);
}

TEST_CASE("config hash") {
    const ExperimentConfig a = small_quadratic("none");
    CHECK(config_hash(a).size() == 16);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv(canonical_config(a))));
    CHECK(config_hash(a) == buf);
    ExperimentConfig b = a;
    b.output_dir = "other";
    b.label = "renamed";
    b.tolerances = {1e-3};
    CHECK(config_hash(b) == config_hash(a));
    // timing changes the ms column, so it is part of the identity
    ExperimentConfig timed = a;
    timed.record_time = true;
    CHECK(config_hash(timed) != config_hash(a));
    b.algorithm.iterations += 1;
    CHECK(config_hash(b) != config_hash(a));
    CHECK(run_name(a) == "quadratic_gd_none_" + config_hash(a));
    ExperimentConfig l = a;
    l.label = "mine";
    CHECK(run_name(l) == "mine_" + config_hash(a));
    // canonical text round-trips through the parser
    const ExperimentConfig again = cfg_from([&] {
        std::string text, section;
        std::istringstream lines(canonical_config(a));
        std::string line;
        while (std::getline(lines, line)) {
            const auto dot = line.find('.');
            const std::string sec = line.substr(0, dot);
            if (sec != section) text += "[" + (section = sec) + "]\n";
            text += line.substr(dot + 1) + "\n";
        }
        return text;
    }());
    CHECK(config_hash(again) == config_hash(a));
}

TEST_CASE("mode none reproduces the plain driver bit for bit") {
    const ExperimentConfig c = small_quadratic("none", 50);
    const ExperimentResult r = run_experiment(c);
    REQUIRE(!r.aborted);
    REQUIRE(r.log.records.size() == 50);
    const QuadraticProblem q = synthetic_quadratic(20, 100, 4);
    const Objective obj = q.objective();
    const FixedPointOperator op = gradient_operator(obj, 1.0 / obj.L_smooth);
    GradientStepper stepper;
    RunOptions opts;
    opts.objective = &obj;
    opts.record_history = true;
    const RunResult plain = run_iterations(op, stepper, Vector::Zero(20), 50, opts);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(r.log.records[i].iter == i + 1);
        CHECK(r.log.records[i].f == plain.log.records[i].f);
        const Vector xi = plain.X.col(static_cast<Eigen::Index>(i));
        CHECK(r.log.records[i].resid == obj.gradient(xi).norm());
        CHECK(r.log.records[i].ms == 0.0);
    }
    CHECK(same_records(r.log, r.base_log));
}

TEST_CASE("offline mode leaves the base sequence alone") {
    for (const std::string base : {"gd", "nesterov"}) {
        ExperimentConfig none = small_quadratic("none", 80), off = small_quadratic("offline", 80);
        none.algorithm.base = off.algorithm.base = base;
        const ExperimentResult a = run_experiment(none), b = run_experiment(off);
        CHECK(same_records(a.log, b.base_log));
        // the extrapolated curve is reported separately and ends lower
        CHECK(b.log.records.back().f < a.log.records.back().f);
    }
    ExperimentConfig pd_none, pd_off;
    pd_none.problem.kind = pd_off.problem.kind = "ridge";
    pd_none.problem.dimension = pd_off.problem.dimension = 10;
    pd_none.problem.samples = pd_off.problem.samples = 15;
    pd_none.algorithm.base = pd_off.algorithm.base = "pdgm";
    pd_none.algorithm.iterations = pd_off.algorithm.iterations = 60;
    pd_off.algorithm.mode = "offline";
    CHECK(same_records(run_experiment(pd_none).log, run_experiment(pd_off).base_log));
}

TEST_CASE("online mode needs fewer iterations than the plain method") {
    auto iters_to = [](const ExperimentResult& r) -> std::size_t {
        for (const auto& rec : r.log.records)
            if (rec.resid <= 1e-6) return rec.iter;
        return 0;
    };
    ExperimentConfig none = small_quadratic("none", 20000), online = small_quadratic("online", 20000);
    none.problem.condition = online.problem.condition = 1e3;
    none.problem.dimension = online.problem.dimension = 50;
    none.algorithm.stop_resid = online.algorithm.stop_resid = 1e-6;
    const std::size_t a = iters_to(run_experiment(none)), b = iters_to(run_experiment(online));
    MESSAGE("plain " << a << " online " << b);
    REQUIRE(a > 0);
    REQUIRE(b > 0);
    CHECK(b < a);
}

TEST_CASE("every mode and base runs") {
    struct Case {
        std::string kind, base, mode;
    };
    const std::vector<Case> cases{{"quadratic", "gd", "restart"},       {"quadratic", "nesterov", "guarded"},
                                  {"quadratic", "lbfgs", "none"},       {"logistic", "gd", "online"},
                                  {"logistic", "nesterov", "restart"},  {"ridge", "pdgm", "online"},
                                  {"ridge", "pdgm_momentum", "restart"}, {"logistic", "pdgm", "offline"},
                                  {"tv", "pdgm", "offline"},            {"tv", "pdgm_momentum", "none"}};
    for (const auto& k : cases) {
        ExperimentConfig c;
        c.problem.kind = k.kind;
        c.problem.dimension = 12;
        c.problem.samples = 40;
        c.problem.height = c.problem.width = 12;
        c.algorithm.base = k.base;
        c.algorithm.mode = k.mode;
        c.algorithm.window = 4;
        c.algorithm.iterations = 30;
        CAPTURE(k.kind);
        CAPTURE(k.base);
        CAPTURE(k.mode);
        const ExperimentResult r = run_experiment(c);
        CHECK(!r.aborted);
        CHECK(!r.log.records.empty());
        CHECK(r.log.has_branch == (k.mode == "guarded"));
        for (std::size_t i = 1; i < r.log.records.size(); ++i) CHECK(r.log.records[i].iter > r.log.records[i - 1].iter);
    }
}

TEST_CASE("numerical blow-up aborts with a partial log") {
    ExperimentConfig c = small_quadratic("restart", 50);
    c.algorithm.window = 2;
    c.algorithm.eta = 1e200;
    const ExperimentResult r = run_experiment(c);
    CHECK(r.aborted);
    CHECK(r.log.termination != "completed");
    CHECK(r.log.records.size() < 50);
}

TEST_CASE("tolerance table") {
    std::vector<double> f(20);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::pow(0.5, static_cast<double>(i + 1));
    // 2^-7 < 1e-2 first at iteration 7
    const ToleranceTable t = tolerance_table({{"halving", log_of(f)}, {"flat", log_of({1.0, 1.0})}}, {1e-2, 1e-4, 1e-9}, 0.0);
    CHECK(t.rows[0].first_iter[0] == std::optional<std::size_t>(7));
    CHECK(t.rows[0].first_iter[1] == std::optional<std::size_t>(14));
    CHECK(!t.rows[0].first_iter[2]);
    CHECK(!t.rows[1].first_iter[0]);
    const std::string md = format_table_markdown(t);
    CHECK(md.find("| halving | 7 | 14 | N/A |") != std::string::npos);
    CHECK(md.find("| flat | N/A | N/A | N/A |") != std::string::npos);
    CHECK(md.rfind("| run |", 0) == 0);

    const ExperimentResult r = run_experiment(small_quadratic("online", 200));
    const ToleranceTable mono = tolerance_table({{"r", r.log}}, {1e-1, 1e-3, 1e-5, 1e-7, 1e-9}, best_value({r.log}) - 1e-12);
    std::size_t prev = 0;
    for (const auto& v : mono.rows[0].first_iter) {
        if (!v) break;
        CHECK(*v >= prev);
        prev = *v;
    }
}

TEST_CASE("reference optimum") {
    const ExperimentConfig c = small_quadratic("none", 40);
    const double ref = reference_optimum(c);
    CHECK(ref <= best_value({run_experiment(c).log}));
    CHECK(reference_optimum(c) == ref);
    CHECK(best_value({log_of({3.0, 2.0}), log_of({2.5, 1.5})}) == 1.5);
}

TEST_CASE("CSV round trip") {
    const ExperimentResult r = run_experiment(small_quadratic("offline", 30));
    std::stringstream ss;
    write_log_csv(ss, r.log);
    const ConvergenceLog back = read_log_csv(ss);
    CHECK(same_records(back, r.log));

    ExperimentConfig g = small_quadratic("guarded", 30);
    g.algorithm.base = "nesterov";
    const ExperimentResult rg = run_experiment(g);
    std::stringstream sg;
    write_log_csv(sg, rg.log);
    CHECK(sg.str().rfind("iter,f,resid,ms,branch\n", 0) == 0);
    const ConvergenceLog bg = read_log_csv(sg);
    CHECK(bg.has_branch);
    CHECK(same_records(bg, rg.log));

    std::istringstream bad_header("it,f\n1,2\n");
    CHECK_THROWS_AS(read_log_csv(bad_header), ParseError);
    std::istringstream backwards("iter,f,resid,ms\n2,1,1,0\n2,1,1,0\n");
    CHECK_THROWS_AS(read_log_csv(backwards), ParseError);
    std::istringstream junk("iter,f,resid,ms\n1,x,1,0\n");
    CHECK_THROWS_AS(read_log_csv(junk), ParseError);
}

TEST_CASE("report emission") {
    const fs::path empty_dir = scratch("empty");
    const ReportFiles none = emit_reports({}, {}, empty_dir.string(), {1e-2});
    CHECK(none.curves.empty());
    CHECK(fs::exists(none.summary));
    const std::string summary = slurp(none.summary);
    CHECK(summary.find("| run |") != std::string::npos);
    CHECK(summary.find("\n| ") == summary.find("\n| run |"));

    const ExperimentConfig c = small_quadratic("online", 40);
    const auto results = run_experiments({c, c}, 2);
    REQUIRE(results.size() == 2);
    const ReportFiles a = emit_reports({results[0]}, {}, scratch("a").string(), c.tolerances);
    const ReportFiles b = emit_reports({results[1]}, {}, scratch("b").string(), c.tolerances);
    CHECK(fs::path(a.curves[0]).filename() == run_name(c) + ".csv");
    CHECK(slurp(a.curves[0]) == slurp(b.curves[0]));
    CHECK(slurp(a.summary) == slurp(b.summary));
    CHECK(same_records(read_log_csv(a.curves[0]), results[0].log));

    NamedBoundary nb{"gd", boundary_points(Matrix::Identity(3, 3) * 0.5, 16)};
    const ReportFiles withb = emit_reports({results[0]}, {nb}, scratch("c").string(), c.tolerances);
    REQUIRE(withb.boundaries.size() == 1);
    CHECK(slurp(withb.boundaries[0]).rfind("theta,re,im\n", 0) == 0);

    // a regular file where the directory should be
    const fs::path blocker = scratch("blocked");
    fs::create_directories(blocker.parent_path());
    std::ofstream(blocker.string()) << "x";
    try {
        emit_reports({results[0]}, {}, (blocker / "sub").string(), c.tolerances);
        FAIL("expected an io error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("blocked") != std::string::npos);
    }
}

TEST_CASE("runs are reproducible and thread count does not matter") {
    std::vector<ExperimentConfig> cs{small_quadratic("none"), small_quadratic("offline"), small_quadratic("restart"),
                                     small_quadratic("online")};
    const auto serial = run_experiments(cs, 1);
    const auto pooled = run_experiments(cs, 4);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        std::ostringstream x, y;
        write_log_csv(x, serial[i].log);
        write_log_csv(y, pooled[i].log);
        CHECK(x.str() == y.str());
        CHECK(serial[i].name == run_name(cs[i]));
    }
}

TEST_CASE("timing column only when requested") {
    ExperimentConfig c = small_quadratic("none", 200);
    c.record_time = true;
    const ExperimentResult r = run_experiment(c);
    CHECK(r.log.records.back().ms >= r.log.records.front().ms);
    CHECK(r.log.records.back().ms > 0.0);
}
