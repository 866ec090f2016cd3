// nlaccel command line: run experiment configs, tabulate logs, dump numerical ranges.

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlaccel/bench.hpp"
#include "nlaccel/errors.hpp"
#include "nlaccel/numrange.hpp"
#include "nlaccel/problems.hpp"

using namespace nlaccel;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::vector<std::string> expand_glob(const std::string& pattern) {
    glob_t g{};
    std::vector<std::string> out;
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
    return out;
}

std::vector<double> parse_tolerances(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("bad tolerance '" + item + "'");
        }
    }
    return out;
}

// "kind:key=val,key=val"
std::pair<std::string, std::map<std::string, std::string>> parse_operator_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    std::pair<std::string, std::map<std::string, std::string>> out;
    out.first = spec.substr(0, colon);
    if (colon == std::string::npos) return out;
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("operator option '" + item + "' lacks '='");
        out.second[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

double num(const std::map<std::string, std::string>& opts, const std::string& key, double fallback) {
    auto it = opts.find(key);
    if (it == opts.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("option " + key + " is not a number");
    }
}

Matrix read_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(row);
    }
    if (rows.empty()) throw ConfigError(path + ": empty matrix");
    Matrix G(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw ConfigError(path + ": ragged rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j) G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    if (G.rows() != G.cols()) throw ConfigError(path + ": matrix must be square");
    return G;
}

Matrix operator_from_spec(const std::string& spec) {
    const auto [kind, opts] = parse_operator_spec(spec);
    const auto d = static_cast<Eigen::Index>(num(opts, "d", 5));
    const auto seed = static_cast<std::uint64_t>(num(opts, "seed", 0));
    if (kind == "gd" || kind == "nesterov") {
        const double ratio = num(opts, "ratio", 10.0);
        const QuadraticProblem q = synthetic_quadratic(d, ratio, seed);
        const Matrix A = Matrix::Identity(d, d) - q.A / q.L_smooth;
        if (kind == "gd") return A;
        const double beta = (std::sqrt(q.L_smooth) - std::sqrt(q.mu)) / (std::sqrt(q.L_smooth) + std::sqrt(q.mu));
        return nesterov_operator(A, beta).G;
    }
    if (kind == "cp") {
        const auto m = static_cast<Eigen::Index>(num(opts, "m", 6));
        const RidgeProblem r = synthetic_ridge(m, d, num(opts, "mu", 0.1), seed);
        return cp_iteration_jacobian(r.A, num(opts, "sigma", 0.5), num(opts, "tau", 0.5), r.mu);
    }
    if (kind == "file") {
        auto it = opts.find("path");
        if (it == opts.end()) throw ConfigError("file operator needs path=...");
        return read_matrix(it->second);
    }
    throw ConfigError("unknown operator kind '" + kind + "' (nesterov, gd, cp, file)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear acceleration experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run experiment configs; --section.key value overrides config keys");
    std::vector<std::string> config_paths;
    unsigned threads = 0;
    run->add_option("configs", config_paths, "Config files")->required();
    run->add_option("--threads", threads, "Worker threads (0 = hardware)");

    auto* table = app.add_subcommand("table", "Iterations-to-tolerance table from CSV logs");
    std::string pattern;
    std::string tol_text = "1e-2,1e-4,1e-6";
    double f_star = std::nan("");
    table->add_option("glob", pattern, "Glob of CSV logs")->required();
    table->add_option("--tol", tol_text, "Comma separated tolerances");
    table->add_option("--fstar", f_star, "Optimal value (default: best value over the logs)");

    auto* range = app.add_subcommand("range", "Numerical-range boundary of an operator as CSV");
    std::string spec;
    std::size_t angles = 512;
    std::string out_path;
    range->add_option("spec", spec, "kind:key=val,... with kind nesterov, gd, cp or file")->required();
    range->add_option("--angles", angles, "Number of rotation angles");
    range->add_option("--out", out_path, "Output file (default stdout)");

    // Split "--key value" overrides of the run subcommand off before CLI11 sees them.
    std::vector<std::string> args;
    std::vector<std::pair<std::string, std::string>> overrides;
    bool in_run = false;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (!in_run && arg == "run") in_run = true;
        const bool own = arg == "--threads" || arg == "--help" || arg.rfind("--threads=", 0) == 0;
        if (!in_run || arg.rfind("--", 0) != 0 || own) {
            args.push_back(arg);
            continue;
        }
        const auto eq = arg.find('=');
        if (eq != std::string::npos) {
            overrides.emplace_back(arg.substr(2, eq - 2), arg.substr(eq + 1));
        } else if (i + 1 < argc) {
            overrides.emplace_back(arg.substr(2), argv[++i]);
        } else {
            std::cerr << "config error: " << arg << " needs a value\n";
            return kExitConfig;
        }
    }
    std::reverse(args.begin(), args.end());

    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) {
            std::vector<ExperimentConfig> configs;
            for (const auto& path : config_paths) {
                ExperimentConfig c = load_config(path);
                for (const auto& [k, v] : overrides) apply_override(c, k, v);
                validate_config(c);
                configs.push_back(c);
            }
            const auto results = run_experiments(configs, threads);
            std::map<std::string, std::vector<ExperimentResult>> by_dir;
            std::map<std::string, std::vector<double>> tolerances;
            for (std::size_t i = 0; i < configs.size(); ++i) {
                by_dir[configs[i].output_dir].push_back(results[i]);
                tolerances.emplace(configs[i].output_dir, configs[i].tolerances);
            }
            bool aborted = false;
            for (const auto& [dir, runs] : by_dir) {
                const ReportFiles files = emit_reports(runs, {}, dir, tolerances[dir]);
                for (const auto& f : files.curves) std::cout << f << "\n";
                std::cout << files.summary << "\n";
            }
            for (const auto& r : results) {
                if (!r.aborted) continue;
                aborted = true;
                std::cerr << r.name << ": " << r.log.termination << "\n";
            }
            return aborted ? kExitNumerical : 0;
        }
        if (*table) {
            const auto paths = expand_glob(pattern);
            std::vector<std::pair<std::string, ConvergenceLog>> logs;
            std::vector<ConvergenceLog> plain;
            for (const auto& p : paths) {
                logs.emplace_back(p, read_log_csv(p));
                plain.push_back(logs.back().second);
            }
            if (std::isnan(f_star)) f_star = plain.empty() ? 0.0 : best_value(plain);
            std::cout << format_table_markdown(tolerance_table(logs, parse_tolerances(tol_text), f_star));
            return 0;
        }
        if (*range) {
            const Matrix G = operator_from_spec(spec);
            const NumericalRangeBoundary b = boundary_points(G, angles);
            if (out_path.empty()) {
                write_boundary_csv(std::cout, b);
            } else {
                std::ofstream out(out_path);
                if (!out) throw IoError("cannot write " + out_path);
                write_boundary_csv(out, b);
            }
            std::fprintf(stderr, "max real part %.12g (%s)\n", b.max_real,
                         acceleration_feasible(b) ? "below 1" : "not below 1");
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SpectrumOutOfRange& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
