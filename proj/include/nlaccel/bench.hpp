#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlaccel/drivers.hpp"
#include "nlaccel/numrange.hpp"

namespace nlaccel {

struct ProblemSpec {
    std::string kind = "quadratic";  // quadratic | logistic | ridge | tv
    std::int64_t dimension = 100;
    std::int64_t samples = 500;
    double condition = 1e3;  // L / mu for quadratic and synthetic logistic
    double mu = 1e-2;        // ridge, tv and file datasets
    std::string dataset;     // optional sparse-format file for logistic
    bool normalize_rows = true;
    bool scale_gram = false;
    std::int64_t height = 64;
    std::int64_t width = 64;
    double noise = 0.1;
    std::string image;  // optional PGM for tv
    double smallest_singular = 0.1;
    double label_noise = 0.5;
};

struct AlgorithmSpec {
    std::string base = "gd";  // gd | nesterov | pdgm | pdgm_momentum | lbfgs
    std::string mode = "none";  // none | offline | restart | online | guarded
    std::int64_t window = 10;
    double lambda_rel = 1e-8;
    double eta = 1.0;
    double tau = std::numeric_limits<double>::infinity();  // finite: constrained variant
    std::int64_t iterations = 1000;
    double stop_resid = 0.0;  // stop once resid <= this; 0 runs every iteration
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    ProblemSpec problem;
    AlgorithmSpec algorithm;
    std::vector<double> tolerances{1e-2, 1e-4, 1e-6};
    std::string output_dir = "out";
    std::string label;
    bool record_time = false;
};

// Sections [problem], [algorithm], [output]; "key = value", '#' comments.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
// key is "section.key" or a bare key that names exactly one field.
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);
void validate_config(const ExperimentConfig& config);
// Canonical text of every field that influences the numbers.
std::string canonical_config(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);
std::string run_name(const ExperimentConfig& config);

struct ExperimentResult {
    ConvergenceLog log;       // what the mode reports (extrapolated values in offline mode)
    ConvergenceLog base_log;  // the underlying base iterates
    bool aborted = false;
    std::string name;
};

ExperimentResult run_experiment(const ExperimentConfig& config);
std::vector<ExperimentResult> run_experiments(const std::vector<ExperimentConfig>& configs, unsigned threads = 0);

// Lowest value over a plain run 5x longer than the configured one, cached per problem.
double reference_optimum(const ExperimentConfig& config);
double best_value(const std::vector<ConvergenceLog>& logs);

struct ToleranceRow {
    std::string name;
    std::vector<std::optional<std::size_t>> first_iter;
};

struct ToleranceTable {
    std::vector<double> tolerances;
    std::vector<ToleranceRow> rows;
    double f_star = 0.0;
};

ToleranceTable tolerance_table(const std::vector<std::pair<std::string, ConvergenceLog>>& logs,
                               const std::vector<double>& tolerances, double f_star);
std::string format_table_markdown(const ToleranceTable& table);

void write_log_csv(std::ostream& out, const ConvergenceLog& log);
void write_log_csv(const std::string& path, const ConvergenceLog& log);
ConvergenceLog read_log_csv(std::istream& in);
ConvergenceLog read_log_csv(const std::string& path);

struct NamedBoundary {
    std::string name;
    NumericalRangeBoundary boundary;
};

struct ReportFiles {
    std::vector<std::string> curves;
    std::vector<std::string> boundaries;
    std::string summary;
};

ReportFiles emit_reports(const std::vector<ExperimentResult>& runs, const std::vector<NamedBoundary>& boundaries,
                         const std::string& out_dir, const std::vector<double>& tolerances);

}  // namespace nlaccel
