#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hfpath/asymptotics.hpp"
#include "hfpath/functional.hpp"
#include "hfpath/model.hpp"

namespace hfpath {

enum class ExperimentKind { lln, clt_coverage, rate, jump_lln, jump_clt, constants, figure1 };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

struct LadderPoint {
    std::size_t n_coarse = 64;
    std::size_t m_fine = 50;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::lln;
    ModelSpec model;
    double horizon = 1.0;
    std::vector<LadderPoint> ladder;
    // Continuous-case statistics V(X,g)^n (lln, clt_coverage, rate).
    std::vector<FunctionalSpec> functionals;
    // Realized range exponents (jump_lln, jump_clt, and rate on jump models).
    std::vector<double> range_exponents;
    std::size_t replications = 1000;
    std::uint64_t seed = kDefaultSeed;
    double level = 0.95;
    unsigned threads = 1;

    // Jumps re-imposed in every replication. With jitter_within_block the size and
    // the coarse block are kept while the within-block fraction is redrawn per
    // replication (the limit law's kappa); otherwise times are used verbatim.
    std::vector<ScheduledJump> jump_scenario;
    bool jitter_within_block = true;

    // Limit-law simulation (jump_clt): sample size and Brownian resolution (0 = ladder m_fine).
    std::size_t limit_reps = 50000;
    std::size_t limit_m = 0;

    // Limit constants. Grid constants missing from the table are computed by MC with constant_reps.
    ConstantsTable constants;
    std::size_t constant_reps = 2'000'000;

    // figure1 / constants
    std::vector<double> p_grid;
    LambdaOptions lambda_options{LambdaMethod::mc, 400, 200'000, kDefaultSeed, 1, true};

    double lln_slack = 1.5;

    void validate() const;
};

struct ReportRow {
    std::string statistic;
    std::size_t ladder_index = 0;
    std::size_t n_coarse = 0;
    std::size_t m_fine = 0;
    double delta_n = 0.0;
    std::size_t replications = 0;
    double mean_error = 0.0;
    double mean_abs_error = 0.0;
    double mean_rel_error = 0.0;
    double rmse = 0.0;
    // RMSE against the continuum constant (differs from rmse only through the fine-grid sup bias).
    double rmse_continuum = 0.0;
    std::optional<double> coverage;
    std::optional<double> ks;
    std::size_t degenerate = 0;
    double target_constant = 0.0;
    std::uint64_t seed = 0;
    // Per-replication values: errors (lln/rate), studentized values (clt) or rescaled errors (jump_clt).
    std::vector<double> samples;
    bool scenario_ok = true;
};

struct SlopeRow {
    std::string statistic;
    double slope = 0.0;
    double slope_std_error = 0.0;
    std::size_t points = 0;
};

struct Figure1Row {
    double p = 0.0;
    double big_lambda_1 = 0.0;  // = Lambda^{2,p}
    double big_lambda_3 = 0.0;
    double big_lambda_3_se = 0.0;
    double ratio = 0.0;  // Lambda^1 / Lambda^3
};

struct ExperimentReport {
    ExperimentKind kind = ExperimentKind::lln;
    std::vector<ReportRow> rows;
    std::vector<SlopeRow> slopes;
    std::vector<Figure1Row> figure;
    std::vector<ConstantRecord> constants;
    std::map<std::string, double> constants_used;
    std::map<std::string, bool> checks;  // named pass/fail assertions of the experiment
    std::uint64_t seed = 0;
    double runtime_seconds = 0.0;

    bool all_checks_pass() const;
};

// Replication id of replication r at ladder point l; the path is simulate_path(model, grid, {seed, id}).
std::uint64_t replication_id(std::size_t ladder_index, std::size_t replication);

ExperimentReport run_lln(const ExperimentConfig& config);
ExperimentReport run_clt_coverage(const ExperimentConfig& config);
ExperimentReport run_rate(const ExperimentConfig& config);
ExperimentReport run_jump_clt_match(const ExperimentConfig& config);
ExperimentReport run_figure1(const ExperimentConfig& config);
ExperimentReport run_constants(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config);

// Re-simulates a single replication and returns the value stored in
// report.rows[row].samples[replication] (for statistic index `stat`).
double recompute_replication(const ExperimentConfig& config, std::size_t ladder_index, std::size_t stat,
                             std::size_t replication);

// The model actually simulated in one replication (scenario imposed, kappa jittered).
ModelSpec replication_model(const ExperimentConfig& config, const TimeGrid& grid, std::uint64_t rep_id);

// Constant c with rho_sigma(g) = |sigma|^p c for the m-point discretization of a built-in g.
double grid_constant(const ExperimentConfig& config, const FunctionalSpec& g, std::size_t m);
double continuum_constant(const ExperimentConfig& config, const FunctionalSpec& g);

// CSV with documented columns; ladder rows, slopes and figure rows go to separate files.
void write_report_csv(const ExperimentReport& report, const std::string& path, const std::string& comment);
void write_slopes_csv(const ExperimentReport& report, const std::string& path, const std::string& comment);
void write_figure1_csv(const ExperimentReport& report, const std::string& path, const std::string& comment);

}  // namespace hfpath
