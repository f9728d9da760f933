#pragma once

#include "lssp/envgen.hpp"
#include "lssp/experiment.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lssp {

/// Sweep configuration, read from JSON:
///
///   {
///     "schema_version": 1,
///     "env":   {"generator": "tabular-random", "n_states": 5, "n_actions": 3, "dim": 4,
///               "p_goal_min": 0.2, "c_min_target": 0.2, "cost_max": 1.0},
///     "agent": {"delta": 0.1, "b_star_multiplier": 1.0, "initial_state": "round-robin",
///               "gamma": 0.125, "gamma_1": 1.0, "gamma_2": 256.0, "max_oracle_iter": 0},
///     "grid":  {"seeds": [0, 1], "schedules": ["choice1"], "oracles": ["iterate"],
///               "alpha_scales": [1.0], "episodes": [1000]},
///     "workers": 1
///   }
///
/// Every key except schema_version is optional. Each seed generates the
/// environment (env.seed = seed) and drives the run (experiment seed = seed).
struct SweepConfig {
    EnvGenConfig env;
    ExperimentConfig agent;  ///< template; grid fields are overwritten per cell
    std::vector<std::uint64_t> seeds;
    std::vector<ScheduleKind> schedules;
    std::vector<OracleKind> oracles;
    std::vector<double> alpha_scales;
    std::vector<std::size_t> episodes;
    unsigned workers = 1;
};

inline constexpr int kSweepSchemaVersion = 1;

/// Throws std::invalid_argument on malformed or unsupported input.
SweepConfig parse_sweep_config(const std::string& json_text);
SweepConfig load_sweep_config(const std::filesystem::path& path);

struct SweepCell {
    std::uint64_t seed = 0;
    ScheduleKind schedule = ScheduleKind::Choice1;
    OracleKind oracle = OracleKind::Iterate;
    double alpha_scale = 1.0;
    std::size_t episodes = 0;
};

/// Cross product in the order seeds x schedules x oracles x alpha_scales x episodes,
/// skipping schedule/oracle pairs the agent rejects (fixed needs choice2/3,
/// iterate and grid need choice1).
std::vector<SweepCell> sweep_cells(const SweepConfig& cfg);

struct CellResult {
    SweepCell cell;
    RegretTrace trace;
    bool failed = false;  ///< setup or run error; trace.error holds the message
};

/// Runs a single cell exactly as `run_experiment` on the generated environment.
CellResult run_cell(const SweepConfig& cfg, const SweepCell& cell);

/// Runs every cell on up to cfg.workers threads. Results are indexed like
/// sweep_cells(cfg) regardless of completion order.
std::vector<CellResult> run_sweep(const SweepConfig& cfg);

/// Least-squares slope of log(value) on log(k) over points with k > burn_in * K
/// (K the largest k) and value > 0. NaN with fewer than two usable points.
double fit_loglog_slope(const std::vector<double>& ks, const std::vector<double>& values, double burn_in = 0.1);

/// Slope of cumulative regret against episode index for one trace.
double trace_slope(const RegretTrace& trace, double burn_in = 0.1);

/// Linear-interpolation quantile, q in [0,1]; NaN for empty input.
double quantile(std::vector<double> values, double q);

inline constexpr const char* kSummaryHeader =
    "schedule,oracle,alpha_scale,episodes,cells,failures,median_regret,iqr_regret,median_slope,oafp_pass_rate,"
    "nonconvergence_rate";

/// One row per (schedule, oracle, alpha_scale, episodes) group, in first-seen
/// cell order. oafp_pass_rate is over all oracle calls in the group (NaN when
/// there were none); nonconvergence_rate is the fraction of cells aborted by
/// oracle non-convergence.
void write_summary_csv(std::ostream& out, const std::vector<CellResult>& results);

/// trace_<schedule>_<oracle>_a<alpha>_K<episodes>_s<seed>
std::string cell_stem(const SweepCell& cell);

/// Writes per-cell trace/update/meta files and summary.csv into dir.
void write_sweep_outputs(const std::filesystem::path& dir, const std::vector<CellResult>& results);

}  // namespace lssp
