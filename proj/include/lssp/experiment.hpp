#pragma once

#include "lssp/agent.hpp"
#include "lssp/oafp.hpp"
#include "lssp/schedule.hpp"
#include "lssp/ssp.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lssp {

/// Exact solution of an environment, computed once per experiment.
struct GroundTruth {
    SspTables tables;
    ValueSolution solution;
    double b_star = 1.0;  ///< reported to the agent: solution.b_star * multiplier
    double c_min = 0.0;   ///< min non-goal cost
    double p_min = 0.0;   ///< min goal probability over non-goal pairs

    static GroundTruth compute(const LinearSsp& env, double b_star_multiplier = 1.0);
};

enum class InitialStatePolicy { Fixed, RoundRobin, Random };

std::string to_string(InitialStatePolicy p);
InitialStatePolicy parse_initial_state_policy(const std::string& name);  ///< "fixed" | "round-robin" | "random"

struct ExperimentConfig {
    std::size_t episodes = 100;
    std::uint64_t seed = 0;
    ScheduleKind schedule = ScheduleKind::Choice1;
    OracleKind oracle = OracleKind::Iterate;
    double alpha_scale = 1.0;
    double delta = 0.1;
    double b_star_multiplier = 1.0;
    double gamma = 0.125;    ///< choice3
    double gamma_1 = 1.0;    ///< choice3
    double gamma_2 = 256.0;  ///< choice3
    InitialStatePolicy initial_state = InitialStatePolicy::RoundRobin;
    StateId fixed_initial_state = 0;
    std::size_t episode_step_cap = 1'000'000;
    std::size_t max_oracle_iter = 0;  ///< 0: oracle default
    double grid_cap = 1e7;
    std::optional<Vector> forced_w;   ///< debug: bypass the oracle
    bool check_frozen_bonus = true;
};

/// Schedule for an experiment. choice2 takes chi and rho from the uniform
/// contraction bound with the environment's minimum goal probability.
ParamSchedule make_schedule(const ExperimentConfig& cfg, const GroundTruth& truth, int dim);

struct EpisodeRecord {
    std::size_t k = 0;
    std::size_t steps = 0;
    double cost = 0.0;
    double j_star_init = 0.0;
    double cum_regret = 0.0;
};

struct UpdateRecord {
    std::size_t t = 0;  ///< M_l
    int l = 0;
    StateId oracle_state = -1;
    bool det_trigger = false;
    std::size_t iterations = 0;
    double residual = 0.0;
    double alpha = 0.0;
    double optimism_gap = 0.0;
    bool optimism_ok = false;
    bool residual_ok = false;
    bool max_f_ok = false;
    bool bounded_ok = false;
    double seconds = 0.0;

    bool all_ok() const noexcept { return optimism_ok && residual_ok && max_f_ok && bounded_ok; }
};

struct RegretTrace {
    std::vector<EpisodeRecord> episodes;
    std::vector<UpdateRecord> updates;  ///< oracle calls only (empty with forced_w)
    std::size_t total_steps = 0;        ///< T
    int policies = 1;                   ///< L
    std::size_t det_trigger_updates = 0;
    std::size_t det_only_updates = 0;
    double total_cost = 0.0;   ///< step-level sum of costs
    double genie_cost = 0.0;   ///< sum_k J*(s_1^k)
    double c_min = 0.0;
    int dim = 0;
    std::size_t frozen_checks = 0;
    std::size_t frozen_violations = 0;
    double frozen_max_ratio = 0.0;  ///< max ||phi||_{Lambda_M^-1} / ||phi||_{Lambda_t^-1}
    bool completed = false;
    bool nonconvergence = false;
    std::string error;

    std::size_t k() const noexcept { return episodes.size(); }
    double regret() const noexcept { return episodes.empty() ? 0.0 : episodes.back().cum_regret; }
};

RegretTrace run_experiment(const LinearSsp& env, const GroundTruth& truth, const ExperimentConfig& cfg);
RegretTrace run_experiment(const LinearSsp& env, const ExperimentConfig& cfg);

/// Trace CSV: header "k,steps,cost,j_star_init,cum_regret", one row per episode.
inline constexpr const char* kTraceHeader = "k,steps,cost,j_star_init,cum_regret";
void write_trace_csv(std::ostream& out, const RegretTrace& trace);
std::vector<EpisodeRecord> read_trace_csv(std::istream& in);

/// Update log CSV, one row per oracle call.
inline constexpr const char* kUpdateHeader =
    "t,l,oracle_state,det_trigger,iterations,residual,alpha,optimism_gap,optimism_ok,residual_ok,max_f_ok,"
    "bounded_ok,seconds";
void write_updates_csv(std::ostream& out, const RegretTrace& trace);

/// Run totals as JSON, for re-checking a trace file later.
void write_trace_meta(std::ostream& out, const RegretTrace& trace);
/// Reads totals back into a trace (episodes untouched).
void read_trace_meta(std::istream& in, RegretTrace& trace);

struct TraceCheck {
    std::vector<std::string> failures;
    bool ok() const noexcept { return failures.empty(); }
};

/// Re-checks a trace: cumulative regret against a fresh long-double sum of the
/// episode columns (absolute 1e-9 plus 1e-12 relative to the cost total), step
/// counts against T, T c_min <= Regret + genie + c_min, L - K <= d log2(2T) and
/// the frozen-bonus counters.
TraceCheck verify_trace(const RegretTrace& trace);

}  // namespace lssp
