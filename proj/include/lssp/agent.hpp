#pragma once

#include "lssp/common.hpp"
#include "lssp/feature_map.hpp"
#include "lssp/oafp.hpp"
#include "lssp/schedule.hpp"
#include "lssp/statistics.hpp"

#include <optional>
#include <vector>

namespace lssp {

struct AgentConfig {
    ParamSchedule schedule;
    OracleKind oracle = OracleKind::Iterate;
    std::size_t max_oracle_iter = 0;  ///< 0: 10 t + 10^4
    double grid_cap = 1e7;
    /// Debug: install this vector at every update (and as the initial policy)
    /// instead of calling the oracle.
    std::optional<Vector> forced_w;
};

/// Oracle failure annotated with the time step and policy counter.
class OracleFailure : public NonConvergenceError {
public:
    OracleFailure(const std::string& what, double last_residual, std::size_t iterations, std::size_t t, int l)
        : NonConvergenceError(what, last_residual, iterations), t_(t), l_(l) {}
    std::size_t t() const noexcept { return t_; }
    int l() const noexcept { return l_; }

private:
    std::size_t t_;
    int l_;
};

struct UpdateDecision {
    bool updated = false;
    bool finished = false;     ///< final step of the final episode; no oracle call
    bool det_trigger = false;  ///< determinant doubling held at this step
    int l = 1;                 ///< policy counter after this step
    std::size_t m_l = 0;       ///< time of the latest update
    StateId oracle_state = -1; ///< s_{t+1} handed to the oracle
    std::optional<OafpCertificate> certificate;
    double oracle_seconds = 0.0;
};

/// Online agent: acts greedily against phi^T w - alpha ||phi||_{Lambda^{-1}}
/// using (w, alpha, Lambda^{-1}) frozen at the last update, and re-solves via
/// the configured oracle at t = 1, at each episode end, and whenever
/// det(Lambda_t) >= 2 det(Lambda_{M_l}).
class Agent {
public:
    Agent(FeatureMap features, AgentConfig config);

    /// Action 0 before the first update; afterwards the frozen greedy action
    /// (lowest index on ties), computed lazily per state.
    ActionId act(StateId s);

    /// Records (s, a, c, s_next). When episode_ended is set, next_initial must
    /// hold the next episode's first state unless this was the final episode.
    UpdateDecision observe(StateId s, ActionId a, double cost, StateId s_next, bool episode_ended,
                           std::optional<StateId> next_initial);

    struct UpdateCount {
        int policies = 1;                  ///< L so far
        std::vector<std::size_t> times;    ///< M_1 = 0, M_2, ...
    };
    UpdateCount policy_update_count() const { return {l_, m_}; }

    /// Updates at which the determinant condition held / held without t = 1
    /// or an episode end also holding.
    std::size_t det_trigger_updates() const noexcept { return det_trigger_updates_; }
    std::size_t det_only_updates() const noexcept { return det_only_updates_; }
    bool finished() const noexcept { return finished_; }
    std::size_t total_steps() const noexcept { return stats_.t(); }

    const StatisticsState& stats() const noexcept { return stats_; }
    const FeatureMap& features() const noexcept { return features_; }
    const AgentConfig& config() const noexcept { return config_; }
    const Vector& w_current() const noexcept { return w_; }
    double alpha_at_update() const noexcept { return alpha_at_update_; }
    double log_det_at_update() const noexcept { return log_det_at_update_; }
    const Matrix& frozen_gram_inv() const noexcept { return frozen_inv_; }

    /// ||phi(s,a)||_{Lambda_{M_l}^{-1}}
    double frozen_bonus_norm(StateId s, ActionId a) const;

private:
    void install(Vector w, double alpha);

    FeatureMap features_;
    AgentConfig config_;
    StatisticsState stats_;
    Vector w_;
    double alpha_at_update_ = 0.0;
    Matrix frozen_inv_;
    double log_det_at_update_;
    int l_ = 1;
    std::vector<std::size_t> m_{0};
    bool has_policy_ = false;
    bool finished_ = false;
    std::size_t det_trigger_updates_ = 0;
    std::size_t det_only_updates_ = 0;
    std::vector<ActionId> action_cache_;
};

}  // namespace lssp
