#include "lssp/agent.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace lssp {

Agent::Agent(FeatureMap features, AgentConfig config)
    : features_(std::move(features)),
      config_(std::move(config)),
      stats_(features_.dim(), config_.schedule.lambda()),
      w_(Vector::Zero(features_.dim())),
      frozen_inv_(stats_.gram_inv()),
      log_det_at_update_(stats_.log_det()),
      action_cache_(static_cast<std::size_t>(features_.n_states()), -1) {
    config_.schedule.check();
    if (config_.schedule.dim != features_.dim()) {
        throw std::invalid_argument("Agent: schedule dimension does not match the features");
    }
    const bool choice1 = config_.schedule.kind == ScheduleKind::Choice1;
    if ((config_.oracle == OracleKind::Fixed) == choice1) {
        throw std::invalid_argument("Agent: the fixed oracle pairs with choice2/3, iterate and grid with choice1");
    }
    if (config_.forced_w) {
        if (config_.forced_w->size() != features_.dim()) throw ShapeError("Agent: forced_w has the wrong dimension");
        install(*config_.forced_w, 0.0);
    }
}

void Agent::install(Vector w, double alpha) {
    w_ = std::move(w);
    alpha_at_update_ = alpha;
    frozen_inv_ = stats_.gram_inv();
    log_det_at_update_ = stats_.log_det();
    has_policy_ = true;
    std::fill(action_cache_.begin(), action_cache_.end(), -1);
}

double Agent::frozen_bonus_norm(StateId s, ActionId a) const {
    const auto phi = features_.phi(s, a);
    return std::sqrt(std::max(0.0, phi.dot(frozen_inv_ * phi.transpose())));
}

ActionId Agent::act(StateId s) {
    if (!has_policy_) return 0;
    auto& cached = action_cache_[static_cast<std::size_t>(s)];
    if (cached >= 0) return cached;
    ActionId best_a = 0;
    double best = std::numeric_limits<double>::infinity();
    for (ActionId a = 0; a < features_.n_actions(); ++a) {
        const double score = features_.phi(s, a).dot(w_) - alpha_at_update_ * frozen_bonus_norm(s, a);
        if (score < best) {
            best = score;
            best_a = a;
        }
    }
    cached = best_a;
    return best_a;
}

UpdateDecision Agent::observe(StateId s, ActionId a, double cost, StateId s_next, bool episode_ended,
                              std::optional<StateId> next_initial) {
    if (finished_) throw std::logic_error("Agent::observe: the final episode has already ended");
    stats_.push(features_.phi(s, a).transpose(), cost, s_next);
    const std::size_t t = stats_.t();

    UpdateDecision out;
    out.det_trigger = stats_.log_det() >= std::log(2.0) + log_det_at_update_;
    if (episode_ended && !next_initial) {
        finished_ = true;
        out.finished = true;
        out.l = l_;
        out.m_l = m_.back();
        return out;
    }
    if (!(t == 1 || episode_ended || out.det_trigger)) {
        out.l = l_;
        out.m_l = m_.back();
        return out;
    }

    const ParamSchedule& sched = config_.schedule;
    const double alpha = sched.alpha(t);
    const StateId oracle_state = episode_ended ? *next_initial : s_next;
    const auto start = std::chrono::steady_clock::now();
    if (config_.forced_w) {
        install(*config_.forced_w, alpha);
    } else {
        const EmpiricalOperator op(stats_, features_, alpha, sched.b_star);
        OafpCertificate cert;
        try {
            switch (config_.oracle) {
                case OracleKind::Iterate: cert = oracle_iterate(op, config_.max_oracle_iter); break;
                case OracleKind::Fixed: cert = oracle_fixed(op, sched.n_iterations(t)); break;
                case OracleKind::Grid: cert = oracle_grid(op, oracle_state, config_.grid_cap); break;
            }
        } catch (const NonConvergenceError& e) {
            throw OracleFailure(std::string(e.what()) + " [t=" + std::to_string(t) + ", l=" + std::to_string(l_) + "]",
                                e.last_residual(), e.iterations(), t, l_);
        }
        install(cert.w, alpha);
        out.certificate = std::move(cert);
    }
    out.oracle_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (out.det_trigger) ++det_trigger_updates_;
    if (out.det_trigger && t != 1 && !episode_ended) ++det_only_updates_;
    ++l_;
    m_.push_back(t);
    out.updated = true;
    out.l = l_;
    out.m_l = t;
    out.oracle_state = oracle_state;
    return out;
}

}  // namespace lssp
