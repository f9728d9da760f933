#include "lssp/experiment.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace lssp {

GroundTruth GroundTruth::compute(const LinearSsp& env, double b_star_multiplier) {
    if (!(b_star_multiplier >= 1.0)) throw std::invalid_argument("GroundTruth: B* multiplier must be >= 1");
    GroundTruth g;
    g.tables = tabulate(env);
    g.solution = value_iteration(g.tables);
    g.b_star = g.solution.b_star * b_star_multiplier;
    g.c_min = std::numeric_limits<double>::infinity();
    for (StateId s = 0; s < g.tables.n_states; ++s) {
        if (s == g.tables.goal) continue;
        for (ActionId a = 0; a < g.tables.n_actions; ++a) g.c_min = std::min(g.c_min, g.tables.c(s, a));
    }
    g.p_min = min_goal_probability(g.tables);
    return g;
}

std::string to_string(InitialStatePolicy p) {
    switch (p) {
        case InitialStatePolicy::Fixed: return "fixed";
        case InitialStatePolicy::RoundRobin: return "round-robin";
        case InitialStatePolicy::Random: return "random";
    }
    return "unknown";
}

InitialStatePolicy parse_initial_state_policy(const std::string& name) {
    if (name == "fixed") return InitialStatePolicy::Fixed;
    if (name == "round-robin") return InitialStatePolicy::RoundRobin;
    if (name == "random") return InitialStatePolicy::Random;
    throw std::invalid_argument("unknown initial-state policy '" + name + "' (expected fixed|round-robin|random)");
}

ParamSchedule make_schedule(const ExperimentConfig& cfg, const GroundTruth& truth, int dim) {
    ParamSchedule s;
    switch (cfg.schedule) {
        case ScheduleKind::Choice1: s = ParamSchedule::choice1(truth.b_star, dim, cfg.delta); break;
        case ScheduleKind::Choice2: {
            const ContractionBound cb = contraction_bound(truth.tables, truth.p_min);
            s = ParamSchedule::choice2(truth.b_star, dim, cfg.delta, cb.chi_bar, cb.rho_bar);
            break;
        }
        case ScheduleKind::Choice3:
            s = ParamSchedule::choice3(truth.b_star, dim, cfg.delta, cfg.gamma, cfg.gamma_1, cfg.gamma_2);
            break;
    }
    s.alpha_scale = cfg.alpha_scale;
    s.check();
    return s;
}

namespace {

class InitialStates {
public:
    InitialStates(const ExperimentConfig& cfg, const SspTables& tables) : policy_(cfg.initial_state), fixed_(cfg.fixed_initial_state) {
        for (StateId s = 0; s < tables.n_states; ++s) {
            if (s != tables.goal) non_goal_.push_back(s);
        }
        if (policy_ == InitialStatePolicy::Fixed && (fixed_ < 0 || fixed_ >= tables.n_states || fixed_ == tables.goal)) {
            throw std::invalid_argument("run_experiment: fixed initial state must be a non-goal state");
        }
    }

    /// s_1^k for k = 1, 2, ... in order.
    StateId next(std::mt19937_64& rng) {
        ++k_;
        switch (policy_) {
            case InitialStatePolicy::Fixed: return fixed_;
            case InitialStatePolicy::RoundRobin: return non_goal_[(k_ - 1) % non_goal_.size()];
            case InitialStatePolicy::Random: {
                std::uniform_int_distribution<std::size_t> pick(0, non_goal_.size() - 1);
                return non_goal_[pick(rng)];
            }
        }
        return non_goal_.front();
    }

private:
    InitialStatePolicy policy_;
    StateId fixed_;
    std::vector<StateId> non_goal_;
    std::size_t k_ = 0;
};

StateId sample_next(const SspTables& tables, StateId s, ActionId a, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    const auto row = tables.transition.row(static_cast<Eigen::Index>(tables.row(s, a)));
    double acc = 0.0;
    StateId last_positive = tables.goal;
    for (StateId next = 0; next < tables.n_states; ++next) {
        const double p = row(next);
        if (p <= 0.0) continue;
        acc += p;
        last_positive = next;
        if (u < acc) return next;
    }
    return last_positive;
}

/// Neumaier-compensated running sum.
struct CompensatedSum {
    long double sum = 0.0L;
    long double comp = 0.0L;
    void add(long double x) {
        const long double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    long double value() const { return sum + comp; }
};

constexpr double kFrozenSlack = 1e-9;

}  // namespace

RegretTrace run_experiment(const LinearSsp& env, const ExperimentConfig& cfg) {
    return run_experiment(env, GroundTruth::compute(env, cfg.b_star_multiplier), cfg);
}

RegretTrace run_experiment(const LinearSsp& env, const GroundTruth& truth, const ExperimentConfig& cfg) {
    RegretTrace trace;
    trace.dim = env.dim();
    trace.c_min = truth.c_min;
    if (cfg.episodes == 0) {
        trace.completed = true;
        return trace;
    }

    AgentConfig acfg;
    acfg.schedule = make_schedule(cfg, truth, env.dim());
    acfg.oracle = cfg.oracle;
    acfg.max_oracle_iter = cfg.max_oracle_iter;
    acfg.grid_cap = cfg.grid_cap;
    acfg.forced_w = cfg.forced_w;
    Agent agent(env.features, acfg);

    const SspTables& tables = truth.tables;
    const Vector& j_star = truth.solution.j_star;
    std::mt19937_64 rng(cfg.seed);
    InitialStates initial(cfg, tables);

    CompensatedSum step_cost;
    CompensatedSum regret;
    CompensatedSum genie;
    const double sqrt2 = std::sqrt(2.0);

    auto record_update = [&](const UpdateDecision& dec) {
        if (!dec.certificate) return;
        const EmpiricalOperator op(agent.stats(), agent.features(), agent.alpha_at_update(), acfg.schedule.b_star);
        OafpCertificate cert = verify_certificate(*dec.certificate, op, dec.oracle_state, j_star(dec.oracle_state));
        cert.iterations = dec.certificate->iterations;
        UpdateRecord u;
        u.t = dec.m_l;
        u.l = dec.l;
        u.oracle_state = dec.oracle_state;
        u.det_trigger = dec.det_trigger;
        u.iterations = cert.iterations;
        u.residual = cert.fixed_point_residual;
        u.alpha = cert.alpha;
        u.optimism_gap = cert.optimism_gap.value_or(0.0);
        u.optimism_ok = cert.passed.optimism.value_or(false);
        u.residual_ok = cert.passed.residual;
        u.max_f_ok = cert.passed.max_f;
        u.bounded_ok = cert.passed.bounded;
        u.seconds = dec.oracle_seconds;
        trace.updates.push_back(u);
    };

    auto finish_totals = [&] {
        trace.total_steps = agent.total_steps();
        trace.policies = agent.policy_update_count().policies;
        trace.det_trigger_updates = agent.det_trigger_updates();
        trace.det_only_updates = agent.det_only_updates();
        trace.total_cost = static_cast<double>(step_cost.value());
        trace.genie_cost = static_cast<double>(genie.value());
    };

    StateId s1 = initial.next(rng);
    try {
        for (std::size_t k = 1; k <= cfg.episodes; ++k) {
            EpisodeRecord ep;
            ep.k = k;
            ep.j_star_init = j_star(s1);
            CompensatedSum ep_cost;
            StateId s = s1;
            while (true) {
                if (ep.steps >= cfg.episode_step_cap) {
                    throw std::runtime_error("episode " + std::to_string(k) + " exceeded the step cap of " +
                                             std::to_string(cfg.episode_step_cap));
                }
                if (cfg.check_frozen_bonus && agent.policy_update_count().policies > 1) {
                    for (ActionId a = 0; a < env.n_actions(); ++a) {
                        const auto phi = env.features.phi(s, a);
                        const double now = agent.stats().inverse_norm(phi.transpose());
                        const double frozen = agent.frozen_bonus_norm(s, a);
                        ++trace.frozen_checks;
                        // Lambda_t >= Lambda_M gives now <= frozen; det(Lambda_t) < 2 det(Lambda_M)
                        // gives frozen <= sqrt(2) now.
                        if (now > 0.0) trace.frozen_max_ratio = std::max(trace.frozen_max_ratio, frozen / now);
                        if (frozen > sqrt2 * now + kFrozenSlack || now > frozen * (1.0 + kFrozenSlack) + kFrozenSlack) {
                            ++trace.frozen_violations;
                        }
                    }
                }
                const ActionId a = agent.act(s);
                const double c = tables.c(s, a);
                const StateId next = sample_next(tables, s, a, rng);
                ++ep.steps;
                ep_cost.add(c);
                step_cost.add(c);
                const bool ended = next == tables.goal;
                std::optional<StateId> next_initial;
                if (ended && k < cfg.episodes) next_initial = initial.next(rng);
                const UpdateDecision dec = agent.observe(s, a, c, next, ended, next_initial);
                if (dec.updated) record_update(dec);
                if (ended) {
                    if (next_initial) s1 = *next_initial;
                    break;
                }
                s = next;
            }
            ep.cost = static_cast<double>(ep_cost.value());
            genie.add(ep.j_star_init);
            regret.add(ep_cost.value());
            regret.add(-static_cast<long double>(ep.j_star_init));
            ep.cum_regret = static_cast<double>(regret.value());
            trace.episodes.push_back(ep);
        }
        trace.completed = true;
    } catch (const NonConvergenceError& e) {
        trace.nonconvergence = true;
        trace.error = e.what();
    } catch (const std::exception& e) {
        trace.error = e.what();
    }
    finish_totals();
    return trace;
}

void write_trace_csv(std::ostream& out, const RegretTrace& trace) {
    out << kTraceHeader << '\n';
    char buf[160];
    for (const auto& e : trace.episodes) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g\n", e.k, e.steps, e.cost, e.j_star_init, e.cum_regret);
        out << buf;
    }
}

std::vector<EpisodeRecord> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trace csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceHeader) throw std::runtime_error("trace csv: unexpected header '" + line + "'");
    std::vector<EpisodeRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        EpisodeRecord e;
        char tail = 0;
        if (std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf,%lf%c", &e.k, &e.steps, &e.cost, &e.j_star_init, &e.cum_regret,
                        &tail) < 5) {
            throw std::runtime_error("trace csv: malformed line " + std::to_string(lineno));
        }
        out.push_back(e);
    }
    return out;
}

void write_updates_csv(std::ostream& out, const RegretTrace& trace) {
    out << kUpdateHeader << '\n';
    char buf[320];
    for (const auto& u : trace.updates) {
        std::snprintf(buf, sizeof buf, "%zu,%d,%d,%d,%zu,%.17g,%.17g,%.17g,%d,%d,%d,%d,%.6g\n", u.t, u.l, u.oracle_state,
                      u.det_trigger ? 1 : 0, u.iterations, u.residual, u.alpha, u.optimism_gap, u.optimism_ok ? 1 : 0,
                      u.residual_ok ? 1 : 0, u.max_f_ok ? 1 : 0, u.bounded_ok ? 1 : 0, u.seconds);
        out << buf;
    }
}

void write_trace_meta(std::ostream& out, const RegretTrace& trace) {
    nlohmann::ordered_json j;
    j["format"] = "lssp-trace-meta";
    j["format_version"] = 1;
    j["episodes"] = trace.episodes.size();
    j["total_steps"] = trace.total_steps;
    j["policies"] = trace.policies;
    j["det_trigger_updates"] = trace.det_trigger_updates;
    j["det_only_updates"] = trace.det_only_updates;
    j["total_cost"] = trace.total_cost;
    j["genie_cost"] = trace.genie_cost;
    j["c_min"] = trace.c_min;
    j["dim"] = trace.dim;
    j["frozen_checks"] = trace.frozen_checks;
    j["frozen_violations"] = trace.frozen_violations;
    j["frozen_max_ratio"] = trace.frozen_max_ratio;
    j["oracle_calls"] = trace.updates.size();
    std::size_t passed = 0;
    for (const auto& u : trace.updates) passed += u.all_ok() ? 1 : 0;
    j["oracle_calls_passed"] = passed;
    j["completed"] = trace.completed;
    j["nonconvergence"] = trace.nonconvergence;
    j["error"] = trace.error;
    out << j.dump(2) << '\n';
}

void read_trace_meta(std::istream& in, RegretTrace& trace) {
    const auto j = nlohmann::json::parse(in);
    if (j.value("format", std::string()) != "lssp-trace-meta") throw std::runtime_error("trace meta: wrong format tag");
    if (j.value("format_version", 0) != 1) throw std::runtime_error("trace meta: unsupported format_version");
    trace.total_steps = j.at("total_steps").get<std::size_t>();
    trace.policies = j.at("policies").get<int>();
    trace.det_trigger_updates = j.at("det_trigger_updates").get<std::size_t>();
    trace.det_only_updates = j.at("det_only_updates").get<std::size_t>();
    trace.total_cost = j.at("total_cost").get<double>();
    trace.genie_cost = j.at("genie_cost").get<double>();
    trace.c_min = j.at("c_min").get<double>();
    trace.dim = j.at("dim").get<int>();
    trace.frozen_checks = j.at("frozen_checks").get<std::size_t>();
    trace.frozen_violations = j.at("frozen_violations").get<std::size_t>();
    trace.frozen_max_ratio = j.at("frozen_max_ratio").get<double>();
    trace.completed = j.at("completed").get<bool>();
    trace.nonconvergence = j.at("nonconvergence").get<bool>();
    trace.error = j.at("error").get<std::string>();
}

TraceCheck verify_trace(const RegretTrace& trace) {
    TraceCheck out;
    auto fail = [&](const std::string& msg) { out.failures.push_back(msg); };
    char buf[256];

    // Plain long-double sums in episode order, kept separate from the run's
    // compensated accumulators.
    long double cost = 0.0L;
    long double genie = 0.0L;
    std::size_t steps = 0;
    for (std::size_t i = 0; i < trace.episodes.size(); ++i) {
        const EpisodeRecord& e = trace.episodes[i];
        if (e.k != i + 1) {
            std::snprintf(buf, sizeof buf, "episode index %zu at row %zu", e.k, i + 1);
            fail(buf);
        }
        cost += e.cost;
        genie += e.j_star_init;
        steps += e.steps;
        const long double expected = cost - genie;
        const double tol = 1e-9 + 1e-12 * static_cast<double>(cost);
        if (std::fabs(static_cast<double>(expected - e.cum_regret)) > tol) {
            std::snprintf(buf, sizeof buf, "cumulative regret %.17g at k=%zu differs from recomputed %.17g", e.cum_regret,
                          e.k, static_cast<double>(expected));
            fail(buf);
            break;
        }
    }
    if (trace.completed || trace.total_steps == steps) {
        if (steps != trace.total_steps) {
            std::snprintf(buf, sizeof buf, "episode steps sum to %zu but T = %zu", steps, trace.total_steps);
            fail(buf);
        }
    }
    if (trace.c_min > 0.0 && !trace.episodes.empty()) {
        const double regret = trace.episodes.back().cum_regret;
        const double bound = (regret + static_cast<double>(genie)) / trace.c_min + 1.0;
        if (static_cast<double>(steps) > bound * (1.0 + 1e-12) + 1e-9) {
            std::snprintf(buf, sizeof buf, "T = %zu exceeds (Regret + genie)/c_min + 1 = %.6f", steps, bound);
            fail(buf);
        }
    }
    if (trace.completed && trace.total_steps > 0) {
        const double k = static_cast<double>(trace.episodes.size());
        const double bound = trace.dim * std::log2(2.0 * static_cast<double>(trace.total_steps));
        if (static_cast<double>(trace.policies) - k > bound) {
            std::snprintf(buf, sizeof buf, "L - K = %.0f exceeds d log2(2T) = %.6f", trace.policies - k, bound);
            fail(buf);
        }
    }
    if (trace.frozen_violations > 0) {
        std::snprintf(buf, sizeof buf, "frozen-bonus inequality failed %zu times (max ratio %.12g)", trace.frozen_violations,
                      trace.frozen_max_ratio);
        fail(buf);
    }
    return out;
}

}  // namespace lssp
