#include "lssp/envgen.hpp"
#include "lssp/experiment.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace lssp;
using namespace lssp::testing;

namespace {

ExperimentConfig small_run(std::size_t k, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.episodes = k;
    cfg.seed = seed;
    return cfg;
}

std::string trace_text(const RegretTrace& t) {
    std::ostringstream out;
    write_trace_csv(out, t);
    return out.str();
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_error(const std::vector<double>& v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

TEST(RunExperiment, ZeroEpisodes) {
    const RegretTrace t = run_experiment(generate(tabular_cfg(4, 2, 0)), small_run(0, 0));
    EXPECT_TRUE(t.completed);
    EXPECT_TRUE(t.episodes.empty());
    EXPECT_EQ(t.regret(), 0.0);
    EXPECT_EQ(t.total_steps, 0u);
    EXPECT_TRUE(verify_trace(t).ok());
}

TEST(RunExperiment, SameSeedSameTrace) {
    const LinearSsp env = generate(tabular_cfg(5, 3, 1));
    const RegretTrace a = run_experiment(env, small_run(60, 9));
    const RegretTrace b = run_experiment(env, small_run(60, 9));
    const RegretTrace c = run_experiment(env, small_run(60, 10));
    EXPECT_EQ(trace_text(a), trace_text(b));
    EXPECT_EQ(a.policies, b.policies);
    EXPECT_EQ(a.total_steps, b.total_steps);
    EXPECT_NE(trace_text(a), trace_text(c));
}

TEST(RunExperiment, RegretIdentityAndStructuralBounds) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const LinearSsp env = generate(seed % 2 ? low_rank_cfg(6, 3, 3, seed) : tabular_cfg(5, 3, seed));
        const RegretTrace t = run_experiment(env, small_run(150, seed));
        ASSERT_TRUE(t.completed) << t.error;
        const ValueSolution sol = value_iteration(env);

        const std::size_t live = static_cast<std::size_t>(env.n_states() - 1);
        double cost = 0.0, genie = 0.0;
        std::size_t steps = 0;
        for (const EpisodeRecord& e : t.episodes) {
            cost += e.cost;
            steps += e.steps;
            EXPECT_EQ(e.j_star_init, sol.j_star(static_cast<Eigen::Index>((e.k - 1) % live)));  // round-robin
        }
        for (std::size_t k = 0; k < t.k(); ++k) genie += sol.j_star(static_cast<Eigen::Index>(k % live));
        EXPECT_NEAR(t.regret(), cost - genie, 1e-9);
        EXPECT_NEAR(t.total_cost, cost, 1e-9);
        EXPECT_EQ(steps, t.total_steps);

        const double c_min = t.c_min;
        ASSERT_GT(c_min, 0.0);
        EXPECT_LE(static_cast<double>(t.total_steps), (t.regret() + genie) / c_min + 1.0);
        EXPECT_LE(static_cast<double>(t.policies) - static_cast<double>(t.k()),
                  t.dim * std::log2(2.0 * static_cast<double>(t.total_steps)));
        EXPECT_EQ(t.frozen_violations, 0u);
        EXPECT_GT(t.frozen_checks, 0u);
        EXPECT_TRUE(verify_trace(t).ok());

        // Updates: t = 1, every episode end except the last, and determinant-only triggers.
        const std::size_t first_overlap = t.episodes.front().steps == 1 ? 1 : 0;
        EXPECT_EQ(static_cast<std::size_t>(t.policies), 1 + 1 + (t.k() - 1) - first_overlap + t.det_only_updates);
        EXPECT_EQ(t.updates.size(), static_cast<std::size_t>(t.policies - 1));
    }
}

TEST(RunExperiment, CertificatesPassOnTabularChoiceOne) {
    const LinearSsp env = generate(tabular_cfg(5, 3, 2));
    const RegretTrace t = run_experiment(env, small_run(200, 2));
    ASSERT_TRUE(t.completed);
    std::size_t ok = 0;
    for (const UpdateRecord& u : t.updates) ok += u.all_ok();
    EXPECT_GE(static_cast<double>(ok), 0.99 * static_cast<double>(t.updates.size()));
}

TEST(RunExperiment, GenieRegretConcentratesAtZero) {
    // alpha_scale = 0 and w forced to w*: the agent follows pi*, so Regret(K)
    // is a sum of zero-mean episode deviations.
    const LinearSsp env = generate(tabular_cfg(5, 3, 0));
    const ValueSolution sol = value_iteration(env);
    std::vector<double> regrets;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        ExperimentConfig cfg = small_run(100, seed);
        cfg.alpha_scale = 0.0;
        cfg.forced_w = Vector(env.theta + env.mu.transpose() * sol.j_star);
        const RegretTrace t = run_experiment(env, cfg);
        ASSERT_TRUE(t.completed);
        EXPECT_TRUE(t.updates.empty());
        regrets.push_back(t.regret());
    }
    EXPECT_LE(std::abs(mean(regrets)), 3.0 * std_error(regrets));
}

TEST(GroundTruth, MatchesMonteCarloRollouts) {
    const LinearSsp env = generate(tabular_cfg(5, 3, 3));
    const GroundTruth truth = GroundTruth::compute(env);
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (StateId start = 0; start < 4; ++start) {
        std::vector<double> costs;
        for (int i = 0; i < 10000; ++i) {
            StateId s = start;
            double total = 0.0;
            while (s != env.goal()) {
                const ActionId a = truth.solution.pi_star[static_cast<std::size_t>(s)];
                total += model_cost(env, s, a);
                const double x = u(rng);
                double acc = 0.0;
                StateId next = env.goal();
                for (StateId n = 0; n < env.n_states(); ++n) {
                    acc += model_prob(env, s, a, n);
                    if (x < acc) {
                        next = n;
                        break;
                    }
                }
                s = next;
            }
            costs.push_back(total);
        }
        EXPECT_LE(std::abs(mean(costs) - truth.solution.j_star(start)), 3.0 * std_error(costs)) << start;
    }
}

TEST(GroundTruth, BStarMultiplier) {
    const LinearSsp env = generate(tabular_cfg(4, 2, 0));
    const GroundTruth a = GroundTruth::compute(env);
    const GroundTruth b = GroundTruth::compute(env, 2.0);
    EXPECT_EQ(b.b_star, 2.0 * a.b_star);
    EXPECT_NEAR(a.c_min, tabulate(env).cost.topRows(6).minCoeff(), 0.0);
    EXPECT_THROW(GroundTruth::compute(env, 0.5), std::invalid_argument);
}

TEST(RunExperiment, InitialStatePolicies) {
    const LinearSsp env = generate(tabular_cfg(5, 2, 4));
    const ValueSolution sol = value_iteration(env);
    ExperimentConfig cfg = small_run(20, 1);
    cfg.initial_state = InitialStatePolicy::Fixed;
    cfg.fixed_initial_state = 2;
    for (const EpisodeRecord& e : run_experiment(env, cfg).episodes) EXPECT_EQ(e.j_star_init, sol.j_star(2));
    cfg.initial_state = InitialStatePolicy::Random;
    const RegretTrace r1 = run_experiment(env, cfg);
    const RegretTrace r2 = run_experiment(env, cfg);
    EXPECT_EQ(trace_text(r1), trace_text(r2));
    EXPECT_EQ(parse_initial_state_policy("round-robin"), InitialStatePolicy::RoundRobin);
    EXPECT_THROW(parse_initial_state_policy("first"), std::invalid_argument);
}

TEST(RunExperiment, AbortsWithPartialTrace) {
    const LinearSsp env = generate(tabular_cfg(5, 3, 0, 0.2));
    ExperimentConfig cfg = small_run(50, 0);
    cfg.episode_step_cap = 1;
    const RegretTrace capped = run_experiment(env, cfg);
    EXPECT_FALSE(capped.completed);
    EXPECT_FALSE(capped.error.empty());
    EXPECT_LT(capped.k(), 50u);

    cfg = small_run(50, 0);
    cfg.alpha_scale = 1e-9;
    cfg.max_oracle_iter = 1;
    const RegretTrace stuck = run_experiment(env, cfg);
    EXPECT_FALSE(stuck.completed);
    EXPECT_TRUE(stuck.nonconvergence);
}

TEST(TraceFiles, RoundTripAndVerification) {
    const LinearSsp env = generate(tabular_cfg(4, 2, 5));
    const RegretTrace t = run_experiment(env, small_run(40, 5));
    std::stringstream csv;
    write_trace_csv(csv, t);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), kTraceHeader);
    const std::vector<EpisodeRecord> back = read_trace_csv(csv);
    ASSERT_EQ(back.size(), t.k());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].k, t.episodes[i].k);
        EXPECT_EQ(back[i].steps, t.episodes[i].steps);
        EXPECT_EQ(back[i].cost, t.episodes[i].cost);
        EXPECT_EQ(back[i].j_star_init, t.episodes[i].j_star_init);
        EXPECT_EQ(back[i].cum_regret, t.episodes[i].cum_regret);
    }

    std::stringstream meta;
    write_trace_meta(meta, t);
    RegretTrace loaded;
    loaded.episodes = back;
    read_trace_meta(meta, loaded);
    EXPECT_EQ(loaded.total_steps, t.total_steps);
    EXPECT_EQ(loaded.policies, t.policies);
    EXPECT_TRUE(verify_trace(loaded).ok());

    RegretTrace tampered = loaded;
    tampered.episodes.back().cum_regret += 1e-6;
    EXPECT_FALSE(verify_trace(tampered).ok());
    tampered = loaded;
    tampered.total_steps += 1;
    EXPECT_FALSE(verify_trace(tampered).ok());

    std::stringstream updates;
    write_updates_csv(updates, t);
    EXPECT_EQ(updates.str().substr(0, updates.str().find('\n')), kUpdateHeader);

    std::istringstream bad("k,steps,cost\n1,2,3\n");
    EXPECT_THROW(read_trace_csv(bad), std::runtime_error);
}
