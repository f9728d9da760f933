#include "lssp/envgen.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace lssp;
using namespace lssp::testing;

TEST(GenerateTabular, OneStepGoalGivesMinCost) {
    const LinearSsp m = generate(tabular_cfg(5, 3, 4, 1.0));
    const ValueSolution sol = value_iteration(m);
    for (StateId s = 0; s < 4; ++s) {
        double best = 1.0;
        for (ActionId a = 0; a < 3; ++a) best = std::min(best, model_cost(m, s, a));
        EXPECT_NEAR(sol.j_star(s), best, 1e-12);
    }
}

TEST(GenerateTabular, ConstructionBounds) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EnvGenConfig cfg = tabular_cfg(6, 3, seed, 0.25, 0.3);
        cfg.cost_max = 0.8;
        const LinearSsp m = generate(cfg);
        EXPECT_TRUE(validate(m).ok());
        EXPECT_TRUE(properness_check(m));
        for (StateId s = 0; s < 5; ++s) {
            for (ActionId a = 0; a < 3; ++a) {
                EXPECT_GE(model_cost(m, s, a), 0.3);
                EXPECT_LE(model_cost(m, s, a), 0.8);
                EXPECT_NEAR(model_prob(m, s, a, m.goal()), 0.25, 1e-12);
            }
        }
    }
}

TEST(GenerateTabular, CostToGoBound) {
    const EnvGenConfig cfg = tabular_cfg(5, 3, 0);
    const ValueSolution sol = value_iteration(generate(cfg));
    EXPECT_LE(sol.b_star, cfg.cost_max / cfg.p_goal_min + 1e-9);
}

TEST(GenerateTabular, SeedDeterminism) {
    const LinearSsp a = generate(tabular_cfg(5, 2, 11));
    const LinearSsp b = generate(tabular_cfg(5, 2, 11));
    const LinearSsp c = generate(tabular_cfg(5, 2, 12));
    EXPECT_EQ(a.mu, b.mu);
    EXPECT_EQ(a.theta, b.theta);
    EXPECT_NE(a.theta, c.theta);
}

TEST(GenerateLowRank, IdenticalAnchorsGiveOneRow) {
    const int s_count = 4, a_count = 3;
    Matrix weights(s_count * a_count, 2);
    for (int i = 0; i < weights.rows(); ++i) weights.row(i) << 0.1 * (i % 5), 1.0 - 0.1 * (i % 5);
    const Vector cost = Vector::Constant(2, 0.4);
    Matrix next(2, s_count);
    next.row(0) << 0.3, 0.2, 0.1, 0.4;
    next.row(1) = next.row(0);
    const LinearSsp m = low_rank_from_anchors(s_count, a_count, weights, cost, next);
    const SspTables t = tabulate(m);
    for (StateId s = 0; s < 3; ++s) {
        for (ActionId a = 0; a < a_count; ++a) {
            EXPECT_NEAR(t.c(s, a), 0.4, 1e-15);
            for (StateId n = 0; n < s_count; ++n) EXPECT_NEAR(t.p(s, a, n), next(0, n), 1e-15);
        }
    }
}

TEST(GenerateLowRank, ReconstructionValidityAndProperness) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const LinearSsp m = generate(low_rank_cfg(7, 3, 4, seed));
        ASSERT_EQ(m.dim(), 4);
        EXPECT_TRUE(validate(m).ok());
        EXPECT_TRUE(properness_check(m));
        const SspTables t = tabulate(m);
        for (StateId s = 0; s < 7; ++s) {
            if (s == m.goal()) continue;
            for (ActionId a = 0; a < 3; ++a) {
                EXPECT_LE(m.features.phi(s, a).norm(), 1.0 + 1e-12);
                EXPECT_GE(model_cost(m, s, a), 0.2 - 1e-12);
                EXPECT_GE(model_prob(m, s, a, m.goal()), 0.2 - 1e-12);
                for (StateId n = 0; n < 7; ++n) EXPECT_NEAR(t.p(s, a, n), m.features.phi(s, a).dot(m.mu.row(n)), 1e-9);
            }
        }
    }
}

TEST(EnvGenConfig, RejectsInvalid) {
    EnvGenConfig cfg;
    cfg.p_goal_min = 0.0;
    EXPECT_THROW(generate(cfg), std::invalid_argument);
    cfg = EnvGenConfig{};
    cfg.c_min_target = 0.9;
    cfg.cost_max = 0.5;
    EXPECT_THROW(generate(cfg), std::invalid_argument);
    cfg = EnvGenConfig{};
    cfg.kind = GeneratorKind::LowRankRandom;
    cfg.dim = 1;
    EXPECT_THROW(generate(cfg), std::invalid_argument);
    EXPECT_EQ(parse_generator_kind("low-rank-random"), GeneratorKind::LowRankRandom);
    EXPECT_THROW(parse_generator_kind("grid-world"), std::invalid_argument);
}
