#include "lssp/envgen.hpp"
#include "lssp/oafp.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lssp;
using namespace lssp::testing;

namespace {

/// Pushes n transitions with uniformly random non-goal (s, a) drawn from the model.
void fill_random(StatisticsState& stats, const LinearSsp& m, const SspTables& t, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> ps(0, m.n_states() - 2);
    std::uniform_int_distribution<int> pa(0, m.n_actions() - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        StateId s = ps(rng);
        if (s >= m.goal()) ++s;
        const ActionId a = pa(rng);
        double x = u(rng), acc = 0.0;
        StateId next = m.goal();
        for (StateId k = 0; k < m.n_states(); ++k) {
            acc += t.p(s, a, k);
            if (x < acc) {
                next = k;
                break;
            }
        }
        stats.push(m.features.phi(s, a).transpose(), t.c(s, a), next);
    }
}

/// Plain-loop G_t w over the history, no memoization.
Vector reference_g_hat(const StatisticsState& stats, const FeatureMap& f, double alpha, double b_star, const Vector& w) {
    const Matrix inv = stats.gram().inverse();
    Vector acc = Vector::Zero(stats.dim());
    for (const auto& tr : stats.history()) {
        double best = std::numeric_limits<double>::infinity();
        for (ActionId a = 0; a < f.n_actions(); ++a) {
            const Vector phi = f.phi(tr.next, a).transpose();
            best = std::min(best, phi.dot(w) - alpha * std::sqrt(phi.dot(inv * phi)));
        }
        acc += tr.phi * (tr.cost + std::clamp(best, 0.0, b_star + 1.0));
    }
    return inv * acc;
}

struct Fixture {
    LinearSsp model;
    SspTables tables;
    double b_star;
    explicit Fixture(const LinearSsp& m) : model(m), tables(tabulate(m)), b_star(value_iteration(m).b_star) {}
};

}  // namespace

TEST(EmpiricalOperator, ZeroWeightsZeroBonus) {
    const Fixture fx(generate(tabular_cfg(4, 2, 0)));
    StatisticsState stats(fx.model.dim(), 1.0);
    fill_random(stats, fx.model, fx.tables, 30, 1);
    const EmpiricalOperator op(stats, fx.model.features, 0.0, fx.b_star);
    const Vector w = Vector::Zero(fx.model.dim());
    for (StateId s = 0; s < 4; ++s) {
        EXPECT_EQ(op.f(s, w).value, 0.0);
        EXPECT_EQ(op.g(s, w), 0.0);
    }
}

TEST(EmpiricalOperator, ClippingAndTieBreak) {
    const LinearSsp m = chain(0.5, 0.5, 3);  // d = 3, tabular
    StatisticsState stats(3, 1.0);
    const double b = 2.0;
    const EmpiricalOperator op(stats, m.features, 0.0, b);
    EXPECT_EQ(op.g(0, Vector::Constant(3, -3.0)), 0.0);
    EXPECT_EQ(op.f(0, Vector::Constant(3, -3.0)).value, -3.0);
    EXPECT_EQ(op.g(0, Vector::Constant(3, b + 5.0)), b + 1.0);
    EXPECT_EQ(op.ceiling(), b + 1.0);
    const Vector tie = (Vector(3) << 1.0, 0.5, 0.5).finished();
    EXPECT_EQ(op.f(0, tie).action, 1);
    EXPECT_EQ(op.f(0, tie).value, 0.5);
}

TEST(EmpiricalOperator, TabularBonusClosedForm) {
    const Fixture fx(generate(tabular_cfg(4, 3, 2)));
    StatisticsState stats(fx.model.dim(), 1.0);
    fill_random(stats, fx.model, fx.tables, 200, 3);
    std::vector<int> visits(static_cast<std::size_t>(fx.model.dim()), 0);
    for (const auto& tr : stats.history()) {
        Eigen::Index k;
        tr.phi.maxCoeff(&k);
        ++visits[static_cast<std::size_t>(k)];
    }
    const double alpha = 7.0;
    const EmpiricalOperator op(stats, fx.model.features, alpha, fx.b_star);
    for (StateId s = 0; s < 3; ++s) {
        for (ActionId a = 0; a < 3; ++a) {
            const int i = s * 3 + a;
            EXPECT_NEAR(op.bonus(s, a), alpha / std::sqrt(1.0 + visits[static_cast<std::size_t>(i)]), 1e-12);
        }
    }
    EXPECT_EQ(op.bonus(3, 0), 0.0);
}

TEST(EmpiricalOperator, ApplyMatchesReferenceAndHistoryPath) {
    std::mt19937_64 rng(8);
    const Fixture fx(generate(low_rank_cfg(6, 3, 4, 1)));
    StatisticsState stats(4, 1.0);
    EXPECT_TRUE(EmpiricalOperator(stats, fx.model.features, 3.0, fx.b_star).apply(Vector::Ones(4)).isZero(0.0));
    fill_random(stats, fx.model, fx.tables, 150, 4);
    const EmpiricalOperator op(stats, fx.model.features, 3.0, fx.b_star);
    for (int i = 0; i < 20; ++i) {
        const Vector w = random_vector(rng, 4, -10.0, 10.0);
        const Vector ref = reference_g_hat(stats, fx.model.features, 3.0, fx.b_star, w);
        EXPECT_LE((op.apply(w) - ref).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LE((op.apply_from_history(w) - ref).cwiseAbs().maxCoeff(), 1e-9);
    }
    Vector cost_sum = Vector::Zero(4);
    for (const auto& tr : stats.history()) cost_sum += tr.phi * tr.cost;
    EXPECT_LE((op.apply(Vector::Zero(4)) - stats.gram().inverse() * cost_sum).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EmpiricalOperator, OperatorInequalities) {
    std::mt19937_64 rng(21);
    const Fixture fx(generate(low_rank_cfg(5, 3, 3, 6)));
    StatisticsState stats(3, 1.0);
    fill_random(stats, fx.model, fx.tables, 120, 7);
    const double t = static_cast<double>(stats.t()), d = 3.0;
    const EmpiricalOperator op(stats, fx.model.features, 5.0, fx.b_star);
    for (int i = 0; i < 200; ++i) {
        const Vector w = random_vector(rng, 3, -20.0, 20.0);
        const Vector w2 = random_vector(rng, 3, -20.0, 20.0);
        const Vector gw = op.apply(w), gw2 = op.apply(w2);
        EXPECT_LE(gw.cwiseAbs().maxCoeff(), std::sqrt(t * d) * (fx.b_star + 2.0) + 1e-9);
        EXPECT_LE(stats.lambda_norm(gw - gw2), std::sqrt(t * d) * stats.lambda_norm(w - w2) + 1e-9);
        for (StateId s = 0; s < 5; ++s) {
            const double g = op.g(s, w);
            EXPECT_GE(g, 0.0);
            EXPECT_LE(g, fx.b_star + 1.0);
            double lip = 0.0;
            for (ActionId a = 0; a < 3; ++a) lip = std::max(lip, std::abs(fx.model.features.phi(s, a).dot(w - w2)));
            EXPECT_LE(std::abs(g - op.g(s, w2)), lip + 1e-9);
        }
    }
}

TEST(OracleIterate, EmptyHistoryReturnsZero) {
    const Fixture fx(generate(tabular_cfg(3, 2, 0)));
    StatisticsState stats(fx.model.dim(), 1.0);
    const EmpiricalOperator op(stats, fx.model.features, 1.0, fx.b_star);
    const OafpCertificate c = oracle_iterate(op);
    EXPECT_TRUE(c.w.isZero(0.0));
    EXPECT_EQ(c.fixed_point_residual, 0.0);
    EXPECT_TRUE(c.passed.residual && c.passed.max_f && c.passed.bounded);
}

TEST(OracleIterate, TabularMonotoneAndWithinIterationBound) {
    const Fixture fx(generate(tabular_cfg(5, 3, 4)));
    const int d = fx.model.dim();
    for (std::size_t n : {20u, 200u, 2000u}) {
        StatisticsState stats(d, 1.0);
        fill_random(stats, fx.model, fx.tables, n, n);
        const double t = static_cast<double>(n);
        for (double alpha : {0.05, 0.5, 5.0}) {
            const EmpiricalOperator op(stats, fx.model.features, alpha, fx.b_star);
            // Tabular features are orthogonal: G^n 0 is non-decreasing in n.
            Vector w = Vector::Zero(d);
            for (int k = 0; k < 50; ++k) {
                const Vector next = op.apply(w);
                EXPECT_TRUE(((next - w).array() >= -1e-12).all());
                EXPECT_LE(next.cwiseAbs().maxCoeff(), std::sqrt(t * d) * (fx.b_star + 2.0) + 1e-9);
                w = next;
            }
            const OafpCertificate c = oracle_iterate(op);
            const double log_term = std::log(std::sqrt(1.0 * d + t) * (fx.b_star + 2.0) / alpha);
            const double bound = std::max(std::ceil((t + 1.0) * log_term / 1.0), 0.0) + 1.0;
            EXPECT_LE(static_cast<double>(c.iterations), bound) << "t=" << n << " alpha=" << alpha;
            EXPECT_LE(c.fixed_point_residual, alpha);
        }
    }
}

TEST(OracleIterate, CapRaisesNonConvergence) {
    const Fixture fx(generate(tabular_cfg(5, 3, 4)));
    StatisticsState stats(fx.model.dim(), 1.0);
    fill_random(stats, fx.model, fx.tables, 500, 2);
    const EmpiricalOperator op(stats, fx.model.features, 1e-6, fx.b_star);
    EXPECT_THROW(oracle_iterate(op, 2), NonConvergenceError);
}

TEST(OracleFixed, OneApplicationAndBoundedness) {
    const Fixture fx(generate(low_rank_cfg(5, 2, 3, 3)));
    StatisticsState stats(3, 2.0);
    fill_random(stats, fx.model, fx.tables, 80, 9);
    const EmpiricalOperator op(stats, fx.model.features, 2.0, fx.b_star);
    const OafpCertificate one = oracle_fixed(op, 1);
    EXPECT_LE((one.w - op.apply(Vector::Zero(3))).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(one.iterations, 1u);
    EXPECT_NEAR(one.fixed_point_residual, stats.lambda_norm(op.apply(one.w) - one.w), 1e-12);
    for (std::size_t n : {2u, 5u, 40u}) {
        const OafpCertificate c = oracle_fixed(op, n);
        EXPECT_LE(c.w.cwiseAbs().maxCoeff(), std::sqrt(80.0 * 3.0) * (fx.b_star + 2.0) + 1e-9);
        EXPECT_TRUE(c.passed.bounded);
    }
}

TEST(OracleGrid, EmptyHistoryMatchesBruteForce) {
    const LinearSsp m = chain(0.5, 0.5, 2);  // d = 2
    StatisticsState stats(2, 1.0);
    const double alpha = 2.5, b = 1.0;
    const EmpiricalOperator op(stats, m.features, alpha, b);
    const OafpCertificate c = oracle_grid(op, 0);
    // eps = 1, half-width ceil(sqrt(2) * 2) = 3.
    EXPECT_EQ(grid_size(op), 49.0);
    double best = std::numeric_limits<double>::infinity();
    Vector best_w(2);
    for (int i = -3; i <= 3; ++i) {
        for (int j = -3; j <= 3; ++j) {
            const Vector w = (Vector(2) << i, j).finished();
            if (w.norm() > alpha) continue;  // residual ||0 - w||_Lambda with Lambda = I
            const double f0 = std::min(w(0), w(1)) - alpha;
            if (std::max(f0, -alpha) > b + 1.0) continue;
            if (f0 < best) {
                best = f0;
                best_w = w;
            }
        }
    }
    EXPECT_EQ(c.w, best_w);
    EXPECT_EQ(c.iterations, 49u);
}

TEST(OracleGrid, CapacityErrorNamesSize) {
    const LinearSsp m = generate(low_rank_cfg(6, 2, 5, 0));
    const SspTables t = tabulate(m);
    StatisticsState stats(5, 1.0);
    fill_random(stats, m, t, 100, 1);
    const ParamSchedule sched = ParamSchedule::choice1(5.0, 5, 0.1);
    const EmpiricalOperator op(stats, m.features, sched.alpha(100), 5.0);
    EXPECT_THROW(oracle_grid(op, 0), CapacityError);
    try {
        oracle_grid(op, 0);
    } catch (const CapacityError& e) {
        EXPECT_EQ(e.required(), grid_size(op));
        EXPECT_GT(e.required(), 1e7);
    }
}

TEST(OracleGrid, ToyRunPassesAllChecks) {
    // S = 2, A = 2: tabular features with d = 2.
    EnvGenConfig cfg = tabular_cfg(2, 2, 5, 0.5);
    const Fixture fx(generate(cfg));
    const Vector j_star = value_iteration(fx.model).j_star;
    const ParamSchedule sched = ParamSchedule::choice1(fx.b_star, 2, 0.1);
    StatisticsState stats(2, 1.0);
    for (std::size_t n = 1; n <= 3; ++n) {
        fill_random(stats, fx.model, fx.tables, 1, 100 + n);
        const OafpCertificate c = oracle_grid(stats, fx.model.features, sched, 0, 1e7);
        const EmpiricalOperator op(stats, fx.model.features, sched.alpha(n), fx.b_star);
        const OafpCertificate v = verify_certificate(c, op, 0, j_star(0));
        EXPECT_TRUE(v.fully_verified()) << "t=" << n;
    }
}

TEST(Certificate, FlagsMatchValues) {
    const Fixture fx(generate(tabular_cfg(3, 2, 1)));
    StatisticsState stats(fx.model.dim(), 1.0);
    const EmpiricalOperator empty(stats, fx.model.features, 3.0, fx.b_star);
    OafpCertificate zero;
    zero.w = Vector::Zero(fx.model.dim());
    const OafpCertificate z = verify_certificate(zero, empty, 0);
    EXPECT_TRUE(z.passed.residual);
    EXPECT_TRUE(z.passed.max_f);
    EXPECT_FALSE(z.passed.optimism.has_value());
    EXPECT_FALSE(z.fully_verified());
    EXPECT_TRUE(z.all_checked_passed());

    fill_random(stats, fx.model, fx.tables, 25, 2);
    const EmpiricalOperator op(stats, fx.model.features, 3.0, fx.b_star);
    OafpCertificate big;
    big.w = Vector::Constant(fx.model.dim(), 10.0 * (fx.b_star + 2.0) * std::sqrt(fx.model.dim() * 25.0));
    const OafpCertificate v = verify_certificate(big, op, 0, 0.0);
    EXPECT_FALSE(v.passed.bounded);
    EXPECT_EQ(v.passed.max_f, v.max_f <= fx.b_star + 1.0 + kCertificateSlack);
    EXPECT_EQ(*v.passed.optimism, *v.optimism_gap <= kCertificateSlack);
    EXPECT_EQ(v.passed.residual, v.fixed_point_residual <= 3.0 + kCertificateSlack);
}

TEST(ScheduleEntryPoints, EnforcePairing) {
    const Fixture fx(generate(tabular_cfg(3, 2, 1)));
    StatisticsState one(fx.model.dim(), 1.0), two(fx.model.dim(), 2.0);
    const ParamSchedule c1 = ParamSchedule::choice1(fx.b_star, fx.model.dim(), 0.1);
    const ParamSchedule c2 = ParamSchedule::choice2(fx.b_star, fx.model.dim(), 0.1, 1.0, 0.8);
    EXPECT_THROW(oracle_iterate(two, fx.model.features, c2), std::invalid_argument);
    EXPECT_THROW(oracle_iterate(two, fx.model.features, c1), std::invalid_argument);
    EXPECT_THROW(oracle_fixed(one, fx.model.features, c1), std::invalid_argument);
    EXPECT_NO_THROW(oracle_iterate(one, fx.model.features, c1));
    const OafpCertificate c = oracle_fixed(two, fx.model.features, c2);
    EXPECT_EQ(c.iterations, c2.n_iterations(1));
}

TEST(GroundTruthOperators, UAtZeroAndGeometricConvergence) {
    const double p_min = 0.3;
    const Fixture fx(generate(tabular_cfg(5, 3, 2, p_min)));
    StatisticsState stats(fx.model.dim(), 1.0);
    fill_random(stats, fx.model, fx.tables, 100, 5);
    const EmpiricalOperator op(stats, fx.model.features, 2.0, fx.b_star);
    EXPECT_LE((apply_u(fx.model, op, Vector::Zero(fx.model.dim())) - fx.model.theta).cwiseAbs().maxCoeff(), 1e-15);
    const Matrix& phi = fx.model.features.table();
    Vector w = Vector::Zero(fx.model.dim());
    double prev_gap = -1.0;
    for (int n = 0; n < 30; ++n) {
        const Vector next = apply_u(fx.model, op, w);
        const double gap = (phi * (next - w)).cwiseAbs().maxCoeff();
        if (prev_gap > 0.0) EXPECT_LE(gap, (1.0 - p_min) * prev_gap + 1e-12);
        prev_gap = gap;
        w = next;
    }
    const Vector e = apply_e(fx.model, op, w);
    EXPECT_LE((e - (op.apply(w) - apply_u(fx.model, op, w))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OracleKindNames, Parse) {
    EXPECT_EQ(parse_oracle_kind("grid"), OracleKind::Grid);
    EXPECT_EQ(to_string(OracleKind::Fixed), "fixed");
    EXPECT_THROW(parse_oracle_kind("newton"), std::invalid_argument);
}
