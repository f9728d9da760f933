#pragma once

// Learned operators and optimistic approximate fixed point (OAFP) oracles.
//
// For data up to time t, bonus scale alpha and clipping ceiling B* + 1:
//
//   f_t(s, w) = min_a ( phi(s,a)^T w - alpha ||phi(s,a)||_{Lambda_t^{-1}} )
//   g_t(s, w) = clip(f_t(s, w), 0, B* + 1)
//   G_t w     = Lambda_t^{-1} sum_tau phi_tau ( c_tau + g_t(s'_tau, w) )
//
// A vector w is an OAFP at time t when
//   (1) f_t(s_{t+1}, w) <= J*(s_{t+1})              (optimism)
//   (2) ||G_t w - w||_{Lambda_t} <= alpha            (approximate fixed point)
//   (3) max_s f_t(s, w) <= B* + 1
//   (4) ||w||_inf <= (B* + 2) sqrt(d t)

#include "lssp/common.hpp"
#include "lssp/feature_map.hpp"
#include "lssp/schedule.hpp"
#include "lssp/ssp.hpp"
#include "lssp/statistics.hpp"

#include <optional>
#include <string>

namespace lssp {

/// Read-only view of (stats, features, alpha, B*) evaluating f_t, g_t and G_t.
/// Bonuses alpha ||phi(s,a)||_{Lambda^{-1}} are tabulated once at construction.
/// The referenced stats and features must outlive the operator.
class EmpiricalOperator {
public:
    EmpiricalOperator(const StatisticsState& stats, const FeatureMap& features, double alpha, double b_star);

    struct Choice {
        double value = 0.0;
        ActionId action = 0;
    };

    /// f_t(s, w) and its minimizing action (lowest index on ties).
    Choice f(StateId s, const Vector& w) const;
    double g(StateId s, const Vector& w) const;
    double max_f(const Vector& w) const;

    /// G_t w from the maintained moments; zero when t = 0.
    Vector apply(const Vector& w) const;
    /// G_t w summed directly over the stored history, with g_t memoized per
    /// distinct next state. Same value as apply(), different arithmetic.
    Vector apply_from_history(const Vector& w) const;

    /// (g_t(s, w))_s over all states.
    Vector g_vector(const Vector& w) const;

    double bonus(StateId s, ActionId a) const {
        return bonus_(static_cast<Eigen::Index>(features_->row(s, a)));
    }

    double alpha() const noexcept { return alpha_; }
    double b_star() const noexcept { return b_star_; }
    double ceiling() const noexcept { return b_star_ + 1.0; }
    std::size_t t() const noexcept { return stats_->t(); }
    int dim() const noexcept { return stats_->dim(); }
    const StatisticsState& stats() const noexcept { return *stats_; }
    const FeatureMap& features() const noexcept { return *features_; }

private:
    const StatisticsState* stats_;
    const FeatureMap* features_;
    double alpha_;
    double b_star_;
    Vector bonus_;  ///< alpha * ||phi(s,a)||_{Lambda^{-1}} per feature row
};

enum class OracleKind { Iterate, Fixed, Grid };

std::string to_string(OracleKind kind);
OracleKind parse_oracle_kind(const std::string& name);  ///< "iterate" | "fixed" | "grid"

struct OafpCertificate {
    Vector w;
    double alpha = 0.0;
    std::size_t t = 0;
    std::size_t iterations = 0;        ///< applications of G_t performed by the oracle
    double fixed_point_residual = 0.0; ///< ||G_t w - w||_{Lambda_t}
    double max_f = 0.0;
    double inf_norm = 0.0;
    std::optional<double> optimism_gap; ///< f_t(s_{t+1}, w) - J*(s_{t+1}) when J* is known

    struct Flags {
        std::optional<bool> optimism;   ///< empty: unchecked
        bool residual = false;
        bool max_f = false;
        bool bounded = false;
    } passed;

    bool all_checked_passed() const noexcept {
        return passed.optimism.value_or(true) && passed.residual && passed.max_f && passed.bounded;
    }
    bool fully_verified() const noexcept { return passed.optimism.has_value() && all_checked_passed(); }
};

/// Slack allowed on every certificate inequality.
inline constexpr double kCertificateSlack = 1e-9;

/// Evaluates all four OAFP inequalities for cert.w. Without J*(s_{t+1}) the
/// optimism flag stays unchecked.
OafpCertificate verify_certificate(OafpCertificate cert, const EmpiricalOperator& op, StateId s_next,
                                   std::optional<double> j_star_next = std::nullopt);

/// Iterate-to-convergence oracle: w <- G_t w from 0, returning the first
/// iterate w with ||G_t w - w||_{Lambda_t} <= alpha. Throws NonConvergenceError
/// after max_iter applications (default 10 t + 10^4).
OafpCertificate oracle_iterate(const EmpiricalOperator& op, std::size_t max_iter = 0);

/// Fixed-iteration oracle: exactly n applications of G_t from 0. The residual
/// is measured with one extra application.
OafpCertificate oracle_fixed(const EmpiricalOperator& op, std::size_t n_iterations);

/// Grid-search oracle over the l_inf net with spacing
/// eps = min(alpha / (8 sqrt(t d^2 (lambda + t))), 1) and coordinates
/// i*eps, |i| <= ceil(sqrt(d)(B*+1)/eps). Keeps points passing inequalities
/// (2) and (3) and returns the one minimizing f_t(s_next, .), first in
/// lexicographic order on ties; returns 0 if none pass. Throws CapacityError
/// when the net has more than grid_cap points.
OafpCertificate oracle_grid(const EmpiricalOperator& op, StateId s_next, double grid_cap = 1e7);

/// Number of points in the grid oracle's net (as a double; it overflows
/// integers quickly).
double grid_size(const EmpiricalOperator& op);

/// Schedule-driven entry points. alpha = sched.alpha(max(t, 1)).
OafpCertificate oracle_iterate(const StatisticsState& stats, const FeatureMap& features,
                               const ParamSchedule& sched, std::size_t max_iter = 0);
OafpCertificate oracle_fixed(const StatisticsState& stats, const FeatureMap& features,
                             const ParamSchedule& sched);
OafpCertificate oracle_grid(const StatisticsState& stats, const FeatureMap& features,
                            const ParamSchedule& sched, StateId s_next, double grid_cap = 1e7);

/// Harness-side diagnostics using the ground-truth model.
/// U_t w = theta + sum_s mu(s) g_t(s, w); E_t w = G_t w - U_t w.
Vector apply_u(const LinearSsp& model, const EmpiricalOperator& op, const Vector& w);
Vector apply_e(const LinearSsp& model, const EmpiricalOperator& op, const Vector& w);

}  // namespace lssp
