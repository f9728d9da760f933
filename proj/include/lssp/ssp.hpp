#pragma once

// Ground-truth linear SSP model and exact Bellman machinery. Everything here
// is verification plumbing for the learning code: the agent never sees theta
// or mu.

#include "lssp/common.hpp"
#include "lssp/feature_map.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lssp {

/// c(s,a) = phi(s,a)^T theta and P(s'|s,a) = phi(s,a)^T mu(s') for non-goal s.
struct LinearSsp {
    FeatureMap features;
    Vector theta;  ///< d
    Matrix mu;     ///< n_states x d; row s' is mu(s')

    int n_states() const noexcept { return features.n_states(); }
    int n_actions() const noexcept { return features.n_actions(); }
    int dim() const noexcept { return features.dim(); }
    StateId goal() const noexcept { return features.goal(); }
};

/// Dense cost and transition tables derived from a LinearSsp. Probabilities in
/// [-1e-12, 0) are clamped to zero; goal rows are all-zero cost with a
/// self-loop.
struct SspTables {
    int n_states = 0;
    int n_actions = 0;
    StateId goal = 0;
    Vector cost;        ///< indexed by FeatureMap::row(s, a)
    Matrix transition;  ///< (n_states * n_actions) x n_states

    std::size_t row(StateId s, ActionId a) const noexcept {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions) +
               static_cast<std::size_t>(a);
    }
    double c(StateId s, ActionId a) const { return cost(static_cast<Eigen::Index>(row(s, a))); }
    double p(StateId s, ActionId a, StateId next) const {
        return transition(static_cast<Eigen::Index>(row(s, a)), next);
    }
};

SspTables tabulate(const LinearSsp& ssp);

struct Violation {
    std::string what;
    StateId state = -1;
    ActionId action = -1;
    double magnitude = 0.0;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool mentions(const std::string& fragment) const;
    std::string to_string() const;
};

struct ValidateOptions {
    double c_min = 0.0;          ///< required lower bound on non-goal costs (strict > 0 always)
    int sampled_h = 64;          ///< random h vectors for the sum-of-mu norm check
    unsigned long long seed = 0x5eed;
};

ValidationReport validate(const LinearSsp& ssp, const ValidateOptions& options = {});

/// State-action table in FeatureMap row order.
using QTable = Vector;

/// (T Q)(s,a) = c(s,a) + sum_{s'} P(s'|s,a) min_{a'} Q(s',a'), with Q(goal, .) read as 0.
QTable bellman_apply(const SspTables& tables, const QTable& q);
QTable bellman_apply(const LinearSsp& ssp, const QTable& q);

/// Per-state min over actions with lowest-index tie-break; the goal reads 0.
Vector state_values(const SspTables& tables, const QTable& q);
std::vector<ActionId> greedy_policy(const SspTables& tables, const QTable& q);

struct ValueSolution {
    Vector j_star;
    QTable q_star;
    std::vector<ActionId> pi_star;
    double b_star = 0.0;     ///< max(1, max_s J*(s))
    double residual = 0.0;   ///< final sup-norm Bellman residual
    std::size_t iterations = 0;
};

ValueSolution value_iteration(const LinearSsp& ssp, double tol = 1e-10,
                              std::size_t max_iter = 1'000'000);
ValueSolution value_iteration(const SspTables& tables, double tol = 1e-10,
                              std::size_t max_iter = 1'000'000);

/// Solves J = c_pi + P_pi J on non-goal states; J(goal) = 0. Direct solve for
/// up to 1000 states, iteration beyond that.
Vector policy_evaluation(const SspTables& tables, const std::vector<ActionId>& pi,
                         double tol = 1e-10);
Vector policy_evaluation(const LinearSsp& ssp, const std::vector<ActionId>& pi,
                         double tol = 1e-10);

/// True iff every stationary deterministic policy reaches the goal w.p. 1.
/// Exact: the goal is unreachable under some policy iff there is a non-empty
/// set of non-goal states each of which has an action whose support stays in
/// the set.
bool properness_check(const SspTables& tables);
bool properness_check(const LinearSsp& ssp);

/// min over non-goal (s,a) of P(goal|s,a).
double min_goal_probability(const SspTables& tables);

struct ContractionBound {
    double chi_bar = 1.0;
    double rho_bar = 0.0;
};

/// Uniform weights: T is a (1 - p_min)-contraction in the plain sup-norm when
/// every non-goal pair moves to the goal with probability at least p_min.
ContractionBound contraction_bound(const SspTables& tables, double p_min);
ContractionBound contraction_bound(const LinearSsp& ssp, double p_min);

}  // namespace lssp
