#pragma once

#include "lssp/ssp.hpp"

#include <cstdint>
#include <string>

namespace lssp {

enum class GeneratorKind { TabularRandom, LowRankRandom };

std::string to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(const std::string& name);  ///< "tabular-random" | "low-rank-random"

struct EnvGenConfig {
    int n_states = 5;           ///< including the goal, which is the last state
    int n_actions = 3;
    int dim = 4;                ///< low-rank generator only
    double p_goal_min = 0.2;    ///< in (0, 1]
    double c_min_target = 0.2;  ///< 0 < c_min_target <= cost_max <= 1
    double cost_max = 1.0;
    std::uint64_t seed = 0;
    GeneratorKind kind = GeneratorKind::TabularRandom;

    void check() const;
};

/// P(.|s,a) = p_goal_min * e_goal + (1 - p_goal_min) * Dirichlet(1,...,1) over the
/// non-goal states, costs uniform in [c_min_target, cost_max], tabular features.
LinearSsp generate_tabular(const EnvGenConfig& cfg);

/// Mixture of `dim` anchors: anchor j has a cost kappa_j and a next-state
/// distribution nu_j (goal mass >= p_goal_min); phi(s,a) is a Dirichlet
/// weight vector over anchors, theta = kappa and mu(s') = (nu_j(s'))_j.
LinearSsp generate_low_rank(const EnvGenConfig& cfg);

/// Low-rank model from explicit pieces. weights is (S*A) x d with goal rows
/// ignored (set to zero); anchor_next is d x S with rows summing to one.
LinearSsp low_rank_from_anchors(int n_states, int n_actions, const Matrix& weights, const Vector& anchor_cost,
                                const Matrix& anchor_next);

LinearSsp generate(const EnvGenConfig& cfg);

}  // namespace lssp
