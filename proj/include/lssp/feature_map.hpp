#pragma once

#include "lssp/common.hpp"

namespace lssp {

/// Per-(state, action) feature vectors. Row `s * n_actions + a` holds phi(s, a);
/// rows of the goal state are zero.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int n_states, int n_actions, StateId goal, Matrix table);

    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }
    int dim() const noexcept { return static_cast<int>(table_.cols()); }
    StateId goal() const noexcept { return goal_; }

    std::size_t row(StateId s, ActionId a) const noexcept {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions_) +
               static_cast<std::size_t>(a);
    }

    auto phi(StateId s, ActionId a) const { return table_.row(static_cast<Eigen::Index>(row(s, a))); }

    const Matrix& table() const noexcept { return table_; }

private:
    int n_states_ = 0;
    int n_actions_ = 0;
    StateId goal_ = 0;
    Matrix table_;
};

inline FeatureMap::FeatureMap(int n_states, int n_actions, StateId goal, Matrix table)
    : n_states_(n_states), n_actions_(n_actions), goal_(goal), table_(std::move(table)) {
    if (n_states < 1 || n_actions < 1) {
        throw ShapeError("FeatureMap: need at least one state and one action");
    }
    if (table_.rows() != static_cast<Eigen::Index>(n_states) * n_actions) {
        throw ShapeError("FeatureMap: table must have n_states * n_actions rows");
    }
    if (goal < 0 || goal >= n_states) {
        throw ShapeError("FeatureMap: goal index out of range");
    }
}

}  // namespace lssp
