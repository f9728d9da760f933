#pragma once

#include "lssp/common.hpp"

#include <map>
#include <vector>

namespace lssp {

struct Transition {
    Vector phi;
    double cost = 0.0;
    StateId next = -1;
};

/// Regularized Gram matrix Lambda_t = lambda*I + sum_tau phi_tau phi_tau^T with
/// its inverse and log-determinant kept current by rank-one updates, plus the
/// observed history.
///
/// The inverse is rebuilt from a Cholesky factorization every
/// `refresh_interval` pushes, and earlier if a push detects drift
/// ||Lambda (Lambda^{-1} phi) - phi||_inf > 1e-8.
///
/// Alongside the raw history two moments are maintained: sum_tau phi_tau c_tau
/// and, per distinct next state s', sum_{tau: s'_tau = s'} phi_tau. They are
/// all the empirical operator needs.
class StatisticsState {
public:
    static constexpr std::size_t kDefaultRefreshInterval = 512;
    static constexpr double kDriftTolerance = 1e-8;

    StatisticsState(int dim, double lambda, std::size_t refresh_interval = kDefaultRefreshInterval);

    /// Requires ||phi||_2 <= 1 + 1e-9 and cost in [0, 1].
    void push(const Eigen::Ref<const Vector>& phi, double cost, StateId next);

    int dim() const noexcept { return dim_; }
    double lambda() const noexcept { return lambda_; }
    std::size_t t() const noexcept { return history_.size(); }

    const Matrix& gram() const noexcept { return gram_; }
    const Matrix& gram_inv() const noexcept { return gram_inv_; }
    double log_det() const noexcept { return log_det_; }

    const std::vector<Transition>& history() const noexcept { return history_; }
    const Vector& cost_moment() const noexcept { return cost_moment_; }
    const std::map<StateId, Vector>& next_state_moments() const noexcept { return next_moments_; }

    /// ||x||_{Lambda^{-1}}
    double inverse_norm(const Eigen::Ref<const Vector>& x) const;
    /// ||x||_{Lambda}
    double lambda_norm(const Eigen::Ref<const Vector>& x) const;

    /// Rebuilds gram_inv and log_det from gram.
    void refresh();
    std::size_t refresh_count() const noexcept { return refresh_count_; }
    /// max |(Lambda Lambda^{-1} - I)_ij|; O(d^3), for diagnostics.
    double inverse_drift() const;

private:
    int dim_;
    double lambda_;
    std::size_t refresh_interval_;
    std::size_t since_refresh_ = 0;
    std::size_t refresh_count_ = 0;
    Matrix gram_;
    Matrix gram_inv_;
    double log_det_;
    Vector cost_moment_;
    std::map<StateId, Vector> next_moments_;
    std::vector<Transition> history_;
};

}  // namespace lssp
