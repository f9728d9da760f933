#include "lssp/statistics.hpp"

#include <cmath>

namespace lssp {

StatisticsState::StatisticsState(int dim, double lambda, std::size_t refresh_interval)
    : dim_(dim),
      lambda_(lambda),
      refresh_interval_(refresh_interval == 0 ? kDefaultRefreshInterval : refresh_interval),
      gram_(lambda * Matrix::Identity(dim, dim)),
      gram_inv_(Matrix::Identity(dim, dim) / lambda),
      log_det_(dim * std::log(lambda)),
      cost_moment_(Vector::Zero(dim)) {
    if (dim < 1) throw std::invalid_argument("StatisticsState: dimension must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("StatisticsState: lambda must be positive");
}

void StatisticsState::push(const Eigen::Ref<const Vector>& phi, double cost, StateId next) {
    if (phi.size() != dim_) throw ShapeError("StatisticsState::push: feature dimension mismatch");
    if (phi.norm() > 1.0 + 1e-9) throw std::invalid_argument("StatisticsState::push: ||phi|| exceeds 1");
    if (!(cost >= 0.0 && cost <= 1.0)) throw std::invalid_argument("StatisticsState::push: cost outside [0,1]");

    // Sherman-Morrison: (L + pp^T)^{-1} = L^{-1} - (L^{-1}p)(L^{-1}p)^T / (1 + p^T L^{-1} p).
    const Vector u = gram_inv_ * phi;
    const double quad = std::max(0.0, phi.dot(u));
    gram_.noalias() += phi * phi.transpose();
    gram_inv_.noalias() -= (u * u.transpose()) / (1.0 + quad);
    gram_inv_ = 0.5 * (gram_inv_ + gram_inv_.transpose()).eval();
    log_det_ += std::log1p(quad);

    cost_moment_.noalias() += cost * phi;
    auto [it, inserted] = next_moments_.try_emplace(next, Vector::Zero(dim_));
    it->second.noalias() += phi;
    history_.push_back({Vector(phi), cost, next});

    ++since_refresh_;
    bool drifted = false;
    if (quad > 0.0) {
        const Vector probe = gram_ * (gram_inv_ * phi) - phi;
        drifted = probe.cwiseAbs().maxCoeff() > kDriftTolerance;
    }
    if (drifted || since_refresh_ >= refresh_interval_) refresh();
}

double StatisticsState::inverse_norm(const Eigen::Ref<const Vector>& x) const {
    return std::sqrt(std::max(0.0, x.dot(gram_inv_ * x)));
}

double StatisticsState::lambda_norm(const Eigen::Ref<const Vector>& x) const {
    return std::sqrt(std::max(0.0, x.dot(gram_ * x)));
}

void StatisticsState::refresh() {
    Eigen::LLT<Matrix> llt(gram_);
    gram_inv_ = llt.solve(Matrix::Identity(dim_, dim_));
    gram_inv_ = 0.5 * (gram_inv_ + gram_inv_.transpose()).eval();
    const Matrix l = llt.matrixL();
    log_det_ = 2.0 * l.diagonal().array().log().sum();
    since_refresh_ = 0;
    ++refresh_count_;
}

double StatisticsState::inverse_drift() const {
    return (gram_ * gram_inv_ - Matrix::Identity(dim_, dim_)).cwiseAbs().maxCoeff();
}

}  // namespace lssp
