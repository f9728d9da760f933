#include "lssp/envgen.hpp"

#include "lssp/features.hpp"

#include <random>

namespace lssp {

namespace {

Vector dirichlet_ones(std::mt19937_64& rng, int n) {
    std::gamma_distribution<double> gamma(1.0, 1.0);
    Vector x(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        x(i) = gamma(rng);
        sum += x(i);
    }
    if (!(sum > 0.0)) return Vector::Constant(n, 1.0 / n);
    return x / sum;
}

/// p_goal on the goal plus (1 - p_goal) spread Dirichlet(1) over the other states.
Vector goal_mixture(std::mt19937_64& rng, int n_states, StateId goal, double p_goal) {
    const Vector rest = dirichlet_ones(rng, n_states - 1);
    Vector p(n_states);
    for (int s = 0, j = 0; s < n_states; ++s) p(s) = s == goal ? p_goal : (1.0 - p_goal) * rest(j++);
    return p;
}

}  // namespace

std::string to_string(GeneratorKind kind) {
    return kind == GeneratorKind::TabularRandom ? "tabular-random" : "low-rank-random";
}

GeneratorKind parse_generator_kind(const std::string& name) {
    if (name == "tabular-random" || name == "tabular") return GeneratorKind::TabularRandom;
    if (name == "low-rank-random" || name == "low-rank") return GeneratorKind::LowRankRandom;
    throw std::invalid_argument("unknown generator '" + name + "' (expected tabular-random|low-rank-random)");
}

void EnvGenConfig::check() const {
    if (n_states < 2 || n_actions < 1) throw std::invalid_argument("EnvGenConfig: need n_states >= 2, n_actions >= 1");
    if (!(p_goal_min > 0.0 && p_goal_min <= 1.0)) throw std::invalid_argument("EnvGenConfig: p_goal_min must lie in (0,1]");
    if (!(c_min_target > 0.0 && c_min_target <= cost_max && cost_max <= 1.0)) {
        throw std::invalid_argument("EnvGenConfig: need 0 < c_min_target <= cost_max <= 1");
    }
    if (kind == GeneratorKind::LowRankRandom && dim < 2) throw std::invalid_argument("EnvGenConfig: dim must be >= 2");
}

LinearSsp generate_tabular(const EnvGenConfig& cfg) {
    cfg.check();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> cost_dist(cfg.c_min_target, cfg.cost_max);
    const StateId goal = cfg.n_states - 1;

    LinearSsp ssp;
    ssp.features = tabular_features(cfg.n_states, cfg.n_actions, goal);
    const int d = ssp.features.dim();
    ssp.theta = Vector::Zero(d);
    ssp.mu = Matrix::Zero(cfg.n_states, d);
    for (StateId s = 0; s < cfg.n_states; ++s) {
        if (s == goal) continue;
        for (ActionId a = 0; a < cfg.n_actions; ++a) {
            // Tabular features put pair (s,a) on coordinate s*A + a (goal is last).
            const int idx = s * cfg.n_actions + a;
            ssp.theta(idx) = cost_dist(rng);
            ssp.mu.col(idx) = goal_mixture(rng, cfg.n_states, goal, cfg.p_goal_min);
        }
    }
    return ssp;
}

LinearSsp low_rank_from_anchors(int n_states, int n_actions, const Matrix& weights, const Vector& anchor_cost,
                                const Matrix& anchor_next) {
    const Eigen::Index d = anchor_cost.size();
    if (weights.rows() != static_cast<Eigen::Index>(n_states) * n_actions || weights.cols() != d ||
        anchor_next.rows() != d || anchor_next.cols() != n_states) {
        throw ShapeError("low_rank_from_anchors: inconsistent shapes");
    }
    const StateId goal = n_states - 1;
    Matrix table = weights;
    for (ActionId a = 0; a < n_actions; ++a) table.row(static_cast<Eigen::Index>(goal) * n_actions + a).setZero();
    LinearSsp ssp;
    ssp.features = FeatureMap(n_states, n_actions, goal, std::move(table));
    ssp.theta = anchor_cost;
    ssp.mu = anchor_next.transpose();
    return ssp;
}

LinearSsp generate_low_rank(const EnvGenConfig& cfg) {
    cfg.check();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> cost_dist(cfg.c_min_target, cfg.cost_max);
    const StateId goal = cfg.n_states - 1;
    constexpr int kMaxTries = 10'000;
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
        Vector kappa(cfg.dim);
        Matrix nu(cfg.dim, cfg.n_states);
        for (int j = 0; j < cfg.dim; ++j) {
            kappa(j) = cost_dist(rng);
            nu.row(j) = goal_mixture(rng, cfg.n_states, goal, cfg.p_goal_min).transpose();
        }
        Matrix weights = Matrix::Zero(static_cast<Eigen::Index>(cfg.n_states) * cfg.n_actions, cfg.dim);
        for (StateId s = 0; s < cfg.n_states; ++s) {
            if (s == goal) continue;
            for (ActionId a = 0; a < cfg.n_actions; ++a) {
                weights.row(static_cast<Eigen::Index>(s) * cfg.n_actions + a) = dirichlet_ones(rng, cfg.dim).transpose();
            }
        }
        LinearSsp ssp = low_rank_from_anchors(cfg.n_states, cfg.n_actions, weights, kappa, nu);
        ValidateOptions opts;
        opts.c_min = cfg.c_min_target;
        if (validate(ssp, opts).ok()) return ssp;
    }
    throw GenerationError("generate_low_rank: no valid instance after 10^4 draws");
}

LinearSsp generate(const EnvGenConfig& cfg) {
    return cfg.kind == GeneratorKind::TabularRandom ? generate_tabular(cfg) : generate_low_rank(cfg);
}

}  // namespace lssp
