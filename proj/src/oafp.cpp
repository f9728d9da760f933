#include "lssp/oafp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

namespace lssp {

EmpiricalOperator::EmpiricalOperator(const StatisticsState& stats, const FeatureMap& features, double alpha,
                                     double b_star)
    : stats_(&stats), features_(&features), alpha_(alpha), b_star_(b_star) {
    if (features.dim() != stats.dim()) throw ShapeError("EmpiricalOperator: feature and statistics dimensions differ");
    const Matrix& phi = features.table();
    // ||phi||^2_{Lambda^{-1}} row-wise: diag(Phi Lambda^{-1} Phi^T).
    const Matrix scaled = phi * stats.gram_inv();
    bonus_ = (scaled.cwiseProduct(phi)).rowwise().sum().cwiseMax(0.0).cwiseSqrt() * alpha;
}

EmpiricalOperator::Choice EmpiricalOperator::f(StateId s, const Vector& w) const {
    const Matrix& phi = features_->table();
    Choice best{std::numeric_limits<double>::infinity(), 0};
    for (ActionId a = 0; a < features_->n_actions(); ++a) {
        const auto r = static_cast<Eigen::Index>(features_->row(s, a));
        const double v = phi.row(r).dot(w) - bonus_(r);
        if (v < best.value) best = {v, a};
    }
    return best;
}

double EmpiricalOperator::g(StateId s, const Vector& w) const {
    return std::clamp(f(s, w).value, 0.0, ceiling());
}

double EmpiricalOperator::max_f(const Vector& w) const {
    double m = -std::numeric_limits<double>::infinity();
    for (StateId s = 0; s < features_->n_states(); ++s) m = std::max(m, f(s, w).value);
    return m;
}

Vector EmpiricalOperator::g_vector(const Vector& w) const {
    Vector out(features_->n_states());
    for (StateId s = 0; s < features_->n_states(); ++s) out(s) = g(s, w);
    return out;
}

Vector EmpiricalOperator::apply(const Vector& w) const {
    if (stats_->t() == 0) return Vector::Zero(dim());
    Vector acc = stats_->cost_moment();
    for (const auto& [next, moment] : stats_->next_state_moments()) {
        const double gv = g(next, w);
        if (gv != 0.0) acc.noalias() += gv * moment;
    }
    return stats_->gram_inv() * acc;
}

Vector EmpiricalOperator::apply_from_history(const Vector& w) const {
    Vector acc = Vector::Zero(dim());
    std::unordered_map<StateId, double> memo;
    for (const auto& tr : stats_->history()) {
        auto it = memo.find(tr.next);
        if (it == memo.end()) it = memo.emplace(tr.next, g(tr.next, w)).first;
        acc.noalias() += tr.phi * (tr.cost + it->second);
    }
    return stats_->gram_inv() * acc;
}

std::string to_string(OracleKind kind) {
    switch (kind) {
        case OracleKind::Iterate: return "iterate";
        case OracleKind::Fixed: return "fixed";
        case OracleKind::Grid: return "grid";
    }
    return "unknown";
}

OracleKind parse_oracle_kind(const std::string& name) {
    if (name == "iterate") return OracleKind::Iterate;
    if (name == "fixed") return OracleKind::Fixed;
    if (name == "grid") return OracleKind::Grid;
    throw std::invalid_argument("unknown oracle '" + name + "' (expected iterate|fixed|grid)");
}

OafpCertificate verify_certificate(OafpCertificate cert, const EmpiricalOperator& op, StateId s_next,
                                   std::optional<double> j_star_next) {
    const Vector& w = cert.w;
    const double t = static_cast<double>(op.t());
    cert.alpha = op.alpha();
    cert.t = op.t();
    cert.fixed_point_residual = op.stats().lambda_norm(op.apply(w) - w);
    cert.max_f = op.max_f(w);
    cert.inf_norm = w.size() == 0 ? 0.0 : w.cwiseAbs().maxCoeff();

    cert.passed.residual = cert.fixed_point_residual <= op.alpha() + kCertificateSlack;
    cert.passed.max_f = cert.max_f <= op.ceiling() + kCertificateSlack;
    cert.passed.bounded = cert.inf_norm <= (op.b_star() + 2.0) * std::sqrt(op.dim() * t) + kCertificateSlack;
    if (j_star_next) {
        cert.optimism_gap = op.f(s_next, w).value - *j_star_next;
        cert.passed.optimism = *cert.optimism_gap <= kCertificateSlack;
    } else {
        cert.optimism_gap.reset();
        cert.passed.optimism.reset();
    }
    return cert;
}

OafpCertificate oracle_iterate(const EmpiricalOperator& op, std::size_t max_iter) {
    if (max_iter == 0) max_iter = 10 * op.t() + 10'000;
    Vector w = Vector::Zero(op.dim());
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t n = 1; n <= max_iter; ++n) {
        Vector next = op.apply(w);
        residual = op.stats().lambda_norm(next - w);
        if (residual <= op.alpha()) {
            OafpCertificate cert;
            cert.w = std::move(w);
            cert.alpha = op.alpha();
            cert.t = op.t();
            cert.iterations = n;
            cert.fixed_point_residual = residual;
            cert.max_f = op.max_f(cert.w);
            cert.inf_norm = cert.w.cwiseAbs().maxCoeff();
            cert.passed.residual = true;
            cert.passed.max_f = cert.max_f <= op.ceiling() + kCertificateSlack;
            cert.passed.bounded =
                cert.inf_norm <= (op.b_star() + 2.0) * std::sqrt(op.dim() * static_cast<double>(op.t())) +
                                     kCertificateSlack;
            return cert;
        }
        w = std::move(next);
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "iterate oracle: no approximate fixed point after %zu applications at t=%zu (residual %.6g > alpha %.6g)",
                  max_iter, op.t(), residual, op.alpha());
    throw NonConvergenceError(buf, residual, max_iter);
}

OafpCertificate oracle_fixed(const EmpiricalOperator& op, std::size_t n_iterations) {
    Vector w = Vector::Zero(op.dim());
    for (std::size_t n = 0; n < n_iterations; ++n) w = op.apply(w);
    OafpCertificate cert;
    cert.w = std::move(w);
    cert = verify_certificate(std::move(cert), op, 0, std::nullopt);
    cert.iterations = n_iterations;
    return cert;
}

namespace {

struct GridGeometry {
    double eps = 1.0;
    long long half_width = 0;
    double points = 1.0;
};

GridGeometry grid_geometry(const EmpiricalOperator& op) {
    const double t = static_cast<double>(op.t());
    const double d = static_cast<double>(op.dim());
    const double lambda = op.stats().lambda();
    GridGeometry g;
    g.eps = 1.0;
    if (op.t() > 0) g.eps = std::min(op.alpha() / (8.0 * std::sqrt(t * d * d * (lambda + t))), 1.0);
    if (!(g.eps > 0.0)) {
        g.half_width = std::numeric_limits<long long>::max();
        g.points = std::numeric_limits<double>::infinity();
        return g;
    }
    const double hw = std::ceil(std::sqrt(d) * op.ceiling() / g.eps);
    g.half_width = hw > 9e18 ? std::numeric_limits<long long>::max() : static_cast<long long>(hw);
    g.points = std::pow(2.0 * hw + 1.0, d);
    return g;
}

}  // namespace

double grid_size(const EmpiricalOperator& op) { return grid_geometry(op).points; }

OafpCertificate oracle_grid(const EmpiricalOperator& op, StateId s_next, double grid_cap) {
    const GridGeometry geo = grid_geometry(op);
    if (!(geo.points <= grid_cap)) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "grid oracle: net needs %.6g points (cap %.6g) at t=%zu, d=%d", geo.points,
                      grid_cap, op.t(), op.dim());
        throw CapacityError(buf, geo.points);
    }
    const int d = op.dim();
    std::vector<long long> index(static_cast<std::size_t>(d), -geo.half_width);
    Vector w(d);
    Vector best_w = Vector::Zero(d);
    double best_f = std::numeric_limits<double>::infinity();
    bool found = false;
    std::size_t visited = 0;
    while (true) {
        for (int j = 0; j < d; ++j) w(j) = static_cast<double>(index[static_cast<std::size_t>(j)]) * geo.eps;
        ++visited;
        if (op.max_f(w) <= op.ceiling() && op.stats().lambda_norm(op.apply(w) - w) <= op.alpha()) {
            const double fv = op.f(s_next, w).value;
            if (fv < best_f) {
                best_f = fv;
                best_w = w;
                found = true;
            }
        }
        // Lexicographic odometer, last coordinate fastest.
        int j = d - 1;
        while (j >= 0 && index[static_cast<std::size_t>(j)] == geo.half_width) {
            index[static_cast<std::size_t>(j)] = -geo.half_width;
            --j;
        }
        if (j < 0) break;
        ++index[static_cast<std::size_t>(j)];
    }
    OafpCertificate cert;
    cert.w = found ? best_w : Vector::Zero(d);
    cert = verify_certificate(std::move(cert), op, s_next, std::nullopt);
    cert.iterations = visited;
    return cert;
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

double schedule_alpha(const ParamSchedule& sched, std::size_t t) { return sched.alpha(std::max<std::size_t>(t, 1)); }

}  // namespace

OafpCertificate oracle_iterate(const StatisticsState& stats, const FeatureMap& features, const ParamSchedule& sched,
                               std::size_t max_iter) {
    require(sched.kind == ScheduleKind::Choice1, "oracle_iterate: requires the choice1 schedule");
    require(stats.lambda() == sched.lambda(), "oracle_iterate: statistics lambda does not match the schedule");
    const EmpiricalOperator op(stats, features, schedule_alpha(sched, stats.t()), sched.b_star);
    return oracle_iterate(op, max_iter);
}

OafpCertificate oracle_fixed(const StatisticsState& stats, const FeatureMap& features, const ParamSchedule& sched) {
    require(sched.kind != ScheduleKind::Choice1, "oracle_fixed: requires the choice2 or choice3 schedule");
    require(stats.lambda() == sched.lambda(), "oracle_fixed: statistics lambda does not match the schedule");
    const EmpiricalOperator op(stats, features, schedule_alpha(sched, stats.t()), sched.b_star);
    return oracle_fixed(op, sched.n_iterations(std::max<std::size_t>(stats.t(), 1)));
}

OafpCertificate oracle_grid(const StatisticsState& stats, const FeatureMap& features, const ParamSchedule& sched,
                            StateId s_next, double grid_cap) {
    require(sched.kind == ScheduleKind::Choice1, "oracle_grid: requires the choice1 schedule");
    require(stats.lambda() == sched.lambda(), "oracle_grid: statistics lambda does not match the schedule");
    const EmpiricalOperator op(stats, features, schedule_alpha(sched, stats.t()), sched.b_star);
    return oracle_grid(op, s_next, grid_cap);
}

Vector apply_u(const LinearSsp& model, const EmpiricalOperator& op, const Vector& w) {
    if (model.dim() != op.dim() || model.n_states() != op.features().n_states()) {
        throw ShapeError("apply_u: model does not match the operator");
    }
    return model.theta + model.mu.transpose() * op.g_vector(w);
}

Vector apply_e(const LinearSsp& model, const EmpiricalOperator& op, const Vector& w) {
    return op.apply(w) - apply_u(model, op, w);
}

}  // namespace lssp
