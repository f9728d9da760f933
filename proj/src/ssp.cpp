#include "lssp/ssp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

namespace lssp {

namespace {

constexpr double kClampNegative = 1e-12;
constexpr double kRowSumTol = 1e-9;
constexpr double kNormSlack = 1e-9;
constexpr double kSupportEps = 1e-12;

std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

void check_q_shape(const SspTables& tables, const QTable& q) {
    if (q.size() != static_cast<Eigen::Index>(tables.n_states) * tables.n_actions) {
        throw ShapeError("Q table has " + std::to_string(q.size()) + " entries, expected " +
                         std::to_string(tables.n_states * tables.n_actions));
    }
}

}  // namespace

SspTables tabulate(const LinearSsp& ssp) {
    const auto& phi = ssp.features.table();
    if (ssp.theta.size() != phi.cols() || ssp.mu.cols() != phi.cols() ||
        ssp.mu.rows() != ssp.n_states()) {
        throw ShapeError("LinearSsp: theta/mu dimensions do not match the feature map");
    }
    SspTables t;
    t.n_states = ssp.n_states();
    t.n_actions = ssp.n_actions();
    t.goal = ssp.goal();
    t.cost = phi * ssp.theta;
    t.transition = phi * ssp.mu.transpose();
    for (Eigen::Index i = 0; i < t.transition.size(); ++i) {
        double& p = t.transition.data()[i];
        if (p < 0.0 && p >= -kClampNegative) p = 0.0;
    }
    for (ActionId a = 0; a < t.n_actions; ++a) {
        const auto r = static_cast<Eigen::Index>(t.row(t.goal, a));
        t.cost(r) = 0.0;
        t.transition.row(r).setZero();
        t.transition(r, t.goal) = 1.0;
    }
    return t;
}

bool ValidationReport::mentions(const std::string& fragment) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.what.find(fragment) != std::string::npos; });
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& v : violations) {
        os << v.what;
        if (v.state >= 0) os << " at (s=" << v.state << ", a=" << v.action << ")";
        os << " [" << fmt_double(v.magnitude) << "]\n";
    }
    return os.str();
}

ValidationReport validate(const LinearSsp& ssp, const ValidateOptions& options) {
    ValidationReport report;
    auto add = [&](std::string what, StateId s, ActionId a, double mag) {
        report.violations.push_back({std::move(what), s, a, mag});
    };

    const auto& fm = ssp.features;
    const auto& phi = fm.table();
    const int d = static_cast<int>(phi.cols());
    if (d < 2) add("feature dimension below 2", -1, -1, d);
    if (ssp.theta.size() != d) {
        add("theta dimension mismatch", -1, -1, static_cast<double>(ssp.theta.size()));
    }
    if (ssp.mu.rows() != fm.n_states() || ssp.mu.cols() != d) {
        add("mu shape mismatch", -1, -1, static_cast<double>(ssp.mu.rows() * ssp.mu.cols()));
    }
    if (!report.ok() && (ssp.theta.size() != d || ssp.mu.cols() != d || ssp.mu.rows() != fm.n_states())) {
        return report;
    }

    if (!phi.allFinite() || !ssp.theta.allFinite() || !ssp.mu.allFinite()) {
        add("non-finite model entry", -1, -1, std::numeric_limits<double>::quiet_NaN());
        return report;
    }

    const Vector cost = phi * ssp.theta;
    const Matrix trans = phi * ssp.mu.transpose();
    for (StateId s = 0; s < fm.n_states(); ++s) {
        for (ActionId a = 0; a < fm.n_actions(); ++a) {
            const auto r = static_cast<Eigen::Index>(fm.row(s, a));
            const double norm = phi.row(r).norm();
            if (s == fm.goal()) {
                if (norm != 0.0) add("goal feature not zero", s, a, norm);
                continue;
            }
            if (norm > 1.0 + kNormSlack) add("feature norm above 1", s, a, norm);
            const double c = cost(r);
            if (c < -kClampNegative || c > 1.0 + kClampNegative) {
                add("cost out of [0,1]: " + fmt_double(c), s, a, c);
            }
            if (c <= 0.0 || c < options.c_min) add("cost below c_min: " + fmt_double(c), s, a, c);
            double sum = 0.0;
            double most_negative = 0.0;
            for (StateId n = 0; n < fm.n_states(); ++n) {
                double p = trans(r, n);
                if (p < -kClampNegative) most_negative = std::min(most_negative, p);
                if (p < 0.0 && p >= -kClampNegative) p = 0.0;
                sum += p;
            }
            if (most_negative < 0.0) add("negative transition probability", s, a, most_negative);
            if (std::abs(sum - 1.0) > kRowSumTol) add("transition row sum " + fmt_double(sum), s, a, sum);
        }
    }

    const double sqrt_d = std::sqrt(static_cast<double>(d));
    if (ssp.theta.norm() > sqrt_d + kNormSlack) add("theta norm above sqrt(d)", -1, -1, ssp.theta.norm());

    // ||sum_s mu(s) h(s)||_2 <= sqrt(d) ||h||_inf on h = 1 and random sign/uniform vectors.
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector h = Vector::Ones(fm.n_states());
    for (int k = 0; k <= options.sampled_h; ++k) {
        if (k > 0) {
            for (Eigen::Index i = 0; i < h.size(); ++i) {
                const double u = unif(rng);
                h(i) = (k % 2 == 0) ? (u < 0 ? -1.0 : 1.0) : u;
            }
        }
        const double hinf = h.cwiseAbs().maxCoeff();
        const double lhs = (ssp.mu.transpose() * h).norm();
        if (lhs > sqrt_d * hinf + kNormSlack) {
            add("mu aggregate norm above sqrt(d)*||h||_inf", -1, -1, lhs / std::max(hinf, 1e-300));
            break;
        }
    }
    return report;
}

QTable bellman_apply(const SspTables& tables, const QTable& q) {
    check_q_shape(tables, q);
    const Vector v = state_values(tables, q);
    QTable out = tables.cost + tables.transition * v;
    for (ActionId a = 0; a < tables.n_actions; ++a) {
        out(static_cast<Eigen::Index>(tables.row(tables.goal, a))) = 0.0;
    }
    return out;
}

QTable bellman_apply(const LinearSsp& ssp, const QTable& q) { return bellman_apply(tabulate(ssp), q); }

Vector state_values(const SspTables& tables, const QTable& q) {
    check_q_shape(tables, q);
    Vector v(tables.n_states);
    for (StateId s = 0; s < tables.n_states; ++s) {
        if (s == tables.goal) {
            v(s) = 0.0;
            continue;
        }
        double best = q(static_cast<Eigen::Index>(tables.row(s, 0)));
        for (ActionId a = 1; a < tables.n_actions; ++a) {
            best = std::min(best, q(static_cast<Eigen::Index>(tables.row(s, a))));
        }
        v(s) = best;
    }
    return v;
}

std::vector<ActionId> greedy_policy(const SspTables& tables, const QTable& q) {
    check_q_shape(tables, q);
    std::vector<ActionId> pi(static_cast<std::size_t>(tables.n_states), 0);
    for (StateId s = 0; s < tables.n_states; ++s) {
        if (s == tables.goal) continue;
        ActionId arg = 0;
        double best = q(static_cast<Eigen::Index>(tables.row(s, 0)));
        for (ActionId a = 1; a < tables.n_actions; ++a) {
            const double v = q(static_cast<Eigen::Index>(tables.row(s, a)));
            if (v < best) {
                best = v;
                arg = a;
            }
        }
        pi[static_cast<std::size_t>(s)] = arg;
    }
    return pi;
}

ValueSolution value_iteration(const SspTables& tables, double tol, std::size_t max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    QTable q = QTable::Zero(tables.n_states * tables.n_actions);
    double residual = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    while (it < max_iter) {
        QTable next = bellman_apply(tables, q);
        residual = (next - q).cwiseAbs().maxCoeff();
        q = std::move(next);
        ++it;
        if (residual <= tol) break;
    }
    if (residual > tol) {
        throw NonConvergenceError("value_iteration: no convergence after " + std::to_string(it) +
                                      " sweeps (improper instance?), residual " + fmt_double(residual),
                                  residual, it);
    }
    residual = (bellman_apply(tables, q) - q).cwiseAbs().maxCoeff();
    // Polish: exact evaluation of the greedy policy, improved until stable.
    // The residual stop alone leaves up to tol / (1 - rho) error in J.
    if (tables.n_states <= 1001) {
        std::vector<ActionId> pi = greedy_policy(tables, q);
        for (int round = 0; round < 20; ++round) {
            Vector j;
            try {
                j = policy_evaluation(tables, pi, tol);
            } catch (const ImproperPolicyError&) {
                break;
            }
            QTable candidate(q.size());
            for (StateId s = 0; s < tables.n_states; ++s) {
                for (ActionId a = 0; a < tables.n_actions; ++a) {
                    const auto i = static_cast<Eigen::Index>(s) * tables.n_actions + a;
                    candidate(i) = s == tables.goal ? 0.0 : tables.c(s, a) + tables.transition.row(i).dot(j);
                }
            }
            const double cand_residual = (bellman_apply(tables, candidate) - candidate).cwiseAbs().maxCoeff();
            if (!(cand_residual <= residual)) break;
            q = std::move(candidate);
            residual = cand_residual;
            std::vector<ActionId> next = greedy_policy(tables, q);
            if (next == pi) break;
            pi = std::move(next);
        }
    }
    ValueSolution sol;
    sol.q_star = q;
    sol.j_star = state_values(tables, q);
    sol.pi_star = greedy_policy(tables, q);
    sol.b_star = std::max(1.0, sol.j_star.maxCoeff());
    sol.residual = residual;
    sol.iterations = it;
    return sol;
}

ValueSolution value_iteration(const LinearSsp& ssp, double tol, std::size_t max_iter) {
    return value_iteration(tabulate(ssp), tol, max_iter);
}

Vector policy_evaluation(const SspTables& tables, const std::vector<ActionId>& pi, double tol) {
    if (pi.size() != static_cast<std::size_t>(tables.n_states)) {
        throw ShapeError("policy_evaluation: policy must assign an action to every state");
    }
    for (StateId s = 0; s < tables.n_states; ++s) {
        const ActionId a = pi[static_cast<std::size_t>(s)];
        if (s != tables.goal && (a < 0 || a >= tables.n_actions)) {
            throw std::invalid_argument("policy_evaluation: invalid action at state " + std::to_string(s));
        }
    }
    constexpr double kDivergence = 1e9;

    std::vector<StateId> live;
    std::vector<int> index(static_cast<std::size_t>(tables.n_states), -1);
    for (StateId s = 0; s < tables.n_states; ++s) {
        if (s == tables.goal) continue;
        index[static_cast<std::size_t>(s)] = static_cast<int>(live.size());
        live.push_back(s);
    }
    const auto n = static_cast<Eigen::Index>(live.size());
    Vector c_pi(n);
    Matrix p_pi = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const StateId s = live[static_cast<std::size_t>(i)];
        const ActionId a = pi[static_cast<std::size_t>(s)];
        c_pi(i) = tables.c(s, a);
        for (Eigen::Index j = 0; j < n; ++j) p_pi(i, j) = tables.p(s, a, live[static_cast<std::size_t>(j)]);
    }

    Vector j_live;
    if (n <= 1000) {
        const Matrix system = Matrix::Identity(n, n) - p_pi;
        Eigen::FullPivLU<Matrix> lu(system);
        lu.setThreshold(1e-13);
        if (!lu.isInvertible()) throw ImproperPolicyError("policy_evaluation: I - P_pi is singular; policy is improper");
        j_live = lu.solve(c_pi);
    } else {
        j_live = Vector::Zero(n);
        for (std::size_t it = 0;; ++it) {
            Vector next = c_pi + p_pi * j_live;
            const double diff = (next - j_live).cwiseAbs().maxCoeff();
            j_live = std::move(next);
            if (diff <= tol) break;
            if (j_live.cwiseAbs().maxCoeff() > kDivergence || it > 100'000'000) break;
        }
    }
    if (!j_live.allFinite() || (n > 0 && j_live.cwiseAbs().maxCoeff() > kDivergence) ||
        (n > 0 && j_live.minCoeff() < -1e-6)) {
        throw ImproperPolicyError("policy_evaluation: cost-to-go diverges; policy is improper");
    }
    Vector j = Vector::Zero(tables.n_states);
    for (Eigen::Index i = 0; i < n; ++i) j(live[static_cast<std::size_t>(i)]) = j_live(i);
    return j;
}

Vector policy_evaluation(const LinearSsp& ssp, const std::vector<ActionId>& pi, double tol) {
    return policy_evaluation(tabulate(ssp), pi, tol);
}

bool properness_check(const SspTables& tables) {
    // Greatest fixed point of "states that can stay inside the set forever".
    std::vector<char> trapped(static_cast<std::size_t>(tables.n_states), 1);
    trapped[static_cast<std::size_t>(tables.goal)] = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (StateId s = 0; s < tables.n_states; ++s) {
            if (!trapped[static_cast<std::size_t>(s)]) continue;
            bool can_stay = false;
            for (ActionId a = 0; a < tables.n_actions && !can_stay; ++a) {
                bool closed = true;
                for (StateId n = 0; n < tables.n_states; ++n) {
                    if (tables.p(s, a, n) > kSupportEps && !trapped[static_cast<std::size_t>(n)]) {
                        closed = false;
                        break;
                    }
                }
                can_stay = closed;
            }
            if (!can_stay) {
                trapped[static_cast<std::size_t>(s)] = 0;
                changed = true;
            }
        }
    }
    return std::none_of(trapped.begin(), trapped.end(), [](char c) { return c != 0; });
}

bool properness_check(const LinearSsp& ssp) { return properness_check(tabulate(ssp)); }

double min_goal_probability(const SspTables& tables) {
    double p_min = 1.0;
    for (StateId s = 0; s < tables.n_states; ++s) {
        if (s == tables.goal) continue;
        for (ActionId a = 0; a < tables.n_actions; ++a) p_min = std::min(p_min, tables.p(s, a, tables.goal));
    }
    return p_min;
}

ContractionBound contraction_bound(const SspTables& tables, double p_min) {
    if (!(p_min > 0.0) || p_min > 1.0) {
        throw std::invalid_argument("contraction_bound: p_min must lie in (0, 1]");
    }
    if (min_goal_probability(tables) < p_min - 1e-12) {
        throw std::invalid_argument("contraction_bound: some pair reaches the goal with probability below p_min");
    }
    return {1.0, 1.0 - p_min};
}

ContractionBound contraction_bound(const LinearSsp& ssp, double p_min) {
    return contraction_bound(tabulate(ssp), p_min);
}

}  // namespace lssp
