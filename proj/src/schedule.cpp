#include "lssp/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace lssp {

namespace {

double checked_log(double x, const char* what) {
    if (!(x > 1.0)) {
        throw std::invalid_argument(std::string("schedule: log argument ") + what + " must exceed 1");
    }
    return std::log(x);
}

}  // namespace

std::string to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::Choice1: return "choice1";
        case ScheduleKind::Choice2: return "choice2";
        case ScheduleKind::Choice3: return "choice3";
    }
    return "unknown";
}

ScheduleKind parse_schedule_kind(const std::string& name) {
    if (name == "choice1") return ScheduleKind::Choice1;
    if (name == "choice2") return ScheduleKind::Choice2;
    if (name == "choice3") return ScheduleKind::Choice3;
    throw std::invalid_argument("unknown schedule '" + name + "' (expected choice1|choice2|choice3)");
}

ParamSchedule ParamSchedule::choice1(double b_star, int dim, double delta) {
    ParamSchedule s;
    s.kind = ScheduleKind::Choice1;
    s.b_star = b_star;
    s.dim = dim;
    s.delta = delta;
    s.check();
    return s;
}

ParamSchedule ParamSchedule::choice2(double b_star, int dim, double delta, double chi_bar, double rho_bar) {
    ParamSchedule s;
    s.kind = ScheduleKind::Choice2;
    s.b_star = b_star;
    s.dim = dim;
    s.delta = delta;
    s.chi_bar = chi_bar;
    s.rho_bar = rho_bar;
    s.check();
    return s;
}

ParamSchedule ParamSchedule::choice3(double b_star, int dim, double delta, double gamma, double gamma_1,
                                     double gamma_2) {
    ParamSchedule s;
    s.kind = ScheduleKind::Choice3;
    s.b_star = b_star;
    s.dim = dim;
    s.delta = delta;
    s.gamma = gamma;
    s.gamma_1 = gamma_1;
    s.gamma_2 = gamma_2;
    s.check();
    return s;
}

void ParamSchedule::check() const {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("schedule: delta must lie in (0,1)");
    if (!(b_star > 0.0)) throw std::invalid_argument("schedule: B* must be positive");
    if (dim < 1) throw std::invalid_argument("schedule: dimension must be positive");
    if (!(alpha_scale >= 0.0)) throw std::invalid_argument("schedule: alpha_scale must be non-negative");
    if (kind == ScheduleKind::Choice2) {
        if (!(rho_bar >= 0.0 && rho_bar < 1.0)) throw std::invalid_argument("schedule: choice2 needs rho_bar in [0,1)");
        if (!(chi_bar >= 1.0)) throw std::invalid_argument("schedule: choice2 needs chi_bar >= 1");
    }
    if (kind == ScheduleKind::Choice3) {
        if (!(gamma > 0.0 && gamma < 0.25)) throw std::invalid_argument("schedule: choice3 needs gamma in (0, 1/4)");
        if (!(gamma_1 > 0.0 && gamma_2 > 0.0)) throw std::invalid_argument("schedule: choice3 needs Gamma1, Gamma2 > 0");
    }
}

std::size_t ParamSchedule::n_iterations(std::size_t t) const {
    if (t < 1) throw std::invalid_argument("schedule: t must be at least 1");
    const double td = static_cast<double>(t);
    switch (kind) {
        case ScheduleKind::Choice1:
            throw std::invalid_argument("schedule: choice1 has no fixed iteration count");
        case ScheduleKind::Choice2: {
            const double ratio = std::log(std::sqrt(3.0 * td) * chi_bar) / (1.0 - rho_bar);
            return 2 + static_cast<std::size_t>(std::max(0.0, std::ceil(ratio)));
        }
        case ScheduleKind::Choice3:
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(gamma_1 * std::pow(td, 2.0 * gamma))));
    }
    return 1;
}

double ParamSchedule::literal_alpha(std::size_t t) const {
    if (t < 1) throw std::invalid_argument("schedule: t must be at least 1");
    const double td = static_cast<double>(t);
    const double d = static_cast<double>(dim);
    switch (kind) {
        case ScheduleKind::Choice1:
            return 64.0 * b_star * d * std::sqrt(checked_log(b_star * d * td / delta, "B*dt/delta"));
        case ScheduleKind::Choice2:
        case ScheduleKind::Choice3: {
            const double n = static_cast<double>(n_iterations(t));
            const double constant = kind == ScheduleKind::Choice2 ? 256.0 : gamma_2;
            return constant * b_star * std::pow(d, 1.5) * std::pow(td, 0.25) *
                   std::sqrt(n * checked_log(b_star * d * td * n / delta, "B*dtN/delta"));
        }
    }
    return 0.0;
}

double ParamSchedule::alpha(std::size_t t) const { return alpha_scale * literal_alpha(t); }

double ParamSchedule::epsilon(std::size_t t) const {
    const double d = static_cast<double>(dim);
    const double arg = b_star * d * static_cast<double>(t) * literal_alpha(t) / delta;
    return 13.0 * b_star * d * std::sqrt(lambda() * checked_log(arg, "B*dt*alpha/delta"));
}

}  // namespace lssp
