#pragma once

#include <cstddef>
#include <string>

namespace lssp {

enum class ScheduleKind { Choice1, Choice2, Choice3 };

std::string to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& name);  ///< "choice1" | "choice2" | "choice3"

/// Regularizer lambda, bonus scale alpha_t and iteration count N_t.
///
///   choice-1: lambda = 1, alpha_t = 64 B d sqrt(log(B d t / delta))
///   choice-2: lambda = 2, N_t = 2 + ceil(log(sqrt(3t) chi) / (1 - rho)),
///             alpha_t = 256 B d^{3/2} t^{1/4} sqrt(N_t log(B d t N_t / delta))
///   choice-3: lambda = 2, N_t = ceil(Gamma1 t^{2 gamma}),
///             alpha_t = Gamma2 B d^{3/2} t^{1/4} sqrt(N_t log(B d t N_t / delta))
///
/// Every alpha_t is multiplied by alpha_scale. The literal constants are large
/// enough that at desk scale the bonus dominates; alpha_scale < 1 exists to
/// study that regime.
struct ParamSchedule {
    ScheduleKind kind = ScheduleKind::Choice1;
    double b_star = 1.0;
    int dim = 2;
    double delta = 0.1;
    double chi_bar = 1.0;   ///< choice-2
    double rho_bar = 0.9;   ///< choice-2
    double gamma = 0.125;   ///< choice-3, in (0, 1/4)
    double gamma_1 = 1.0;   ///< choice-3
    double gamma_2 = 256.0; ///< choice-3
    double alpha_scale = 1.0;

    static ParamSchedule choice1(double b_star, int dim, double delta);
    static ParamSchedule choice2(double b_star, int dim, double delta, double chi_bar, double rho_bar);
    static ParamSchedule choice3(double b_star, int dim, double delta, double gamma, double gamma_1,
                                 double gamma_2);

    /// Throws std::invalid_argument when a field is out of range.
    void check() const;

    double lambda() const noexcept { return kind == ScheduleKind::Choice1 ? 1.0 : 2.0; }

    /// alpha_t including alpha_scale; t >= 1.
    double alpha(std::size_t t) const;
    /// alpha_t with alpha_scale = 1.
    double literal_alpha(std::size_t t) const;
    /// N_t (choice-2/3 only).
    std::size_t n_iterations(std::size_t t) const;

    /// Concentration radius eps_t = 13 B d sqrt(lambda log(B d t alpha_t / delta))
    /// for the error operator, evaluated with the literal alpha_t. Diagnostic
    /// only; agents never use it.
    double epsilon(std::size_t t) const;
};

}  // namespace lssp
