#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace lab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One jump kernel pi(x, du) per type, restricted to parametric families
/// with analytic moments, tail masses and exact samplers.
struct JumpMeasure {
    enum class Kind { Zero, AtomList, TruncatedPowerLaw, LogPerturbedTail };

    Kind kind = Kind::Zero;

    // TruncatedPowerLaw: density c * u^{-1-alpha} on (u_min, u_max), alpha in (0,2)
    // LogPerturbedTail:  density c * u^{-2} (log u)^{-theta} on (u_min, inf), u_min > 1, theta > 1
    double alpha = 0.0;
    double theta = 0.0;
    double u_min = 0.0;
    double u_max = 0.0;
    double c = 0.0;

    // AtomList: atoms (u_i > 0, w_i >= 0)
    std::vector<std::pair<double, double>> atoms;

    static JumpMeasure zero() { return {}; }
    static JumpMeasure atom_list(std::vector<std::pair<double, double>> a);
    static JumpMeasure truncated_power_law(double alpha, double u_min, double u_max, double c);
    static JumpMeasure log_perturbed_tail(double theta, double u_min, double c);

    bool is_zero() const;

    // Parameter-range check; throws std::invalid_argument on malformed specs.
    void validate() const;

    // Analytic moments. Infinite values are returned in-band as +inf.
    double mass_above(double a) const;           // pi((a, inf))
    double first_moment_above(double a) const;   // int_a^inf u pi(du)
    double second_moment_below(double a) const;  // int_0^a u^2 pi(du)
    double second_moment_above(double a) const;  // int_a^inf u^2 pi(du)
    double u_and_u2() const;                     // int (u ^ u^2) pi(du)

    // Compensated-exponential integral int (e^{-zu} - 1 + zu) pi(du), z >= 0.
    double psi0_integral(double z) const;

    // int u*s * log+(u*s) pi(du) for a scale s > 0; +inf when the tail diverges.
    double l_log_l_integral(double s) const;

    // Sample a jump from the normalized tail pi(du)/pi((a,inf)) on (a, inf).
    // `unif` draws U(0,1). Requires mass_above(a) in (0, inf).
    template <typename Unif>
    double sample_tail(double a, Unif&& unif) const;

    // Sample from the size-biased tail  y pi(dy) / int_a^inf y pi(dy)  on (a, inf).
    template <typename Unif>
    double sample_size_biased_tail(double a, Unif&& unif) const;

    std::string describe() const;

  private:
    double sample_tail_impl(double a, double u1, double u2, double u3) const;
    double sample_size_biased_impl(double a, double u1, double u2) const;

    template <typename Unif>
    friend struct JumpSamplerAccess;
};

// Compensated exponential g(w) = e^{-w} - 1 + w, with a Taylor floor for
// small arguments to avoid cancellation.
inline double compensated_exp(double w) {
    if (w < 1e-3) return w * w * (0.5 - w / 6.0);
    return std::expm1(-w) + w;
}

template <typename Unif>
double JumpMeasure::sample_tail(double a, Unif&& unif) const {
    // up to three uniforms consumed; rejection loops draw more internally
    for (;;) {
        const double r = sample_tail_impl(a, unif(), unif(), unif());
        if (r > 0.0) return r;
    }
}

template <typename Unif>
double JumpMeasure::sample_size_biased_tail(double a, Unif&& unif) const {
    for (;;) {
        const double r = sample_size_biased_impl(a, unif(), unif());
        if (r > 0.0) return r;
    }
}

}  // namespace lab
