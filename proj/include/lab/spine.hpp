#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lab/model.hpp"
#include "lab/qprocess.hpp"
#include "lab/rng.hpp"
#include "lab/simulate.hpp"
#include "lab/spectral.hpp"

namespace lab {

/// Jump-chain window of the spine motion on [t_begin, t_end].
struct SpinePath {
    double t_begin = 0.0;
    double t_end = 0.0;
    std::vector<double> seg_start;  // first entry = t_begin
    std::vector<int> seg_type;

    int type_at(double s) const;
};

struct ImmigrationEvent {
    double s = 0.0;
    int x = 0;
    double y = 0.0;
    enum class Origin { Discrete, ContinuousEps } origin = Origin::Discrete;
};

/// A sampled spine window with its immigration events and the descendant
/// masses propagated to a single evaluation time.
struct SpineRealization {
    SpinePath path;
    std::vector<ImmigrationEvent> events;
    std::vector<Vector> descendant_mass;  // per event, at t_eval
    double t_eval = 0.0;

    // Z_{t_eval}^{(a,b]}(f): sum of descendant masses of events with s in (a,b]
    double evaluate(double a, double b, const Vector& f) const;
};

// Stationary spine window: start at t_begin from nu_tilde (or from an
// explicit initial law), forward jump-chain simulation.
SpinePath sample_spine(const SpineGenerator& gen, double t_begin, double t_end, Rng& rng);
SpinePath sample_spine_from(const SpineGenerator& gen, const Vector& initial_law, double t_begin,
                            double t_end, Rng& rng);

// Immigration along a spine window: discrete events with intensity
// y pi(x, dy) truncated at delta_I (size-biased masses), plus the
// epsilon-approximated continuous immigration with rate 2 sigma(x)^2 / eps
// and mass eps per event.
std::vector<ImmigrationEvent> sample_immigration(const ModelSpec& spec, const SpinePath& path,
                                                 double delta_I, double eps, Rng& rng);

// Simulate every event's descendant ensemble through t_eval - s.
SpineRealization realize_spine(const ModelSpec& spec, const SpineGenerator& gen, double t_begin,
                               double t_eval, double delta_I, double eps, const SimConfig& sim,
                               std::uint64_t realization_index);
SpineRealization realize_spine_from(const ModelSpec& spec, const SpineGenerator& gen,
                                    const Vector& initial_law, double t_begin, double t_eval,
                                    double delta_I, double eps, const SimConfig& sim,
                                    std::uint64_t realization_index);

struct KappaSpineEstimate {
    std::vector<double> T;        // nested truncation horizons, increasing
    std::vector<double> estimate; // mean of Z_0^{(-T,0]}(phi)^{-1}
    std::vector<double> std_error;
    double kappa = 0.0;           // estimate at the largest T
    double kappa_se = 0.0;
    long zero_mass_samples = 0;   // realizations with no immigrated phi-mass
};

// Monte-Carlo mean of Z_0^{(-T,0]}(phi)^{-1} (W^{(0)} omitted), reported at
// nested T values to expose the monotone decrease toward kappa.
KappaSpineEstimate kappa_spine(const ModelSpec& spec, const EigenTriplet& trip,
                               const SpineGenerator& gen, double T_max, long n_realizations,
                               double delta_I, double eps, const SimConfig& sim);

struct SpineComparison {
    std::vector<CheckReport> laplace_panel;   // spine sampler vs h-transform law
    CheckReport factorization;                // Q-side product identity at mu = nu
};

// Laplace-panel agreement between the spine construction of the Q-process
// marginal at t and the h-transform reweighting, plus the factorization
// E_Q[e^{-X_t(f)}] = P_nu[e^{-X_t(f)}] * Q[e^{-Z_0^{(-t,0]}(f)}].
SpineComparison spine_vs_htransform(const ModelSpec& spec, const EigenTriplet& trip,
                                    const SpineGenerator& gen, const Vector& mu, double t,
                                    const std::vector<Vector>& f_panel, long n_realizations,
                                    double delta_I, double eps, const SimConfig& sim,
                                    double cumulant_tol = 1e-8);

}  // namespace lab
