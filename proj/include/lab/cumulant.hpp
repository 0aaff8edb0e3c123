#pragma once

#include <vector>

#include "lab/model.hpp"
#include "lab/spectral.hpp"

namespace lab {

/// Cumulant flow V_t f on a time grid, with solver statistics.
struct CumulantSolution {
    std::vector<double> t;   // strictly increasing, t[0] = 0
    std::vector<Vector> v;   // V_{t[i]} f
    long steps = 0;
    double max_local_error = 0.0;

    const Vector& at_time(double time, double tol = 1e-9) const;
};

/// v_t and nu(v_t) on a grid of t > 0.
struct ExtinctionCurve {
    std::vector<double> t;
    std::vector<Vector> v;
    std::vector<double> nu_v;

    Vector v_at(double time) const;     // linear interpolation in log nu(v)
    double nu_v_at(double time) const;
};

// Adaptive RK (Dormand-Prince 4(5)) for dV/dt = L V - psi0(., V), V_0 = f >= 0.
// Negativity is handled by step rejection, never clamping. record_times may be
// empty, in which case only {0, horizon} are recorded.
CumulantSolution solve_cumulant(const ModelSpec& spec, const Vector& f, double horizon, double tol,
                                const std::vector<double>& record_times = {});

// Single-shot flow: V_{t} applied to initial data v0 (not necessarily <= some f).
Vector flow_cumulant(const ModelSpec& spec, const Vector& v0, double t, double tol);

// v_t = -log P_{delta_x}(X_t = 0): theta-doubling limit of V_delta(theta 1)
// at a small delta, then flow to the horizon. Requires non-persistence.
ExtinctionCurve extinction_curve(const ModelSpec& spec, const EigenTriplet& trip, double horizon,
                                 double tol, double delta = 1e-3, int grid_per_unit = 8);

// exp(-mu(V_t f))
double laplace_functional(const ModelSpec& spec, const Vector& mu, const Vector& f, double t,
                          double tol = 1e-10);

struct KappaEstimate {
    double kappa = 0.0;
    double uncertainty = 0.0;
    bool decayed_to_zero = false;               // the E = inf regime
    std::vector<double> t;                      // convergence table
    std::vector<double> value;                  // e^{-lambda t}(1 - e^{-nu(v_t)})
};

// Normalized survival limit from mu = nu: e^{-lambda t}(1 - e^{-nu(v_t)}) -> K.
KappaEstimate kappa_deterministic(const ModelSpec& spec, const EigenTriplet& trip, double horizon,
                                  double tol = 1e-10);

struct RateRatioTable {
    std::vector<double> t;
    std::vector<double> r;
    std::vector<std::vector<double>> ratio;   // ratio[i][j] = e^{lambda r_j} nu(v_{t_i}) / nu(v_{t_i + r_j})
    std::vector<double> sup_over_r;           // per t
};

RateRatioTable rate_ratio(const ModelSpec& spec, const EigenTriplet& trip,
                          const std::vector<double>& t_grid, const std::vector<double>& r_grid,
                          double tol = 1e-10);

}  // namespace lab
