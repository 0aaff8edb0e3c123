#pragma once

#include <string>
#include <vector>

#include "lab/cumulant.hpp"
#include "lab/model.hpp"
#include "lab/simulate.hpp"
#include "lab/spectral.hpp"

namespace lab {

/// Weighted sample of mass vectors estimating a law on measures.
struct EmpiricalLaw {
    std::vector<Vector> samples;
    std::vector<double> weights;  // normalized to sum 1
    std::string provenance;

    double ess() const;  // (sum w)^2 / sum w^2 before normalization is invariant
    void normalize();

    // int e^{-eta(f)} law(d eta), with a plug-in standard error
    double laplace(const Vector& f) const;
    double laplace_std_error(const Vector& f) const;
    // int eta(f) law(d eta)
    double mean_of(const Vector& f) const;
    double mean_of_std_error(const Vector& f) const;
};

struct ConditionedLaw {
    EmpiricalLaw law;
    double survival_fraction = 0.0;  // estimate of P_mu(X_{t+r} != 0)
    long survivors = 0;
};

// Q^mu_{t,r}: X_t from paths with X_{t+r} != 0, equal weights.
ConditionedLaw law_conditioned(const PathEnsemble& ensemble, double t, double r);

struct HTransformLaw {
    EmpiricalLaw law;
    double mean_weight = 0.0;  // pre-normalization; martingale target 1
    double mean_weight_se = 0.0;
    double ess = 0.0;
};

// Q^mu_{t,inf}: unconditioned paths reweighted by X_t(phi)/(e^{lambda t} mu(phi)).
HTransformLaw law_htransform(const ModelSpec& spec, const EigenTriplet& trip, const Vector& mu,
                             double t, const SimConfig& config, double ess_floor = 200.0);

struct YaglomEstimate {
    EmpiricalLaw law;            // Q_{inf,0} estimate at t_large
    double survival_fraction = 0.0;
    bool staleness_ok = true;    // t_large vs 2 t_large on the Laplace panel
    std::string staleness_note;
};

YaglomEstimate yaglom_estimate(const ModelSpec& spec, const EigenTriplet& trip, const Vector& mu,
                               double t_large, const SimConfig& config,
                               const std::vector<Vector>& test_functions);

struct QsdCheckRow {
    double r = 0.0;
    CheckReport survival;                  // vs e^{lambda r}
    std::vector<CheckReport> laplace;      // survivor law vs yaglom on test points
};

// Quasi-stationarity: restart fresh ensembles from resampled yaglom atoms.
std::vector<QsdCheckRow> qsd_check(const ModelSpec& spec, const EigenTriplet& trip,
                                   const EmpiricalLaw& yaglom, const std::vector<double>& r_grid,
                                   const SimConfig& config, const std::vector<Vector>& test_functions);

// Q_{inf,r}: yaglom atoms reweighted by the deterministic survival weight
// 1 - e^{-eta(v_r)}.
EmpiricalLaw law_qinfty_r(const EmpiricalLaw& yaglom, const ExtinctionCurve& curve, double r);

struct DoubleLimitPanel {
    std::vector<double> t_grid;
    std::vector<double> r_grid;
    // conditional Laplace E_mu[e^{-X_t(f)} | X_{t+r} != 0] via the exact
    // survival weight 1 - e^{-X_t(v_r)}
    std::vector<std::vector<double>> laplace;     // [i_t][j_r]
    std::vector<std::vector<double>> laplace_se;
    std::vector<double> norm_survival;            // e^{-lambda t} * empirical P(X_t != 0)
    std::vector<double> mean_phi_q_t0;            // int eta(phi) dQ_{t,0}
};

DoubleLimitPanel double_limit_panel(const ModelSpec& spec, const EigenTriplet& trip, const Vector& mu,
                                    const std::vector<double>& t_grid, const std::vector<double>& r_grid,
                                    const Vector& f, const SimConfig& config, double cumulant_tol = 1e-8);

}  // namespace lab
