#include "lab/cumulant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lab {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double A21 = 1.0 / 5.0;
constexpr double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0;
constexpr double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0;
constexpr double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0,
                 A54 = -212.0 / 729.0;
constexpr double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0,
                 A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0;
constexpr double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0,
                 B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0;
constexpr double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0,
                 E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0;

struct Rhs {
    const ModelSpec& spec;
    const Matrix& L;

    Vector operator()(const Vector& v) const {
        Vector dv = L * v;
        for (int x = 0; x < spec.n(); ++x) dv[x] -= spec.psi0(x, std::max(v[x], 0.0));
        return dv;
    }
};

// integrate from t0 to t1, recording nothing; updates stats
Vector rk45(const Rhs& rhs, Vector v, double span, double tol, long& steps, double& max_err) {
    if (span <= 0.0) return v;
    double t = 0.0;
    double h = std::min(span, 0.1);
    Vector k1 = rhs(v);
    int consecutive_rejects = 0;
    while (t < span) {
        h = std::min(h, span - t);
        if (h < 1e-14 * std::max(1.0, span))
            throw std::runtime_error("cumulant solver: step-size underflow (stiff blow-up?)");
        const Vector k2 = rhs(v + h * (A21 * k1));
        const Vector k3 = rhs(v + h * (A31 * k1 + A32 * k2));
        const Vector k4 = rhs(v + h * (A41 * k1 + A42 * k2 + A43 * k3));
        const Vector k5 = rhs(v + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        const Vector k6 = rhs(v + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        const Vector vn = v + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        const Vector k7 = rhs(vn);
        const Vector errv = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        // per-component relative control: the extinction transient starts at
        // ~1/delta and decays through many decades; absolute control against
        // the initial magnitude would lose the small-v accuracy
        double err = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double scale = 1e-8 + std::max(std::abs(v[i]), std::abs(vn[i]));
            err = std::max(err, std::abs(errv[i]) / scale);
        }
        const bool negative = (vn.array() < 0.0).any();
        if (err <= tol && !negative) {
            t += h;
            v = vn;
            k1 = k7;  // FSAL
            ++steps;
            max_err = std::max(max_err, err);
            consecutive_rejects = 0;
            const double grow = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 2.0;
            h *= std::clamp(grow, 0.2, 2.0);
        } else {
            h *= negative ? 0.5 : std::clamp(0.9 * std::pow(tol / std::max(err, 1e-300), 0.2), 0.1, 0.5);
            if (++consecutive_rejects > 200)
                throw std::runtime_error("cumulant solver: exhausted step rejections");
        }
    }
    return v;
}

}  // namespace

const Vector& CumulantSolution::at_time(double time, double tol) const {
    for (size_t i = 0; i < t.size(); ++i)
        if (std::abs(t[i] - time) <= tol) return v[i];
    throw std::out_of_range("CumulantSolution: time not on the recorded grid");
}

CumulantSolution solve_cumulant(const ModelSpec& spec, const Vector& f, double horizon, double tol,
                                const std::vector<double>& record_times) {
    if ((f.array() < 0.0).any()) throw std::invalid_argument("solve_cumulant: f must be >= 0");
    if (!(horizon > 0.0) || !(tol > 0.0)) throw std::invalid_argument("solve_cumulant: bad horizon/tol");

    std::vector<double> grid = record_times;
    grid.push_back(horizon);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (double g : grid)
        if (g < 0.0 || g > horizon + 1e-12) throw std::invalid_argument("record time outside [0, horizon]");

    const Matrix L = mean_generator(spec);
    const Rhs rhs{spec, L};
    CumulantSolution sol;
    sol.t.push_back(0.0);
    sol.v.push_back(f);
    Vector v = f;
    double prev = 0.0;
    for (double g : grid) {
        if (g <= 0.0) continue;
        v = rk45(rhs, v, g - prev, tol, sol.steps, sol.max_local_error);
        sol.t.push_back(g);
        sol.v.push_back(v);
        prev = g;
    }
    return sol;
}

Vector flow_cumulant(const ModelSpec& spec, const Vector& v0, double t, double tol) {
    const Matrix L = mean_generator(spec);
    const Rhs rhs{spec, L};
    long steps = 0;
    double max_err = 0.0;
    return rk45(rhs, v0, t, tol, steps, max_err);
}

ExtinctionCurve extinction_curve(const ModelSpec& spec, const EigenTriplet& trip, double horizon,
                                 double tol, double delta, int grid_per_unit) {
    const GreyResult grey = grey_condition(spec);
    if (grey.status == GreyResult::Status::Fails)
        throw std::runtime_error("extinction_curve: v_t = inf (Grey's condition fails: " + grey.diagnostic + ")");
    if (grey.status == GreyResult::Status::Inapplicable) {
        // inhomogeneous: accept when a dominating homogeneous mechanism is
        // evident, i.e. sigma bounded away from 0 on all types
        if (!(spec.sigma.minCoeff() > 0.0))
            throw std::runtime_error(
                "extinction_curve: inhomogeneous mechanism with no dominating homogeneous mechanism");
    }
    if (!(horizon > delta)) throw std::invalid_argument("extinction_curve: horizon must exceed delta");

    // v_delta as the monotone theta -> inf limit of V_delta(theta 1)
    const int n = spec.n();
    double theta = 1.0;
    Vector v_prev = flow_cumulant(spec, Vector::Constant(n, theta), delta, tol);
    Vector v_delta = v_prev;
    bool converged = false;
    for (int iter = 0; iter < 60; ++iter) {
        theta *= 2.0;
        v_delta = flow_cumulant(spec, Vector::Constant(n, theta), delta, tol);
        // successive gaps halve, so the remaining theta -> inf tail is of the
        // same order as the last observed gap
        if ((v_delta - v_prev).lpNorm<Eigen::Infinity>() <
            std::max(tol * 1e2, 1e-9) * v_delta.lpNorm<Eigen::Infinity>()) {
            converged = true;
            break;
        }
        v_prev = v_delta;
    }
    if (!converged)
        throw std::runtime_error("extinction_curve: theta-limit did not converge at delta; try a smaller delta");

    ExtinctionCurve curve;
    Vector v = v_delta;
    double t = delta;
    curve.t.push_back(t);
    curve.v.push_back(v);
    curve.nu_v.push_back(trip.nu.dot(v));
    const double dt = 1.0 / grid_per_unit;
    while (t < horizon - 1e-12) {
        // keep nodes on exact multiples of dt so typical query times need no
        // interpolation (the first step just closes the gap from delta)
        const double next = std::min(horizon, (std::floor(t / dt + 1e-9) + 1.0) * dt);
        const double step = next - t;
        v = flow_cumulant(spec, v, step, tol);
        t += step;
        curve.t.push_back(t);
        curve.v.push_back(v);
        curve.nu_v.push_back(trip.nu.dot(v));
    }
    return curve;
}

Vector ExtinctionCurve::v_at(double time) const {
    if (t.empty()) throw std::logic_error("empty extinction curve");
    if (time <= t.front()) return v.front();
    if (time >= t.back()) return v.back();
    const auto it = std::lower_bound(t.begin(), t.end(), time);
    const size_t i = static_cast<size_t>(it - t.begin());
    if (std::abs(t[i] - time) < 1e-12) return v[i];
    // geometric interpolation: v decays exponentially in t
    const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
    return (v[i - 1].array().log() * (1.0 - w) + v[i].array().log() * w).exp().matrix();
}

double ExtinctionCurve::nu_v_at(double time) const {
    if (time <= t.front()) return nu_v.front();
    if (time >= t.back()) return nu_v.back();
    const auto it = std::lower_bound(t.begin(), t.end(), time);
    const size_t i = static_cast<size_t>(it - t.begin());
    if (std::abs(t[i] - time) < 1e-12) return nu_v[i];
    const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
    return std::exp(std::log(nu_v[i - 1]) * (1.0 - w) + std::log(nu_v[i]) * w);
}

double laplace_functional(const ModelSpec& spec, const Vector& mu, const Vector& f, double t,
                          double tol) {
    if (is_null_measure(mu) || t == 0.0) return std::exp(-mu.dot(f));
    const Vector vtf = solve_cumulant(spec, f, t, tol).v.back();
    return std::exp(-mu.dot(vtf));
}

KappaEstimate kappa_deterministic(const ModelSpec& spec, const EigenTriplet& trip, double horizon,
                                  double tol) {
    if (!trip.subcritical()) throw std::runtime_error("kappa_deterministic: model is not subcritical");
    const ExtinctionCurve curve = extinction_curve(spec, trip, horizon, tol);
    KappaEstimate est;
    for (size_t i = 0; i < curve.t.size(); ++i) {
        est.t.push_back(curve.t[i]);
        est.value.push_back(std::exp(-trip.lambda * curve.t[i]) * (1.0 - std::exp(-curve.nu_v[i])));
    }
    // last decade of the grid: extrapolate assuming geometric remainder
    const double t2 = curve.t.back();
    const double t1 = t2 * 0.75, t0 = t2 * 0.5;
    auto val_at = [&](double tt) {
        return std::exp(-trip.lambda * tt) * (1.0 - std::exp(-curve.nu_v_at(tt)));
    };
    const double f0 = val_at(t0), f1 = val_at(t1), f2 = val_at(t2);
    const double d1 = f1 - f0, d2 = f2 - f1;
    double extrap = f2;
    if (std::abs(d1) > 0.0 && std::abs(d2) < std::abs(d1)) {
        const double q = d2 / d1;  // geometric decay of increments
        extrap = f2 + d2 * q / (1.0 - q);
    }
    est.kappa = extrap;
    est.uncertainty = std::abs(extrap - f2) + std::abs(f2 - f1);

    // E = inf regime: the sequence keeps decaying with log-slope bounded away from 0
    if (f2 < f1 && f1 < f0) {
        const double slope = std::log(f1 / f2) / (t2 - t1);
        if (slope > 1e-3 && f2 < 0.5 * f0) {
            est.decayed_to_zero = true;
            est.kappa = 0.0;
            est.uncertainty = f2;
        }
    }
    return est;
}

RateRatioTable rate_ratio(const ModelSpec& spec, const EigenTriplet& trip,
                          const std::vector<double>& t_grid, const std::vector<double>& r_grid,
                          double tol) {
    double horizon = 0.0;
    for (double t : t_grid)
        for (double r : r_grid) horizon = std::max(horizon, t + r);
    const ExtinctionCurve curve = extinction_curve(spec, trip, horizon, tol);
    RateRatioTable tab;
    tab.t = t_grid;
    tab.r = r_grid;
    for (double t : t_grid) {
        std::vector<double> row;
        double sup = 0.0;
        const double nv_t = curve.nu_v_at(t);
        for (double r : r_grid) {
            const double ratio = std::exp(trip.lambda * r) * nv_t / curve.nu_v_at(t + r);
            row.push_back(ratio);
            sup = std::max(sup, ratio);
        }
        tab.ratio.push_back(std::move(row));
        tab.sup_over_r.push_back(sup);
    }
    return tab;
}

}  // namespace lab
