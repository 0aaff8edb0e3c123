#include "lab/qprocess.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace lab {

double EmpiricalLaw::ess() const {
    double s = 0.0, s2 = 0.0;
    for (double w : weights) {
        s += w;
        s2 += w * w;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

void EmpiricalLaw::normalize() {
    double s = 0.0;
    for (double w : weights) s += w;
    if (!(s > 0.0)) throw std::runtime_error("EmpiricalLaw: total weight is zero");
    for (double& w : weights) w /= s;
}

namespace {

// weighted mean and plug-in SE of g(eta) over the law (weights already normalized)
std::pair<double, double> weighted_stat(const EmpiricalLaw& law, const std::function<double(const Vector&)>& g) {
    double mean = 0.0;
    for (size_t i = 0; i < law.samples.size(); ++i) mean += law.weights[i] * g(law.samples[i]);
    double var = 0.0, w2 = 0.0;
    for (size_t i = 0; i < law.samples.size(); ++i) {
        const double d = g(law.samples[i]) - mean;
        var += law.weights[i] * law.weights[i] * d * d;
        w2 += law.weights[i] * law.weights[i];
    }
    (void)w2;
    return {mean, std::sqrt(var)};
}

}  // namespace

double EmpiricalLaw::laplace(const Vector& f) const {
    return weighted_stat(*this, [&f](const Vector& eta) { return std::exp(-eta.dot(f)); }).first;
}

double EmpiricalLaw::laplace_std_error(const Vector& f) const {
    return weighted_stat(*this, [&f](const Vector& eta) { return std::exp(-eta.dot(f)); }).second;
}

double EmpiricalLaw::mean_of(const Vector& f) const {
    return weighted_stat(*this, [&f](const Vector& eta) { return eta.dot(f); }).first;
}

double EmpiricalLaw::mean_of_std_error(const Vector& f) const {
    return weighted_stat(*this, [&f](const Vector& eta) { return eta.dot(f); }).second;
}

ConditionedLaw law_conditioned(const PathEnsemble& ens, double t, double r) {
    const std::size_t ti = ens.time_index(t);
    const std::size_t tri = ens.time_index(t + r);
    ConditionedLaw out;
    for (long p = 0; p < ens.n_paths(); ++p) {
        const auto& path = ens.states[static_cast<size_t>(p)];
        if (!is_null_measure(path[tri])) {
            out.law.samples.push_back(path[ti]);
            out.law.weights.push_back(1.0);
            ++out.survivors;
        }
    }
    out.survival_fraction = static_cast<double>(out.survivors) / static_cast<double>(ens.n_paths());
    if (out.survivors == 0)
        throw std::runtime_error(
            "law_conditioned: no surviving paths at t+r; estimated survival < 1/n_paths. "
            "Consider h-transform reweighting (law_htransform) instead.");
    out.law.provenance = "Q_{t,r} by direct conditioning";
    out.law.normalize();
    return out;
}

HTransformLaw law_htransform(const ModelSpec& spec, const EigenTriplet& trip, const Vector& mu,
                             double t, const SimConfig& config, double ess_floor) {
    if (is_null_measure(mu)) throw std::invalid_argument("law_htransform: mu must be nonzero");
    SimConfig cfg = config;
    cfg.record_times = {t};
    const PathEnsemble ens = simulate_ensemble(spec, mu, cfg);
    const double denom = std::exp(trip.lambda * t) * mu.dot(trip.phi);

    HTransformLaw out;
    double sum_w = 0.0, sum_w2 = 0.0;
    for (long p = 0; p < ens.n_paths(); ++p) {
        const Vector& eta = ens.states[static_cast<size_t>(p)][0];
        const double w = eta.dot(trip.phi) / denom;
        out.law.samples.push_back(eta);
        out.law.weights.push_back(w);
        sum_w += w;
        sum_w2 += w * w;
    }
    const double np = static_cast<double>(ens.n_paths());
    out.mean_weight = sum_w / np;
    out.mean_weight_se = std::sqrt(std::max(0.0, sum_w2 / np - out.mean_weight * out.mean_weight) / np);
    out.ess = sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
    // the ESS can never exceed the path count, so small deliberate ensembles
    // are judged against their own size rather than the default floor
    if (out.ess < std::min(ess_floor, np)) {
        std::ostringstream os;
        os << "law_htransform: effective sample size " << out.ess << " below floor " << ess_floor
           << "; increase n_paths or shorten t";
        throw std::runtime_error(os.str());
    }
    out.law.provenance = "Q_{t,inf} by h-transform reweighting";
    out.law.normalize();
    return out;
}

YaglomEstimate yaglom_estimate(const ModelSpec& spec, const EigenTriplet& trip, const Vector& mu,
                               double t_large, const SimConfig& config,
                               const std::vector<Vector>& test_functions) {
    if (!trip.subcritical()) throw std::runtime_error("yaglom_estimate: model is not subcritical");
    SimConfig cfg = config;
    cfg.record_times = {t_large, 2.0 * t_large};
    const PathEnsemble ens = simulate_ensemble(spec, mu, cfg);

    YaglomEstimate out;
    const ConditionedLaw cl = law_conditioned(ens, t_large, 0.0);
    out.law = cl.law;
    out.law.provenance = "Q_{inf,0} estimate (Yaglom) at t=" + std::to_string(t_large);
    out.survival_fraction = cl.survival_fraction;

    // staleness: compare against the law at 2 t_large on the test panel
    long late_survivors = 0;
    const std::size_t t2i = ens.time_index(2.0 * t_large);
    for (long p = 0; p < ens.n_paths(); ++p)
        if (!is_null_measure(ens.states[static_cast<size_t>(p)][t2i])) ++late_survivors;
    if (late_survivors < 30) {
        out.staleness_ok = true;
        out.staleness_note = "inconclusive: only " + std::to_string(late_survivors) +
                             " survivors at 2 t_large";
        return out;
    }
    EmpiricalLaw late;
    for (long p = 0; p < ens.n_paths(); ++p) {
        const Vector& eta = ens.states[static_cast<size_t>(p)][t2i];
        if (!is_null_measure(eta)) {
            late.samples.push_back(eta);
            late.weights.push_back(1.0);
        }
    }
    late.normalize();
    std::ostringstream note;
    for (const Vector& f : test_functions) {
        const double a = out.law.laplace(f), b = late.laplace(f);
        const double se = std::hypot(out.law.laplace_std_error(f), late.laplace_std_error(f));
        if (std::abs(a - b) > 3.0 * se + 1e-3) {
            out.staleness_ok = false;
            note << "laplace mismatch " << a << " vs " << b << " (3se=" << 3.0 * se << "); ";
        }
    }
    out.staleness_note = note.str();
    return out;
}

std::vector<QsdCheckRow> qsd_check(const ModelSpec& spec, const EigenTriplet& trip,
                                   const EmpiricalLaw& yaglom, const std::vector<double>& r_grid,
                                   const SimConfig& config, const std::vector<Vector>& test_functions) {
    if (yaglom.samples.empty()) throw std::invalid_argument("qsd_check: empty yaglom law");
    // resample atoms, then run one ensemble per atom-path with shared config
    SimConfig cfg = config;
    cfg.record_times = r_grid;
    std::sort(cfg.record_times.begin(), cfg.record_times.end());

    // build cumulative weights for resampling
    std::vector<double> cum(yaglom.weights.size());
    double acc = 0.0;
    for (size_t i = 0; i < yaglom.weights.size(); ++i) {
        acc += yaglom.weights[i];
        cum[i] = acc;
    }
    Rng resampler = Rng::substream(cfg.seed, 0xabcdef);
    std::vector<std::vector<Vector>> states(static_cast<size_t>(cfg.n_paths));
    for (long p = 0; p < cfg.n_paths; ++p) {
        const double u = resampler.uniform() * acc;
        const size_t idx = static_cast<size_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        Vector m = yaglom.samples[std::min(idx, yaglom.samples.size() - 1)];
        double t = 0.0;
        std::uint64_t segment = 0;
        for (double rec : cfg.record_times) {
            // fresh substream per segment: simulate_to_time takes the RNG by
            // value, so reusing one object would replay the same noise
            Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(p) + 1, 0x9d5, ++segment);
            m = simulate_to_time(spec, m, rec - t, cfg, rng);
            t = rec;
            states[static_cast<size_t>(p)].push_back(m);
            if (is_null_measure(m)) {
                while (states[static_cast<size_t>(p)].size() < cfg.record_times.size())
                    states[static_cast<size_t>(p)].push_back(m);
                break;
            }
        }
    }

    std::vector<QsdCheckRow> rows;
    for (size_t ri = 0; ri < cfg.record_times.size(); ++ri) {
        const double r = cfg.record_times[ri];
        QsdCheckRow row;
        row.r = r;
        long alive = 0;
        EmpiricalLaw survivor;
        for (long p = 0; p < cfg.n_paths; ++p) {
            const Vector& eta = states[static_cast<size_t>(p)][ri];
            if (!is_null_measure(eta)) {
                ++alive;
                survivor.samples.push_back(eta);
                survivor.weights.push_back(1.0);
            }
        }
        const double np = static_cast<double>(cfg.n_paths);
        const double phat = static_cast<double>(alive) / np;
        const double se = std::sqrt(std::max(phat * (1.0 - phat), 1.0 / np) / np);
        row.survival.name = "qsd_survival@r=" + std::to_string(r);
        row.survival.estimate = phat;
        row.survival.target = std::exp(trip.lambda * r);
        row.survival.std_error = se;
        row.survival.z_score = (phat - row.survival.target) / se;
        row.survival.passed = std::abs(row.survival.z_score) <= 3.0;

        if (alive > 0) {
            survivor.normalize();
            for (const Vector& f : test_functions) {
                CheckReport rep;
                rep.name = "qsd_laplace@r=" + std::to_string(r);
                rep.estimate = survivor.laplace(f);
                rep.target = yaglom.laplace(f);
                rep.std_error = std::hypot(survivor.laplace_std_error(f), yaglom.laplace_std_error(f));
                rep.z_score = rep.std_error > 0.0 ? (rep.estimate - rep.target) / rep.std_error : 0.0;
                rep.passed = std::abs(rep.z_score) <= 3.0;
                row.laplace.push_back(rep);
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

EmpiricalLaw law_qinfty_r(const EmpiricalLaw& yaglom, const ExtinctionCurve& curve, double r) {
    EmpiricalLaw out = yaglom;
    out.provenance = "Q_{inf,r} by survival reweighting, r=" + std::to_string(r);
    if (r <= 0.0) return out;  // yaglom is supported away from the null measure
    const Vector vr = curve.v_at(r);
    for (size_t i = 0; i < out.samples.size(); ++i)
        out.weights[i] *= 1.0 - std::exp(-out.samples[i].dot(vr));
    out.normalize();
    return out;
}

DoubleLimitPanel double_limit_panel(const ModelSpec& spec, const EigenTriplet& trip, const Vector& mu,
                                    const std::vector<double>& t_grid, const std::vector<double>& r_grid,
                                    const Vector& f, const SimConfig& config, double cumulant_tol) {
    DoubleLimitPanel panel;
    panel.t_grid = t_grid;
    panel.r_grid = r_grid;

    double r_max = 0.0;
    for (double r : r_grid) r_max = std::max(r_max, r);
    const ExtinctionCurve curve = extinction_curve(spec, trip, std::max(r_max, 1.0), cumulant_tol);

    SimConfig cfg = config;
    cfg.record_times = t_grid;
    std::sort(cfg.record_times.begin(), cfg.record_times.end());
    const PathEnsemble ens = simulate_ensemble(spec, mu, cfg);
    const double np = static_cast<double>(ens.n_paths());

    for (double t : t_grid) {
        const std::size_t ti = ens.time_index(t);
        std::vector<double> row, row_se;
        long alive = 0;
        double mean_phi_num = 0.0;
        for (long p = 0; p < ens.n_paths(); ++p) {
            const Vector& eta = ens.states[static_cast<size_t>(p)][ti];
            if (!is_null_measure(eta)) {
                ++alive;
                mean_phi_num += eta.dot(trip.phi);
            }
        }
        panel.norm_survival.push_back(std::exp(-trip.lambda * t) * static_cast<double>(alive) / np);
        panel.mean_phi_q_t0.push_back(alive > 0 ? mean_phi_num / static_cast<double>(alive) : kInf);

        for (double r : r_grid) {
            // E[e^{-X_t(f)} | X_{t+r} != 0] with the exact conditional
            // survival weight 1 - e^{-X_t(v_r)} (Markov property)
            const Vector vr = r > 0.0 ? curve.v_at(r) : Vector();
            double num = 0.0, den = 0.0, num2 = 0.0, den2 = 0.0, cross = 0.0;
            for (long p = 0; p < ens.n_paths(); ++p) {
                const Vector& eta = ens.states[static_cast<size_t>(p)][ti];
                double w;
                if (r > 0.0)
                    w = is_null_measure(eta) ? 0.0 : 1.0 - std::exp(-eta.dot(vr));
                else
                    w = is_null_measure(eta) ? 0.0 : 1.0;
                const double g = std::exp(-eta.dot(f));
                num += w * g;
                den += w;
                num2 += w * g * w * g;
                den2 += w * w;
                cross += w * g * w;
            }
            if (den <= 0.0) {
                row.push_back(std::nan(""));
                row_se.push_back(std::nan(""));
                continue;
            }
            const double est = num / den;
            // delta-method SE of a ratio estimator
            const double vn = num2 / np - (num / np) * (num / np);
            const double vd = den2 / np - (den / np) * (den / np);
            const double cv = cross / np - (num / np) * (den / np);
            const double se = std::sqrt(std::max(
                                  0.0, (vn - 2.0 * est * cv + est * est * vd))) /
                              (den / np) / std::sqrt(np);
            row.push_back(est);
            row_se.push_back(se);
        }
        panel.laplace.push_back(std::move(row));
        panel.laplace_se.push_back(std::move(row_se));
    }
    return panel;
}

}  // namespace lab
