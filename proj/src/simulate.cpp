#include "lab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace lab {

namespace {

struct JumpTables {
    std::vector<double> tail_rate;      // pi_i((delta_J, inf))
    std::vector<double> tail_mean;      // int_{delta_J}^inf u pi_i(du), jump compensator
    std::vector<double> small_var;      // int_0^{delta_J} u^2 pi_i(du)
    bool any_jumps = false;
};

JumpTables make_tables(const ModelSpec& spec, const SimConfig& cfg) {
    JumpTables tab;
    for (int x = 0; x < spec.n(); ++x) {
        const auto& pm = spec.pi[static_cast<size_t>(x)];
        const double rate = pm.is_zero() ? 0.0 : pm.mass_above(cfg.small_jump_cutoff);
        const double var = pm.is_zero() ? 0.0 : pm.second_moment_below(cfg.small_jump_cutoff);
        if (!std::isfinite(rate)) throw std::runtime_error("simulate: infinite jump rate above delta_J");
        tab.tail_rate.push_back(rate);
        tab.tail_mean.push_back(pm.is_zero() ? 0.0 : pm.first_moment_above(cfg.small_jump_cutoff));
        tab.small_var.push_back(var);
        if (rate > 0.0 || var > 0.0) tab.any_jumps = true;
    }
    return tab;
}

// One full-truncation Euler-Maruyama substep of length h: coordinates driven
// negative are clamped to 0 (absorption). Redrawing on negativity instead
// would condition the noise on staying positive and bias the mean upward.
void euler_substep(const ModelSpec& spec, const JumpTables& tab, const SimConfig& cfg, double h,
                   Vector& m, Rng& rng) {
    const int n = spec.n();
    Vector next(n);
    for (int i = 0; i < n; ++i) {
        // beta already nets out the jump mass (compensated mechanism), so the
        // Poisson-added tail jumps must be compensated back out of the drift
        double drift = (spec.beta[i] - tab.tail_mean[i]) * m[i];
        for (int j = 0; j < n; ++j) drift += m[j] * spec.motion(j, i);
        double x = m[i] + drift * h;
        if (m[i] > 0.0) {
            if (spec.sigma[i] > 0.0) x += spec.sigma[i] * std::sqrt(2.0 * m[i] * h) * rng.normal();
            if (cfg.small_jump_mode == SimConfig::SmallJumpMode::DiffusionApprox && tab.small_var[i] > 0.0)
                x += std::sqrt(m[i] * tab.small_var[i] * h) * rng.normal();
            if (tab.tail_rate[i] > 0.0) {
                const long k = rng.poisson(m[i] * tab.tail_rate[i] * h);
                const auto& pm = spec.pi[static_cast<size_t>(i)];
                for (long j = 0; j < k; ++j)
                    x += pm.sample_tail(cfg.small_jump_cutoff, [&rng] { return rng.uniform(); });
            }
        }
        next[i] = std::max(x, 0.0);
    }
    m = next;
}

// step of length h with intensity-capped sub-stepping (keeps the expected
// number of big jumps per substep small)
void euler_step(const ModelSpec& spec, const JumpTables& tab, const SimConfig& cfg, double h, Vector& m,
                Rng& rng) {
    double done = 0.0;
    while (done < h - 1e-15 * h) {
        double sub = h - done;
        const double total_rate = [&] {
            double r = 0.0;
            for (int i = 0; i < spec.n(); ++i) r += m[i] * tab.tail_rate[i];
            return r;
        }();
        if (total_rate * sub > 0.1) sub = 0.1 / total_rate;
        euler_substep(spec, tab, cfg, sub, m, rng);
        done += sub;
        if (is_null_measure(m)) return;  // 0 is a trap
    }
}

void simulate_one(const ModelSpec& spec, const JumpTables& tab, const SimConfig& cfg, const Vector& mu0,
                  long path, std::vector<Vector>& out) {
    Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(path) + 1);
    Vector m = mu0;
    double t = 0.0;
    out.clear();
    for (double rec : cfg.record_times) {
        while (t < rec - 1e-12) {
            if (is_null_measure(m)) break;
            const double h = std::min(cfg.dt, rec - t);
            euler_step(spec, tab, cfg, h, m, rng);
            t += h;
        }
        t = std::max(t, rec);
        out.push_back(m);
    }
}

}  // namespace

std::size_t PathEnsemble::time_index(double t) const {
    for (std::size_t i = 0; i < record_times.size(); ++i)
        if (std::abs(record_times[i] - t) <= 1e-9) return i;
    throw std::out_of_range("PathEnsemble: t is not a record time");
}

std::uint64_t fingerprint_spec(const ModelSpec& spec) {
    const std::string text = model_to_json(spec);
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

PathEnsemble simulate_ensemble(const ModelSpec& spec, const Vector& mu0, const SimConfig& cfg) {
    if (!validate_model(spec).all_passed()) throw std::runtime_error("simulate: model validation failed");
    if (!(cfg.dt > 0.0) || !(cfg.small_jump_cutoff > 0.0) || cfg.n_paths < 1)
        throw std::invalid_argument("simulate: bad config");
    if (!std::is_sorted(cfg.record_times.begin(), cfg.record_times.end()))
        throw std::invalid_argument("simulate: record_times must be sorted");
    if ((mu0.array() < 0.0).any() || mu0.size() != spec.beta.size())
        throw std::invalid_argument("simulate: bad initial measure");

    const JumpTables tab = make_tables(spec, cfg);
    PathEnsemble ens;
    ens.record_times = cfg.record_times;
    ens.seed = cfg.seed;
    ens.spec_fingerprint = fingerprint_spec(spec);
    ens.states.resize(static_cast<size_t>(cfg.n_paths));
    ens.weights.assign(static_cast<size_t>(cfg.n_paths), 1.0);

    const int nthreads = std::max(1, cfg.threads);
    auto worker = [&](long lo, long hi) {
        for (long p = lo; p < hi; ++p)
            simulate_one(spec, tab, cfg, mu0, p, ens.states[static_cast<size_t>(p)]);
    };
    if (nthreads == 1) {
        worker(0, cfg.n_paths);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (cfg.n_paths + nthreads - 1) / nthreads;
        for (int k = 0; k < nthreads; ++k) {
            const long lo = k * chunk, hi = std::min<long>(cfg.n_paths, lo + chunk);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return ens;
}

Vector simulate_to_time(const ModelSpec& spec, const Vector& m0, double t_end, const SimConfig& cfg,
                        Rng rng) {
    const JumpTables tab = make_tables(spec, cfg);
    Vector m = m0;
    double t = 0.0;
    while (t < t_end - 1e-12) {
        if (is_null_measure(m)) break;
        const double h = std::min(cfg.dt, t_end - t);
        euler_step(spec, tab, cfg, h, m, rng);
        t += h;
    }
    return m;
}

CheckReport moment_check(const PathEnsemble& ens, const ModelSpec& spec, const Vector& mu0,
                         const Vector& f, double t) {
    const std::size_t ti = ens.time_index(t);
    double wsum = 0.0, mean = 0.0, m2 = 0.0;
    long count = 0;
    for (long p = 0; p < ens.n_paths(); ++p) {
        const double x = ens.states[static_cast<size_t>(p)][ti].dot(f);
        const double w = ens.weights[static_cast<size_t>(p)];
        wsum += w;
        mean += w * x;
        m2 += w * x * x;
        ++count;
    }
    mean /= wsum;
    const double var = std::max(0.0, m2 / wsum - mean * mean);
    const double se = std::sqrt(var / static_cast<double>(count));
    const Vector target_v = mean_semigroup_apply(mean_generator(spec), t, f);
    const double target = mu0.dot(target_v);
    CheckReport rep;
    rep.name = "moment_check";
    rep.estimate = mean;
    rep.target = target;
    rep.std_error = se;
    rep.z_score = se > 0.0 ? (mean - target) / se : (mean == target ? 0.0 : kInf);
    rep.passed = std::abs(rep.z_score) <= 3.0;
    return rep;
}

std::vector<CheckReport> martingale_check(const PathEnsemble& ens, const EigenTriplet& trip,
                                          const Vector& mu0) {
    std::vector<CheckReport> reports;
    const double target = mu0.dot(trip.phi);
    for (std::size_t ti = 0; ti < ens.record_times.size(); ++ti) {
        const double t = ens.record_times[ti];
        double mean = 0.0, m2 = 0.0;
        const double scale = std::exp(-trip.lambda * t);
        for (long p = 0; p < ens.n_paths(); ++p) {
            const double x = scale * ens.states[static_cast<size_t>(p)][ti].dot(trip.phi);
            mean += x;
            m2 += x * x;
        }
        const double np = static_cast<double>(ens.n_paths());
        mean /= np;
        const double se = std::sqrt(std::max(0.0, m2 / np - mean * mean) / np);
        CheckReport rep;
        rep.name = "martingale_mean@t=" + std::to_string(t);
        rep.estimate = mean;
        rep.target = target;
        rep.std_error = se;
        rep.z_score = se > 0.0 ? (mean - target) / se : (mean == target ? 0.0 : kInf);
        rep.passed = std::abs(rep.z_score) <= 3.0;
        reports.push_back(rep);
    }
    return reports;
}

CheckReport survival_check(const PathEnsemble& ens, double t, double target) {
    const std::size_t ti = ens.time_index(t);
    long alive = 0;
    for (long p = 0; p < ens.n_paths(); ++p)
        if (!is_null_measure(ens.states[static_cast<size_t>(p)][ti])) ++alive;
    const double np = static_cast<double>(ens.n_paths());
    const double phat = static_cast<double>(alive) / np;
    const double se = std::sqrt(std::max(phat * (1.0 - phat), 1.0 / np) / np);
    CheckReport rep;
    rep.name = "survival@t=" + std::to_string(t);
    rep.estimate = phat;
    rep.target = target;
    rep.std_error = se;
    rep.z_score = (phat - target) / se;
    rep.passed = std::abs(rep.z_score) <= 3.0;
    return rep;
}

}  // namespace lab
