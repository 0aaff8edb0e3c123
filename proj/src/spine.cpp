#include "lab/spine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lab/cumulant.hpp"

namespace lab {

namespace {

Vector unit_mass(int n, int x, double y) {
    Vector m = Vector::Zero(n);
    m[x] = y;
    return m;
}

int sample_from_law(const Vector& law, Rng& rng) {
    const double u = rng.uniform() * law.sum();
    double acc = 0.0;
    for (int i = 0; i < law.size(); ++i) {
        acc += law[i];
        if (u <= acc) return i;
    }
    return static_cast<int>(law.size()) - 1;
}

// kappa_spine / spine_vs_htransform draw their sub-streams from disjoint
// tag spaces so a shared seed never aliases across uses.
constexpr std::uint64_t kTagSpine = 0x5350494eULL;        // spine jump chain
constexpr std::uint64_t kTagImmigration = 0x494d4d49ULL;  // event times and masses
constexpr std::uint64_t kTagDescendant = 0x44455343ULL;   // per-event mass evolution
constexpr std::uint64_t kTagInitial = 0x57305730ULL;      // W^(0) path

}  // namespace

int SpinePath::type_at(double s) const {
    if (s < t_begin - 1e-12 || s > t_end + 1e-12) throw std::out_of_range("SpinePath: time outside window");
    std::size_t i = 0;
    while (i + 1 < seg_start.size() && seg_start[i + 1] <= s) ++i;
    return seg_type[i];
}

double SpineRealization::evaluate(double a, double b, const Vector& f) const {
    if (!(a < b)) return 0.0;
    if (b > t_eval + 1e-12)
        throw std::invalid_argument("SpineRealization: window extends past the evaluation time");
    if (a < path.t_begin - 1e-12)
        throw std::invalid_argument("SpineRealization: window starts before the sampled spine");
    double z = 0.0;
    for (std::size_t k = 0; k < events.size(); ++k) {
        const double s = events[k].s;
        if (s > a && s <= b) z += descendant_mass[k].dot(f);
    }
    return z;
}

SpinePath sample_spine_from(const SpineGenerator& gen, const Vector& initial_law, double t_begin,
                            double t_end, Rng& rng) {
    if (!(t_end >= t_begin)) throw std::invalid_argument("sample_spine: empty window");
    SpinePath path;
    path.t_begin = t_begin;
    path.t_end = t_end;
    int x = sample_from_law(initial_law, rng);
    double s = t_begin;
    path.seg_start.push_back(s);
    path.seg_type.push_back(x);
    for (;;) {
        const double rate = -gen.G(x, x);
        if (!(rate > 0.0)) break;  // single type or chain-absorbing state
        s += rng.exponential(rate);
        if (s >= t_end) break;
        // jump kernel G(x, j) / rate over j != x
        Vector kernel = gen.G.row(x).transpose();
        kernel[x] = 0.0;
        x = sample_from_law(kernel, rng);
        path.seg_start.push_back(s);
        path.seg_type.push_back(x);
    }
    return path;
}

SpinePath sample_spine(const SpineGenerator& gen, double t_begin, double t_end, Rng& rng) {
    return sample_spine_from(gen, gen.nu_tilde, t_begin, t_end, rng);
}

std::vector<ImmigrationEvent> sample_immigration(const ModelSpec& spec, const SpinePath& path,
                                                 double delta_I, double eps, Rng& rng) {
    if (!(delta_I > 0.0) || !(eps > 0.0))
        throw std::invalid_argument("sample_immigration: delta_I and eps must be positive");
    std::vector<ImmigrationEvent> events;
    const std::size_t nseg = path.seg_start.size();
    for (std::size_t i = 0; i < nseg; ++i) {
        const double a = path.seg_start[i];
        const double b = (i + 1 < nseg) ? path.seg_start[i + 1] : path.t_end;
        if (!(b > a)) continue;
        const int x = path.seg_type[i];
        const auto& pm = spec.pi[static_cast<size_t>(x)];

        // discrete immigration: intensity y pi(x, dy) ds above delta_I
        if (!pm.is_zero()) {
            const double rate = pm.first_moment_above(delta_I);
            if (!std::isfinite(rate))
                throw std::runtime_error("sample_immigration: infinite size-biased rate above delta_I");
            const long k = rng.poisson(rate * (b - a));
            for (long j = 0; j < k; ++j) {
                ImmigrationEvent ev;
                ev.s = a + rng.uniform() * (b - a);
                ev.x = x;
                ev.y = pm.sample_size_biased_tail(delta_I, [&rng] { return rng.uniform(); });
                ev.origin = ImmigrationEvent::Origin::Discrete;
                events.push_back(ev);
            }
        }

        // continuous immigration, Poissonized at mass eps with matched mean
        if (spec.sigma[x] > 0.0) {
            const double rate = 2.0 * spec.sigma[x] * spec.sigma[x] / eps;
            const long k = rng.poisson(rate * (b - a));
            for (long j = 0; j < k; ++j) {
                ImmigrationEvent ev;
                ev.s = a + rng.uniform() * (b - a);
                ev.x = x;
                ev.y = eps;
                ev.origin = ImmigrationEvent::Origin::ContinuousEps;
                events.push_back(ev);
            }
        }
    }
    std::sort(events.begin(), events.end(),
              [](const ImmigrationEvent& l, const ImmigrationEvent& r) { return l.s < r.s; });
    return events;
}

SpineRealization realize_spine_from(const ModelSpec& spec, const SpineGenerator& gen,
                                    const Vector& initial_law, double t_begin, double t_eval,
                                    double delta_I, double eps, const SimConfig& sim,
                                    std::uint64_t realization_index) {
    SpineRealization real;
    real.t_eval = t_eval;
    Rng spine_rng = Rng::substream(sim.seed, kTagSpine, realization_index);
    real.path = sample_spine_from(gen, initial_law, t_begin, t_eval, spine_rng);
    Rng imm_rng = Rng::substream(sim.seed, kTagImmigration, realization_index);
    real.events = sample_immigration(spec, real.path, delta_I, eps, imm_rng);
    real.descendant_mass.reserve(real.events.size());
    for (std::size_t k = 0; k < real.events.size(); ++k) {
        const auto& ev = real.events[k];
        Rng desc = Rng::substream(sim.seed, kTagDescendant, realization_index, k + 1);
        real.descendant_mass.push_back(
            simulate_to_time(spec, unit_mass(spec.n(), ev.x, ev.y), t_eval - ev.s, sim, desc));
    }
    return real;
}

SpineRealization realize_spine(const ModelSpec& spec, const SpineGenerator& gen, double t_begin,
                               double t_eval, double delta_I, double eps, const SimConfig& sim,
                               std::uint64_t realization_index) {
    return realize_spine_from(spec, gen, gen.nu_tilde, t_begin, t_eval, delta_I, eps, sim,
                              realization_index);
}

KappaSpineEstimate kappa_spine(const ModelSpec& spec, const EigenTriplet& trip,
                               const SpineGenerator& gen, double T_max, long n_realizations,
                               double delta_I, double eps, const SimConfig& sim) {
    if (!(T_max > 0.0) || n_realizations < 1) throw std::invalid_argument("kappa_spine: bad arguments");
    KappaSpineEstimate out;
    out.T = {0.25 * T_max, 0.5 * T_max, T_max};
    const std::size_t nT = out.T.size();
    std::vector<double> sum(nT, 0.0), sum2(nT, 0.0);

    for (long i = 0; i < n_realizations; ++i) {
        const SpineRealization real = realize_spine(spec, gen, -T_max, 0.0, delta_I, eps, sim,
                                                    static_cast<std::uint64_t>(i) + 1);
        bool zero_seen = false;
        for (std::size_t j = 0; j < nT; ++j) {
            const double z = real.evaluate(-out.T[j], 0.0, trip.phi);
            const double inv = z > 0.0 ? 1.0 / z : kInf;
            if (z <= 0.0) zero_seen = true;
            sum[j] += inv;
            sum2[j] += inv * inv;
        }
        if (zero_seen) ++out.zero_mass_samples;
    }
    const double n = static_cast<double>(n_realizations);
    for (std::size_t j = 0; j < nT; ++j) {
        const double mean = sum[j] / n;
        out.estimate.push_back(mean);
        out.std_error.push_back(std::sqrt(std::max(0.0, sum2[j] / n - mean * mean) / n));
    }
    out.kappa = out.estimate.back();
    out.kappa_se = out.std_error.back();
    return out;
}

SpineComparison spine_vs_htransform(const ModelSpec& spec, const EigenTriplet& trip,
                                    const SpineGenerator& gen, const Vector& mu, double t,
                                    const std::vector<Vector>& f_panel, long n_realizations,
                                    double delta_I, double eps, const SimConfig& sim,
                                    double cumulant_tol) {
    if (f_panel.empty()) throw std::invalid_argument("spine_vs_htransform: empty test panel");
    const int n = spec.n();
    // spine entrance law for starting measure mu: mu_x phi_x, normalized
    Vector mu_tilde = mu.cwiseProduct(trip.phi);
    if (!(mu_tilde.sum() > 0.0)) throw std::invalid_argument("spine_vs_htransform: mu(phi) = 0");
    mu_tilde /= mu_tilde.sum();

    // truncation budget used as the pass allowance on top of 3 joint SE:
    // eps-Poissonization bias plus the expected sub-delta_I immigrated mass
    double sub_delta_mass = 0.0;
    for (int x = 0; x < n; ++x)
        if (!spec.pi[static_cast<size_t>(x)].is_zero())
            sub_delta_mass = std::max(sub_delta_mass,
                                      spec.pi[static_cast<size_t>(x)].second_moment_below(delta_I));
    double fmax = 0.0;
    for (const auto& f : f_panel) fmax = std::max(fmax, f.maxCoeff());
    const double bias_budget = t * fmax * (eps + sub_delta_mass);

    const std::size_t nf = f_panel.size();
    std::vector<double> sum(nf, 0.0), sum2(nf, 0.0);
    for (long i = 0; i < n_realizations; ++i) {
        const std::uint64_t idx = static_cast<std::uint64_t>(i) + 1;
        const SpineRealization real =
            realize_spine_from(spec, gen, mu_tilde, 0.0, t, delta_I, eps, sim, idx);
        Rng w0_rng = Rng::substream(sim.seed, kTagInitial, idx);
        const Vector w0 = simulate_to_time(spec, mu, t, sim, w0_rng);
        for (std::size_t j = 0; j < nf; ++j) {
            const double total = w0.dot(f_panel[j]) + real.evaluate(0.0, t, f_panel[j]);
            const double e = std::exp(-total);
            sum[j] += e;
            sum2[j] += e * e;
        }
    }
    const double nr = static_cast<double>(n_realizations);

    const HTransformLaw hlaw = law_htransform(spec, trip, mu, t, sim);
    SpineComparison cmp;
    for (std::size_t j = 0; j < nf; ++j) {
        const double mean = sum[j] / nr;
        const double se = std::sqrt(std::max(0.0, sum2[j] / nr - mean * mean) / nr);
        CheckReport rep;
        rep.name = "spine_vs_htransform_laplace[" + std::to_string(j) + "]";
        rep.estimate = mean;
        rep.target = hlaw.law.laplace(f_panel[j]);
        const double se_h = hlaw.law.laplace_std_error(f_panel[j]);
        rep.std_error = std::sqrt(se * se + se_h * se_h);
        rep.z_score = rep.std_error > 0.0 ? (mean - rep.target) / rep.std_error : 0.0;
        rep.passed = std::abs(mean - rep.target) <= 3.0 * rep.std_error + bias_budget;
        rep.detail = "bias budget " + std::to_string(bias_budget);
        cmp.laplace_panel.push_back(rep);
    }

    // factorization at mu = nu with f = first panel function:
    //   E[e^{-(W0_t + Z_t^{(0,t]})(f)}] = P_nu[e^{-X_t(f)}] * E[e^{-Z_0^{(-t,0]}(f)}]
    const Vector& f0 = f_panel.front();
    double lhs_sum = 0.0, lhs_sum2 = 0.0, z_sum = 0.0, z_sum2 = 0.0;
    for (long i = 0; i < n_realizations; ++i) {
        const std::uint64_t idx = static_cast<std::uint64_t>(i) + 1;
        const SpineRealization fwd =
            realize_spine_from(spec, gen, gen.nu_tilde, 0.0, t, delta_I, eps, sim, 2 * idx);
        Rng w0_rng = Rng::substream(sim.seed, kTagInitial, 2 * idx);
        const Vector w0 = simulate_to_time(spec, trip.nu, t, sim, w0_rng);
        const double el = std::exp(-(w0.dot(f0) + fwd.evaluate(0.0, t, f0)));
        lhs_sum += el;
        lhs_sum2 += el * el;

        const SpineRealization sta =
            realize_spine(spec, gen, -t, 0.0, delta_I, eps, sim, 2 * idx + 1);
        const double ez = std::exp(-sta.evaluate(-t, 0.0, f0));
        z_sum += ez;
        z_sum2 += ez * ez;
    }
    const double lhs = lhs_sum / nr;
    const double lhs_se = std::sqrt(std::max(0.0, lhs_sum2 / nr - lhs * lhs) / nr);
    const double zf = z_sum / nr;
    const double zf_se = std::sqrt(std::max(0.0, z_sum2 / nr - zf * zf) / nr);
    const double p_nu = laplace_functional(spec, trip.nu, f0, t, cumulant_tol);

    CheckReport fac;
    fac.name = "spine_factorization";
    fac.estimate = lhs;
    fac.target = p_nu * zf;
    fac.std_error = std::sqrt(lhs_se * lhs_se + p_nu * p_nu * zf_se * zf_se);
    fac.z_score = fac.std_error > 0.0 ? (lhs - fac.target) / fac.std_error : 0.0;
    fac.passed = std::abs(lhs - fac.target) <= 3.0 * fac.std_error + bias_budget;
    fac.detail = "P_nu factor " + std::to_string(p_nu);
    cmp.factorization = fac;
    return cmp;
}

}  // namespace lab
