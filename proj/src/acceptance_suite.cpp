#include "lab/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "lab/cumulant.hpp"
#include "lab/model.hpp"
#include "lab/qprocess.hpp"
#include "lab/rng.hpp"
#include "lab/simulate.hpp"
#include "lab/spectral.hpp"
#include "lab/spine.hpp"

namespace lab {

namespace {

using clock_type = std::chrono::steady_clock;

// ---- shipped reference specs (mirrors models/*.json) ----------------------

ModelSpec feller(double b = 1.0, double c = 1.0) {
    ModelSpec s;
    s.motion = Matrix::Zero(1, 1);
    s.beta = Vector::Constant(1, -b);
    s.sigma = Vector::Constant(1, std::sqrt(c));
    s.pi = {JumpMeasure::zero()};
    return s;
}

ModelSpec symmetric_two_type(double a = 1.0, double b = 0.5, double c = 1.0) {
    ModelSpec s;
    s.motion = Matrix(2, 2);
    s.motion << -a, a, a, -a;
    s.beta = Vector::Constant(2, -b);
    s.sigma = Vector::Constant(2, std::sqrt(c));
    s.pi = {JumpMeasure::zero(), JumpMeasure::zero()};
    return s;
}

ModelSpec random_three_type(std::uint64_t seed) {
    Rng rng(seed, 0x33);
    ModelSpec s;
    s.motion = Matrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i) {
        double row = 0.0;
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            s.motion(i, j) = 0.2 + rng.uniform();
            row += s.motion(i, j);
        }
        s.motion(i, i) = -row;
    }
    s.beta = Vector(3);
    for (int i = 0; i < 3; ++i) s.beta[i] = -0.5 - rng.uniform();
    s.sigma = Vector(3);
    for (int i = 0; i < 3; ++i) s.sigma[i] = 0.5 + 0.5 * rng.uniform();
    s.pi = {JumpMeasure::zero(), JumpMeasure::atom_list({{0.5, 0.3}}),
            JumpMeasure::truncated_power_law(0.5, 0.0, 1.0, 0.2)};
    return s;
}

ModelSpec log_tail_model(double theta, double c = 0.5, double b = 1.0) {
    ModelSpec s = feller(b, 1.0);
    s.pi = {JumpMeasure::log_perturbed_tail(theta, std::exp(1.0), c)};
    return s;
}

ModelSpec atom_model(double w = 1.0, double b = 1.0) {
    ModelSpec s;
    s.motion = Matrix::Zero(1, 1);
    s.beta = Vector::Constant(1, -b);
    s.sigma = Vector::Constant(1, 0.0);
    s.pi = {JumpMeasure::atom_list({{1.0, w}})};
    return s;
}

// frozen quadratic-mechanism oracles (independently rederived by brute-force
// ODE integration before being pinned here)
constexpr double kOracleV1 = 0.225399673561;       // V_1(1) for psi(z)=z+z^2
constexpr double kOracleSmallV1 = 0.581976706869;  // v_1 for psi(z)=z+z^2

void add(CriterionResult& cr, std::string name, double estimate, double target, double tolerance,
         bool passed) {
    cr.checks.push_back({std::move(name), estimate, target, tolerance, passed});
}

void add_abs(CriterionResult& cr, std::string name, double estimate, double target, double tolerance) {
    const bool ok = std::isfinite(estimate) && std::abs(estimate - target) <= tolerance;
    add(cr, std::move(name), estimate, target, tolerance, ok);
}

long scaled(long n, double mc_scale) { return std::max<long>(16, static_cast<long>(n * mc_scale)); }

// ---- criteria --------------------------------------------------------------

CriterionResult c01_cumulant_oracle() {
    CriterionResult cr{1, "quadratic-mechanism cumulant and extinction oracles", true, {}, 0.0};
    const auto t0 = clock_type::now();
    const ModelSpec s = feller();
    const double V = solve_cumulant(s, Vector::Ones(1), 1.0, 1e-12).v.back()[0];
    const auto trip = eigen_triplet(mean_generator(s));
    const double v1 = extinction_curve(s, trip, 1.0, 1e-10).v_at(1.0)[0];
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    add_abs(cr, "V_1(1) relative error", V / kOracleV1 - 1.0, 0.0, 1e-6);
    add_abs(cr, "v_1 relative error", v1 / kOracleSmallV1 - 1.0, 0.0, 1e-6);
    add(cr, "runtime seconds < 1", cr.seconds, 1.0, 1.0, cr.seconds < 1.0);
    return cr;
}

CriterionResult c02_normalized_survival_limit() {
    CriterionResult cr{2, "normalized survival limit from the stationary start", true, {}, 0.0};
    const auto t0 = clock_type::now();
    struct Case {
        ModelSpec spec;
        double target;
        const char* name;
    };
    const Case cases[] = {{feller(1.0, 1.0), 1.0, "quadratic b=1 c=1"},
                          {feller(1.0, 2.0), 0.5, "quadratic b=1 c=2"},
                          {symmetric_two_type(1.0, 0.5, 1.0), 0.5, "symmetric 2-type b=0.5 c=1"}};
    for (const auto& k : cases) {
        const auto trip = eigen_triplet(mean_generator(k.spec));
        const auto est = kappa_deterministic(k.spec, trip, 20.0);
        add_abs(cr, std::string("kappa ") + k.name, est.kappa, k.target, 1e-4);
    }
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    add(cr, "runtime seconds < 5", cr.seconds, 5.0, 5.0, cr.seconds < 5.0);
    return cr;
}

CriterionResult c03_rate_ratio() {
    CriterionResult cr{3, "survival-rate ratio bounded on [1, 1+1e-4]", true, {}, 0.0};
    const auto t0 = clock_type::now();
    const ModelSpec s = feller();
    const auto trip = eigen_triplet(mean_generator(s));
    std::vector<double> r_grid;
    for (double r = 0.0; r <= 20.0; r += 2.5) r_grid.push_back(r);
    const auto tab = rate_ratio(s, trip, {10.0}, r_grid);
    const double sup = tab.sup_over_r[0];
    add(cr, "sup_r ratio upper", sup, 1.0, 1e-4, sup <= 1.0 + 1e-4);
    add(cr, "sup_r ratio lower", sup, 1.0, 1e-9, sup >= 1.0 - 1e-9);
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    return cr;
}

CriterionResult c04_spectral_residuals() {
    CriterionResult cr{4, "eigen-triplet residuals and remainder decay", true, {}, 0.0};
    const auto t0 = clock_type::now();
    double worst_eig = 0.0, worst_stat = 0.0, worst_decay = 1e300;
    for (std::uint64_t seed : {2ULL, 5ULL, 9ULL}) {
        const ModelSpec s = random_three_type(seed);
        const Matrix L = mean_generator(s);
        const auto trip = eigen_triplet(L);
        const double right = (L * trip.phi - trip.lambda * trip.phi).lpNorm<Eigen::Infinity>() /
                             trip.phi.lpNorm<Eigen::Infinity>();
        const double left = (L.transpose() * trip.nu - trip.lambda * trip.nu).lpNorm<Eigen::Infinity>() /
                            trip.nu.lpNorm<Eigen::Infinity>();
        const double norm = std::abs(trip.nu.dot(trip.phi) - 1.0);
        worst_eig = std::max({worst_eig, right, left, norm});
        const auto gen = spine_generator(s, trip);
        worst_stat = std::max(worst_stat,
                              (gen.G.transpose() * gen.nu_tilde).lpNorm<Eigen::Infinity>());
        const auto prof = h2_remainder(s, trip, {1.0 / trip.gap, 10.0 / trip.gap});
        worst_decay = std::min(worst_decay, prof.sup_abs_h[0] / prof.sup_abs_h[1]);
    }
    add(cr, "max eigen residual", worst_eig, 0.0, 1e-10, worst_eig <= 1e-10);
    add(cr, "max spine stationarity residual", worst_stat, 0.0, 1e-12, worst_stat <= 1e-12);
    add(cr, "min remainder decay factor (>= target)", worst_decay, 1e2, 0.0, worst_decay >= 1e2);
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    return cr;
}

CriterionResult c05_llogl_dichotomy() {
    CriterionResult cr{5, "L log L functional dichotomy across tail exponents", true, {}, 0.0};
    const auto t0 = clock_type::now();
    for (double theta : {1.5, 2.0}) {
        const ModelSpec s = log_tail_model(theta);
        const auto trip = eigen_triplet(mean_generator(s));
        const double e = l_log_l_functional(s, trip);
        std::ostringstream name;
        name << "theta=" << theta << " is infinite";
        add(cr, name.str(), e, kInf, 0.0, std::isinf(e) && e > 0.0);
    }
    {
        const ModelSpec s = log_tail_model(2.5);
        const auto trip = eigen_triplet(mean_generator(s));
        const double e = l_log_l_functional(s, trip);
        // closed form: phi = 1, so the integral is c (log u_min)^{2-theta}/(theta-2)
        // with u_min = e, i.e. c/(theta-2) = 1.0
        const double exact = 0.5 / (2.5 - 2.0);
        add_abs(cr, "theta=2.5 relative error vs closed form", e / exact - 1.0, 0.0, 1e-6);
    }
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    return cr;
}

CriterionResult c12_flow_property() {
    CriterionResult cr{12, "cumulant flow semigroup property across shipped specs", true, {}, 0.0};
    const auto t0 = clock_type::now();
    const double tol = 1e-10;
    struct Named {
        ModelSpec spec;
        const char* name;
    };
    const Named specs[] = {{feller(1.0, 1.0), "quadratic"},
                           {feller(1.0, 2.0), "quadratic c=2"},
                           {symmetric_two_type(), "symmetric 2-type"},
                           {random_three_type(5), "random 3-type"},
                           {atom_model(), "pure atom"},
                           {log_tail_model(1.5), "log tail theta=1.5"},
                           {log_tail_model(2.5), "log tail theta=2.5"}};
    Rng rng(0xf10f, 1);
    double worst = 0.0;
    for (const auto& k : specs) {
        double local = 0.0;
        for (int i = 0; i < 2; ++i) {
            Vector f(k.spec.n());
            for (int x = 0; x < k.spec.n(); ++x) f[x] = 0.3 + rng.uniform();
            const double t = 0.3 + rng.uniform(), s = 0.3 + rng.uniform();
            const Vector direct = solve_cumulant(k.spec, f, t + s, tol).v.back();
            const Vector inner = solve_cumulant(k.spec, f, s, tol).v.back();
            const Vector nested = flow_cumulant(k.spec, inner, t, tol);
            local = std::max(local, (direct - nested).lpNorm<Eigen::Infinity>());
        }
        worst = std::max(worst, local);
        add(cr, std::string("flow defect ") + k.name, local, 0.0, 10.0 * tol, local <= 10.0 * tol);
    }
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    return cr;
}

CriterionResult c06_simulator_fidelity(double mc_scale) {
    CriterionResult cr{6, "simulator fidelity against the deterministic laws", false, {}, 0.0};
    const auto t0 = clock_type::now();
    const ModelSpec s = feller();
    const auto trip = eigen_triplet(mean_generator(s));
    const Vector one = Vector::Ones(1);
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_paths = scaled(100000, mc_scale);
    cfg.seed = 8601;
    cfg.record_times = {1.0};
    const auto ens = simulate_ensemble(s, one, cfg);

    const auto curve = extinction_curve(s, trip, 1.0, 1e-10);
    const double surv_target = 1.0 - std::exp(-curve.v_at(1.0)[0]);
    const auto surv = survival_check(ens, 1.0, surv_target);
    // documented O(dt) boundary bias of the full-truncation Euler scheme
    const double band = 3.0 * surv.std_error + 5.0 * cfg.dt;
    add_abs(cr, "survival at t=1", surv.estimate, surv.target, band);

    const auto mom = moment_check(ens, s, one, one, 1.0);
    add_abs(cr, "mean mass at t=1", mom.estimate, mom.target, 3.0 * mom.std_error);

    const auto mart = martingale_check(ens, trip, one);
    add_abs(cr, "martingale mean at t=1", mart[0].estimate, 1.0, 3.0 * mart[0].std_error);
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    add(cr, "runtime seconds < 120", cr.seconds, 120.0, 120.0, cr.seconds < 120.0);
    return cr;
}

CriterionResult c07_yaglom_qsd(double mc_scale) {
    CriterionResult cr{7, "Yaglom law, quasi-stationary restart and mass identity", false, {}, 0.0};
    const auto t0 = clock_type::now();
    const ModelSpec s = feller();
    const auto trip = eigen_triplet(mean_generator(s));
    const Vector one = Vector::Ones(1);
    SimConfig cfg;
    cfg.dt = 2e-3;
    cfg.n_paths = scaled(400000, mc_scale);
    cfg.seed = 8701;
    const auto yag = yaglom_estimate(s, trip, one, 8.0, cfg, {one});

    const double lap = yag.law.laplace(one);
    const double lap_se = yag.law.laplace_std_error(one);
    add_abs(cr, "Yaglom Laplace at theta=1", lap, 0.5, 3.0 * lap_se + 0.02);

    // restart survival over r=1: resampling noise from the finite atom set
    // enters on top of the restart's binomial error
    const auto curve = extinction_curve(s, trip, 1.0, 1e-10);
    const Vector v1 = curve.v_at(1.0);
    double atom_mean = 0.0, atom_var = 0.0;
    const double n_atoms = static_cast<double>(yag.law.samples.size());
    for (const auto& eta : yag.law.samples) atom_mean += 1.0 - std::exp(-eta.dot(v1));
    atom_mean /= n_atoms;
    for (const auto& eta : yag.law.samples) {
        const double d = 1.0 - std::exp(-eta.dot(v1)) - atom_mean;
        atom_var += d * d;
    }
    atom_var /= n_atoms;
    SimConfig rcfg;
    rcfg.dt = 2e-3;
    rcfg.n_paths = scaled(20000, mc_scale);
    rcfg.seed = 8702;
    const auto rows = qsd_check(s, trip, yag.law, {1.0}, rcfg, {one});
    const double se_total = std::hypot(rows[0].survival.std_error, std::sqrt(atom_var / n_atoms));
    add_abs(cr, "restart survival at r=1", rows[0].survival.estimate, std::exp(-1.0),
            3.0 * se_total + 0.02);

    const auto kd = kappa_deterministic(s, trip, 20.0);
    const double mean_phi = yag.law.mean_of(trip.phi);
    const double mean_se = yag.law.mean_of_std_error(trip.phi);
    add_abs(cr, "mean phi-mass times kappa", mean_phi * kd.kappa, 1.0,
            3.0 * mean_se * kd.kappa + 0.05);
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    return cr;
}

CriterionResult c08_htransform(double mc_scale) {
    CriterionResult cr{8, "eigen-mass reweighting vs conditioning at growing horizons", false, {}, 0.0};
    const auto t0 = clock_type::now();
    const ModelSpec s = feller();
    const auto trip = eigen_triplet(mean_generator(s));
    const Vector one = Vector::Ones(1);
    const double t = 4.0;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_paths = scaled(100000, mc_scale);
    cfg.seed = 8801;
    cfg.record_times = {t};
    const auto ens = simulate_ensemble(s, one, cfg);
    const double denom = std::exp(trip.lambda * t);  // mu(phi) = 1

    EmpiricalLaw hlaw;
    double sum_w = 0.0, sum_w2 = 0.0;
    for (const auto& path : ens.states) {
        const double w = path[0].dot(trip.phi) / denom;
        hlaw.samples.push_back(path[0]);
        hlaw.weights.push_back(w);
        sum_w += w;
        sum_w2 += w * w;
    }
    const double np = static_cast<double>(ens.n_paths());
    const double wmean = sum_w / np;
    const double wse = std::sqrt(std::max(0.0, sum_w2 / np - wmean * wmean) / np);
    add_abs(cr, "h-transform weight mean", wmean, 1.0, 3.0 * wse);
    hlaw.normalize();
    const double lh = hlaw.laplace(one), lh_se = hlaw.laplace_std_error(one);

    // conditioning on survival at t + r through the exact Markov-property
    // weight 1 - e^{-X_t(v_r)}; direct counting is hopeless at t + r = 12
    const auto curve = extinction_curve(s, trip, 8.0, 1e-10);
    double prev_d = kInf, prev_se = 0.0, final_d = 0.0, final_se = 0.0;
    bool monotone = true;
    for (double r : {0.0, 2.0, 4.0, 8.0}) {
        EmpiricalLaw claw;
        const Vector vr = r > 0.0 ? curve.v_at(r) : Vector();
        for (const auto& path : ens.states) {
            const Vector& eta = path[0];
            double w;
            if (is_null_measure(eta))
                w = 0.0;
            else
                w = r > 0.0 ? 1.0 - std::exp(-eta.dot(vr)) : 1.0;
            claw.samples.push_back(eta);
            claw.weights.push_back(w);
        }
        claw.normalize();
        const double lr = claw.laplace(one), lr_se = claw.laplace_std_error(one);
        const double d = std::abs(lr - lh);
        if (std::isfinite(prev_d) && d > prev_d + 2.0 * std::hypot(prev_se, lr_se) + 1e-3)
            monotone = false;
        prev_d = d;
        prev_se = lr_se;
        final_d = d;
        final_se = lr_se;
    }
    add(cr, "panel distance monotone-approaching", monotone ? 1.0 : 0.0, 1.0, 0.0, monotone);
    add_abs(cr, "panel distance at r=8", final_d, 0.0, 3.0 * std::hypot(lh_se, final_se) + 1e-3);
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    return cr;
}

CriterionResult c09_spine_panel(double mc_scale) {
    CriterionResult cr{9, "spine construction vs eigen-mass reweighting", false, {}, 0.0};
    const auto t0 = clock_type::now();
    struct Case {
        ModelSpec spec;
        long n_real;
        double dt;
        const char* name;
    };
    const Case cases[] = {{feller(), 2000, 5e-4, "quadratic (continuous immigration)"},
                          {atom_model(1.0), 3000, 1e-3, "pure atom (discrete immigration)"}};
    for (const auto& k : cases) {
        const auto trip = eigen_triplet(mean_generator(k.spec));
        const auto gen = spine_generator(k.spec, trip);
        SimConfig sim;
        sim.dt = k.dt;
        sim.n_paths = scaled(40000, mc_scale);
        sim.seed = 8901;
        const Vector one = Vector::Ones(1);
        const auto cmp = spine_vs_htransform(k.spec, trip, gen, one, 3.0,
                                             {one, 0.5 * one}, scaled(k.n_real, mc_scale), 1e-2,
                                             1e-2, sim);
        for (const auto& rep : cmp.laplace_panel) {
            std::ostringstream name;
            name << k.name << " " << rep.name;
            add(cr, name.str(), rep.estimate, rep.target, 3.0 * rep.std_error, rep.passed);
        }
    }
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    return cr;
}

CriterionResult c10_kappa_spine(double mc_scale) {
    CriterionResult cr{10, "normalized survival limit via the spine inverse mass", false, {}, 0.0};
    const auto t0 = clock_type::now();
    const ModelSpec s = feller();
    const auto trip = eigen_triplet(mean_generator(s));
    const auto gen = spine_generator(s, trip);
    const auto kd = kappa_deterministic(s, trip, 20.0);
    SimConfig sim;
    sim.dt = 5e-4;
    sim.n_paths = 1;
    sim.seed = 9001;
    const auto est = kappa_spine(s, trip, gen, 12.0, scaled(9000, mc_scale), 1e-2, 1e-2, sim);
    add_abs(cr, "kappa spine vs deterministic", est.kappa, kd.kappa, 0.05 * kd.kappa);
    bool mono = true;
    for (std::size_t i = 1; i < est.estimate.size(); ++i)
        if (est.estimate[i] > est.estimate[i - 1]) mono = false;
    add(cr, "monotone in the window length", mono ? 1.0 : 0.0, 1.0, 0.0, mono);
    add(cr, "no zero-mass windows", static_cast<double>(est.zero_mass_samples), 0.0, 0.0,
        est.zero_mass_samples == 0);
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    return cr;
}

CriterionResult c11_double_limit(double mc_scale) {
    CriterionResult cr{11, "double-limit dichotomy panel", false, {}, 0.0};
    const auto t0 = clock_type::now();
    const Vector one = Vector::Ones(1);

    {  // finite L log L: quadratic mechanism stabilizes at the size-biased corner
        const ModelSpec s = feller();
        const auto trip = eigen_triplet(mean_generator(s));
        SimConfig cfg;
        cfg.dt = 1e-3;
        cfg.n_paths = scaled(300000, mc_scale);
        cfg.seed = 9101;
        const std::vector<double> t_grid = {3.0, 5.0, 7.0}, r_grid = {1.0, 4.0, 8.0};
        const auto panel = double_limit_panel(s, trip, one, t_grid, r_grid, one, cfg);

        // deterministic finite-(t,r) corner via the exact conditional identity
        const auto curve = extinction_curve(s, trip, 15.0, 1e-10);
        const double tl = t_grid.back(), rl = r_grid.back();
        const Vector vr = curve.v_at(rl);
        const double det_corner =
            (laplace_functional(s, one, one, tl) - laplace_functional(s, one, one + vr, tl)) /
            (1.0 - std::exp(-curve.v_at(tl + rl)[0]));
        add_abs(cr, "deterministic corner vs 1/4", det_corner, 0.25, 1e-3);

        const std::size_t jr = r_grid.size() - 1;
        const double mc_corner = panel.laplace.back()[jr];
        const double se_corner = panel.laplace_se.back()[jr];
        add_abs(cr, "MC corner vs deterministic corner", mc_corner, det_corner, 3.0 * se_corner);

        double spread = 0.0, max_se = 0.0;
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            for (std::size_t j = i + 1; j < t_grid.size(); ++j)
                spread = std::max(spread, std::abs(panel.laplace[i][jr] - panel.laplace[j][jr]));
            max_se = std::max(max_se, panel.laplace_se[i][jr]);
        }
        // 0.0075 is the deterministic finite-t spread of the same column
        add_abs(cr, "corner column spread", spread, 0.0, 3.0 * std::sqrt(2.0) * max_se + 0.0075);
    }

    {  // infinite L log L: normalized survival decays, conditioned mass grows
        const ModelSpec s = log_tail_model(1.5);
        const auto trip = eigen_triplet(mean_generator(s));
        SimConfig cfg;
        cfg.dt = 1e-3;
        cfg.n_paths = scaled(600000, mc_scale);
        cfg.seed = 9102;
        const std::vector<double> t_grid = {0.5, 3.0, 6.0};
        const auto panel = double_limit_panel(s, trip, one, t_grid, {1.0}, one, cfg);
        const double decay = panel.norm_survival.front() / panel.norm_survival.back();
        add(cr, "normalized survival decay factor (>= target)", decay, 10.0, 0.0, decay >= 10.0);
        add(cr, "conditioned phi-mass far above the early level",
            panel.mean_phi_q_t0.back() / panel.mean_phi_q_t0.front(), 1.5, 0.0,
            panel.mean_phi_q_t0.back() >= 1.5 * panel.mean_phi_q_t0.front());

        // the raw conditioned mean is carried by rare huge excursions (the
        // jump tail has infinite second moment), so its sample version is not
        // a usable monotonicity statistic at feasible path counts; certify
        // the drift of the conditioned law with a capped mass instead, which
        // must also increase when the law escapes to infinity
        SimConfig gcfg;
        gcfg.dt = 1e-3;
        gcfg.n_paths = scaled(1000000, mc_scale);
        gcfg.seed = 9104;
        gcfg.record_times = t_grid;
        const auto ens = simulate_ensemble(s, one, gcfg);
        const double cap = 10.0;
        std::vector<double> capped, capped_se;
        for (double t : t_grid) {
            const std::size_t ti = ens.time_index(t);
            double sum = 0.0, sum2 = 0.0;
            long n = 0;
            for (const auto& p : ens.states) {
                const double m = p[ti].dot(trip.phi);
                if (m <= 0.0) continue;
                const double c = std::min(m, cap);
                sum += c;
                sum2 += c * c;
                ++n;
            }
            const double mean = sum / static_cast<double>(n);
            capped.push_back(mean);
            capped_se.push_back(
                std::sqrt(std::max(0.0, sum2 / static_cast<double>(n) - mean * mean) /
                          static_cast<double>(n)));
        }
        const double early = capped[1] - capped[0];
        add(cr, "capped conditioned mass growth (early)", early, 0.0, 0.0,
            early > 3.0 * std::hypot(capped_se[0], capped_se[1]));
        const double late = capped[2] - capped[1];
        add(cr, "capped conditioned mass growth (late)", late, 0.0, 0.0, late > 0.0);
    }
    cr.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    return cr;
}

}  // namespace

template <typename F>
void guarded(std::vector<CriterionResult>& out, int id, const char* title, F&& body) {
    try {
        out.push_back(body());
    } catch (const std::exception& e) {
        CriterionResult cr{id, title, false, {}, 0.0};
        add(cr, std::string("exception: ") + e.what(), kInf, 0.0, 0.0, false);
        out.push_back(std::move(cr));
    }
}

std::vector<CriterionResult> run_acceptance(AcceptanceSuite suite, double mc_scale) {
    std::vector<CriterionResult> out;
    const bool det = suite != AcceptanceSuite::MonteCarlo;
    const bool mc = suite != AcceptanceSuite::Deterministic;
    if (det) guarded(out, 1, "cumulant oracles", c01_cumulant_oracle);
    if (det) guarded(out, 2, "normalized survival limit", c02_normalized_survival_limit);
    if (det) guarded(out, 3, "survival-rate ratio", c03_rate_ratio);
    if (det) guarded(out, 4, "spectral residuals", c04_spectral_residuals);
    if (det) guarded(out, 5, "L log L dichotomy", c05_llogl_dichotomy);
    if (mc) guarded(out, 6, "simulator fidelity", [&] { return c06_simulator_fidelity(mc_scale); });
    if (mc) guarded(out, 7, "Yaglom / quasi-stationarity", [&] { return c07_yaglom_qsd(mc_scale); });
    if (mc) guarded(out, 8, "reweighting vs conditioning", [&] { return c08_htransform(mc_scale); });
    if (mc) guarded(out, 9, "spine vs reweighting", [&] { return c09_spine_panel(mc_scale); });
    if (mc) guarded(out, 10, "spine inverse-mass limit", [&] { return c10_kappa_spine(mc_scale); });
    if (mc) guarded(out, 11, "double-limit panel", [&] { return c11_double_limit(mc_scale); });
    if (det) guarded(out, 12, "cumulant flow property", c12_flow_property);
    return out;
}

}  // namespace lab
