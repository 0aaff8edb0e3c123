#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lab/spine.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lab;
using namespace lab::testing;

namespace {

SimConfig descendants_config(std::uint64_t seed, double dt = 2e-3) {
    SimConfig cfg;
    cfg.dt = dt;
    cfg.n_paths = 1;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("one-type spine never moves") {
    const ModelSpec s = feller();
    const auto gen = spine_generator(s, eigen_triplet(mean_generator(s)));
    Rng rng(1, 0);
    const auto path = sample_spine(gen, -3.0, 2.0, rng);
    CHECK(path.seg_type.size() == 1);
    CHECK(path.type_at(-3.0) == 0);
    CHECK(path.type_at(1.5) == 0);
}

TEST_CASE("symmetric two-type spine splits its occupation time evenly") {
    const ModelSpec s = symmetric_two_type(1.0, 0.5);
    const auto gen = spine_generator(s, eigen_triplet(mean_generator(s)));
    Rng rng(2, 0);
    double occupied0 = 0.0, total = 0.0;
    for (int i = 0; i < 200; ++i) {
        const auto path = sample_spine(gen, 0.0, 50.0, rng);
        for (std::size_t k = 0; k < path.seg_start.size(); ++k) {
            const double a = path.seg_start[k];
            const double b = (k + 1 < path.seg_start.size()) ? path.seg_start[k + 1] : path.t_end;
            if (path.seg_type[k] == 0) occupied0 += b - a;
            total += b - a;
        }
    }
    CHECK(occupied0 / total == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("spine marginal at time zero matches the stationary law (chi-square)") {
    const ModelSpec s = random_three_type(6);
    const auto gen = spine_generator(s, eigen_triplet(mean_generator(s)));
    Rng rng(3, 0);
    const int n = 10000;
    std::vector<long> counts(3, 0);
    for (int i = 0; i < n; ++i) {
        const auto path = sample_spine(gen, -8.0, 0.0, rng);
        ++counts[static_cast<size_t>(path.type_at(0.0))];
    }
    double chi2 = 0.0;
    for (int x = 0; x < 3; ++x) {
        const double expect = n * gen.nu_tilde[x];
        chi2 += (counts[static_cast<size_t>(x)] - expect) * (counts[static_cast<size_t>(x)] - expect) /
                expect;
    }
    CHECK(chi2 < 9.21);  // chi-square(2) at the 1% level
}

TEST_CASE("no branching noise means no immigration") {
    ModelSpec s = symmetric_two_type(1.0, 0.5);
    s.sigma.setZero();
    const auto gen = spine_generator(s, eigen_triplet(mean_generator(s)));
    Rng rng(4, 0);
    const auto path = sample_spine(gen, 0.0, 5.0, rng);
    CHECK(sample_immigration(s, path, 1e-2, 1e-2, rng).empty());
}

TEST_CASE("atom kernel immigrates at the mass-weighted rate") {
    const ModelSpec s = atom_model(0.7);  // jumps of size 1 at weight 0.7
    const auto gen = spine_generator(s, eigen_triplet(mean_generator(s)));
    Rng rng(5, 0);
    const double window = 2000.0;
    const auto path = sample_spine(gen, 0.0, window, rng);
    const auto events = sample_immigration(s, path, 1e-2, 1e-2, rng);
    const double rate = static_cast<double>(events.size()) / window;
    const double se = std::sqrt(0.7 / window);
    CHECK(std::abs(rate - 0.7) <= 3.0 * se);
    for (const auto& ev : events) {
        CHECK(ev.y == doctest::Approx(1.0));
        CHECK(ev.origin == ImmigrationEvent::Origin::Discrete);
    }
}

TEST_CASE("continuous immigration count is Poisson with rate 2 sigma^2 / eps") {
    const ModelSpec s = feller();  // sigma = 1
    const auto gen = spine_generator(s, eigen_triplet(mean_generator(s)));
    Rng rng(6, 0);
    const auto path = sample_spine(gen, 0.0, 5.0, rng);
    const double mean = 2.0 * 5.0 / 0.01;  // 1000
    double count = 0.0;
    const int reps = 50;
    for (int i = 0; i < reps; ++i)
        count += static_cast<double>(sample_immigration(s, path, 1e-2, 0.01, rng).size());
    const double se = std::sqrt(mean / reps);
    CHECK(std::abs(count / reps - mean) <= 3.0 * se);
}

TEST_CASE("size-biased masses have the analytic mean") {
    // mean of y under y pi(dy)/int y pi = int y^2 pi / int y pi above delta_I
    ModelSpec s = feller();
    s.pi = {JumpMeasure::truncated_power_law(1.2, 0.0, 2.0, 0.7)};
    const auto gen = spine_generator(s, eigen_triplet(mean_generator(s)));
    Rng rng(7, 0);
    const auto path = sample_spine(gen, 0.0, 4000.0, rng);
    const double dI = 1e-2;
    double sum = 0.0;
    long n = 0;
    for (const auto& ev : sample_immigration(s, path, dI, 1e9, rng))
        if (ev.origin == ImmigrationEvent::Origin::Discrete) {
            sum += ev.y;
            ++n;
        }
    REQUIRE(n > 1000);
    const auto& pm = s.pi[0];
    const double target = pm.second_moment_above(dI) / pm.first_moment_above(dI);
    const double sd = std::sqrt(target);  // crude scale for the SE band
    CHECK(std::abs(sum / static_cast<double>(n) - target) <= 4.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("empty window contributes nothing; out-of-range windows are errors") {
    const ModelSpec s = feller();
    const auto gen = spine_generator(s, eigen_triplet(mean_generator(s)));
    const auto real = realize_spine(s, gen, -2.0, 0.0, 1e-2, 1e-2, descendants_config(8), 1);
    CHECK(real.evaluate(0.0, 0.0, Vector::Ones(1)) == 0.0);
    CHECK_THROWS_AS(real.evaluate(-1.0, 0.5, Vector::Ones(1)), std::invalid_argument);
    CHECK_THROWS_AS(real.evaluate(-3.0, 0.0, Vector::Ones(1)), std::invalid_argument);
}

TEST_CASE("mean immigrated mass matches the intensity integral") {
    // E[Z_t^{(a,b]}(phi)] = int_a^b e^{lambda (t-s)} ds * (2 sigma^2 phi + phi int y^2 pi)
    ModelSpec s = feller();
    s.pi = {JumpMeasure::atom_list({{1.0, 0.4}})};
    const auto trip = eigen_triplet(mean_generator(s));
    const auto gen = spine_generator(s, trip);
    const double t = 1.0, a = 0.0, b = 1.0, eps = 0.02, dI = 1e-2;
    const double lam = trip.lambda;
    const double time_int = (std::exp(lam * (t - b)) - std::exp(lam * (t - a))) / (-lam);
    const double intensity = 2.0 * s.sigma[0] * s.sigma[0] + s.pi[0].second_moment_above(dI);
    const double target = time_int * intensity;

    double sum = 0.0, sum2 = 0.0;
    const int n = 1500;
    for (int i = 0; i < n; ++i) {
        const auto real = realize_spine(s, gen, 0.0, t, dI, eps, descendants_config(9, 1e-3),
                                        static_cast<std::uint64_t>(i) + 1);
        const double z = real.evaluate(a, b, trip.phi);
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n);
    // allow a first-order dt/eps bias on top of the MC band
    CHECK(std::abs(mean - target) <= 3.0 * se + 0.03 * target);
}

TEST_CASE("window shifts do not change the immigrated-mass law") {
    const ModelSpec s = feller();
    const auto trip = eigen_triplet(mean_generator(s));
    const auto gen = spine_generator(s, trip);
    auto mean_z = [&](double a, double b, double t, std::uint64_t seed) {
        double sum = 0.0;
        const int n = 800;
        for (int i = 0; i < n; ++i) {
            const auto real = realize_spine(s, gen, a, t, 1e-2, 2e-2, descendants_config(seed, 2e-3),
                                            static_cast<std::uint64_t>(i) + 1);
            sum += real.evaluate(a, b, trip.phi);
        }
        return sum / n;
    };
    const double m1 = mean_z(-1.5, -0.5, 0.0, 10);
    const double m2 = mean_z(-0.5, 0.5, 1.0, 11);
    CHECK(m1 == doctest::Approx(m2).epsilon(0.15));
}

TEST_CASE("truncated inverse-mass estimates decrease toward the deterministic limit") {
    const ModelSpec s = feller();
    const auto trip = eigen_triplet(mean_generator(s));
    const auto gen = spine_generator(s, trip);
    const auto est = kappa_spine(s, trip, gen, 6.0, 250, 1e-2, 1e-2, descendants_config(12, 2e-3));
    REQUIRE(est.estimate.size() == 3);
    CHECK(est.zero_mass_samples == 0);
    CHECK(est.estimate[0] >= est.estimate[1]);
    CHECK(est.estimate[1] >= est.estimate[2]);
    CHECK(est.kappa > 0.5);
    CHECK(est.kappa < 2.0);
}

TEST_CASE("spine construction agrees with the eigen-mass reweighting") {
    const ModelSpec s = feller();
    const auto trip = eigen_triplet(mean_generator(s));
    const auto gen = spine_generator(s, trip);
    SimConfig sim = descendants_config(13, 5e-4);
    sim.n_paths = 20000;  // used by the reweighting side
    const auto cmp = spine_vs_htransform(s, trip, gen, Vector::Ones(1), 2.0,
                                         {Vector::Ones(1), 0.5 * Vector::Ones(1)}, 1200, 1e-2, 1e-2, sim);
    for (const auto& rep : cmp.laplace_panel) {
        INFO(rep.name, ": ", rep.estimate, " vs ", rep.target, " se ", rep.std_error);
        CHECK(rep.passed);
    }
    CHECK(cmp.factorization.passed);
}
