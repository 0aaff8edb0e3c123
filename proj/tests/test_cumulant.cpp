#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "lab/cumulant.hpp"
#include "lab/quadrature.hpp"
#include "lab/rng.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lab;
using namespace lab::testing;

namespace {
Vector ones(int n) { return Vector::Ones(n); }
}  // namespace

TEST_CASE("zero initial data stays zero") {
    const auto sol = solve_cumulant(random_three_type(1), Vector::Zero(3), 2.0, 1e-10);
    for (const auto& v : sol.v) CHECK(v.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("negative initial data is rejected") {
    CHECK_THROWS_AS(solve_cumulant(feller(), Vector::Constant(1, -0.1), 1.0, 1e-10),
                    std::invalid_argument);
}

TEST_CASE("quadratic mechanism matches the closed-form solution") {
    for (double b : {1.0, 0.7}) {
        for (double c : {1.0, 2.0}) {
            const auto sol = solve_cumulant(feller(b, c), ones(1), 1.0, 1e-12);
            const double got = sol.v.back()[0];
            const double want = oracles::riccati(1.0, b, c, 1.0);
            CHECK(got == doctest::Approx(want).epsilon(1e-9));
        }
    }
    // guard the frozen constant against the independent brute-force solver
    CHECK(oracles::riccati(1.0, 1.0, 1.0, 1.0) ==
          doctest::Approx(oracles::riccati_brute(1.0, 1.0, 1.0, 1.0)).epsilon(1e-10));
    CHECK(oracles::riccati(1.0, 1.0, 1.0, 1.0) == doctest::Approx(0.225399673561).epsilon(1e-10));
}

TEST_CASE("small-mass linearization approaches the mean flow") {
    const ModelSpec s = random_three_type(3);
    const Matrix L = mean_generator(s);
    const Vector f = ones(3);
    const Vector lin = mean_semigroup_apply(L, 1.5, f);
    for (double theta : {1e-4, 1e-5}) {
        const Vector v = solve_cumulant(s, theta * f, 1.5, 1e-12).v.back() / theta;
        CHECK((v - lin).lpNorm<Eigen::Infinity>() <= 10.0 * theta * lin.lpNorm<Eigen::Infinity>());
    }
}

TEST_CASE("monotone in the initial data and dominated by the mean flow") {
    const ModelSpec s = random_three_type(5);
    Rng rng(19, 0);
    for (int i = 0; i < 5; ++i) {
        Vector f(3), g(3);
        for (int k = 0; k < 3; ++k) {
            f[k] = rng.uniform();
            g[k] = f[k] + rng.uniform();
        }
        const double t = 0.2 + 2.0 * rng.uniform();
        const Vector vf = solve_cumulant(s, f, t, 1e-10).v.back();
        const Vector vg = solve_cumulant(s, g, t, 1e-10).v.back();
        const Vector mean = mean_semigroup_apply(mean_generator(s), t, f);
        for (int k = 0; k < 3; ++k) {
            CHECK(vf[k] <= vg[k] + 1e-9);
            CHECK(vf[k] <= mean[k] + 1e-9);
            CHECK(vf[k] >= 0.0);
        }
    }
}

TEST_CASE("flow property") {
    const ModelSpec s = random_three_type(7);
    Rng rng(23, 0);
    for (int i = 0; i < 5; ++i) {
        Vector f(3);
        for (int k = 0; k < 3; ++k) f[k] = 0.5 + rng.uniform();
        const double t = 0.3 + rng.uniform(), u = 0.3 + rng.uniform();
        const Vector direct = solve_cumulant(s, f, t + u, 1e-11).v.back();
        const Vector inner = solve_cumulant(s, f, u, 1e-11).v.back();
        const Vector nested = flow_cumulant(s, inner, t, 1e-11);
        CHECK((direct - nested).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
}

TEST_CASE("integral form of the evolution equation holds at a spot check") {
    // V_t f(x) + int_0^t P_s psi(., V_{t-s} f)(x) ds = P_t f(x) with P_s the
    // motion semigroup alone and psi the full mechanism
    const ModelSpec s = symmetric_two_type(1.0, 0.5);
    Vector f(2);
    f << 1.0, 0.5;
    const double t = 1.0;
    const auto sol = solve_cumulant(s, f, t, 1e-12);
    auto v_at = [&](double time) {
        Vector best = sol.v.front();
        double err = 1e18;
        for (std::size_t i = 0; i < sol.t.size(); ++i)
            if (std::abs(sol.t[i] - time) < err) {
                err = std::abs(sol.t[i] - time);
                best = sol.v[i];
            }
        return best;
    };
    for (int x = 0; x < 2; ++x) {
        const double lhs_int = integrate(
            [&](double u) {
                const Vector vu = (u < 1e-12) ? f : solve_cumulant(s, f, u, 1e-10).v.back();
                Vector psi_v(2);
                for (int y = 0; y < 2; ++y) psi_v[y] = s.psi(y, vu[y]);
                const Vector moved = (((t - u) * s.motion).exp() * psi_v);
                return moved[x];
            },
            0.0, t, 1e-8, 20);
        const Vector pt_f = ((t * s.motion).exp() * f);
        const double lhs = v_at(t)[x] + lhs_int;
        CHECK(lhs == doctest::Approx(pt_f[x]).epsilon(1e-6));
    }
}

TEST_CASE("extinction curve reproduces the closed form and is monotone") {
    const ModelSpec s = feller();
    const auto trip = eigen_triplet(mean_generator(s));
    const auto curve = extinction_curve(s, trip, 4.0, 1e-10);
    const double v1 = curve.v_at(1.0)[0];
    CHECK(v1 == doctest::Approx(oracles::extinction_v(1.0, 1.0, 1.0)).epsilon(1e-6));
    CHECK(1.0 - std::exp(-v1) == doctest::Approx(0.441207295237).epsilon(1e-6));
    CHECK(curve.v_at(2.0)[0] < curve.v_at(1.0)[0]);
    CHECK(curve.v_at(3.5)[0] < curve.v_at(2.0)[0]);
}

TEST_CASE("persistent model refuses an extinction curve") {
    ModelSpec lin = feller();
    lin.sigma[0] = 0.0;
    const auto trip = eigen_triplet(mean_generator(lin));
    CHECK_THROWS(extinction_curve(lin, trip, 2.0, 1e-8));
}

TEST_CASE("laplace functional basics") {
    const ModelSpec s = feller();
    CHECK(laplace_functional(s, Vector::Zero(1), ones(1), 1.0) == doctest::Approx(1.0));
    CHECK(laplace_functional(s, ones(1), Vector::Zero(1), 1.0) == doctest::Approx(1.0));
    CHECK(laplace_functional(s, ones(1), ones(1), 1.0) ==
          doctest::Approx(std::exp(-0.225399673561)).epsilon(1e-7));
}

TEST_CASE("normalized survival limit: quadratic mechanisms give b/c") {
    const auto trip1 = eigen_triplet(mean_generator(feller(1.0, 1.0)));
    const auto k1 = kappa_deterministic(feller(1.0, 1.0), trip1, 20.0);
    CHECK_FALSE(k1.decayed_to_zero);
    CHECK(k1.kappa == doctest::Approx(1.0).epsilon(1e-4));

    const auto trip2 = eigen_triplet(mean_generator(feller(1.0, 2.0)));
    const auto k2 = kappa_deterministic(feller(1.0, 2.0), trip2, 20.0);
    CHECK(k2.kappa == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("normalized survival decays to zero in the heavy-log-tail regime") {
    const ModelSpec s = log_tail_model(1.5);
    const auto trip = eigen_triplet(mean_generator(s));
    const auto k = kappa_deterministic(s, trip, 25.0);
    CHECK(k.decayed_to_zero);
    CHECK(k.kappa == 0.0);
}

TEST_CASE("survival-rate ratio table") {
    const ModelSpec s = feller();
    const auto trip = eigen_triplet(mean_generator(s));
    const auto tab = rate_ratio(s, trip, {10.0}, {0.0, 5.0, 20.0});
    CHECK(tab.ratio[0][0] == doctest::Approx(1.0).epsilon(1e-9));
    // nu(v_t) = e^{-t}/(1-e^{-t}): ratio(10, 5) = (1-e^{-15})/(1-e^{-10})
    const double want = (1.0 - std::exp(-15.0)) / (1.0 - std::exp(-10.0));
    CHECK(tab.ratio[0][1] == doctest::Approx(want).epsilon(1e-6));
    CHECK(tab.sup_over_r[0] <= 1.0 + 5e-5);
    CHECK(tab.sup_over_r[0] >= 1.0 - 1e-9);
}

TEST_CASE("extinction profile flattens onto the eigenfunction shape") {
    const ModelSpec s = random_three_type(2);
    const auto trip = eigen_triplet(mean_generator(s));
    const auto curve = extinction_curve(s, trip, 12.0, 1e-10);
    auto shape_err = [&](double t) {
        const Vector v = curve.v_at(t);
        const double nv = curve.nu_v_at(t);
        double m = 0.0;
        for (int x = 0; x < 3; ++x) m = std::max(m, std::abs(v[x] / (trip.phi[x] * nv) - 1.0));
        return m;
    };
    CHECK(shape_err(10.0) < shape_err(4.0));
    CHECK(shape_err(10.0) < 1e-2);
}

TEST_CASE("survival ratio of two starting measures approaches the mass ratio") {
    // (1 - e^{-eta(v_{t-s})}) / (1 - e^{-mu(v_t)}) -> e^{-lambda s} eta(phi)/mu(phi)
    const ModelSpec s = feller();
    const auto trip = eigen_triplet(mean_generator(s));
    const auto curve = extinction_curve(s, trip, 16.0, 1e-10);
    Rng rng(31, 0);
    for (int i = 0; i < 4; ++i) {
        const double eta = 0.5 + rng.uniform(), mu = 0.5 + rng.uniform();
        const double sshift = 0.5 + rng.uniform();
        const double t = 14.0;
        const double lhs = (1.0 - std::exp(-eta * curve.v_at(t - sshift)[0])) /
                           (1.0 - std::exp(-mu * curve.v_at(t)[0]));
        const double rhs = std::exp(-trip.lambda * sshift) * eta / mu;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-3));
    }
}
