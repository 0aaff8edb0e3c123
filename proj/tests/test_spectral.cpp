#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "lab/rng.hpp"
#include "lab/spectral.hpp"
#include "support.hpp"

using namespace lab;
using namespace lab::testing;

TEST_CASE("mean generator assembles motion plus drift") {
    CHECK(mean_generator(feller())(0, 0) == doctest::Approx(-1.0));
    const Matrix L = mean_generator(symmetric_two_type(1.0, 0.5));
    CHECK(L(0, 0) == doctest::Approx(-1.5));
    CHECK(L(0, 1) == doctest::Approx(1.0));
    CHECK(L(1, 0) == doctest::Approx(1.0));
    CHECK(L(1, 1) == doctest::Approx(-1.5));
}

TEST_CASE("1x1 triplet") {
    const auto trip = eigen_triplet(mean_generator(feller()));
    CHECK(trip.lambda == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(trip.phi[0] == doctest::Approx(1.0));
    CHECK(trip.nu[0] == doctest::Approx(1.0));
    CHECK(trip.subcritical());
}

TEST_CASE("symmetric 2-type triplet: constant eigenvector, lambda = -0.5") {
    const auto trip = eigen_triplet(mean_generator(symmetric_two_type(1.0, 0.5)));
    CHECK(trip.lambda == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(trip.phi[0] == doctest::Approx(trip.phi[1]).epsilon(1e-12));
    CHECK(trip.nu[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(trip.gap == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("random 3-type: residuals and normalization") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
        const ModelSpec s = random_three_type(seed);
        const Matrix L = mean_generator(s);
        const auto trip = eigen_triplet(L);
        const double phi_res = (L * trip.phi - trip.lambda * trip.phi).lpNorm<Eigen::Infinity>();
        const double nu_res = (trip.nu.transpose() * L - trip.lambda * trip.nu.transpose())
                                  .lpNorm<Eigen::Infinity>();
        CHECK(phi_res <= 1e-10 * trip.phi.lpNorm<Eigen::Infinity>());
        CHECK(nu_res <= 1e-10);
        CHECK(trip.nu.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(trip.nu.dot(trip.phi) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((trip.phi.array() > 0.0).all());
        CHECK((trip.nu.array() > 0.0).all());
    }
}

TEST_CASE("semigroup action preserves the eigen-pair at randomized times") {
    const ModelSpec s = random_three_type(9);
    const Matrix L = mean_generator(s);
    const auto trip = eigen_triplet(L);
    Rng rng(3, 0);
    for (int i = 0; i < 10; ++i) {
        const double t = 20.0 * rng.uniform();
        const Vector lhs = mean_semigroup_apply(L, t, trip.phi);
        const Vector rhs = std::exp(trip.lambda * t) * trip.phi;
        CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-8 * rhs.lpNorm<Eigen::Infinity>());
    }
}

TEST_CASE("reducible motion is rejected") {
    Matrix L(2, 2);
    L << -1.0, 0.0, 1.0, -1.0;  // no path 0 -> 1
    CHECK_FALSE(is_irreducible(L));
    CHECK_THROWS_WITH_AS(eigen_triplet(L), doctest::Contains("Perron-Frobenius"), std::runtime_error);
}

TEST_CASE("remainder profile: exact for one type, e^{-2t} for the symmetric pair") {
    const ModelSpec one = feller();
    auto prof1 = h2_remainder(one, eigen_triplet(mean_generator(one)), {0.5, 1.0, 2.0});
    for (double h : prof1.sup_abs_h) CHECK(h <= 1e-12);

    const ModelSpec two = symmetric_two_type(1.0, 0.5);
    const auto trip = eigen_triplet(mean_generator(two));
    auto prof2 = h2_remainder(two, trip, {0.5, 1.0, 2.0, 3.0});
    // T_t e_1(x) = (e^{lambda t} +- e^{(lambda-2)t})/2, so |H_t| = e^{-2t} exactly
    for (std::size_t i = 0; i < prof2.t.size(); ++i)
        CHECK(prof2.sup_abs_h[i] == doctest::Approx(std::exp(-2.0 * prof2.t[i])).epsilon(1e-8));
}

TEST_CASE("remainder profile decays below 1e-3 by ten gap times") {
    for (std::uint64_t seed : {2ULL, 6ULL}) {
        const ModelSpec s = random_three_type(seed);
        const auto trip = eigen_triplet(mean_generator(s));
        REQUIRE(trip.gap > 0.0);
        auto prof = h2_remainder(s, trip, {1.0 / trip.gap, 10.0 / trip.gap});
        CHECK(prof.sup_abs_h[1] <= 1e-3);
        CHECK(prof.sup_abs_h[1] <= prof.sup_abs_h[0]);
    }
}

TEST_CASE("spine generator: rows sum to zero and nu_tilde is stationary") {
    const ModelSpec one = feller();
    const auto g1 = spine_generator(one, eigen_triplet(mean_generator(one)));
    CHECK(g1.G(0, 0) == doctest::Approx(0.0));
    CHECK(g1.nu_tilde[0] == doctest::Approx(1.0));

    const ModelSpec two = symmetric_two_type(1.0, 0.5);
    const auto g2 = spine_generator(two, eigen_triplet(mean_generator(two)));
    CHECK((g2.G - two.motion).lpNorm<Eigen::Infinity>() <= 1e-10);  // phi constant
    CHECK(g2.nu_tilde[0] == doctest::Approx(0.5));

    const ModelSpec three = random_three_type(4);
    const auto g3 = spine_generator(three, eigen_triplet(mean_generator(three)));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(g3.G.row(i).sum()) <= 1e-12);
    CHECK((g3.nu_tilde.transpose() * g3.G).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(g3.nu_tilde.sum() == doctest::Approx(1.0).epsilon(1e-12));
    // stationary for the semigroup too
    const Vector evolved = (5.0 * g3.G).exp().transpose() * g3.nu_tilde;
    CHECK((evolved - g3.nu_tilde).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("mass-weighted log moment: zero kernels and sub-unit atoms give 0") {
    const ModelSpec plain = feller();
    CHECK(l_log_l_functional(plain, eigen_triplet(mean_generator(plain))) == 0.0);

    ModelSpec atoms = feller();
    atoms.pi = {JumpMeasure::atom_list({{0.5, 2.0}})};  // u phi = 0.5 <= 1
    CHECK(l_log_l_functional(atoms, eigen_triplet(mean_generator(atoms))) == 0.0);
}

TEST_CASE("mass-weighted log moment flips infinite exactly at theta = 2") {
    CHECK(l_log_l_functional(log_tail_model(1.5), eigen_triplet(mean_generator(log_tail_model(1.5)))) ==
          kInf);
    CHECK(l_log_l_functional(log_tail_model(2.0), eigen_triplet(mean_generator(log_tail_model(2.0)))) ==
          kInf);
    const double fin =
        l_log_l_functional(log_tail_model(2.5), eigen_triplet(mean_generator(log_tail_model(2.5))));
    CHECK(std::isfinite(fin));
    CHECK(fin > 0.0);
    // monotone in the tail weight c
    const double fin2 =
        l_log_l_functional(log_tail_model(2.5, 1.0), eigen_triplet(mean_generator(log_tail_model(2.5, 1.0))));
    CHECK(fin2 > fin);
    CHECK(fin2 == doctest::Approx(2.0 * fin).epsilon(1e-9));  // linear in c
}
