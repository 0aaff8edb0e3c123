#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lab/model.hpp"
#include "lab/quadrature.hpp"
#include "lab/rng.hpp"
#include "support.hpp"

using namespace lab;
using namespace lab::testing;

TEST_CASE("validate_model accepts the basic well-formed specs") {
    CHECK(validate_model(feller()).all_passed());

    ModelSpec two;
    two.motion = Matrix(2, 2);
    two.motion << -1.0, 1.0, 0.5, -0.5;
    two.beta = Vector::Constant(2, -1.0);
    two.sigma = Vector::Constant(2, 1.0);
    two.pi = {JumpMeasure::zero(), JumpMeasure::zero()};
    CHECK(validate_model(two).all_passed());
}

TEST_CASE("validate_model flags a non-conservative motion") {
    ModelSpec s = feller();
    s.motion(0, 0) = 0.1;
    const auto report = validate_model(s);
    CHECK_FALSE(report.all_passed());
    bool found = false;
    for (const auto& c : report.checks)
        if (c.name.find("conservative") != std::string::npos) {
            found = true;
            CHECK_FALSE(c.passed);
        } else {
            CHECK(c.passed);  // exactly one failure
        }
    CHECK(found);
}

TEST_CASE("structurally malformed specs throw instead of reporting") {
    ModelSpec s = feller();
    s.sigma = Vector::Constant(2, 1.0);
    CHECK_THROWS_AS(validate_model(s), std::invalid_argument);
}

TEST_CASE("metamorphic: perturbing one field past its bound fails that check only") {
    ModelSpec s = symmetric_two_type();
    s.motion(0, 1) = -0.5;
    s.motion(0, 0) = 0.5;  // keep row sum 0 so only the sign check trips
    const auto report = validate_model(s);
    for (const auto& c : report.checks)
        CHECK(c.passed == (c.name.find("off-diagonals") == std::string::npos));
}

TEST_CASE("atom moments: single atom at u=2, weight 0.5") {
    const auto m = JumpMeasure::atom_list({{2.0, 0.5}});
    CHECK(m.u_and_u2() == doctest::Approx(1.0).epsilon(1e-14));  // 0.5 * min(2, 4)
    CHECK(m.mass_above(1.0) == doctest::Approx(0.5));
    CHECK(m.first_moment_above(1.0) == doctest::Approx(1.0));
    CHECK(m.mass_above(3.0) == 0.0);
}

TEST_CASE("power law first moment matches the closed-form antiderivative") {
    // density u^{-1.5} on (0,1): int_0^1 u * u^{-1.5} du = 2
    const auto m = JumpMeasure::truncated_power_law(0.5, 0.0, 1.0, 1.0);
    CHECK(m.first_moment_above(0.0) == doctest::Approx(2.0).epsilon(1e-12));
    const double quad = integrate([](double u) { return u * std::pow(u, -1.5); }, 1e-12, 1.0, 1e-12);
    CHECK(m.first_moment_above(0.0) == doctest::Approx(quad).epsilon(1e-5));
}

TEST_CASE("log-perturbed tail first moment: substitution oracle") {
    // int_e^inf u^{-1} (log u)^{-2} du = [ -1/log u ]_e^inf = 1
    const auto m = JumpMeasure::log_perturbed_tail(2.0, std::exp(1.0), 1.0);
    CHECK(m.first_moment_above(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
    const double quad =
        integrate([](double u) { return 1.0 / (u * std::log(u) * std::log(u)); }, std::exp(1.0), 1e9, 1e-12) +
        1.0 / std::log(1e9);  // analytic remainder of the truncated tail
    CHECK(m.first_moment_above(std::exp(1.0)) == doctest::Approx(quad).epsilon(1e-4));
}

TEST_CASE("log-perturbed tail: first moment finite iff theta > 1, u log u tail iff theta > 2") {
    const double e = std::exp(1.0);
    CHECK(std::isfinite(JumpMeasure::log_perturbed_tail(1.5, e, 1.0).first_moment_above(e)));
    CHECK(std::isfinite(JumpMeasure::log_perturbed_tail(2.5, e, 1.0).l_log_l_integral(1.0)));
    CHECK(JumpMeasure::log_perturbed_tail(2.0, e, 1.0).l_log_l_integral(1.0) == kInf);
    CHECK(JumpMeasure::log_perturbed_tail(1.5, e, 1.0).l_log_l_integral(1.0) == kInf);
}

TEST_CASE("u ^ u^2 is finite across randomized legal parameters") {
    Rng rng(7, 1);
    for (int i = 0; i < 200; ++i) {
        const double alpha = 0.1 + 1.8 * rng.uniform();
        const double lo = rng.uniform() < 0.5 ? 0.0 : rng.uniform();
        const double hi = lo + 0.5 + 2.0 * rng.uniform();
        CHECK(std::isfinite(JumpMeasure::truncated_power_law(alpha, lo, hi, 0.1 + rng.uniform()).u_and_u2()));
        const double theta = 1.0 + 1e-3 + 2.0 * rng.uniform();
        const double umin = 1.0 + 1e-3 + 2.0 * rng.uniform();
        CHECK(std::isfinite(JumpMeasure::log_perturbed_tail(theta, umin, 0.1 + rng.uniform()).u_and_u2()));
    }
}

TEST_CASE("psi0 jump integral agrees with direct quadrature") {
    const auto pl = JumpMeasure::truncated_power_law(1.2, 0.0, 2.0, 0.7);
    for (double z : {0.3, 1.0, 5.0}) {
        const double quad = integrate(
            [&](double u) { return (std::expm1(-z * u) + z * u) * 0.7 * std::pow(u, -2.2); }, 1e-10, 2.0,
            1e-12);
        CHECK(pl.psi0_integral(z) == doctest::Approx(quad).epsilon(1e-6));
    }
    const auto at = JumpMeasure::atom_list({{0.5, 1.0}, {2.0, 0.25}});
    const double z = 1.3;
    const double exact = 1.0 * (std::expm1(-z * 0.5) + z * 0.5) + 0.25 * (std::expm1(-z * 2.0) + z * 2.0);
    CHECK(at.psi0_integral(z) == doctest::Approx(exact).epsilon(1e-14));
}

TEST_CASE("non-persistence classifier") {
    CHECK(grey_condition(feller()).holds());  // psi(z) = z + z^2

    ModelSpec lin = feller();
    lin.sigma[0] = 0.0;
    CHECK(grey_condition(lin).status == GreyResult::Status::Fails);  // psi(z) = z

    ModelSpec atoms = feller();
    atoms.pi = {JumpMeasure::atom_list({{1.0, 2.0}})};
    CHECK(grey_condition(atoms).holds());  // sigma^2 z^2 still dominates

    ModelSpec stable = feller();
    stable.sigma[0] = 0.0;
    stable.pi = {JumpMeasure::truncated_power_law(1.5, 0.0, 1.0, 1.0)};
    CHECK(grey_condition(stable).holds());  // psi(z) ~ z^1.5

    ModelSpec inhom = symmetric_two_type();
    inhom.beta[1] = -0.75;
    CHECK(grey_condition(inhom).status == GreyResult::Status::Inapplicable);
}

TEST_CASE("JSON round-trip is bit-exact") {
    for (const ModelSpec& s : {feller(1.0, 2.0), symmetric_two_type(), random_three_type(5),
                               log_tail_model(2.0), atom_model()}) {
        const std::string once = model_to_json(s);
        const std::string twice = model_to_json(model_from_json(once));
        CHECK(once == twice);
    }
}

TEST_CASE("JSON rejects malformed inputs") {
    CHECK_THROWS(model_from_json("{\"n\": 1}"));
    CHECK_THROWS(model_from_json(
        "{\"n\": 1, \"motion\": [[0]], \"beta\": [-1], \"sigma\": [1], \"pi\": [{\"kind\": \"bogus\"}]}"));
}

TEST_CASE("jump measure parameter validation") {
    CHECK_THROWS_AS(JumpMeasure::truncated_power_law(2.5, 0.0, 1.0, 1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(JumpMeasure::log_perturbed_tail(0.5, std::exp(1.0), 1.0).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(JumpMeasure::log_perturbed_tail(2.0, 0.5, 1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(JumpMeasure::atom_list({{-1.0, 1.0}}).validate(), std::invalid_argument);
}

TEST_CASE("tail samplers reproduce the analytic tail moments") {
    Rng rng(11, 2);
    auto unif = [&rng] { return rng.uniform(); };

    const auto pl = JumpMeasure::truncated_power_law(1.2, 0.0, 2.0, 0.7);
    const double a = 0.1;
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += pl.sample_tail(a, unif);
    const double target = pl.first_moment_above(a) / pl.mass_above(a);
    CHECK(std::abs(sum / n - target) < 0.01 * target);

    // theta = 4 keeps the variance of log y finite so the 5% band is sound
    const auto lt = JumpMeasure::log_perturbed_tail(4.0, std::exp(1.0), 1.0);
    double sb = 0.0;
    long count = 0;
    for (int i = 0; i < n; ++i) {
        const double y = lt.sample_size_biased_tail(3.0, unif);
        CHECK(y >= 3.0);
        sb += std::log(y);
        ++count;
    }
    // log y is Pareto(theta - 1) above L = log 3: mean L (theta-1)/(theta-2)
    const double L = std::log(3.0);
    const double mean_log = L * (4.0 - 1.0) / (4.0 - 2.0);
    CHECK(std::abs(sb / static_cast<double>(count) - mean_log) < 0.05 * mean_log);
}
