#pragma once

// Shared model builders for the test suites. Everything here is a small,
// fully explicit instance of ModelSpec so each test reads self-contained.

#include <cmath>
#include <vector>

#include "lab/model.hpp"
#include "lab/rng.hpp"

namespace lab::testing {

// 1-type quadratic mechanism psi(z) = b z + c z^2 (drift -b, diffusion c).
inline ModelSpec feller(double b = 1.0, double c = 1.0) {
    ModelSpec s;
    s.motion = Matrix::Zero(1, 1);
    s.beta = Vector::Constant(1, -b);
    s.sigma = Vector::Constant(1, std::sqrt(c));
    s.pi = {JumpMeasure::zero()};
    return s;
}

// symmetric 2-type: A = [[-a, a], [a, -a]], common drift and diffusion
inline ModelSpec symmetric_two_type(double a = 1.0, double b = 0.5, double c = 1.0) {
    ModelSpec s;
    s.motion = Matrix(2, 2);
    s.motion << -a, a, a, -a;
    s.beta = Vector::Constant(2, -b);
    s.sigma = Vector::Constant(2, std::sqrt(c));
    s.pi = {JumpMeasure::zero(), JumpMeasure::zero()};
    return s;
}

// random irreducible 3-type model with strictly negative leading eigenvalue
inline ModelSpec random_three_type(std::uint64_t seed) {
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

// 1-type with a slowly-decaying jump tail u^{-2} (log u)^{-theta} above e;
// theta <= 2 puts the model in the infinite-L-log-L regime.
inline ModelSpec log_tail_model(double theta, double c = 0.5, double b = 1.0) {
    ModelSpec s = feller(b, 1.0);
    s.pi = {JumpMeasure::log_perturbed_tail(theta, std::exp(1.0), c)};
    return s;
}

// 1-type pure-atom branching (no diffusion): jumps of size 1 at rate w per
// unit mass, drift -b. Isolates the discrete-immigration code path.
inline ModelSpec atom_model(double w = 1.0, double b = 1.0) {
    ModelSpec s;
    s.motion = Matrix::Zero(1, 1);
    s.beta = Vector::Constant(1, -b);
    s.sigma = Vector::Constant(1, 0.0);
    s.pi = {JumpMeasure::atom_list({{1.0, w}})};
    return s;
}

inline Vector delta_at(int n, int x, double mass = 1.0) {
    Vector v = Vector::Zero(n);
    v[x] = mass;
    return v;
}

}  // namespace lab::testing
