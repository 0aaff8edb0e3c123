#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lab/model.hpp"
#include "lab/rng.hpp"
#include "lab/spectral.hpp"

namespace lab {

struct SimConfig {
    double dt = 1e-3;
    long n_paths = 10000;
    std::uint64_t seed = 1;
    double small_jump_cutoff = 1e-2;  // delta_J
    enum class SmallJumpMode { DiffusionApprox, Drop } small_jump_mode = SmallJumpMode::DiffusionApprox;
    std::vector<double> record_times;  // sorted, >= 0
    int threads = 1;
};

/// Seeded collection of trajectories sampled at the record times.
/// Identical (spec, config, seed) gives a bit-identical ensemble,
/// independent of thread count.
struct PathEnsemble {
    std::vector<double> record_times;
    std::vector<std::vector<Vector>> states;  // [path][record index]
    std::vector<double> weights;              // default 1
    std::uint64_t seed = 0;
    std::uint64_t spec_fingerprint = 0;

    long n_paths() const { return static_cast<long>(states.size()); }
    std::size_t time_index(double t) const;
};

std::uint64_t fingerprint_spec(const ModelSpec& spec);

// Euler-Maruyama jump-diffusion realization of the superprocess mass vector.
// Large jumps (> delta_J) are Poisson events from the normalized tail,
// compensated in the drift, with per-substep intensity capped at 0.1; small
// jumps are handled per small_jump_mode; coordinates driven negative are
// absorbed at 0 (full-truncation scheme).
PathEnsemble simulate_ensemble(const ModelSpec& spec, const Vector& mu0, const SimConfig& config);

// One path, one target time. `stream` identifies the RNG substream.
Vector simulate_to_time(const ModelSpec& spec, const Vector& m0, double t_end, const SimConfig& config,
                        Rng rng);

struct CheckReport {
    std::string name;
    double estimate = 0.0;
    double target = 0.0;
    double std_error = 0.0;
    double z_score = 0.0;
    bool passed = false;  // |z| <= 3
    std::string detail;
};

// Weighted ensemble mean of X_t(f) against mu0(exp(tL) f).
CheckReport moment_check(const PathEnsemble& ensemble, const ModelSpec& spec, const Vector& mu0,
                         const Vector& f, double t);

// Mean of e^{-lambda t} X_t(phi) against mu0(phi) at every recorded t >= 0.
std::vector<CheckReport> martingale_check(const PathEnsemble& ensemble, const EigenTriplet& trip,
                                          const Vector& mu0);

// Fraction of paths with X_t != 0, with binomial standard error.
CheckReport survival_check(const PathEnsemble& ensemble, double t, double target);

}  // namespace lab
