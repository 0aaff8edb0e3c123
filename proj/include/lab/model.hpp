#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lab/jump_measure.hpp"

namespace lab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A finite measure on the type space as a non-negative mass vector.
/// The null measure is the all-zero vector.
inline bool is_null_measure(const Vector& mu, double tol = 0.0) { return mu.lpNorm<Eigen::Infinity>() <= tol; }

/// Finite-type model: type space {0..n-1}, conservative motion generator A,
/// drift beta, diffusion sigma and a jump kernel per type.
struct ModelSpec {
    Matrix motion;                   // n x n, rows sum to 0, off-diagonals >= 0
    Vector beta;                     // per-type mass drift
    Vector sigma;                    // per-type diffusion coefficient, >= 0
    std::vector<JumpMeasure> pi;     // per-type jump measure

    int n() const { return static_cast<int>(beta.size()); }

    // psi(x, z) = -beta(x) z + sigma(x)^2 z^2 + int (e^{-zu} - 1 + zu) pi(x, du)
    double psi(int x, double z) const;
    // nonlinear part: psi0(x, z) = sigma^2 z^2 + jump integral
    double psi0(int x, double z) const;

    bool spatially_homogeneous(double tol = 1e-12) const;
};

struct ValidationCheck {
    std::string name;
    bool passed;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

// Semantic validation of the standing conditions. Structurally malformed
// specs (dimension mismatches, non-square motion) throw instead.
ValidationReport validate_model(const ModelSpec& spec);

struct GreyResult {
    enum class Status { Holds, Fails, Inapplicable } status;
    std::string diagnostic;
    bool holds() const { return status == Status::Holds; }
};

// Non-persistence test via Grey's condition, for spatially homogeneous
// mechanisms; otherwise reports Inapplicable.
GreyResult grey_condition(const ModelSpec& spec);

// JSON model files: {n, motion, beta, sigma, pi[]}; pi entries are tagged unions.
ModelSpec model_from_json(const std::string& text);
std::string model_to_json(const ModelSpec& spec);
ModelSpec load_model_file(const std::string& path);

}  // namespace lab
