#pragma once

#include <vector>

#include "lab/model.hpp"

namespace lab {

/// Perron data of the mean semigroup, normalized so that sum(nu) = 1 and
/// nu(phi) = 1. Subcritical runs require lambda < 0.
struct EigenTriplet {
    double lambda = 0.0;
    Vector phi;    // strictly positive right eigenvector
    Vector nu;     // probability vector, left eigenvector
    double gap = 0.0;  // Re(lambda) - max Re(other eigenvalues)

    bool subcritical(double margin = 1e-8) const { return lambda < -margin; }
};

/// Per-time sup-norm bound on the mean-semigroup remainder, evaluated on
/// the indicator basis.
struct RemainderProfile {
    std::vector<double> t;
    std::vector<double> sup_abs_h;
};

// L = A + diag(beta); the mean semigroup acts on functions as exp(tL).
Matrix mean_generator(const ModelSpec& spec);

// exp(tL) f
Vector mean_semigroup_apply(const Matrix& L, double t, const Vector& f);

bool is_irreducible(const Matrix& motion);

// Leading eigen-triplet of L by dense eigensolver. Throws when the motion
// support is reducible (check_irreducible) or the leading eigenvalue is
// not simple/real within tolerance.
EigenTriplet eigen_triplet(const Matrix& L, bool check_irreducible = true);

// sup over indicator f and types x of |T_t f(x) / (e^{lambda t} phi(x) nu(f)) - 1|
RemainderProfile h2_remainder(const ModelSpec& spec, const EigenTriplet& trip,
                              const std::vector<double>& t_grid);

// L log L functional: sum_x nu_x int u phi(x) log+(u phi(x)) pi(x, du); +inf in-band.
double l_log_l_functional(const ModelSpec& spec, const EigenTriplet& trip);

/// Spine motion generator G = diag(phi)^{-1} (L - lambda I) diag(phi) and
/// its stationary law nu_tilde with nu_tilde_x = nu_x phi_x.
struct SpineGenerator {
    Matrix G;
    Vector nu_tilde;
};

SpineGenerator spine_generator(const ModelSpec& spec, const EigenTriplet& trip);

}  // namespace lab
