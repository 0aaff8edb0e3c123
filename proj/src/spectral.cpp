#include "lab/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace lab {

Matrix mean_generator(const ModelSpec& spec) {
    Matrix L = spec.motion;
    L += spec.beta.asDiagonal();
    return L;
}

Vector mean_semigroup_apply(const Matrix& L, double t, const Vector& f) {
    return (t * L).exp() * f;
}

bool is_irreducible(const Matrix& motion) {
    const Eigen::Index n = motion.rows();
    if (n == 1) return true;
    // strong connectivity of the off-diagonal support: BFS in graph and transpose
    auto reaches_all = [n, &motion](bool transpose) {
        std::vector<bool> seen(static_cast<size_t>(n), false);
        std::vector<Eigen::Index> stack = {0};
        seen[0] = true;
        Eigen::Index count = 1;
        while (!stack.empty()) {
            const Eigen::Index i = stack.back();
            stack.pop_back();
            for (Eigen::Index j = 0; j < n; ++j) {
                const double w = transpose ? motion(j, i) : motion(i, j);
                if (i != j && w > 0.0 && !seen[static_cast<size_t>(j)]) {
                    seen[static_cast<size_t>(j)] = true;
                    ++count;
                    stack.push_back(j);
                }
            }
        }
        return count == n;
    };
    return reaches_all(false) && reaches_all(true);
}

EigenTriplet eigen_triplet(const Matrix& L, bool check_irreducible) {
    const Eigen::Index n = L.rows();
    if (L.cols() != n || n < 1) throw std::invalid_argument("eigen_triplet: L must be square");
    if (check_irreducible && !is_irreducible(L))
        throw std::runtime_error("Perron-Frobenius inapplicable: motion support is reducible");

    Eigen::EigenSolver<Matrix> right(L);
    if (right.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    Eigen::Index lead = 0;
    for (Eigen::Index i = 1; i < n; ++i)
        if (right.eigenvalues()[i].real() > right.eigenvalues()[lead].real()) lead = i;
    const auto lam_c = right.eigenvalues()[lead];
    const double scale = L.cwiseAbs().maxCoeff();
    if (std::abs(lam_c.imag()) > 1e-10 * std::max(1.0, scale))
        throw std::runtime_error("leading eigenvalue is not real; Perron structure violated");

    EigenTriplet trip;
    trip.lambda = lam_c.real();
    double gap = kInf;
    for (Eigen::Index i = 0; i < n; ++i)
        if (i != lead) gap = std::min(gap, trip.lambda - right.eigenvalues()[i].real());
    trip.gap = (n == 1) ? kInf : gap;

    Vector phi = right.eigenvectors().col(lead).real();
    if (phi.sum() < 0.0) phi = -phi;
    if ((phi.array() <= 0.0).any())
        throw std::runtime_error("leading right eigenvector is not strictly positive");

    Eigen::EigenSolver<Matrix> left(L.transpose());
    if (left.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    Eigen::Index lead_l = 0;
    for (Eigen::Index i = 1; i < n; ++i)
        if (left.eigenvalues()[i].real() > left.eigenvalues()[lead_l].real()) lead_l = i;
    Vector nu = left.eigenvectors().col(lead_l).real();
    if (nu.sum() < 0.0) nu = -nu;
    if ((nu.array() <= 0.0).any())
        throw std::runtime_error("leading left eigenvector is not strictly positive");

    nu /= nu.sum();                 // sum(nu) = 1
    phi /= nu.dot(phi);             // nu(phi) = 1
    trip.phi = phi;
    trip.nu = nu;
    return trip;
}

RemainderProfile h2_remainder(const ModelSpec& spec, const EigenTriplet& trip,
                              const std::vector<double>& t_grid) {
    const Matrix L = mean_generator(spec);
    const int n = spec.n();
    RemainderProfile prof;
    for (const double t : t_grid) {
        if (!(t > 0.0)) throw std::invalid_argument("h2_remainder: t_grid entries must be > 0");
        const Matrix Tt = (t * L).exp();
        double sup = 0.0;
        for (int j = 0; j < n; ++j) {  // f = indicator of type j; nu(f) = nu_j > 0
            for (int x = 0; x < n; ++x) {
                const double h = Tt(x, j) / (std::exp(trip.lambda * t) * trip.phi[x] * trip.nu[j]) - 1.0;
                sup = std::max(sup, std::abs(h));
            }
        }
        prof.t.push_back(t);
        prof.sup_abs_h.push_back(sup);
    }
    return prof;
}

double l_log_l_functional(const ModelSpec& spec, const EigenTriplet& trip) {
    double total = 0.0;
    for (int x = 0; x < spec.n(); ++x) {
        if (spec.pi[static_cast<size_t>(x)].is_zero()) continue;
        const double inner = spec.pi[static_cast<size_t>(x)].l_log_l_integral(trip.phi[x]);
        if (std::isinf(inner)) return kInf;
        total += trip.nu[x] * inner;
    }
    return total;
}

SpineGenerator spine_generator(const ModelSpec& spec, const EigenTriplet& trip) {
    const Matrix L = mean_generator(spec);
    const int n = spec.n();
    SpineGenerator sg;
    sg.G = trip.phi.cwiseInverse().asDiagonal() * (L - trip.lambda * Matrix::Identity(n, n)) *
           trip.phi.asDiagonal();
    sg.nu_tilde = trip.nu.cwiseProduct(trip.phi);
    const double stat_resid = (sg.nu_tilde.transpose() * sg.G).cwiseAbs().maxCoeff();
    if (stat_resid > 1e-10 * std::max(1.0, sg.G.cwiseAbs().maxCoeff()))
        throw std::runtime_error("spine generator: nu_tilde is not stationary");
    return sg;
}

}  // namespace lab
