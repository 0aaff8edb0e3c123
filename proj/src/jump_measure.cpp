#include "lab/jump_measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lab/quadrature.hpp"

namespace lab {

JumpMeasure JumpMeasure::atom_list(std::vector<std::pair<double, double>> a) {
    JumpMeasure m;
    m.kind = Kind::AtomList;
    m.atoms = std::move(a);
    m.validate();
    return m;
}

JumpMeasure JumpMeasure::truncated_power_law(double alpha, double u_min, double u_max, double c) {
    JumpMeasure m;
    m.kind = Kind::TruncatedPowerLaw;
    m.alpha = alpha;
    m.u_min = u_min;
    m.u_max = u_max;
    m.c = c;
    m.validate();
    return m;
}

JumpMeasure JumpMeasure::log_perturbed_tail(double theta, double u_min, double c) {
    JumpMeasure m;
    m.kind = Kind::LogPerturbedTail;
    m.theta = theta;
    m.u_min = u_min;
    m.c = c;
    m.validate();
    return m;
}

bool JumpMeasure::is_zero() const {
    if (kind == Kind::Zero) return true;
    if (kind == Kind::AtomList) {
        for (const auto& [u, w] : atoms)
            if (w > 0.0) return false;
        return true;
    }
    return c == 0.0;
}

void JumpMeasure::validate() const {
    switch (kind) {
        case Kind::Zero:
            return;
        case Kind::AtomList:
            for (const auto& [u, w] : atoms) {
                if (!(u > 0.0) || !std::isfinite(u)) throw std::invalid_argument("atom location must be > 0 and finite");
                if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("atom weight must be >= 0 and finite");
            }
            return;
        case Kind::TruncatedPowerLaw:
            if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("power law needs alpha in (0,2)");
            if (!(u_min >= 0.0 && u_max > u_min && std::isfinite(u_max)))
                throw std::invalid_argument("power law needs 0 <= u_min < u_max < inf");
            if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("power law needs c >= 0");
            return;
        case Kind::LogPerturbedTail:
            if (!(theta > 1.0)) throw std::invalid_argument("log tail needs theta > 1");
            if (!(u_min > 1.0)) throw std::invalid_argument("log tail needs u_min > 1");
            if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("log tail needs c >= 0");
            return;
    }
    throw std::invalid_argument("unknown jump measure kind");
}

namespace {

// int_a^b u^p * u^{-1-alpha} du (without the c factor)
double power_int(double p, double alpha, double a, double b) {
    const double e = p - alpha;
    if (std::abs(e) < 1e-14) return std::log(b / a);
    if (a == 0.0) {
        if (e <= 0.0) return kInf;
        return std::pow(b, e) / e;
    }
    return (std::pow(b, e) - std::pow(a, e)) / e;
}

}  // namespace

double JumpMeasure::mass_above(double a) const {
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::AtomList: {
            double s = 0.0;
            for (const auto& [u, w] : atoms)
                if (u > a) s += w;
            return s;
        }
        case Kind::TruncatedPowerLaw: {
            const double lo = std::max(a, u_min);
            if (lo >= u_max) return 0.0;
            if (lo == 0.0) return kInf;
            return c * power_int(0.0, alpha, lo, u_max);
        }
        case Kind::LogPerturbedTail: {
            const double lo = std::max(a, u_min);
            // substitute s = 1/u: int_0^{1/lo} (-log s)^{-theta} ds
            const double th = theta;
            return c * integrate([th](double s) { return s == 0.0 ? 0.0 : std::pow(-std::log(s), -th); },
                                 0.0, 1.0 / lo, 1e-13);
        }
    }
    return 0.0;
}

double JumpMeasure::first_moment_above(double a) const {
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::AtomList: {
            double s = 0.0;
            for (const auto& [u, w] : atoms)
                if (u > a) s += w * u;
            return s;
        }
        case Kind::TruncatedPowerLaw: {
            const double lo = std::max(a, u_min);
            if (lo >= u_max) return 0.0;
            return c * power_int(1.0, alpha, lo, u_max);
        }
        case Kind::LogPerturbedTail: {
            // int_lo^inf u^{-1}(log u)^{-theta} du = (log lo)^{1-theta}/(theta-1)
            const double lo = std::max(a, u_min);
            return c * std::pow(std::log(lo), 1.0 - theta) / (theta - 1.0);
        }
    }
    return 0.0;
}

double JumpMeasure::second_moment_below(double a) const {
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::AtomList: {
            double s = 0.0;
            for (const auto& [u, w] : atoms)
                if (u <= a) s += w * u * u;
            return s;
        }
        case Kind::TruncatedPowerLaw: {
            const double hi = std::min(a, u_max);
            if (hi <= u_min) return 0.0;
            return c * power_int(2.0, alpha, u_min, hi);
        }
        case Kind::LogPerturbedTail: {
            const double hi = std::min(a, kInf);
            if (hi <= u_min) return 0.0;
            if (std::isinf(hi)) return kInf;
            const double th = theta;
            return c * integrate([th](double u) { return std::pow(std::log(u), -th); }, u_min, hi, 1e-13);
        }
    }
    return 0.0;
}

double JumpMeasure::second_moment_above(double a) const {
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::AtomList: {
            double s = 0.0;
            for (const auto& [u, w] : atoms)
                if (u > a) s += w * u * u;
            return s;
        }
        case Kind::TruncatedPowerLaw: {
            const double lo = std::max(a, u_min);
            if (lo >= u_max) return 0.0;
            return c * power_int(2.0, alpha, lo, u_max);
        }
        case Kind::LogPerturbedTail:
            return is_zero() ? 0.0 : kInf;  // integrand ~ (log u)^{-theta}
    }
    return 0.0;
}

double JumpMeasure::u_and_u2() const {
    // u ^ u^2 = u^2 for u < 1, u for u >= 1
    const double below = second_moment_below(1.0);
    const double above = first_moment_above(1.0);
    // atoms exactly at u = 1 contribute 1 either way; second_moment_below(1) keeps them
    return below + above;
}

double JumpMeasure::psi0_integral(double z) const {
    if (z <= 0.0 || is_zero()) return 0.0;
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::AtomList: {
            double s = 0.0;
            for (const auto& [u, w] : atoms) s += w * compensated_exp(z * u);
            return s;
        }
        case Kind::TruncatedPowerLaw: {
            const double al = alpha, cc = c;
            // below u_s the kernel is its quadratic/cubic Taylor part; the
            // singular corner at 0 integrates in closed form
            const double u_s = std::min(u_max, 1e-3 / z);
            double small = 0.0;
            if (u_s > u_min)
                small = cc * (0.5 * z * z * power_int(2.0, al, u_min, u_s) -
                              z * z * z / 6.0 * power_int(3.0, al, u_min, u_s));
            const double lo = std::max(u_min, u_s);
            double rest = 0.0;
            if (u_max > lo) {
                // relative tolerance: the integral scales like z for large z,
                // an absolute target would force the recursion to full depth
                const double bound = std::max(1.0, z * cc * power_int(1.0, al, lo, u_max));
                // log substitution u = e^x tames the u^{-1-alpha} span
                rest = integrate(
                    [al, cc, z](double x) {
                        const double u = std::exp(x);
                        return compensated_exp(z * u) * cc * std::pow(u, -al);
                    },
                    std::log(lo), std::log(u_max), 1e-12 * bound);
            }
            return small + rest;
        }
        case Kind::LogPerturbedTail: {
            // beyond U the kernel is exponentially flat: g(zu) ~ zu - 1 + O(e^{-zU})
            const double U = std::max(u_min * 2.0, 50.0 / z);
            const double th = theta, cc = c;
            // relative tolerance (integral ~ z for large z) and log substitution
            // u = e^x to compress the long head interval
            const double bound = std::max(1.0, z * first_moment_above(u_min));
            double head = integrate(
                [th, cc, z](double x) {
                    const double u = std::exp(x);
                    return compensated_exp(z * u) * cc / u * std::pow(x, -th);
                },
                std::log(u_min), std::log(U), 1e-12 * bound);
            double tail = z * first_moment_above(U) - mass_above(U);
            return head + tail;
        }
    }
    return 0.0;
}

double JumpMeasure::l_log_l_integral(double s) const {
    if (!(s > 0.0)) throw std::invalid_argument("l_log_l_integral needs scale > 0");
    if (is_zero()) return 0.0;
    const double a0 = 1.0 / s;  // log+(us) vanishes below
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::AtomList: {
            double r = 0.0;
            for (const auto& [u, w] : atoms)
                if (u * s > 1.0) r += w * u * s * std::log(u * s);
            return r;
        }
        case Kind::TruncatedPowerLaw: {
            const double lo = std::max(a0, u_min);
            if (lo >= u_max) return 0.0;
            const double al = alpha, cc = c;
            return integrate(
                [al, cc, s](double u) {
                    return u * s * std::log(u * s) * cc * std::pow(u, -1.0 - al);
                },
                lo, u_max, 1e-13);
        }
        case Kind::LogPerturbedTail: {
            if (theta <= 2.0) return kInf;  // integrand ~ u^{-1}(log u)^{1-theta}
            const double lo = std::max(a0, u_min);
            const double U = std::max(lo, u_min) * std::exp(20.0);
            const double th = theta, cc = c;
            double head = integrate(
                [th, cc, s](double u) {
                    const double us = u * s;
                    return us <= 1.0 ? 0.0
                                     : us * std::log(us) * cc * std::pow(u, -2.0) * std::pow(std::log(u), -th);
                },
                lo, U, 1e-13);
            // exact tail: int_U^inf s(log u + log s) c u^{-1} (log u)^{-theta} du
            const double LU = std::log(U);
            double tail = cc * s *
                          (std::pow(LU, 2.0 - th) / (th - 2.0) +
                           std::log(s) * std::pow(LU, 1.0 - th) / (th - 1.0));
            return head + tail;
        }
    }
    return 0.0;
}

double JumpMeasure::sample_tail_impl(double a, double u1, double u2, double /*u3*/) const {
    switch (kind) {
        case Kind::Zero:
            throw std::logic_error("sample_tail on zero measure");
        case Kind::AtomList: {
            double total = mass_above(a);
            if (!(total > 0.0)) throw std::logic_error("sample_tail: empty tail");
            double target = u1 * total, acc = 0.0;
            for (const auto& [u, w] : atoms) {
                if (u <= a) continue;
                acc += w;
                if (acc >= target) return u;
            }
            return atoms.back().first;
        }
        case Kind::TruncatedPowerLaw: {
            const double lo = std::max(a, u_min);
            if (lo <= 0.0 || lo >= u_max) throw std::logic_error("sample_tail: empty or infinite-mass tail");
            const double pl = std::pow(lo, -alpha), ph = std::pow(u_max, -alpha);
            return std::pow(pl - u1 * (pl - ph), -1.0 / alpha);
        }
        case Kind::LogPerturbedTail: {
            // Pareto(1) proposal u = lo/U, accept w.p. (log lo / log u)^theta
            const double lo = std::max(a, u_min);
            const double u = lo / std::max(u1, 1e-300);
            const double acc = std::pow(std::log(lo) / std::log(u), theta);
            return (u2 <= acc) ? u : -1.0;
        }
    }
    return -1.0;
}

double JumpMeasure::sample_size_biased_impl(double a, double u1, double /*u2*/) const {
    switch (kind) {
        case Kind::Zero:
            throw std::logic_error("size-biased sample on zero measure");
        case Kind::AtomList: {
            double total = first_moment_above(a);
            if (!(total > 0.0)) throw std::logic_error("size-biased sample: empty tail");
            double target = u1 * total, acc = 0.0;
            for (const auto& [u, w] : atoms) {
                if (u <= a) continue;
                acc += w * u;
                if (acc >= target) return u;
            }
            return atoms.back().first;
        }
        case Kind::TruncatedPowerLaw: {
            // density prop. to u^{-alpha} on (lo, u_max)
            const double lo = std::max(a, u_min);
            if (lo >= u_max) throw std::logic_error("size-biased sample: empty tail");
            if (std::abs(alpha - 1.0) < 1e-14) {
                return lo * std::pow(u_max / lo, u1);
            }
            const double e = 1.0 - alpha;
            const double pl = std::pow(lo, e), ph = std::pow(u_max, e);
            return std::pow(pl + u1 * (ph - pl), 1.0 / e);
        }
        case Kind::LogPerturbedTail: {
            // density prop. to u^{-1}(log u)^{-theta}: exact inverse CDF
            const double lo = std::max(a, u_min);
            const double L = std::log(lo);
            return std::exp(L * std::pow(1.0 - u1, -1.0 / (theta - 1.0)));
        }
    }
    return -1.0;
}

std::string JumpMeasure::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Zero:
            os << "Zero";
            break;
        case Kind::AtomList:
            os << "AtomList[" << atoms.size() << "]";
            break;
        case Kind::TruncatedPowerLaw:
            os << "TruncatedPowerLaw(alpha=" << alpha << ", u_min=" << u_min << ", u_max=" << u_max
               << ", c=" << c << ")";
            break;
        case Kind::LogPerturbedTail:
            os << "LogPerturbedTail(theta=" << theta << ", u_min=" << u_min << ", c=" << c << ")";
            break;
    }
    return os.str();
}

}  // namespace lab
