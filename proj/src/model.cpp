#include "lab/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lab/quadrature.hpp"

namespace lab {

using json = nlohmann::ordered_json;

double ModelSpec::psi0(int x, double z) const {
    return sigma[x] * sigma[x] * z * z + pi[static_cast<size_t>(x)].psi0_integral(z);
}

double ModelSpec::psi(int x, double z) const { return -beta[x] * z + psi0(x, z); }

bool ModelSpec::spatially_homogeneous(double tol) const {
    for (int x = 1; x < n(); ++x) {
        if (std::abs(beta[x] - beta[0]) > tol || std::abs(sigma[x] - sigma[0]) > tol) return false;
        const auto& a = pi[0];
        const auto& b = pi[static_cast<size_t>(x)];
        if (a.kind != b.kind || a.atoms != b.atoms) return false;
        if (std::abs(a.alpha - b.alpha) > tol || std::abs(a.theta - b.theta) > tol ||
            std::abs(a.u_min - b.u_min) > tol || std::abs(a.u_max - b.u_max) > tol ||
            std::abs(a.c - b.c) > tol)
            return false;
    }
    return true;
}

ValidationReport validate_model(const ModelSpec& spec) {
    const Eigen::Index n = spec.beta.size();
    if (n < 1 || spec.motion.rows() != n || spec.motion.cols() != n || spec.sigma.size() != n ||
        spec.pi.size() != static_cast<size_t>(n))
        throw std::invalid_argument("malformed ModelSpec: inconsistent dimensions");

    ValidationReport report;
    auto add = [&report](std::string name, bool ok, std::string detail = "") {
        report.checks.push_back({std::move(name), ok, std::move(detail)});
    };

    bool conservative = true, offdiag_ok = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(spec.motion.row(i).sum()) > 1e-12) conservative = false;
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && spec.motion(i, j) < 0.0) offdiag_ok = false;
    }
    add("motion conservative (row sums 0)", conservative);
    add("motion off-diagonals >= 0", offdiag_ok);
    add("beta finite", spec.beta.allFinite());
    add("sigma finite and >= 0", spec.sigma.allFinite() && (spec.sigma.array() >= 0.0).all());

    bool pi_ok = true;
    std::ostringstream pi_detail;
    for (size_t x = 0; x < spec.pi.size(); ++x) {
        try {
            spec.pi[x].validate();
        } catch (const std::exception& e) {
            pi_ok = false;
            pi_detail << "pi[" << x << "]: " << e.what() << "; ";
            continue;
        }
        const double m = spec.pi[x].u_and_u2();
        if (!std::isfinite(m)) {
            pi_ok = false;
            pi_detail << "pi[" << x << "]: int (u^u^2) = inf; ";
        }
    }
    add("int (u ^ u^2) pi(x,du) < inf for all x", pi_ok, pi_detail.str());
    return report;
}

GreyResult grey_condition(const ModelSpec& spec) {
    if (!spec.spatially_homogeneous())
        return {GreyResult::Status::Inapplicable,
                "mechanism is spatially inhomogeneous; supply a dominating homogeneous mechanism"};

    const double sig = spec.sigma[0];
    const auto& pm = spec.pi[0];

    // psi(z) ~ sigma^2 z^2 dominates whenever sigma > 0
    if (sig > 0.0) return {GreyResult::Status::Holds, "sigma > 0: psi(z) >= sigma^2 z^2 - beta z, 1/psi integrable"};

    // sigma = 0: the jump part must make psi(z) superlinear for large z.
    // For these families that happens exactly when pi has infinite first
    // moment near 0+, i.e. a power law with u_min = 0 and alpha > 1; then
    // psi(z) ~ C z^alpha and 1/psi is integrable. Everything else has an
    // asymptotically linear psi (a finite jump first moment), and the tail
    // integral of 1/psi diverges.
    if (pm.is_zero()) return {GreyResult::Status::Fails, "sigma = 0 and pi = 0: psi(z) is linear, process persistent"};

    const bool superlinear =
        pm.kind == JumpMeasure::Kind::TruncatedPowerLaw && pm.u_min == 0.0 && pm.alpha > 1.0 && pm.c > 0.0;
    if (!superlinear)
        return {GreyResult::Status::Fails,
                "sigma = 0 and pi has finite mass near 0+: psi(z) is asymptotically linear"};

    // diagnostic: numeric head of int 1/psi plus the analytic z^{-alpha} tail bound
    double z0 = 1.0;
    while (spec.psi(0, z0) <= 0.0) {
        z0 *= 2.0;
        if (z0 > 1e12) return {GreyResult::Status::Fails, "psi(z) <= 0 up to 1e12"};
    }
    // coarse log-spaced trapezoid: this is a reported diagnostic, the
    // classification above is analytic (psi evaluations are expensive)
    const double Z = z0 * 64.0;
    double head = 0.0;
    const int K = 32;
    double zp = z0, fp = 1.0 / spec.psi(0, z0);
    for (int k = 1; k <= K; ++k) {
        const double zk = z0 * std::pow(Z / z0, static_cast<double>(k) / K);
        const double fk = 1.0 / spec.psi(0, zk);
        head += 0.5 * (fp + fk) * (zk - zp);
        zp = zk;
        fp = fk;
    }
    const double tail_bound = Z / ((pm.alpha - 1.0) * spec.psi(0, Z));  // int_Z^inf dz/(C z^alpha)
    std::ostringstream os;
    os << "int_{" << z0 << "}^inf dz/psi(z) <= " << head + tail_bound;
    return {GreyResult::Status::Holds, os.str()};
}

namespace {

json jump_to_json(const JumpMeasure& m) {
    json j;
    switch (m.kind) {
        case JumpMeasure::Kind::Zero:
            j["kind"] = "zero";
            break;
        case JumpMeasure::Kind::AtomList: {
            j["kind"] = "atoms";
            json a = json::array();
            for (const auto& [u, w] : m.atoms) a.push_back({{"u", u}, {"w", w}});
            j["atoms"] = a;
            break;
        }
        case JumpMeasure::Kind::TruncatedPowerLaw:
            j["kind"] = "truncated_power_law";
            j["alpha"] = m.alpha;
            j["u_min"] = m.u_min;
            j["u_max"] = m.u_max;
            j["c"] = m.c;
            break;
        case JumpMeasure::Kind::LogPerturbedTail:
            j["kind"] = "log_perturbed_tail";
            j["theta"] = m.theta;
            j["u_min"] = m.u_min;
            j["c"] = m.c;
            break;
    }
    return j;
}

JumpMeasure jump_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero") return JumpMeasure::zero();
    if (kind == "atoms") {
        std::vector<std::pair<double, double>> atoms;
        for (const auto& a : j.at("atoms"))
            atoms.emplace_back(a.at("u").get<double>(), a.at("w").get<double>());
        return JumpMeasure::atom_list(std::move(atoms));
    }
    if (kind == "truncated_power_law")
        return JumpMeasure::truncated_power_law(j.at("alpha").get<double>(), j.at("u_min").get<double>(),
                                                j.at("u_max").get<double>(), j.at("c").get<double>());
    if (kind == "log_perturbed_tail")
        return JumpMeasure::log_perturbed_tail(j.at("theta").get<double>(), j.at("u_min").get<double>(),
                                               j.at("c").get<double>());
    throw std::invalid_argument("unknown jump measure kind: " + kind);
}

}  // namespace

ModelSpec model_from_json(const std::string& text) {
    const json j = json::parse(text);
    const int n = j.at("n").get<int>();
    if (n < 1) throw std::invalid_argument("model: n must be >= 1");
    ModelSpec spec;
    spec.motion.resize(n, n);
    const auto& mot = j.at("motion");
    if (static_cast<int>(mot.size()) != n) throw std::invalid_argument("model: motion has wrong row count");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(mot[i].size()) != n) throw std::invalid_argument("model: motion row has wrong size");
        for (int k = 0; k < n; ++k) spec.motion(i, k) = mot[i][k].get<double>();
    }
    auto read_vec = [&j, n](const char* key) {
        const auto& arr = j.at(key);
        if (static_cast<int>(arr.size()) != n) throw std::invalid_argument(std::string("model: bad length for ") + key);
        Vector v(n);
        for (int i = 0; i < n; ++i) v[i] = arr[i].get<double>();
        return v;
    };
    spec.beta = read_vec("beta");
    spec.sigma = read_vec("sigma");
    const auto& pis = j.at("pi");
    if (static_cast<int>(pis.size()) != n) throw std::invalid_argument("model: pi has wrong length");
    for (const auto& p : pis) spec.pi.push_back(jump_from_json(p));
    return spec;
}

std::string model_to_json(const ModelSpec& spec) {
    json j;
    const int n = spec.n();
    j["n"] = n;
    json mot = json::array();
    for (int i = 0; i < n; ++i) {
        json row = json::array();
        for (int k = 0; k < n; ++k) row.push_back(spec.motion(i, k));
        mot.push_back(row);
    }
    j["motion"] = mot;
    j["beta"] = std::vector<double>(spec.beta.data(), spec.beta.data() + n);
    j["sigma"] = std::vector<double>(spec.sigma.data(), spec.sigma.data() + n);
    json pis = json::array();
    for (const auto& p : spec.pi) pis.push_back(jump_to_json(p));
    j["pi"] = pis;
    return j.dump(2);
}

ModelSpec load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace lab
