// `lab` command-line front end: model inspection, deterministic solvers,
// Monte-Carlo experiments, manifest replay and the acceptance runner.
//
// Shared flags: [--config path] [--seed u64] [--out dir] [--threads k].
// The result store root is resolved as --out, else $LAB_RESULT_DIR, else
// ./results; store entries are content-addressed by the manifest hash and
// written atomically (temp file + rename), never overwritten.

#include <CLI11.hpp>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "lab/acceptance.hpp"
#include "lab/cumulant.hpp"
#include "lab/model.hpp"
#include "lab/qprocess.hpp"
#include "lab/simulate.hpp"
#include "lab/spectral.hpp"
#include "lab/spine.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lab;

namespace {

// ---- small utilities -------------------------------------------------------

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

// atomic, append-only write: temp file in the same directory, then rename;
// an existing destination is left untouched
void atomic_write(const fs::path& dest, const std::string& payload) {
    if (fs::exists(dest)) return;
    const fs::path tmp = dest.parent_path() / (dest.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    }
    fs::rename(tmp, dest);
}

json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vector vector_from_json(const json& a) {
    Vector v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

SimConfig sim_config_from_json(const json& j) {
    SimConfig cfg;
    cfg.dt = j.value("dt", cfg.dt);
    cfg.n_paths = j.value("n_paths", cfg.n_paths);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.small_jump_cutoff = j.value("small_jump_cutoff", cfg.small_jump_cutoff);
    cfg.threads = j.value("threads", cfg.threads);
    const std::string mode = j.value("small_jump_mode", "diffusion");
    if (mode == "diffusion")
        cfg.small_jump_mode = SimConfig::SmallJumpMode::DiffusionApprox;
    else if (mode == "drop")
        cfg.small_jump_mode = SimConfig::SmallJumpMode::Drop;
    else
        throw std::runtime_error("small_jump_mode must be 'diffusion' or 'drop'");
    if (j.contains("record_times"))
        for (const auto& t : j.at("record_times")) cfg.record_times.push_back(t.get<double>());
    return cfg;
}

// ---- operation results -----------------------------------------------------

struct ResultRecord {
    json summary;                                              // scalars, error bars, flags
    std::vector<std::pair<std::string, std::string>> tables;   // name -> CSV payload
    std::vector<std::pair<std::string, std::string>> blobs;    // name -> binary payload
    int exit_code = 0;
};

std::string csv_header_for_types(int n, const char* prefix) {
    std::string h;
    for (int i = 0; i < n; ++i) h += std::string(",") + prefix + std::to_string(i);
    return h;
}

void append_vector(std::ostringstream& row, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, ",%.17g", v[i]);
        row << buf;
    }
}

// ---- operations (shared by direct subcommands and manifest replay) ---------

ResultRecord op_validate(const ModelSpec& spec, const json&) {
    ResultRecord rec;
    const auto report = validate_model(spec);
    json checks = json::array();
    for (const auto& c : report.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    const auto grey = grey_condition(spec);
    const char* status = grey.status == GreyResult::Status::Holds     ? "holds"
                         : grey.status == GreyResult::Status::Fails   ? "fails"
                                                                      : "inapplicable";
    rec.summary = {{"checks", checks},
                   {"all_passed", report.all_passed()},
                   {"grey_condition", {{"status", status}, {"diagnostic", grey.diagnostic}}}};
    rec.exit_code = report.all_passed() ? 0 : 1;
    return rec;
}

ResultRecord op_spectral(const ModelSpec& spec, const json& params) {
    ResultRecord rec;
    const auto trip = eigen_triplet(mean_generator(spec));
    const double llogl = l_log_l_functional(spec, trip);
    rec.summary = {{"lambda", trip.lambda},
                   {"gap", trip.gap},
                   {"phi", vector_to_json(trip.phi)},
                   {"nu", vector_to_json(trip.nu)},
                   {"subcritical", trip.subcritical()},
                   {"l_log_l", std::isinf(llogl) ? json("inf") : json(llogl)}};
    std::vector<double> t_grid;
    if (params.contains("t_grid"))
        for (const auto& t : params.at("t_grid")) t_grid.push_back(t.get<double>());
    else
        for (double k : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) t_grid.push_back(k / trip.gap);
    const auto prof = h2_remainder(spec, trip, t_grid);
    std::ostringstream csv;
    csv << "t,sup_abs_H\n";
    for (std::size_t i = 0; i < prof.t.size(); ++i)
        csv << prof.t[i] << "," << prof.sup_abs_h[i] << "\n";
    rec.tables.emplace_back("remainder_profile", csv.str());
    return rec;
}

ResultRecord op_cumulant(const ModelSpec& spec, const json& params) {
    ResultRecord rec;
    const double horizon = params.value("t", 1.0);
    const double tol = params.value("tol", 1e-10);
    const Vector f = params.contains("f") ? vector_from_json(params.at("f"))
                                          : Vector::Ones(spec.n()).eval();
    std::vector<double> grid;
    const int n_rec = 64;
    for (int i = 1; i <= n_rec; ++i) grid.push_back(horizon * i / n_rec);
    const auto sol = solve_cumulant(spec, f, horizon, tol, grid);
    std::ostringstream csv;
    csv << "t" << csv_header_for_types(spec.n(), "v") << "\n";
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        std::ostringstream row;
        row << sol.t[i];
        append_vector(row, sol.v[i]);
        csv << row.str() << "\n";
    }
    rec.tables.emplace_back("cumulant", csv.str());
    rec.summary = {{"horizon", horizon},
                   {"steps", sol.steps},
                   {"max_local_error", sol.max_local_error},
                   {"v_horizon", vector_to_json(sol.v.back())}};
    return rec;
}

ResultRecord op_extinction(const ModelSpec& spec, const json& params) {
    ResultRecord rec;
    const double horizon = params.value("t", 5.0);
    const double tol = params.value("tol", 1e-10);
    const auto trip = eigen_triplet(mean_generator(spec));
    const auto curve = extinction_curve(spec, trip, horizon, tol);
    std::ostringstream csv;
    csv << "t" << csv_header_for_types(spec.n(), "v") << ",nu_vt,survival_from_nu,normalized_survival\n";
    for (std::size_t i = 0; i < curve.t.size(); ++i) {
        const double surv = 1.0 - std::exp(-curve.nu_v[i]);
        std::ostringstream row;
        row << curve.t[i];
        append_vector(row, curve.v[i]);
        row << "," << curve.nu_v[i] << "," << surv << ","
            << std::exp(-trip.lambda * curve.t[i]) * surv;
        csv << row.str() << "\n";
    }
    rec.tables.emplace_back("extinction", csv.str());
    rec.summary = {{"horizon", horizon},
                   {"lambda", trip.lambda},
                   {"nu_v_horizon", curve.nu_v_at(horizon)}};
    return rec;
}

// binary ensemble layout (little-endian):
//   8 bytes  magic "LABENS01"
//   u64      spec fingerprint
//   u64      seed
//   u32      n_types, u32 n_records
//   f64[n_records] record times
//   u64      n_paths
//   f64[n_paths * n_records * n_types] states, row-major (path, record, type)
std::string encode_ensemble(const PathEnsemble& ens, int n_types) {
    std::string out("LABENS01", 8);
    auto put = [&out](const void* p, std::size_t n) {
        out.append(static_cast<const char*>(p), n);
    };
    const std::uint64_t seed = ens.seed, fp = ens.spec_fingerprint,
                        np = static_cast<std::uint64_t>(ens.n_paths());
    const std::uint32_t nt = static_cast<std::uint32_t>(n_types),
                        nr = static_cast<std::uint32_t>(ens.record_times.size());
    put(&fp, 8);
    put(&seed, 8);
    put(&nt, 4);
    put(&nr, 4);
    for (double t : ens.record_times) put(&t, 8);
    put(&np, 8);
    for (const auto& path : ens.states)
        for (const auto& state : path)
            for (Eigen::Index i = 0; i < state.size(); ++i) put(&state[i], 8);
    return out;
}

std::string ensemble_csv(const PathEnsemble& ens, int n_types) {
    std::ostringstream csv;
    csv << "path,t" << csv_header_for_types(n_types, "x") << "\n";
    for (long p = 0; p < ens.n_paths(); ++p)
        for (std::size_t r = 0; r < ens.record_times.size(); ++r) {
            std::ostringstream row;
            row << p << "," << ens.record_times[r];
            append_vector(row, ens.states[static_cast<size_t>(p)][r]);
            csv << row.str() << "\n";
        }
    return csv.str();
}

ResultRecord op_simulate(const ModelSpec& spec, const json& params) {
    ResultRecord rec;
    SimConfig cfg = sim_config_from_json(params.value("config", json::object()));
    if (cfg.record_times.empty()) cfg.record_times = {1.0};
    const Vector mu0 = params.contains("mu0") ? vector_from_json(params.at("mu0"))
                                              : Vector::Ones(spec.n()).eval();
    const auto ens = simulate_ensemble(spec, mu0, cfg);
    rec.blobs.emplace_back("ensemble.bin", encode_ensemble(ens, spec.n()));
    if (params.value("csv", false)) rec.tables.emplace_back("ensemble", ensemble_csv(ens, spec.n()));
    const auto surv = survival_check(ens, cfg.record_times.back(), 0.0);
    rec.summary = {{"n_paths", ens.n_paths()},
                   {"seed", ens.seed},
                   {"spec_fingerprint", hex64(ens.spec_fingerprint)},
                   {"ensemble_hash", hex64(fnv1a(rec.blobs.back().second))},
                   {"record_times", cfg.record_times},
                   {"survival_at_last_record", surv.estimate}};
    return rec;
}

std::string law_csv(const EmpiricalLaw& law) {
    std::ostringstream csv;
    csv << "weight" << csv_header_for_types(static_cast<int>(law.samples.empty() ? 0 : law.samples[0].size()), "x")
        << "\n";
    for (std::size_t i = 0; i < law.samples.size(); ++i) {
        std::ostringstream row;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", law.weights[i]);
        row << buf;
        append_vector(row, law.samples[i]);
        csv << row.str() << "\n";
    }
    return csv.str();
}

ResultRecord op_yaglom(const ModelSpec& spec, const json& params) {
    ResultRecord rec;
    SimConfig cfg = sim_config_from_json(params.value("config", json::object()));
    const double t_large = params.value("t", 8.0);
    const auto trip = eigen_triplet(mean_generator(spec));
    const Vector mu0 = params.contains("mu0") ? vector_from_json(params.at("mu0"))
                                              : Vector::Ones(spec.n()).eval();
    const Vector ones = Vector::Ones(spec.n());
    const auto est = yaglom_estimate(spec, trip, mu0, t_large, cfg, {ones});
    rec.summary = {{"t_large", t_large},
                   {"survival_fraction", est.survival_fraction},
                   {"n_survivors", est.law.samples.size()},
                   {"laplace_ones", est.law.laplace(ones)},
                   {"laplace_ones_se", est.law.laplace_std_error(ones)},
                   {"mean_phi_mass", est.law.mean_of(trip.phi)},
                   {"mean_phi_mass_se", est.law.mean_of_std_error(trip.phi)},
                   {"staleness_ok", est.staleness_ok},
                   {"staleness_note", est.staleness_note}};
    rec.tables.emplace_back("yaglom_samples", law_csv(est.law));
    rec.exit_code = est.staleness_ok ? 0 : 1;
    return rec;
}

ResultRecord op_qprocess(const ModelSpec& spec, const json& params) {
    ResultRecord rec;
    SimConfig cfg = sim_config_from_json(params.value("config", json::object()));
    const double t = params.value("t", 4.0);
    const auto trip = eigen_triplet(mean_generator(spec));
    const Vector mu0 = params.contains("mu0") ? vector_from_json(params.at("mu0"))
                                              : Vector::Ones(spec.n()).eval();
    const Vector ones = Vector::Ones(spec.n());
    const auto ht = law_htransform(spec, trip, mu0, t, cfg);
    const bool weight_ok = std::abs(ht.mean_weight - 1.0) <= 3.0 * ht.mean_weight_se;
    rec.summary = {{"t", t},
                   {"mean_weight", ht.mean_weight},
                   {"mean_weight_se", ht.mean_weight_se},
                   {"mean_weight_ok", weight_ok},
                   {"ess", ht.ess},
                   {"laplace_ones", ht.law.laplace(ones)},
                   {"laplace_ones_se", ht.law.laplace_std_error(ones)}};
    rec.tables.emplace_back("qprocess_samples", law_csv(ht.law));
    rec.exit_code = weight_ok ? 0 : 1;
    return rec;
}

ResultRecord op_panel(const ModelSpec& spec, const json& params) {
    ResultRecord rec;
    SimConfig cfg = sim_config_from_json(params.value("config", json::object()));
    std::vector<double> t_grid = {2.0, 4.0, 6.0}, r_grid = {1.0, 2.0, 4.0};
    if (params.contains("t_grid")) t_grid = params.at("t_grid").get<std::vector<double>>();
    if (params.contains("r_grid")) r_grid = params.at("r_grid").get<std::vector<double>>();
    const auto trip = eigen_triplet(mean_generator(spec));
    const Vector mu0 = params.contains("mu0") ? vector_from_json(params.at("mu0"))
                                              : Vector::Ones(spec.n()).eval();
    const Vector f = params.contains("f") ? vector_from_json(params.at("f"))
                                          : Vector::Ones(spec.n()).eval();
    const auto panel = double_limit_panel(spec, trip, mu0, t_grid, r_grid, f, cfg);
    std::ostringstream csv;
    csv << "t,r,laplace,laplace_se\n";
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        for (std::size_t j = 0; j < r_grid.size(); ++j)
            csv << t_grid[i] << "," << r_grid[j] << "," << panel.laplace[i][j] << ","
                << panel.laplace_se[i][j] << "\n";
    rec.tables.emplace_back("double_limit_panel", csv.str());
    rec.summary = {{"t_grid", t_grid},
                   {"r_grid", r_grid},
                   {"norm_survival", panel.norm_survival},
                   {"mean_phi_conditioned_t0", panel.mean_phi_q_t0}};
    return rec;
}

ResultRecord op_spine(const ModelSpec& spec, const json& params) {
    ResultRecord rec;
    SimConfig sim = sim_config_from_json(params.value("config", json::object()));
    if (!params.contains("config")) sim.dt = 1e-3;
    sim.n_paths = 1;
    const double T = params.value("T", 8.0);
    const double eps = params.value("eps", 1e-2);
    const double delta_i = params.value("deltaI", 1e-2);
    const long n_real = params.value("n", 1000L);
    const auto trip = eigen_triplet(mean_generator(spec));
    const auto gen = spine_generator(spec, trip);
    const auto est = kappa_spine(spec, trip, gen, T, n_real, delta_i, eps, sim);
    const auto det = kappa_deterministic(spec, trip, std::max(20.0, 2.0 * T));

    json per_t = json::array();
    for (std::size_t i = 0; i < est.T.size(); ++i)
        per_t.push_back({{"T", est.T[i]}, {"estimate", est.estimate[i]}, {"se", est.std_error[i]}});
    rec.summary = {{"kappa", est.kappa},
                   {"kappa_se", est.kappa_se},
                   {"kappa_deterministic", det.kappa},
                   {"per_T", per_t},
                   {"zero_mass_samples", est.zero_mass_samples},
                   // first-order bias budget of the construction: continuous
                   // immigration truncated at mass eps, descendants stepped at dt
                   {"bias_budget", {{"eps", eps}, {"delta_I", delta_i}, {"dt", sim.dt}}}};

    const long n_cmp = params.value("compare_n", 0L);
    if (n_cmp > 0) {
        SimConfig cmp_sim = sim;
        cmp_sim.n_paths = params.value("compare_paths", 20000L);
        const Vector ones = Vector::Ones(spec.n());
        const auto cmp = spine_vs_htransform(spec, trip, gen, ones, params.value("compare_t", 2.0),
                                             {ones}, n_cmp, delta_i, eps, cmp_sim);
        json panel = json::array();
        for (const auto& rep : cmp.laplace_panel)
            panel.push_back({{"name", rep.name},
                             {"estimate", rep.estimate},
                             {"target", rep.target},
                             {"se", rep.std_error},
                             {"passed", rep.passed}});
        rec.summary["comparison_panel"] = panel;
        rec.summary["factorization"] = {{"estimate", cmp.factorization.estimate},
                                        {"target", cmp.factorization.target},
                                        {"passed", cmp.factorization.passed}};
    }
    return rec;
}

// ---- acceptance ------------------------------------------------------------

int run_accept(const std::string& suite_name, double scale) {
    AcceptanceSuite suite = AcceptanceSuite::Full;
    if (suite_name == "DETERMINISTIC")
        suite = AcceptanceSuite::Deterministic;
    else if (suite_name == "MONTECARLO")
        suite = AcceptanceSuite::MonteCarlo;
    else if (suite_name != "FULL")
        throw std::runtime_error("suite must be DETERMINISTIC, MONTECARLO or FULL");

    const auto results = run_acceptance(suite, scale);
    std::printf("%-4s %-50s %-12s %-12s %-10s %s\n", "id", "criterion / check", "estimate",
                "target", "tolerance", "pass");
    int failures = 0;
    for (const auto& cr : results) {
        if (!cr.passed()) ++failures;
        std::printf("%-4d %-50s %-12s %-12s %-10s %s  (%.1fs)\n", cr.id, cr.title.c_str(), "", "",
                    "", cr.passed() ? "PASS" : "FAIL", cr.seconds);
        for (const auto& c : cr.checks)
            std::printf("     %-50s %-12.5g %-12.5g %-10.3g %s\n", c.name.c_str(), c.estimate,
                        c.target, c.tolerance, c.passed ? "ok" : "FAIL");
    }
    std::printf("%zu criteria, %d failed\n", results.size(), failures);
    return failures == 0 ? 0 : 1;
}

// ---- dispatch and persistence ----------------------------------------------

using OpFn = ResultRecord (*)(const ModelSpec&, const json&);

OpFn lookup_op(const std::string& op) {
    if (op == "validate") return op_validate;
    if (op == "spectral") return op_spectral;
    if (op == "cumulant") return op_cumulant;
    if (op == "extinction") return op_extinction;
    if (op == "simulate") return op_simulate;
    if (op == "yaglom") return op_yaglom;
    if (op == "qprocess") return op_qprocess;
    if (op == "panel") return op_panel;
    if (op == "spine") return op_spine;
    throw std::runtime_error("unknown op: " + op);
}

fs::path store_root(const std::string& out_flag) {
    if (!out_flag.empty()) return out_flag;
    if (const char* env = std::getenv("LAB_RESULT_DIR")) return env;
    return "results";
}

int run_manifest(const std::string& manifest_path, const std::string& out_flag) {
    const std::string manifest_text = read_file(manifest_path);
    const json manifest = json::parse(manifest_text);
    const std::string op = manifest.at("op").get<std::string>();
    const std::string model_path = manifest.at("model").get<std::string>();
    const std::string model_text = read_file(model_path);
    const ModelSpec spec = model_from_json(model_text);

    json params = manifest.value("params", json::object());
    if (manifest.contains("seed")) {
        if (!params.contains("config")) params["config"] = json::object();
        params["config"]["seed"] = manifest.at("seed").get<std::uint64_t>();
    }
    ResultRecord rec = lookup_op(op)(spec, params);

    // content address: hash of the canonicalized manifest plus the model text,
    // so editing the model file yields a fresh entry
    const std::uint64_t hash = fnv1a(manifest.dump() + model_text);
    const fs::path dir = store_root(out_flag) / fs::path(hex64(hash));
    fs::create_directories(dir);

    json record = {{"manifest", manifest},
                   {"manifest_hash", hex64(hash)},
                   {"model_fingerprint", hex64(fingerprint_spec(spec))},
                   {"op", op},
                   {"summary", rec.summary}};
    json table_names = json::array();
    for (const auto& [name, _] : rec.tables) table_names.push_back(name + ".csv");
    record["tables"] = table_names;
    atomic_write(dir / "record.json", record.dump(2) + "\n");
    for (const auto& [name, csv] : rec.tables) atomic_write(dir / (name + ".csv"), csv);
    for (const auto& [name, blob] : rec.blobs) atomic_write(dir / name, blob);

    std::printf("%s\n", (dir / "record.json").string().c_str());
    return rec.exit_code;
}

void print_record(const ResultRecord& rec, const std::string& out_flag) {
    if (out_flag.empty()) {
        std::printf("%s\n", rec.summary.dump(2).c_str());
        for (const auto& [name, csv] : rec.tables) std::printf("# table %s\n%s", name.c_str(), csv.c_str());
    } else {
        const fs::path dir = out_flag;
        fs::create_directories(dir);
        atomic_write(dir / "summary.json", rec.summary.dump(2) + "\n");
        for (const auto& [name, csv] : rec.tables) atomic_write(dir / (name + ".csv"), csv);
        for (const auto& [name, blob] : rec.blobs) atomic_write(dir / name, blob);
        std::printf("%s\n", dir.string().c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for subcritical branching measure-valued processes"};
    app.require_subcommand(1);
    app.fallthrough(true);  // accept the shared flags after the subcommand name

    std::string config_path, out_dir, model_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    app.add_option("--config", config_path, "simulation config JSON")->configurable(false);
    app.add_option("--seed", seed, "RNG seed override")->each([&](const std::string&) { seed_set = true; });
    app.add_option("--out", out_dir, "output / result-store directory");
    app.add_option("--threads", threads, "worker threads for path simulation");

    // per-op parameters collected into one JSON blob
    json params = json::object();
    double opt_t = -1.0, opt_T = 8.0, opt_eps = 1e-2, opt_di = 1e-2, opt_scale = 1.0;
    long opt_n = 1000, opt_cmp = 0;
    std::vector<double> opt_f, opt_tgrid, opt_rgrid;
    bool opt_csv = false;
    std::string suite = "FULL", manifest_path, sim_out = "ensemble.bin";

    auto add_model_arg = [&](CLI::App* sub) {
        sub->add_option("model", model_path, "model JSON file")->required()->check(CLI::ExistingFile);
    };

    auto* c_validate = app.add_subcommand("validate", "check the standing model conditions");
    add_model_arg(c_validate);
    auto* c_spectral = app.add_subcommand("spectral", "leading eigen-triplet and remainder profile");
    add_model_arg(c_spectral);
    auto* c_cumulant = app.add_subcommand("cumulant", "cumulant flow V_t f on a grid");
    add_model_arg(c_cumulant);
    c_cumulant->add_option("--f", opt_f, "test function values per type");
    c_cumulant->add_option("--t", opt_t, "horizon");
    auto* c_ext = app.add_subcommand("extinction", "extinction transient v_t and survival");
    add_model_arg(c_ext);
    c_ext->add_option("--t", opt_t, "horizon");
    auto* c_sim = app.add_subcommand("simulate", "sample a path ensemble to a binary file");
    add_model_arg(c_sim);
    c_sim->add_option("--ensemble", sim_out, "ensemble output file");
    c_sim->add_flag("--csv", opt_csv, "also write a CSV mirror");
    auto* c_yag = app.add_subcommand("yaglom", "conditioned law at a large time");
    add_model_arg(c_yag);
    c_yag->add_option("--t", opt_t, "conditioning time");
    auto* c_qp = app.add_subcommand("qprocess", "eigen-mass reweighted marginal");
    add_model_arg(c_qp);
    c_qp->add_option("--t", opt_t, "marginal time");
    auto* c_panel = app.add_subcommand("panel", "conditional Laplace double-limit panel");
    add_model_arg(c_panel);
    c_panel->add_option("--t-grid", opt_tgrid, "observation times");
    c_panel->add_option("--r-grid", opt_rgrid, "conditioning lags");
    auto* c_spine = app.add_subcommand("spine", "spine decomposition estimates");
    add_model_arg(c_spine);
    c_spine->add_option("--T", opt_T, "largest window length");
    c_spine->add_option("--eps", opt_eps, "continuous-immigration mass");
    c_spine->add_option("--deltaI", opt_di, "discrete-immigration mass cutoff");
    c_spine->add_option("--n", opt_n, "number of realizations");
    c_spine->add_option("--compare-n", opt_cmp, "realizations for the reweighting comparison (0 = skip)");
    auto* c_accept = app.add_subcommand("accept", "run the acceptance criteria");
    c_accept->add_option("suite", suite, "DETERMINISTIC, MONTECARLO or FULL");
    c_accept->add_option("--scale", opt_scale, "Monte-Carlo path-count scale");
    auto* c_run = app.add_subcommand("run", "replay a manifest into the result store");
    c_run->add_option("--manifest", manifest_path, "manifest JSON file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_accept->parsed()) return run_accept(suite, opt_scale);
        if (c_run->parsed()) return run_manifest(manifest_path, out_dir);

        json cfg = config_path.empty() ? json::object() : json::parse(read_file(config_path));
        if (seed_set) cfg["seed"] = seed;
        if (threads > 0) cfg["threads"] = threads;
        params["config"] = cfg;
        if (opt_t >= 0.0) params["t"] = opt_t;
        if (!opt_f.empty()) params["f"] = opt_f;
        if (!opt_tgrid.empty()) params["t_grid"] = opt_tgrid;
        if (!opt_rgrid.empty()) params["r_grid"] = opt_rgrid;
        if (opt_csv) params["csv"] = true;
        if (c_spine->parsed()) {
            params["T"] = opt_T;
            params["eps"] = opt_eps;
            params["deltaI"] = opt_di;
            params["n"] = opt_n;
            if (opt_cmp > 0) params["compare_n"] = opt_cmp;
        }

        const ModelSpec spec = model_from_json(read_file(model_path));
        std::string op = app.get_subcommands().front()->get_name();
        ResultRecord rec = lookup_op(op)(spec, params);
        if (c_sim->parsed() && !rec.blobs.empty()) {
            // direct simulate writes the ensemble where asked instead of a store entry
            atomic_write(sim_out, rec.blobs.front().second);
            rec.blobs.clear();
            if (opt_csv && !rec.tables.empty()) {
                atomic_write(sim_out + ".csv", rec.tables.front().second);
                rec.tables.clear();
            }
            rec.summary["ensemble_file"] = sim_out;
            std::printf("%s\n", rec.summary.dump(2).c_str());
            return rec.exit_code;
        }
        print_record(rec, out_dir);
        return rec.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "lab: %s\n", e.what());
        return 2;
    }
}
