#include "irkwavelab/cli.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "irkwavelab/butcher.hpp"
#include "irkwavelab/optimizer.hpp"
#include "irkwavelab/problems.hpp"
#include "irkwavelab/spatial.hpp"
#include "irkwavelab/spectral.hpp"
#include "irkwavelab/timeloop.hpp"
#include "irkwavelab/verification.hpp"

namespace irkwl {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// `a:b:n` = n uniform samples inclusive; a bare number is a single sample.
std::vector<double> parse_range(const std::string& text) {
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) return {std::stod(text)};
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos)
        throw std::invalid_argument("range '" + text + "' must look like a:b:n");
    const double a = std::stod(text.substr(0, c1));
    const double b = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    const int n = std::stoi(text.substr(c2 + 1));
    if (n < 1) throw std::invalid_argument("range '" + text + "': sample count must be >= 1");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    if (n == 1) {
        out.push_back(a);
    } else {
        for (int i = 0; i < n; ++i)
            out.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return out;
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char ch : s)
        out += (std::isalnum(static_cast<unsigned char>(ch)) != 0 ? ch : '_');
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Collects emitted artifacts and per-check outcomes; written as
// <output-dir>/manifest.json after everything else (so a complete manifest
// implies a complete run).
struct Manifest {
    std::string command;
    std::string output_dir;
    nlohmann::json config = nlohmann::json::object();
    std::vector<std::string> artifacts;
    nlohmann::json checks = nlohmann::json::object();
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    std::string path_for(const std::string& filename) {
        std::filesystem::create_directories(output_dir);
        std::string p = output_dir + "/" + filename;
        artifacts.push_back(p);
        return p;
    }
    void write() {
        nlohmann::json j;
        j["command"] = command;
        j["config"] = config;
        j["tool_version"] = kVersion;
        j["artifacts"] = artifacts;
        j["checks"] = checks;
        j["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::filesystem::create_directories(output_dir);
        std::ofstream out(output_dir + "/manifest.json");
        out << j.dump(1) << "\n";
    }
};

// Scheme argument: registry name, or a path to a tableau JSON file.
Tableau resolve_tableau(const std::string& arg) {
    if (std::filesystem::exists(arg) && !std::filesystem::is_directory(arg))
        return tableau_from_json_file(arg);
    return builtin_scheme(arg);
}

int cmd_schemes(const std::string& action, const std::string& name) {
    if (action == "show") {
        std::cout << tableau_to_json(builtin_scheme(name)) << "\n";
        return 0;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-8s %6s %6s %6s %6s %12s %12s\n", "name", "stages", "order",
                  "p", "q", "phi[0,pi]", "a[0,pi]");
    std::cout << buf;
    for (const auto& n : registry_names()) {
        const VerifyReport r = verify_scheme(builtin_scheme(n));
        char pbuf[16], qbuf[16];
        if (r.dissipative.infinite)
            std::snprintf(pbuf, sizeof pbuf, "inf");
        else
            std::snprintf(pbuf, sizeof pbuf, "%d", r.dissipative.p);
        if (r.dispersive < 0)
            std::snprintf(qbuf, sizeof qbuf, "-");
        else
            std::snprintf(qbuf, sizeof qbuf, "%d", r.dispersive);
        std::snprintf(buf, sizeof buf, "%-8s %6d %6d %6s %6s %12.6e %12.6e\n", n.c_str(), r.stages,
                      r.classical_order, pbuf, qbuf, r.phi_norm, r.a_norm);
        std::cout << buf;
    }
    return 0;
}

int cmd_analyze(const std::string& scheme, int samples, Manifest& man) {
    if (samples < 16) {
        std::cerr << "analyze: --samples must be at least 16\n";
        return 2;
    }
    const Tableau tab = resolve_tableau(scheme);
    const SpectralCurve curve = sample_curve(tab, samples);
    const std::string base = "analyze_" + sanitize(tab.name);
    {
        std::ofstream os(man.path_for(base + ".csv"));
        curve.write_csv(os);
    }
    const VerifyReport rep = verify_scheme(tab);
    const std::string rj = report_to_json(rep);
    {
        std::ofstream os(man.path_for(base + "_report.json"));
        os << rj << "\n";
    }
    std::cout << rj << "\n";
    man.checks["analyzed"] = tab.name;
    return 0;
}

int cmd_optimize(int family_stages, const std::string& alpha_text,
                 const std::string& closures_file, const std::string& near,
                 Manifest& man) {
    const Family fam = family_stages == 2 ? Family::TwoStage : Family::ThreeStage;
    WeightedObjective obj{fam, 0.0, false};
    if (alpha_text == "inf" || alpha_text == "INF" || alpha_text == "Inf") {
        obj.asymptotic = true;
    } else {
        obj.alpha = std::stod(alpha_text);
        if (obj.alpha < 0.0) throw std::invalid_argument("optimize: alpha must be >= 0 or 'inf'");
    }
    const ConstraintSet cs = ConstraintSet::parse(read_file(closures_file), fam);

    const double param = minimize_param(obj);
    const double norm = weighted_phase_norm(obj, param);
    std::cout << "family:       " << (fam == Family::TwoStage ? "two-stage" : "three-stage")
              << "\n";
    std::cout << "alpha:        " << (obj.asymptotic ? std::string("inf") : num(obj.alpha)) << "\n";
    std::cout << "param_min:    " << (fam == Family::TwoStage ? "Y = " : "X = ") << num(param)
              << "\n";
    std::cout << "norm_at_min:  " << num(norm) << "\n";
    std::cout << "closures:     " << cs.closures.size() << (cs.order_bump ? " (+ order >= 3)" : "")
              << "\n";

    Tableau hint;
    const Tableau* hint_ptr = nullptr;
    if (!near.empty()) {
        hint = resolve_tableau(near);
        hint_ptr = &hint;
        std::cout << "tie-break:    nearest converged root to '" << hint.name << "'\n";
    } else {
        std::cout << "tie-break:    bounded root with smallest max |a_rs|\n";
    }
    const Tableau tab = fam == Family::TwoStage ? solve_two_stage(param, cs, hint_ptr)
                                                : solve_three_stage(param, cs, hint_ptr);
    double rmax = 0.0;
    for (double r : family_residuals(tab, param, cs)) rmax = std::max(rmax, std::abs(r));
    std::cout << "max_residual: " << num(rmax) << "\n";

    const std::string tj = tableau_to_json(tab);
    {
        std::ofstream os(man.path_for("optimized_tableau.json"));
        os << tj << "\n";
    }
    std::cout << tj << "\n";
    const std::string rj = report_to_json(verify_scheme(tab));
    {
        std::ofstream os(man.path_for("optimized_report.json"));
        os << rj << "\n";
    }
    std::cout << rj << "\n";
    man.checks["param_min"] = param;
    man.checks["max_residual"] = rmax;
    return 0;
}

int cmd_map(const std::string& scheme, const std::string& op_name, int nodes,
            const std::string& probe_text, const std::string& nc_range,
            const std::string& kh_range, Manifest& man) {
    const Tableau tab = resolve_tableau(scheme);
    const OperatorKind kind = operator_kind_from_string(op_name);
    const SpatialOperator op = build_operator(kind, nodes, 1.0, BoundaryKind::Periodic);
    const int probe = probe_text == "mid" ? nodes / 2 : std::stoi(probe_text);
    const std::vector<double> ncs = parse_range(nc_range);
    const std::vector<double> khs = parse_range(kh_range);

    const VelocityMap map = velocity_map(op, tab, ncs, khs, probe);
    {
        std::ofstream os(man.path_for("map_" + sanitize(tab.name) + "_" + sanitize(op_name) + ".csv"));
        map.write_csv(os);
    }
    for (double nc : ncs) {
        try {
            const double th = qwave_threshold(op, tab, nc);
            std::cout << "q-wave threshold at N_c=" << num(nc) << ": kh = " << num(th) << "\n";
            man.checks["qwave_nc_" + num(nc)] = th;
        } catch (const std::exception& e) {
            std::cout << "q-wave threshold at N_c=" << num(nc) << ": " << e.what() << "\n";
        }
    }
    return 0;
}

int cmd_run(const std::string& config_path, Manifest& man) {
    const nlohmann::json cfg =
        nlohmann::json::parse(read_file(config_path), nullptr, true, /*ignore_comments=*/true);
    man.config = cfg;
    const int problem = cfg.at("problem").get<int>();
    const std::string scheme = cfg.at("scheme").get<std::string>();
    const std::string out_name =
        cfg.value("output", std::string("run_p") + std::to_string(problem) + "_" + sanitize(scheme) +
                                ".csv");
    std::ofstream os(man.path_for(out_name));

    // A zero-length run is legal: emit the header only.
    const bool empty_run = cfg.contains("t_end") && cfg.at("t_end").get<double>() <= 0.0;

    auto snapshot = [&](const std::vector<double>& u, double h) {
        if (!cfg.value("snapshot", false)) return;
        std::ofstream fs(man.path_for(out_name + ".field.csv"));
        fs << "x,u\n";
        for (std::size_t j = 0; j < u.size(); ++j)
            fs << num(static_cast<double>(j) * h) << "," << num(u[j]) << "\n";
    };

    switch (problem) {
        case 1:
        case 2: {
            os << "problem,scheme,dt,t_end,error\n";
            if (empty_run) break;
            const double dt = cfg.at("dt").get<double>();
            const double t_star = cfg.value("t_end", 0.768);
            const double err =
                problem == 1 ? run_problem1(scheme, dt, t_star) : run_problem2(scheme, dt, t_star);
            os << problem << "," << scheme << "," << num(dt) << "," << num(t_star) << ","
               << num(err) << "\n";
            man.checks["error"] = err;
            break;
        }
        case 3: {
            os << "problem,scheme,nc,k,t_end,steps,rms_error\n";
            if (empty_run) break;
            const double nc = cfg.at("nc").get<double>();
            const double k = cfg.value("k", 4.0);
            const double t_end = cfg.value("t_end", 20.0);
            const Problem3Result r = run_problem3(scheme, nc, k, t_end);
            os << problem << "," << scheme << "," << num(nc) << "," << num(k) << ","
               << num(r.t_end) << "," << r.steps << "," << num(r.rms_error) << "\n";
            snapshot(r.u, 0.01);
            man.checks["rms_error"] = r.rms_error;
            break;
        }
        case 4: {
            os << "problem,scheme,nc,rms_error\n";
            if (empty_run) break;
            const double nc = cfg.at("nc").get<double>();
            const double err = run_problem4(scheme, nc);
            os << problem << "," << scheme << "," << num(nc) << "," << num(err) << "\n";
            man.checks["rms_error"] = err;
            break;
        }
        case 5: {
            os << "problem,scheme,nc,t_end,midpoint,exact_midpoint,max_err_location,overshoot,"
                  "undershoot,l1_error_outside\n";
            if (empty_run) break;
            const double nc = cfg.value("nc", 1.0);
            const double t_end = cfg.value("t_end", 0.9);
            const Problem5Result r = run_problem5(scheme, nc, t_end);
            os << problem << "," << scheme << "," << num(nc) << "," << num(t_end) << ","
               << num(r.midpoint) << "," << num(r.exact_midpoint) << ","
               << num(r.max_err_location) << "," << num(r.overshoot) << "," << num(r.undershoot)
               << "," << num(r.l1_error_outside) << "\n";
            snapshot(r.u, 0.005);
            man.checks["midpoint"] = r.midpoint;
            break;
        }
        case 6: {
            os << "problem,scheme,variant,nc,domain,t_end,steps,krylov_iterations,"
                  "rms_vs_transport,rms_vs_semidiscrete\n";
            if (empty_run) break;
            const double nc = cfg.at("nc").get<double>();
            const std::string variant = cfg.value("variant", std::string("two-stage"));
            const double domain = cfg.value("domain", 60.0);
            Problem6Config pc =
                variant == "three-stage" ? problem6_three_stage(domain) : problem6_two_stage(domain);
            if (cfg.contains("t_end")) pc.t_end = cfg.at("t_end").get<double>();
            const Problem6Result r = run_problem6(scheme, nc, pc);
            os << problem << "," << scheme << "," << variant << "," << num(nc) << ","
               << num(domain) << "," << num(pc.t_end) << "," << r.steps << ","
               << r.krylov_iterations << "," << num(r.rms_vs_transport) << ","
               << num(r.rms_vs_semidiscrete) << "\n";
            man.checks["rms_vs_transport"] = r.rms_vs_transport;
            break;
        }
        default:
            throw std::invalid_argument("run: config field 'problem' must be in 1..6");
    }
    return 0;
}

int cmd_verify(int table_no, bool all, int jobs, const std::string& profile, Manifest& man) {
    std::vector<CriterionResult> results;
    if (all) {
        for (int id : all_criteria()) results.push_back(run_criterion(id, jobs));
    } else {
        results.push_back(verify_table(table_no, jobs));
    }
    bool as_documented = true;
    bool all_pass = true;
    std::ostringstream report;
    for (const auto& r : results) {
        report << "criterion " << r.id << ": " << (r.pass ? "PASS" : "FAIL") << "  " << r.title
               << "\n";
        for (const auto& d : r.details) report << d << "\n";
        all_pass = all_pass && r.pass;
        as_documented = as_documented && (r.pass == criterion_expected_pass(r.id));
        man.checks["criterion_" + std::to_string(r.id)] = r.pass;
    }
    const bool ok = profile == "strict" ? all_pass : as_documented;
    report << (all ? "overall: " : "table check: ") << (ok ? "PASS" : "FAIL") << " (profile "
           << profile << ")\n";
    if (!all_pass && ok)
        report << "note: failing cells match the documented reference-value discrepancies; "
                  "rerun with --tol-profile strict to treat them as errors\n";
    std::cout << report.str();
    std::ofstream os(man.path_for(all ? "verify_all.txt"
                                      : "verify_table" + std::to_string(table_no) + ".txt"));
    os << report.str();
    man.checks["overall"] = ok;
    return ok ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"minimal-dissipation implicit Runge-Kutta scheme laboratory"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string output_dir = ".";
    int jobs = 1;
    std::string tol_profile = "paper";
    app.add_option("--output-dir", output_dir, "directory for emitted files")
        ->capture_default_str();
    app.add_option("--jobs", jobs, "worker threads for independent runs")->capture_default_str();
    app.add_option("--tol-profile", tol_profile,
                   "verify exit-code policy: 'paper' accepts the documented reference "
                   "discrepancies, 'strict' requires every criterion to pass")
        ->check(CLI::IsMember({"paper", "strict"}));

    auto* sch = app.add_subcommand("schemes", "list the registry or show one tableau as JSON");
    std::string sch_action = "list", sch_name;
    sch->add_option("action", sch_action, "list | show")->check(CLI::IsMember({"list", "show"}));
    sch->add_option("name", sch_name, "scheme name for 'show'");

    auto* ana = app.add_subcommand("analyze", "spectral curve CSV + analysis report JSON");
    std::string ana_scheme;
    int ana_samples = 512;
    ana->add_option("scheme", ana_scheme, "registry name or tableau JSON file")->required();
    ana->add_option("--samples", ana_samples, "sigma samples on [0,pi] (min 16)")
        ->capture_default_str();

    auto* opt = app.add_subcommand("optimize", "derive a tableau from alpha + closure equations");
    int opt_family = 2;
    std::string opt_alpha = "0", opt_closures, opt_near;
    opt->add_option("--family", opt_family, "2 or 3 stages")->check(CLI::IsMember({2, 3}))
        ->required();
    opt->add_option("--alpha", opt_alpha, "weight exponent (>= 0) or 'inf'")->required();
    opt->add_option("--closures", opt_closures, "file with one closure equation per line")
        ->required();
    opt->add_option("--near", opt_near, "tie-break root nearest to this scheme/file");

    auto* map = app.add_subcommand("map", "phase/group-velocity map CSV over (N_c, kh)");
    std::string map_scheme, map_op = "Lele6", map_probe = "mid", map_nc = "0.25:4:16",
                map_kh = "0.1:3.0:30";
    int map_nodes = 501;
    map->add_option("--scheme", map_scheme, "registry name or tableau JSON file")->required();
    map->add_option("--operator", map_op, "Lele6 | CD6 | FDs13p | FDo13p")->capture_default_str();
    map->add_option("--nodes", map_nodes, "grid nodes (periodic)")->capture_default_str();
    map->add_option("--probe", map_probe, "probe node index or 'mid'")->capture_default_str();
    map->add_option("--nc", map_nc, "N_c range a:b:n")->capture_default_str();
    map->add_option("--kh", map_kh, "kh range a:b:n")->capture_default_str();

    auto* run = app.add_subcommand("run", "execute one benchmark run from a JSON config");
    std::string run_config;
    run->add_option("--config", run_config, "JSON run configuration")->required();

    auto* ver = app.add_subcommand("verify", "reproduce published tables / acceptance criteria");
    int ver_table = 0;
    bool ver_all = false;
    ver->add_option("--table", ver_table, "published table number (9..14)");
    ver->add_flag("--all", ver_all, "run all 15 criteria");

    std::vector<char*> argv;
    std::vector<std::string> storage;
    storage.push_back("irkwavelab");
    for (const auto& a : args) storage.push_back(a);
    argv.reserve(storage.size());
    for (auto& s : storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    Manifest man;
    man.output_dir = output_dir;
    try {
        int rc = 0;
        if (sch->parsed()) {
            if (sch_action == "show" && sch_name.empty()) {
                std::cerr << "schemes show: missing scheme name\n";
                return 2;
            }
            return cmd_schemes(sch_action, sch_name);  // no artifacts, no manifest
        } else if (ana->parsed()) {
            man.command = "analyze";
            rc = cmd_analyze(ana_scheme, ana_samples, man);
        } else if (opt->parsed()) {
            man.command = "optimize";
            rc = cmd_optimize(opt_family, opt_alpha, opt_closures, opt_near, man);
        } else if (map->parsed()) {
            man.command = "map";
            rc = cmd_map(map_scheme, map_op, map_nodes, map_probe, map_nc, map_kh, man);
        } else if (run->parsed()) {
            man.command = "run";
            rc = cmd_run(run_config, man);
        } else if (ver->parsed()) {
            if (ver_all == (ver_table != 0)) {
                std::cerr << "verify: pass exactly one of --table N or --all\n";
                return 2;
            }
            man.command = "verify";
            rc = cmd_verify(ver_table, ver_all, jobs, tol_profile, man);
        }
        if (rc == 0 || rc == 1) man.write();
        return rc;
    } catch (const std::out_of_range& e) {  // registry lookups
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {  // config/tableau parse errors
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {  // bad inputs, ranges, closures
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {  // failed runs / solver errors
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace irkwl
