// Command-line driver, exercised in-process: exit codes, emitted artifacts,
// and the manifest, for every subcommand.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "irkwavelab/butcher.hpp"
#include "irkwavelab/cli.hpp"

using namespace irkwl;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    std::ostringstream cap_out, cap_err;
    std::streambuf* old_out = std::cout.rdbuf(cap_out.rdbuf());
    std::streambuf* old_err = std::cerr.rdbuf(cap_err.rdbuf());
    CliResult r;
    try {
        r.code = run_cli(args);
    } catch (...) {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
        throw;
    }
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    r.out = cap_out.str();
    r.err = cap_err.str();
    return r;
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& label) {
    const fs::path dir = fs::temp_directory_path() / ("irkwl_cli_" + label);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("schemes list and show") {
    CliResult r = run({"schemes", "list"});
    CHECK(r.code == 0);
    CHECK(r.out.find("IRK36") != std::string::npos);

    r = run({"schemes", "show", "S3D1"});
    CHECK(r.code == 0);
    CHECK(r.out.find("\"name\"") != std::string::npos);
    CHECK(r.out.find("S3D1") != std::string::npos);
    // The printed JSON round-trips through the tableau reader.
    CHECK_NOTHROW(tableau_from_json(r.out));

    CHECK(run({"schemes", "show"}).code == 2);
    CHECK(run({"schemes", "show", "S9Z9"}).code == 2);
}

TEST_CASE("analyze emits curve, report, and manifest") {
    const fs::path dir = scratch("analyze");
    CliResult r = run({"--output-dir", dir.string(), "analyze", "S2A1", "--samples", "64"});
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "analyze_S2A1.csv"));
    CHECK(fs::exists(dir / "analyze_S2A1_report.json"));
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(slurp(dir / "analyze_S2A1.csv").substr(0, 5) == "sigma");
    CHECK(r.out.find("\"dispersion_norm\"") != std::string::npos);

    CHECK(run({"analyze", "S2A1", "--samples", "8"}).code == 2);
}

TEST_CASE("optimize derives a tableau from closures") {
    const fs::path dir = scratch("optimize");
    const fs::path closures = dir / "closures.txt";
    std::string text;
    for (const auto& line : scheme_info("S2A1").closures) text += line + "\n";
    write_file(closures, text);

    CliResult r = run({"--output-dir", dir.string(), "optimize", "--family", "2", "--alpha", "0",
                       "--closures", closures.string(), "--near", "S2A1"});
    CHECK(r.code == 0);
    CHECK(r.out.find("param_min") != std::string::npos);
    REQUIRE(fs::exists(dir / "optimized_tableau.json"));
    const Tableau tab = tableau_from_json_file((dir / "optimized_tableau.json").string());
    const Tableau& ref = builtin_scheme("S2A1");
    for (size_t k = 0; k < tab.A.size(); ++k)
        CHECK(tab.A[k] == doctest::Approx(ref.A[k]).epsilon(1e-6));

    // Unparsable closure lines surface as usage errors.
    write_file(closures, "b1 + = 2\n");
    CHECK(run({"--output-dir", dir.string(), "optimize", "--family", "2", "--alpha", "0",
               "--closures", closures.string()})
              .code == 2);
}

TEST_CASE("run executes benchmark configs") {
    const fs::path dir = scratch("run");
    const fs::path cfg = dir / "p1.json";
    write_file(cfg, "{\"problem\": 1, \"scheme\": \"S2A1\", \"dt\": 0.008}");
    CliResult r = run({"--output-dir", dir.string(), "run", "--config", cfg.string()});
    CHECK(r.code == 0);
    const std::string csv = slurp(dir / "run_p1_S2A1.csv");
    CHECK(csv.substr(0, 7) == "problem");
    // error column of the single data row, against the reference table cell
    const size_t last_comma = csv.find_last_of(',');
    CHECK(std::stod(csv.substr(last_comma + 1)) == doctest::Approx(5.8332e-4).epsilon(0.01));

    // Zero-length runs emit the header only.
    write_file(cfg, "{\"problem\": 3, \"scheme\": \"IRK24\", \"nc\": 1.0, \"t_end\": 0.0}");
    r = run({"--output-dir", dir.string(), "run", "--config", cfg.string()});
    CHECK(r.code == 0);
    const std::string header_only = slurp(dir / "run_p3_IRK24.csv");
    CHECK(header_only.find("rms_error") != std::string::npos);
    CHECK(header_only.find('\n') == header_only.size() - 1);

    write_file(cfg, "{\"problem\": 1, \"scheme\": \"S9Z9\", \"dt\": 0.01}");
    CHECK(run({"--output-dir", dir.string(), "run", "--config", cfg.string()}).code == 2);
    write_file(cfg, "{\"problem\": 99, \"scheme\": \"S2A1\"}");
    CHECK(run({"--output-dir", dir.string(), "run", "--config", cfg.string()}).code == 2);
    write_file(cfg, "{not json");
    CHECK(run({"--output-dir", dir.string(), "run", "--config", cfg.string()}).code == 2);
}

TEST_CASE("map emits the velocity-map CSV and thresholds") {
    const fs::path dir = scratch("map");
    CliResult r = run({"--output-dir", dir.string(), "map", "--scheme", "IRK24", "--operator",
                       "CD6", "--nodes", "64", "--nc", "0.5:1.0:2", "--kh", "0.1:2.0:5"});
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "map_IRK24_CD6.csv"));
    CHECK(slurp(dir / "map_IRK24_CD6.csv").substr(0, 2) == "nc");
    CHECK(r.out.find("q-wave threshold") != std::string::npos);
}

TEST_CASE("verify reproduces a published table") {
    const fs::path dir = scratch("verify");
    // Table 10 - the forced-oscillator error table - is the fastest one.
    CliResult r = run({"--output-dir", dir.string(), "verify", "--table", "10"});
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "verify_table10.txt"));
    const std::string report = slurp(dir / "verify_table10.txt");
    CHECK(report.find("criterion 9") != std::string::npos);
    CHECK(report.find("table check: PASS") != std::string::npos);

    CHECK(run({"verify"}).code == 2);                              // neither --table nor --all
    CHECK(run({"verify", "--table", "10", "--all"}).code == 2);    // both
    CHECK(run({"verify", "--table", "99"}).code == 2);             // unknown table
}

TEST_CASE("global argument handling") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"--version"}).code == 0);
    CHECK(run({}).code == 2);                       // a subcommand is required
    CHECK(run({"--frobnicate"}).code == 2);
    CHECK(run({"--tol-profile", "loose", "schemes", "list"}).code == 2);
}
