#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Sandbox {
    fs::path dir;
    Sandbox() {
        dir = fs::temp_directory_path() /
              ("wgqed_cli_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }
    static int& counter() {
        static int c = 0;
        return c;
    }

    fs::path write(const std::string& name, const std::string& content) const {
        const fs::path p = dir / name;
        std::ofstream out(p);
        out << content;
        return p;
    }
};

int run(const std::string& args) {
    const std::string cmd = std::string(WGQED_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string kBaseConfig = R"({
  "model": {"M": 1.0, "k_c": 5.0, "lambda": 0.1},
  "emitter": {"omega0": "auto", "d": 3.141592653589793, "n": 1},
  "output": {"format": "both"}
})";

}  // namespace

TEST_CASE("solve: zero coupling reports p_at = 1") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", kBaseConfig);
    const int rc = run("--config " + cfg.string() + " --set model.lambda=0 --out " +
                       sb.dir.string() + " solve");
    CHECK(rc == 0);
    const auto j = json::parse(slurp(sb.dir / "solution.json"));
    CHECK(j.at("status") == "ok");
    CHECK(j.at("p_at").get<double>() == 1.0);
}

TEST_CASE("solve: alternative coupling profile selected in config") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", kBaseConfig);
    const int rc = run("--config " + cfg.string() +
                       " --set model.coupling=flat_gauss --out " + sb.dir.string() +
                       " solve");
    CHECK(rc == 0);
    const auto j = json::parse(slurp(sb.dir / "solution.json"));
    CHECK(j.at("status") == "ok");
    CHECK(j.at("p_at").get<double>() < 1.0);
    CHECK(run("--config " + cfg.string() + " --set model.coupling=nope --out " +
              sb.dir.string() + " solve") == 2);
}

TEST_CASE("solve: residuals within contract at lambda = 0.1") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", kBaseConfig);
    const int rc = run("--config " + cfg.string() + " --out " + sb.dir.string() + " solve");
    CHECK(rc == 0);
    const auto j = json::parse(slurp(sb.dir / "solution.json"));
    CHECK(j.at("residuals").at("emitter_A").get<double>() <= 1e-10);
    CHECK(j.at("residuals").at("emitter_B").get<double>() <= 1e-10);
    CHECK(j.at("residuals").at("field_sup").get<double>() <= 1e-12);
    CHECK(j.at("kind") == "bic");
}

TEST_CASE("strict config: unknown keys abort with exit 2") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", R"({"model": {"M": 1.0, "lambdaa": 0.1}})");
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() + " solve") == 2);

    const auto cfg2 = sb.write("c2.json", R"({"emitters": {}})");
    CHECK(run("--config " + cfg2.string() + " --out " + sb.dir.string() + " solve") == 2);
}

TEST_CASE("config errors: missing file, bad JSON, both auto") {
    Sandbox sb;
    CHECK(run("--config /nonexistent.json solve") == 2);
    const auto bad = sb.write("bad.json", "{ not json");
    CHECK(run("--config " + bad.string() + " solve") == 2);
    const auto both = sb.write("both.json",
                               R"({"emitter": {"omega0": "auto", "d": "auto"}})");
    CHECK(run("--config " + both.string() + " solve") == 2);
}

TEST_CASE("solve: no-solution exits 3 and records the status") {
    Sandbox sb;
    // Bracket with no sign change of F(d).
    const auto cfg = sb.write("c.json", R"({
      "emitter": {"omega0": 1.4142135623730951, "d": "auto", "n": 1},
      "solver": {"d_bracket": [2.75, 2.9]}
    })");
    const int rc = run("--config " + cfg.string() + " --out " + sb.dir.string() + " solve");
    CHECK(rc == 3);
    const auto j = json::parse(slurp(sb.dir / "solution.json"));
    CHECK(j.at("status") == "no_solution");

    // Detuned concrete pair.
    const auto cfg2 = sb.write("c2.json", R"({
      "emitter": {"omega0": 1.5, "d": 3.141592653589793, "n": 1}
    })");
    CHECK(run("--config " + cfg2.string() + " --out " + sb.dir.string() + " solve") == 3);
}

TEST_CASE("below-threshold solve") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", R"({
      "model": {"lambda": 0.3},
      "emitter": {"omega0": 1.1, "d": 3.141592653589793, "kind": "below_threshold",
                   "parity": "antisymmetric"}
    })");
    const int rc = run("--config " + cfg.string() + " --out " + sb.dir.string() + " solve");
    CHECK(rc == 0);
    const auto j = json::parse(slurp(sb.dir / "solution.json"));
    CHECK(j.at("kind") == "below_threshold");
    CHECK(j.at("E").get<double>() < 1.0);

    // Decoupled: no bound state below threshold.
    const int rc2 = run("--config " + cfg.string() + " --set model.lambda=0 --out " +
                        sb.dir.string() + " solve");
    CHECK(rc2 == 3);
}

TEST_CASE("scan outputs are deterministic and gnuplot friendly") {
    Sandbox sb1, sb2;
    const auto cfg1 = sb1.write("c.json", kBaseConfig);
    const std::string args = " scan --axis lambda --values 0.0125,0.025,0.05";
    CHECK(run("--config " + cfg1.string() + " --out " + sb1.dir.string() + args) == 0);
    CHECK(run("--config " + cfg1.string() + " --out " + sb2.dir.string() + args) == 0);
    const auto csv1 = slurp(sb1.dir / "scan.csv");
    const auto csv2 = slurp(sb2.dir / "scan.csv");
    CHECK(csv1 == csv2);
    CHECK(!csv1.empty());
    CHECK(csv1[0] == '#');
    CHECK(csv1.find("param,value,E,kbar,p_at,omega0,status") != std::string::npos);
    CHECK(slurp(sb1.dir / "scan.json") == slurp(sb2.dir / "scan.json"));
}

TEST_CASE("one-point scan equals solve") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", kBaseConfig);
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() + " solve") == 0);
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() +
              " scan --axis d --values 3.141592653589793") == 0);
    const auto sol = json::parse(slurp(sb.dir / "solution.json"));
    const auto rows = json::parse(slurp(sb.dir / "scan.json"));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].at("status") == "ok");
    CHECK(rows[0].at("E").get<double>() == sol.at("E").get<double>());
    CHECK(rows[0].at("p_at").get<double>() == sol.at("p_at").get<double>());
    CHECK(rows[0].at("omega0").get<double>() == sol.at("omega0").get<double>());
}

TEST_CASE("scan across a non-resonant region marks every row") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", R"({
      "emitter": {"omega0": 1.4142135623730951, "d": 3.141592653589793, "n": 1}
    })");
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() +
              " scan --axis d --range 2.6:2.9:4") == 0);
    const auto rows = json::parse(slurp(sb.dir / "scan.json"));
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) CHECK(r.at("status") == "no_solution");
}

TEST_CASE("fock subcommand: closed-form numbers and the documented discrepancy") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", kBaseConfig);
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() +
              " fock --N 2 --p-at 1.0") == 0);
    const auto j = json::parse(slurp(sb.dir / "fock.json"));
    CHECK(j.at("N") == 2);
    CHECK(j.at("C")[0].get<double>() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(j.at("C")[1].get<double>() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(j.at("C")[2].get<double>() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(j.at("purity").get<double>() == doctest::Approx(0.375).epsilon(1e-14));
    const auto& v = j.at("verification");
    CHECK(v.at("discrepancy_documented") == true);
    CHECK(v.at("two_excitation_derived")[1].get<double>() ==
          doctest::Approx(0.7071067811865476).epsilon(1e-12));
    CHECK(v.at("two_excitation_displayed")[1].get<double>() ==
          doctest::Approx(2.0 / std::sqrt(6.0)).epsilon(1e-12));
    CHECK(v.at("bosonic_oracle_deviation").get<double>() <= 1e-12);
    // CSV table of C_l.
    const auto table = slurp(sb.dir / "fock.csv");
    CHECK(table.find("l,C_l") != std::string::npos);
}

TEST_CASE("fock N=1 purity at unit weight") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", kBaseConfig);
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() +
              " fock --N 1 --p-at 1.0") == 0);
    const auto j = json::parse(slurp(sb.dir / "fock.json"));
    CHECK(j.at("purity").get<double>() == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("evolve: zero horizon gives a single trajectory row") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", R"({
      "emitter": {"omega0": "auto", "d": 3.141592653589793, "n": 1},
      "dynamics": {"cells": 25, "modes_per_unit": 4, "horizon": 0.0, "samples": 50}
    })");
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() +
              " evolve --initial psiN") == 0);
    const auto csv = slurp(sb.dir / "trajectory.csv");
    int data_rows = 0;
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] != '#' && line[0] != 't') ++data_rows;
    CHECK(data_rows == 1);
    const auto j = json::parse(slurp(sb.dir / "evolve.json"));
    CHECK(j.at("manifest").at("samples") == 1);
}

TEST_CASE("evolve: relaxation toward the bound state") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", R"({
      "emitter": {"omega0": "auto", "d": 3.141592653589793, "n": 1},
      "dynamics": {"cells": 25, "modes_per_unit": 4, "samples": 60,
                    "horizon_factor": 0.6, "tol": 1e-9}
    })");
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() +
              " evolve --initial psiN") == 0);
    const auto j = json::parse(slurp(sb.dir / "evolve.json"));
    const double asym = j.at("asymptote_P_at").get<double>();
    const double expected = j.at("expected_asymptote").get<double>();
    CHECK(std::abs(asym / expected - 1.0) < 0.05);
    CHECK(j.at("max_norm_drift").get<double>() <= 1e-8);
    CHECK(j.at("max_energy_drift").get<double>() <= 1e-8);
    CHECK(j.at("manifest").at("N_modes") == 201);
}

TEST_CASE("evolve: two-excitation sector runs on a small grid") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", R"({
      "emitter": {"omega0": "auto", "d": 3.141592653589793, "n": 1},
      "dynamics": {"cells": 10, "modes_per_unit": 2, "sector": 2,
                    "horizon": 30.0, "samples": 20, "tol": 1e-8}
    })");
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() +
              " evolve --initial psiN") == 0);
    const auto j = json::parse(slurp(sb.dir / "evolve.json"));
    CHECK(j.at("sector") == 2);
    CHECK(j.at("manifest").at("N_modes") == 41);
    CHECK(j.at("max_norm_drift").get<double>() <= 1e-8);
}

TEST_CASE("evolve: custom initial state from file") {
    Sandbox sb;
    const auto state = sb.write("state.json", R"({
      "amplitudes": [{"index": 0, "re": 1.0, "im": 0.0}]
    })");
    const auto cfg = sb.write("c.json", R"({
      "emitter": {"omega0": "auto", "d": 3.141592653589793, "n": 1},
      "dynamics": {"cells": 10, "modes_per_unit": 2, "horizon": 10.0,
                    "samples": 10, "custom_state_path": ")" +
                                            state.string() + R"("}
    })");
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() +
              " evolve --initial custom") == 0);
    const auto j = json::parse(slurp(sb.dir / "evolve.json"));
    CHECK(j.at("initial") == "custom");
    CHECK_FALSE(j.contains("expected_asymptote"));
}

TEST_CASE("verify: default configuration passes, loosened tolerance fails") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", kBaseConfig);
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() + " verify") == 0);
    const auto j = json::parse(slurp(sb.dir / "verify_report.json"));
    CHECK(j.at("all_pass") == true);
    CHECK(j.at("checks").size() >= 20);
    CHECK(j.at("config_hash").get<std::string>().size() == 16);

    // An injected sloppy tolerance must surface as a failed check => exit 1.
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() +
              " --set solver.quad_tol=0.01 verify") == 1);
    const auto bad = json::parse(slurp(sb.dir / "verify_report.json"));
    CHECK(bad.at("all_pass") == false);
}

TEST_CASE("--set overrides reach the resolved config hash") {
    Sandbox sb1, sb2;
    const auto cfg = sb1.write("c.json", kBaseConfig);
    CHECK(run("--config " + cfg.string() + " --out " + sb1.dir.string() + " solve") == 0);
    CHECK(run("--config " + cfg.string() + " --set model.lambda=0.05 --out " +
              sb2.dir.string() + " solve") == 0);
    const auto a = json::parse(slurp(sb1.dir / "solution.json"));
    const auto b = json::parse(slurp(sb2.dir / "solution.json"));
    CHECK(a.at("config_hash") != b.at("config_hash"));
}

TEST_CASE("format selection") {
    Sandbox sb;
    const auto cfg = sb.write("c.json", kBaseConfig);
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() +
              " --format json scan --axis d --values 3.0,3.2") == 0);
    CHECK(fs::exists(sb.dir / "scan.json"));
    CHECK_FALSE(fs::exists(sb.dir / "scan.csv"));
    CHECK(run("--config " + cfg.string() + " --out " + sb.dir.string() +
              " --format bogus solve") == 2);
}
