#include "wgqed/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wgqed/config.hpp"
#include "wgqed/dynamics.hpp"
#include "wgqed/fock.hpp"
#include "wgqed/io_util.hpp"
#include "wgqed/model.hpp"
#include "wgqed/spectral.hpp"

namespace wgqed {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

SpectralOptions spectral_options(const RunConfig& cfg) {
    SpectralOptions opts;
    opts.quad_tol = cfg.solver.quad_tol;
    opts.root_tol = cfg.solver.root_tol;
    opts.patch_delta_factor = cfg.solver.patch_delta_factor;
    opts.grid_points = cfg.solver.grid_points;
    return opts;
}

json complex_json(const std::complex<double>& z) {
    return json{{"re", z.real()}, {"im", z.imag()}};
}

json mode_json(const WaveguideModel& model, const SingleExcitationMode& mode,
               const SpectralOptions& opts) {
    const auto res = residuals(model, mode, opts);
    json j;
    j["status"] = "ok";
    j["kind"] = mode.kind == ModeKind::bic ? "bic" : "below_threshold";
    j["E"] = mode.energy;
    j["kbar"] = mode.kbar;
    j["n"] = mode.n;
    j["p_at"] = mode.p_at;
    j["phi_A"] = complex_json(mode.phi_A);
    j["phi_B"] = complex_json(mode.phi_B);
    j["parity"] = mode.parity == ModeParity::symmetric ? "symmetric" : "antisymmetric";
    j["residuals"] = {{"emitter_A", res.emitter_A},
                      {"emitter_B", res.emitter_B},
                      {"field_sup", res.field_sup}};
    j["omega0"] = mode.omega0;
    j["d"] = mode.distance;
    j["warnings"] = mode.warnings;
    return j;
}

void write_outputs(const RunConfig& cfg, const std::string& stem, const json* doc,
                   const std::string* csv) {
    const fs::path dir = cfg.output.dir;
    const bool want_json = cfg.output.format != "csv";
    const bool want_csv = cfg.output.format != "json";
    if (doc && want_json) write_file_atomic(dir / (stem + ".json"), doc->dump(2) + "\n");
    if (csv && want_csv) write_file_atomic(dir / (stem + ".csv"), *csv);
}

// ---------------------------------------------------------------- solve ----

int cmd_solve(const RunConfig& cfg) {
    const auto model = cfg.build_model();
    const auto opts = spectral_options(cfg);
    const int n = cfg.emitter.n;

    try {
        SingleExcitationMode mode;
        if (cfg.emitter.kind == "below_threshold") {
            if (!cfg.emitter.omega0 || !cfg.emitter.d)
                throw ConfigError("below_threshold solve requires concrete omega0 and d");
            const auto parity = cfg.emitter.parity == "antisymmetric"
                                    ? ModeParity::antisymmetric
                                    : ModeParity::symmetric;
            auto modes = solve_below_threshold(model, *cfg.emitter.omega0, *cfg.emitter.d,
                                               parity, opts);
            if (modes.empty())
                throw NoSolutionError("no self-consistent bound state below threshold");
            mode = std::move(modes.front());
        } else if (cfg.emitter.d && !cfg.emitter.omega0) {
            mode = required_omega0_for_bic(model, *cfg.emitter.d, n, opts).second;
        } else if (cfg.emitter.omega0 && !cfg.emitter.d) {
            std::pair<double, double> bracket;
            if (cfg.solver.d_bracket) {
                bracket = *cfg.solver.d_bracket;
            } else {
                const double k0 = model.omega_inverse(*cfg.emitter.omega0);
                if (!(k0 > 0.0)) throw NoSolutionError("omega0 sits at the threshold");
                bracket = {0.7 * n * kPi / k0, 1.4 * n * kPi / k0};
            }
            mode = solve_bic_fixed_frequency(model, *cfg.emitter.omega0, n, bracket, opts).mode;
        } else {
            // Both concrete: report the mode only if the pair is resonant.
            auto [w0_required, candidate] = required_omega0_for_bic(model, *cfg.emitter.d, n, opts);
            if (std::abs(w0_required - *cfg.emitter.omega0) > opts.resonance_tol)
                throw NoSolutionError(
                    "omega0 is detuned from the resonance value " + format_double(w0_required) +
                    " by " + format_double(w0_required - *cfg.emitter.omega0));
            mode = std::move(candidate);
        }
        json j = mode_json(model, mode, opts);
        j["config_hash"] = cfg.config_hash;
        write_outputs(cfg, "solution", &j, nullptr);
        std::cout << "solve: E=" << format_double(mode.energy)
                  << " p_at=" << format_double(mode.p_at) << "\n";
        return 0;
    } catch (const NoSolutionError& e) {
        json j;
        j["status"] = "no_solution";
        j["reason"] = e.what();
        j["config_hash"] = cfg.config_hash;
        write_outputs(cfg, "solution", &j, nullptr);
        std::cout << "solve: no_solution (" << e.what() << ")\n";
        return 3;
    }
}

// ----------------------------------------------------------------- scan ----

std::vector<double> parse_range(const std::string& range, const std::string& values) {
    std::vector<double> out;
    if (!values.empty()) {
        size_t pos = 0;
        while (pos <= values.size()) {
            const auto comma = values.find(',', pos);
            out.push_back(std::stod(values.substr(pos, comma - pos)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return out;
    }
    if (range.empty()) throw ConfigError("scan: provide --range lo:hi:count or --values");
    const auto c1 = range.find(':');
    const auto c2 = range.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw ConfigError("scan: --range expects lo:hi:count");
    const double lo = std::stod(range.substr(0, c1));
    const double hi = std::stod(range.substr(c1 + 1, c2 - c1 - 1));
    const int count = std::stoi(range.substr(c2 + 1));
    if (count < 1) throw ConfigError("scan: count must be >= 1");
    if (count == 1) return {lo};
    for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * i / (count - 1));
    return out;
}

int cmd_scan(const RunConfig& cfg, const std::string& axis, const std::string& range,
             const std::string& values, const std::string& observable) {
    const auto model = cfg.build_model();
    const auto opts = spectral_options(cfg);

    ScanSpec spec;
    if (axis == "d")
        spec.axis = ScanSpec::Axis::distance;
    else if (axis == "omega0")
        spec.axis = ScanSpec::Axis::omega0;
    else if (axis == "lambda")
        spec.axis = ScanSpec::Axis::lambda;
    else
        throw ConfigError("scan: --axis must be d, omega0 or lambda");
    spec.values = parse_range(range, values);
    spec.n = cfg.emitter.n;
    spec.fixed_omega0 = cfg.emitter.omega0;
    spec.fixed_d = cfg.emitter.d;
    if (observable == "p_at")
        spec.observable = ScanObservable::p_at;
    else if (observable == "E")
        spec.observable = ScanObservable::energy;
    else if (observable == "omega0_required")
        spec.observable = ScanObservable::omega0_required;
    else if (observable == "detuning")
        spec.observable = ScanObservable::detuning;
    else
        throw ConfigError("scan: unknown observable " + observable);

    const auto rows = scan(model, spec, opts);

    CsvWriter csv;
    csv.comment("wgqed scan axis=" + axis + " observable=" + observable);
    csv.comment("config " + cfg.config_hash);
    std::string body = scan_to_csv(rows);
    std::string full = csv.str() + body;

    json j = json::array();
    for (const auto& r : rows) {
        json rec;
        rec["param"] = r.param;
        rec["value"] = r.value;
        if (r.energy) rec["E"] = *r.energy;
        if (r.kbar) rec["kbar"] = *r.kbar;
        if (r.p_at) rec["p_at"] = *r.p_at;
        if (r.omega0) rec["omega0"] = *r.omega0;
        if (r.observable_value) rec["observable"] = *r.observable_value;
        rec["status"] = r.status;
        j.push_back(std::move(rec));
    }
    write_outputs(cfg, "scan", &j, &full);
    std::cout << "scan: " << rows.size() << " rows\n";
    return 0;
}

// ----------------------------------------------------------------- fock ----

// Independent bosonic-algebra expansion of (phiA* bA+ + phiB* bB+)^m |0,0>
// used by the verification report. b+|l> = sqrt(l+1)|l+1>.
std::vector<std::complex<double>> bosonic_oracle_state(int m, std::complex<double> phiA,
                                                       std::complex<double> phiB) {
    // amplitudes over |lA, lB> with lA + lB <= m, dense (m+1)x(m+1)
    const int dim = m + 1;
    std::vector<std::complex<double>> cur(dim * dim, 0.0), next(dim * dim, 0.0);
    cur[0] = 1.0;
    for (int step = 0; step < m; ++step) {
        std::fill(next.begin(), next.end(), std::complex<double>(0.0));
        for (int la = 0; la <= m; ++la)
            for (int lb = 0; lb <= m; ++lb) {
                const auto a = cur[la * dim + lb];
                if (a == std::complex<double>(0.0)) continue;
                if (la + 1 <= m)
                    next[(la + 1) * dim + lb] += std::conj(phiA) * std::sqrt(la + 1.0) * a;
                if (lb + 1 <= m)
                    next[la * dim + (lb + 1)] += std::conj(phiB) * std::sqrt(lb + 1.0) * a;
            }
        std::swap(cur, next);
    }
    // Read off the sector diagonal |l, m-l> and normalize.
    std::vector<std::complex<double>> amps(m + 1);
    double norm = 0.0;
    for (int l = 0; l <= m; ++l) {
        amps[l] = cur[l * dim + (m - l)];
        norm += std::norm(amps[l]);
    }
    for (auto& a : amps) a /= std::sqrt(norm);
    return amps;
}

int cmd_fock(const RunConfig& cfg, int N, std::optional<double> p_at_override) {
    const auto model = cfg.build_model();
    const auto opts = spectral_options(cfg);

    double p_at;
    std::string source;
    if (p_at_override) {
        p_at = *p_at_override;
        source = "override";
    } else if (model.coupling_scale == 0.0) {
        p_at = 1.0;
        source = "zero_coupling";
    } else {
        const double d = cfg.emitter.d.value_or(kPi);
        p_at = required_omega0_for_bic(model, d, cfg.emitter.n, opts).second.p_at;
        source = "solved";
    }

    const auto C = reduced_density_A(N, p_at);
    const double purity = purity_A(N, p_at);
    const double closed = purity_closed_form(N);
    const double purity_p1 = purity_A(N, 1.0);
    const double asym_err =
        N > 0 ? std::abs(purity_p1 * std::sqrt(kPi * N) - 1.0) : 0.0;

    json j;
    j["N"] = N;
    j["p_at"] = p_at;
    j["p_at_source"] = source;
    j["C"] = C;
    j["purity"] = purity;
    j["purity_closed_form"] = closed;
    j["asymptote_err"] = asym_err;

    if (N >= 2) {
        // Two conventions circulate for the two-excitation amplitudes; the
        // solver follows the operator algebra and reports both.
        const int parity = cfg.emitter.n;
        const auto derived = emitter_state(2, parity);
        const auto oracle = bosonic_oracle_state(
            2, 1.0 / std::sqrt(2.0),
            (parity % 2 == 1 ? 1.0 : -1.0) / std::sqrt(2.0));
        double oracle_dev = 0.0;
        for (int l = 0; l <= 2; ++l)
            oracle_dev = std::max(oracle_dev,
                                  std::abs(derived.amplitudes[l] - oracle[l]));
        json v;
        v["two_excitation_derived"] = {derived.amplitudes[0].real(),
                                       derived.amplitudes[1].real(),
                                       derived.amplitudes[2].real()};
        const double s6 = 1.0 / std::sqrt(6.0);
        const double sgn = (parity % 2 == 1) ? 1.0 : -1.0;
        v["two_excitation_displayed"] = {s6, sgn * 2.0 * s6, s6};
        v["bosonic_oracle_deviation"] = oracle_dev;
        v["discrepancy_documented"] = true;
        j["verification"] = v;
    }
    CsvWriter csv;
    csv.comment("wgqed fock N=" + std::to_string(N));
    csv.header({"l", "C_l"});
    for (size_t l = 0; l < C.size(); ++l)
        csv.row({std::to_string(l), format_double(C[l])});
    const std::string table = csv.str();
    write_outputs(cfg, "fock", &j, &table);
    std::cout << "fock: N=" << N << " purity=" << format_double(purity) << "\n";
    return 0;
}

// --------------------------------------------------------------- evolve ----

SectorState load_custom_state(const std::string& path, const SectorBasis& basis) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open custom state file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("custom state parse error: ") + e.what());
    }
    if (!doc.contains("amplitudes") || !doc["amplitudes"].is_array())
        throw ConfigError("custom state: expected an \"amplitudes\" array");
    std::vector<std::pair<long long, std::complex<double>>> amps;
    for (const auto& a : doc["amplitudes"]) {
        amps.emplace_back(a.at("index").get<long long>(),
                          std::complex<double>(a.value("re", 0.0), a.value("im", 0.0)));
    }
    return make_custom_state(basis, amps);
}

int cmd_evolve(const RunConfig& cfg, const std::string& initial_flag) {
    const auto model = cfg.build_model();
    const auto opts = spectral_options(cfg);
    const int n = cfg.emitter.n;
    const double d = cfg.emitter.d.value_or(kPi);

    double omega0, p_at;
    if (cfg.emitter.omega0) {
        omega0 = *cfg.emitter.omega0;
        p_at = atomic_weight(model, n * kPi / d, d, opts);
    } else {
        auto [w0, mode] = required_omega0_for_bic(model, d, n, opts);
        omega0 = w0;
        p_at = mode.p_at;
    }

    EmitterConfig emitters{omega0, d, cfg.emitter.levels};
    const auto dm = discretize(model, emitters, cfg.dynamics.cells,
                               cfg.dynamics.modes_per_unit, n);
    const int sector = cfg.dynamics.sector;
    const auto basis = build_sector_basis(dm, sector);

    const std::string which = initial_flag.empty() ? cfg.dynamics.initial : initial_flag;
    SectorState init;
    double expected = 0.0;
    if (which == "psiN") {
        init = make_initial_state(basis, InitialKind::psi_n, n);
        expected = std::pow(p_at, 2 * sector);
    } else if (which == "singleA") {
        if (sector != 1) throw ConfigError("initial singleA is defined for sector 1");
        init = make_initial_state(basis, InitialKind::single_a, n);
        expected = 0.5 * p_at * p_at;
    } else if (which == "bell_minus") {
        if (sector != 1) throw ConfigError("initial bell_minus is defined for sector 1");
        init = make_initial_state(basis, InitialKind::bell_minus, n);
        expected = 0.0;
    } else if (which == "custom") {
        init = load_custom_state(cfg.dynamics.custom_state_path, basis);
        expected = std::nan("");
    } else {
        throw ConfigError("evolve: unknown initial state " + which);
    }

    double horizon = cfg.dynamics.horizon.value_or(cfg.dynamics.horizon_factor *
                                                   dm.revival_time);
    int samples = cfg.dynamics.samples;
    if (horizon == 0.0) samples = 1;

    const auto res = relaxation_experiment(dm, init, horizon, samples, cfg.dynamics.tol);

    CsvWriter csv;
    csv.comment("wgqed evolve initial=" + which);
    csv.comment("config " + cfg.config_hash);
    const std::string traj = csv.str() + trajectory_to_csv(res);

    json j;
    j["config_hash"] = cfg.config_hash;
    j["initial"] = which;
    j["sector"] = sector;
    j["asymptote_P_at"] = res.asymptote_p_atomic;
    j["asymptote_overlap_psiN"] = res.asymptote_overlap;
    if (!std::isnan(expected)) j["expected_asymptote"] = expected;
    j["p_at"] = p_at;
    j["max_norm_drift"] = res.max_norm_drift;
    j["max_energy_drift"] = res.max_energy_drift;
    j["manifest"] = {{"cells", dm.cells},
                     {"modes_per_unit", dm.modes_per_unit},
                     {"N_modes", dm.n_modes},
                     {"box_length", dm.box_length},
                     {"dk", dm.dk},
                     {"omega0", dm.omega0},
                     {"d", dm.distance},
                     {"kbar", dm.kbar},
                     {"n", dm.resonance_n},
                     {"group_velocity", dm.group_velocity},
                     {"revival_time", dm.revival_time},
                     {"horizon", horizon},
                     {"samples", samples},
                     {"tol", cfg.dynamics.tol},
                     {"sector", sector}};
    write_outputs(cfg, "trajectory", nullptr, &traj);
    json* doc = &j;
    write_outputs(cfg, "evolve", doc, nullptr);
    std::cout << "evolve: asymptote_P_at=" << format_double(res.asymptote_p_atomic)
              << " asymptote_overlap=" << format_double(res.asymptote_overlap) << "\n";
    return 0;
}

// --------------------------------------------------------------- verify ----

struct Check {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

Check make_check(const std::string& name, double measured, double tol,
                 const std::string& note = "") {
    return {name, measured, tol, measured <= tol, note};
}

int cmd_verify(const RunConfig& cfg) {
    const auto model = cfg.build_model();
    const auto opts = spectral_options(cfg);
    const int n = cfg.emitter.n;
    const double d = cfg.emitter.d.value_or(kPi);
    std::vector<Check> checks;

    // --- model assumptions
    {
        std::vector<double> probe;
        const double kmax = integration_cutoff(model, n * kPi / d);
        for (int i = -50; i <= 50; ++i) probe.push_back(kmax * i / 50.0);
        for (const auto& c : validate_assumptions(model, probe)) {
            Check chk;
            chk.name = "model." + c.name;
            chk.measured = c.violation;
            chk.tolerance = c.name == "low_pass_integral_converges" ? 1e-8 : 1e-12;
            chk.pass = c.pass;
            checks.push_back(chk);
        }
    }

    // --- spectral residuals and identities
    const double kbar = n * kPi / d;
    const auto [w0, mode] = required_omega0_for_bic(model, d, n, opts);
    {
        const auto res = residuals(model, mode, opts);
        checks.push_back(make_check("spectral.residual_emitter_A", res.emitter_A, 1e-10));
        checks.push_back(make_check("spectral.residual_emitter_B", res.emitter_B, 1e-10));
        checks.push_back(make_check("spectral.residual_field_sup", res.field_sup, 1e-12));

        const double p_int = atomic_weight(model, kbar, d, opts);
        checks.push_back(make_check("spectral.p_at_two_routes",
                                    std::abs(p_int - 2.0 * std::norm(mode.phi_A)), 1e-8));

        SpectralOptions halved = opts;
        halved.patch_delta_factor = 0.5 * opts.patch_delta_factor;
        checks.push_back(make_check(
            "spectral.patch_width_halving",
            std::abs(level_shift(model, kbar, d, n, opts) -
                     level_shift(model, kbar, d, n, halved)),
            1e-8));

        SpectralOptions doubled = opts;
        doubled.kmax_override = 2.0 * integration_cutoff(model, kbar, opts.tail_eps);
        checks.push_back(make_check(
            "spectral.domain_doubling",
            std::abs(level_shift(model, kbar, d, n, opts) -
                     level_shift(model, kbar, d, n, doubled)),
            1e-10));

        auto free_model = make_rectangular_model(model.cutoff_M, model.regulator_scale, 0.0);
        const auto free_mode = required_omega0_for_bic(free_model, d, n, opts).second;
        checks.push_back(make_check("spectral.zero_coupling_p_at",
                                    std::abs(free_mode.p_at - 1.0), 0.0));
    }

    // --- fock identities
    {
        const double p = mode.p_at;
        const auto ex = bound_state_expansion(6, p, n);
        double wsum = 0.0;
        for (double w : ex.weights) wsum += w * w;
        checks.push_back(make_check("fock.weights_binomial_sum", std::abs(wsum - 1.0), 1e-12));

        const auto C = reduced_density_A(6, p);
        double csum = 0.0;
        for (double c : C) csum += c;
        checks.push_back(make_check("fock.reduced_trace", std::abs(csum - 1.0), 1e-12));

        // partial trace of the explicit mixture vs the closed form
        double pt_dev = 0.0;
        {
            const int N = 5;
            const auto rho = rho_AB_mixture(N, p, n);
            const auto Cn = reduced_density_A(N, p);
            for (int l = 0; l <= N; ++l) {
                std::complex<double> diag = 0.0;
                for (int m = 0; m <= N; ++m)
                    diag += rho.rho(l * (N + 1) + m, l * (N + 1) + m);
                pt_dev = std::max(pt_dev, std::abs(diag.real() - Cn[l]));
            }
        }
        checks.push_back(make_check("fock.partial_trace_consistency", pt_dev, 1e-12));

        double max_rel = 0.0;
        for (int N = 0; N <= 60; ++N) {
            const double a = purity_A(N, 1.0);
            const double b = purity_closed_form(N);
            max_rel = std::max(max_rel, std::abs(a - b) / b);
        }
        checks.push_back(make_check("fock.purity_closed_form_N60", max_rel, 1e-12));
        checks.push_back(make_check(
            "fock.purity_asymptote_N40",
            std::abs(purity_A(40, 1.0) * std::sqrt(kPi * 40) - 1.0), 0.2 / 40));

        const auto bell = emitter_state(1, n);
        const double s = (n % 2 == 1) ? 1.0 : -1.0;
        const double bell_dev =
            std::abs(bell.amplitudes[0] - 1.0 / std::sqrt(2.0)) +
            std::abs(bell.amplitudes[1] - s / std::sqrt(2.0));
        checks.push_back(make_check("fock.bell_state_m1", bell_dev, 1e-14));

        const auto derived = emitter_state(2, n);
        const auto oracle =
            bosonic_oracle_state(2, 1.0 / std::sqrt(2.0), s / std::sqrt(2.0));
        double oracle_dev = 0.0;
        for (int l = 0; l <= 2; ++l)
            oracle_dev =
                std::max(oracle_dev, std::abs(derived.amplitudes[l] - oracle[l]));
        checks.push_back(make_check("fock.two_excitation_vs_bosonic_oracle", oracle_dev, 1e-12));

        // The displayed (1,-2,1)/sqrt(6) amplitudes differ from the algebra;
        // the check passes when the discrepancy is visible, i.e. documented.
        const double s6 = 1.0 / std::sqrt(6.0);
        double disp_dev = std::abs(std::abs(derived.amplitudes[1]) - 2.0 * s6);
        Check disc;
        disc.name = "fock.two_excitation_display_discrepancy_documented";
        disc.measured = disp_dev;
        disc.tolerance = 1e-3;
        disc.pass = disp_dev > 1e-3;
        disc.note = "derived (1,-sqrt(2),1)/2 vs displayed (1,-2,1)/sqrt(6); "
                    "the solver follows the operator algebra";
        checks.push_back(disc);

        checks.push_back(make_check(
            "fock.thermal_purity_p1_q05",
            std::abs(thermal_purity(std::log(2.0), 1.0, 60).purity - 0.5), 1e-10));
        checks.push_back(make_check(
            "fock.coherent_factorization",
            std::abs(purity_of_A(coherent_atomic_state(1.0, n, 20)) - 1.0), 1e-10));

        const auto trunc_ok = truncation_check(3, 3, p, n);
        checks.push_back(make_check("fock.truncation_cap_equal",
                                    trunc_ok.ok ? trunc_ok.max_deviation : 1.0, 1e-12));
        const auto trunc_bad = truncation_check(3, 2, p, n);
        Check tb;
        tb.name = "fock.truncation_cap_below_detected";
        tb.measured = trunc_bad.violation_amplitude;
        tb.tolerance = 0.0;
        tb.pass = !trunc_bad.ok && trunc_bad.violation.has_value();
        tb.note = trunc_bad.violation_label;
        checks.push_back(tb);

        const auto rho1 = rho_AB_mixture(1, 1.0, n);  // pure psi^(1)
        checks.push_back(make_check(
            "fock.relaxation_unit_overlap",
            std::abs(relaxation_probability(rho1, 1, p, n) - p * p), 1e-12));
    }

    // --- dynamics on a small grid
    {
        EmitterConfig emitters{mode.omega0, d, cfg.emitter.levels};
        const auto dm = discretize(model, emitters, 50, 4, n);
        checks.push_back(make_check("dynamics.grid_contains_kbar",
                                    std::abs(dm.k[dm.j_max + dm.j_star] - kbar), 0.0));
        const auto H = build_hamiltonian_N1(dm);
        checks.push_back(make_check("dynamics.hermiticity",
                                    (H - H.adjoint()).cwiseAbs().maxCoeff(), 0.0));
        checks.push_back(
            make_check("dynamics.coupling_sum_convergence", dm.coupling_sum_rel_error, 1e-2));
        checks.push_back(
            make_check("dynamics.ladder_residual_small_grid", ladder_residual(dm, mode), 1e-2));

        const auto cand = bic_candidate_N1(dm, mode);
        Check ov;
        ov.name = "dynamics.bic_overlap_small_grid";
        ov.measured = cand.overlap_sq;
        ov.tolerance = 0.99;
        ov.pass = cand.overlap_sq >= 0.99;
        ov.note = "eigenvalue error " + format_double(cand.eigenvalue_error);
        checks.push_back(ov);

        const auto basis = build_sector_basis(dm, 1);
        const auto init = make_initial_state(basis, InitialKind::psi_n, n);
        const auto res =
            relaxation_experiment(dm, init, 0.6 * dm.revival_time, 120, 1e-10);
        checks.push_back(make_check("dynamics.norm_drift", res.max_norm_drift, 1e-8));
        checks.push_back(make_check("dynamics.energy_drift", res.max_energy_drift, 1e-8));
        checks.push_back(make_check(
            "dynamics.relaxation_smoke",
            std::abs(res.asymptote_p_atomic / (mode.p_at * mode.p_at) - 1.0), 0.05));

        // Sector-2 structure on a tiny grid: Hermiticity of the matrix-free
        // action and the stars-and-bars dimension. Probe vectors are fixed so
        // the report stays byte-identical across runs.
        const auto dm2 = discretize(model, emitters, 10, 2, n);
        const auto basis2 = build_sector_basis(dm2, 2);
        const SectorHamiltonian H2(dm2, basis2);
        Eigen::VectorXcd x(basis2.dimension), y(basis2.dimension);
        for (long long i = 0; i < basis2.dimension; ++i) {
            x(i) = std::complex<double>(std::sin(0.1 * i + 0.3), std::cos(0.2 * i));
            y(i) = std::complex<double>(std::cos(0.15 * i), std::sin(0.05 * i + 1.1));
        }
        x.normalize();
        y.normalize();
        const auto lhs = x.dot(H2.apply(y));
        const auto rhs = std::conj(y.dot(H2.apply(x)));
        double herm = std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
        const long long n_orb = dm2.n_modes + 2;
        if (basis2.dimension != n_orb * (n_orb + 1) / 2) herm = 1.0;
        checks.push_back(make_check("dynamics.sector2_hermitian_closure", herm, 1e-12));
    }

    json j;
    j["config_hash"] = cfg.config_hash;
    json arr = json::array();
    bool all_pass = true;
    for (const auto& c : checks) {
        all_pass = all_pass && c.pass;
        json e;
        e["name"] = c.name;
        e["measured"] = c.measured;
        e["tolerance"] = c.tolerance;
        e["pass"] = c.pass;
        if (!c.note.empty()) e["note"] = c.note;
        arr.push_back(std::move(e));
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name
                  << " measured=" << format_double(c.measured)
                  << " tol=" << format_double(c.tolerance) << "\n";
    }
    j["checks"] = std::move(arr);
    j["all_pass"] = all_pass;
    write_outputs(cfg, "verify_report", &j, nullptr);
    std::cout << (all_pass ? "verify: all checks passed\n" : "verify: FAILURES present\n");
    return all_pass ? 0 : 1;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Bound states of two emitters in a one-dimensional waveguide"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir, format;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--set", overrides, "Override config keys, e.g. --set model.lambda=0.05");
    app.add_option("--out", out_dir, "Output directory (overrides config)");
    app.add_option("--format", format, "csv|json|both (overrides config)");

    auto* solve = app.add_subcommand("solve", "Solve for a single bound mode");
    auto* scan = app.add_subcommand("scan", "Scan a parameter axis");
    std::string axis = "d", range, values, observable = "p_at";
    scan->add_option("--axis", axis, "d|omega0|lambda");
    scan->add_option("--range", range, "lo:hi:count");
    scan->add_option("--values", values, "comma-separated values");
    scan->add_option("--observable", observable, "p_at|E|omega0_required|detuning");
    auto* fock = app.add_subcommand("fock", "Entanglement structure of |N>");
    int fock_N = 2;
    double fock_p = -1.0;
    fock->add_option("--N", fock_N, "total excitation number");
    fock->add_option("--p-at", fock_p, "override p_at");
    auto* evolve_cmd = app.add_subcommand("evolve", "Time evolution in a finite box");
    std::string initial;
    evolve_cmd->add_option("--initial", initial, "psiN|singleA|bell_minus|custom");
    auto* verify = app.add_subcommand("verify", "Run the invariant verification suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = config_path.empty() ? default_config(overrides)
                                            : load_config_file(config_path, overrides);
        if (!out_dir.empty()) cfg.output.dir = out_dir;
        if (!format.empty()) {
            if (format != "csv" && format != "json" && format != "both")
                throw ConfigError("--format must be csv, json or both");
            cfg.output.format = format;
        }
        if (solve->parsed()) return cmd_solve(cfg);
        if (scan->parsed()) return cmd_scan(cfg, axis, range, values, observable);
        if (fock->parsed())
            return cmd_fock(cfg, fock_N,
                            fock_p >= 0.0 ? std::optional<double>(fock_p) : std::nullopt);
        if (evolve_cmd->parsed()) return cmd_evolve(cfg, initial);
        if (verify->parsed()) return cmd_verify(cfg);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const NoSolutionError& e) {
        std::cerr << "no solution: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace wgqed
