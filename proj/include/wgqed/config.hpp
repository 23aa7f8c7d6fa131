#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wgqed/model.hpp"

namespace wgqed {

struct ModelConfig {
    std::string dispersion = "rectangular";
    double M = 1.0;
    double k_c = 5.0;
    double lambda = 0.1;
    std::string coupling = "inv_sqrt_gauss";
};

struct EmitterBlock {
    std::optional<double> omega0;               // empty = "auto"
    std::optional<double> d{3.141592653589793}; // empty = "auto"
    int n = 1;
    std::optional<int> levels;     // N-bar
    std::string kind = "bic";      // "bic" | "below_threshold"
    std::string parity = "symmetric";
};

struct SolverBlock {
    double quad_tol = 1e-12;
    double root_tol = 1e-12;
    double patch_delta_factor = 1e-3;
    int grid_points = 401;
    std::optional<std::pair<double, double>> d_bracket;
};

struct DynamicsBlock {
    int cells = 50;
    int modes_per_unit = 4;
    int sector = 1;
    double horizon_factor = 0.7;     // times the revival time
    std::optional<double> horizon;   // absolute override
    int samples = 160;
    double tol = 1e-10;
    std::string initial = "psiN";    // psiN | singleA | bell_minus | custom
    std::string custom_state_path;
};

struct OutputBlock {
    std::string dir = ".";
    std::string format = "both";  // csv | json | both
};

struct RunConfig {
    ModelConfig model;
    EmitterBlock emitter;
    SolverBlock solver;
    DynamicsBlock dynamics;
    OutputBlock output;

    nlohmann::ordered_json resolved;  // canonical form, hashed into outputs
    std::string config_hash;

    WaveguideModel build_model() const;
};

// Strict parse: unknown keys abort with their JSON path. `overrides` are
// dotted key=value pairs applied before validation.
RunConfig parse_config(nlohmann::ordered_json doc,
                       const std::vector<std::string>& overrides = {});
RunConfig load_config_file(const std::string& path,
                           const std::vector<std::string>& overrides = {});
RunConfig default_config(const std::vector<std::string>& overrides = {});

}  // namespace wgqed
