#include "wgqed/config.hpp"

#include <fstream>
#include <set>

#include "wgqed/io_util.hpp"

namespace wgqed {

namespace {

using json = nlohmann::ordered_json;

// Tracks consumed keys of one JSON object and rejects leftovers.
class Strict {
public:
    Strict(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) {
        return j_.contains(key);
    }

    const json* take(const std::string& key) {
        if (!j_.contains(key)) return nullptr;
        seen_.insert(key);
        return &j_.at(key);
    }

    template <class T>
    void opt(const std::string& key, T& out) {
        if (const json* v = take(key)) {
            try {
                out = v->get<T>();
            } catch (const json::exception& e) {
                throw ConfigError(path_ + "." + key + ": " + e.what());
            }
        }
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key()))
                throw ConfigError(path_ + "." + item.key() + ": unknown key");
        }
    }

    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// number or the string "auto" -> optional<double>
std::optional<double> number_or_auto(Strict& s, const std::string& key,
                                     std::optional<double> fallback) {
    const json* v = s.take(key);
    if (!v) return fallback;
    if (v->is_string()) {
        if (v->get<std::string>() == "auto") return std::nullopt;
        throw ConfigError(s.path() + "." + key + ": expected a number or \"auto\"");
    }
    if (!v->is_number()) throw ConfigError(s.path() + "." + key + ": expected a number or \"auto\"");
    return v->get<double>();
}

void apply_override(json& doc, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
        throw ConfigError("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);

    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;  // bare strings stay strings
    }

    try {
        json* node = &doc;
        size_t pos = 0;
        while (true) {
            const auto dot = key.find('.', pos);
            const std::string part = key.substr(pos, dot - pos);
            if (part.empty()) throw ConfigError("--set: empty path segment in '" + key + "'");
            if (dot == std::string::npos) {
                (*node)[part] = parsed;
                break;
            }
            node = &(*node)[part];
            pos = dot + 1;
        }
    } catch (const json::exception& e) {
        throw ConfigError("--set " + kv + ": " + e.what());
    }
}

}  // namespace

WaveguideModel RunConfig::build_model() const {
    if (model.dispersion != "rectangular")
        throw ConfigError("model.dispersion: only \"rectangular\" is available");
    CouplingProfile profile;
    if (model.coupling == "inv_sqrt_gauss")
        profile = CouplingProfile::inv_sqrt_gauss;
    else if (model.coupling == "flat_gauss")
        profile = CouplingProfile::flat_gauss;
    else
        throw ConfigError("model.coupling: expected \"inv_sqrt_gauss\" or \"flat_gauss\"");
    return make_rectangular_model(model.M, model.k_c, model.lambda, profile);
}

RunConfig parse_config(nlohmann::ordered_json doc, const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) apply_override(doc, kv);

    RunConfig cfg;
    Strict root(doc, "config");

    if (const json* m = root.take("model")) {
        Strict s(*m, "config.model");
        s.opt("dispersion", cfg.model.dispersion);
        s.opt("M", cfg.model.M);
        s.opt("k_c", cfg.model.k_c);
        s.opt("lambda", cfg.model.lambda);
        s.opt("coupling", cfg.model.coupling);
        s.finish();
    }
    if (const json* e = root.take("emitter")) {
        Strict s(*e, "config.emitter");
        cfg.emitter.omega0 = number_or_auto(s, "omega0", cfg.emitter.omega0);
        cfg.emitter.d = number_or_auto(s, "d", cfg.emitter.d);
        s.opt("n", cfg.emitter.n);
        if (const json* lv = s.take("levels")) {
            if (!lv->is_null()) cfg.emitter.levels = lv->get<int>();
        }
        s.opt("kind", cfg.emitter.kind);
        s.opt("parity", cfg.emitter.parity);
        s.finish();
    }
    if (const json* sv = root.take("solver")) {
        Strict s(*sv, "config.solver");
        s.opt("quad_tol", cfg.solver.quad_tol);
        s.opt("root_tol", cfg.solver.root_tol);
        s.opt("patch_delta_factor", cfg.solver.patch_delta_factor);
        s.opt("grid_points", cfg.solver.grid_points);
        if (const json* b = s.take("d_bracket")) {
            if (!b->is_array() || b->size() != 2)
                throw ConfigError("config.solver.d_bracket: expected [lo, hi]");
            cfg.solver.d_bracket = {b->at(0).get<double>(), b->at(1).get<double>()};
        }
        s.finish();
    }
    if (const json* dy = root.take("dynamics")) {
        Strict s(*dy, "config.dynamics");
        s.opt("cells", cfg.dynamics.cells);
        s.opt("modes_per_unit", cfg.dynamics.modes_per_unit);
        s.opt("sector", cfg.dynamics.sector);
        s.opt("horizon_factor", cfg.dynamics.horizon_factor);
        if (const json* h = s.take("horizon")) {
            if (!h->is_null()) cfg.dynamics.horizon = h->get<double>();
        }
        s.opt("samples", cfg.dynamics.samples);
        s.opt("tol", cfg.dynamics.tol);
        s.opt("initial", cfg.dynamics.initial);
        s.opt("custom_state_path", cfg.dynamics.custom_state_path);
        s.finish();
    }
    if (const json* o = root.take("output")) {
        Strict s(*o, "config.output");
        s.opt("dir", cfg.output.dir);
        s.opt("format", cfg.output.format);
        s.finish();
    }
    root.finish();

    if (!cfg.emitter.omega0 && !cfg.emitter.d)
        throw ConfigError("config.emitter: omega0 and d cannot both be \"auto\"");
    if (cfg.emitter.n < 1) throw ConfigError("config.emitter.n: must be >= 1");
    if (!(cfg.solver.quad_tol > 0) || !(cfg.solver.root_tol > 0) ||
        !(cfg.solver.patch_delta_factor > 0) || !(cfg.dynamics.tol > 0))
        throw ConfigError("config: all tolerances must be positive");
    if (cfg.output.format != "csv" && cfg.output.format != "json" &&
        cfg.output.format != "both")
        throw ConfigError("config.output.format: expected csv, json or both");
    if (cfg.emitter.kind != "bic" && cfg.emitter.kind != "below_threshold")
        throw ConfigError("config.emitter.kind: expected bic or below_threshold");

    // Canonical resolved document: every effective value, in fixed order.
    json r;
    r["model"] = {{"dispersion", cfg.model.dispersion}, {"M", cfg.model.M},
                  {"k_c", cfg.model.k_c},               {"lambda", cfg.model.lambda},
                  {"coupling", cfg.model.coupling}};
    r["emitter"]["omega0"] = cfg.emitter.omega0 ? json(*cfg.emitter.omega0) : json("auto");
    r["emitter"]["d"] = cfg.emitter.d ? json(*cfg.emitter.d) : json("auto");
    r["emitter"]["n"] = cfg.emitter.n;
    r["emitter"]["levels"] = cfg.emitter.levels ? json(*cfg.emitter.levels) : json();
    r["emitter"]["kind"] = cfg.emitter.kind;
    r["emitter"]["parity"] = cfg.emitter.parity;
    r["solver"] = {{"quad_tol", cfg.solver.quad_tol},
                   {"root_tol", cfg.solver.root_tol},
                   {"patch_delta_factor", cfg.solver.patch_delta_factor},
                   {"grid_points", cfg.solver.grid_points}};
    r["solver"]["d_bracket"] =
        cfg.solver.d_bracket
            ? json::array({cfg.solver.d_bracket->first, cfg.solver.d_bracket->second})
            : json();
    r["dynamics"] = {{"cells", cfg.dynamics.cells},
                     {"modes_per_unit", cfg.dynamics.modes_per_unit},
                     {"sector", cfg.dynamics.sector},
                     {"horizon_factor", cfg.dynamics.horizon_factor},
                     {"samples", cfg.dynamics.samples},
                     {"tol", cfg.dynamics.tol},
                     {"initial", cfg.dynamics.initial}};
    r["dynamics"]["horizon"] = cfg.dynamics.horizon ? json(*cfg.dynamics.horizon) : json();
    r["dynamics"]["custom_state_path"] = cfg.dynamics.custom_state_path;
    r["output"] = {{"dir", cfg.output.dir}, {"format", cfg.output.format}};
    cfg.resolved = std::move(r);
    cfg.config_hash = hex64(fnv1a64(cfg.resolved.dump()));
    return cfg;
}

RunConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(std::move(doc), overrides);
}

RunConfig default_config(const std::vector<std::string>& overrides) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    return parse_config(std::move(doc), overrides);
}

}  // namespace wgqed
