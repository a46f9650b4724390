#include "gridnorm/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <fmt/core.h>
#include <json.hpp>

namespace gridnorm {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) {
        throw std::invalid_argument(
            fmt::format("config: '{}' must be a JSON object", where));
    }
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
        if (ok.count(item.key()) == 0) {
            throw std::invalid_argument(fmt::format(
                "config: unknown key '{}' in '{}'", item.key(), where));
        }
    }
}

double get_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.at(key).is_number()) {
        throw std::invalid_argument(
            fmt::format("config: '{}.{}' must be a number", where, key));
    }
    return obj.at(key).get<double>();
}

int get_int(const json& obj, const char* key, const std::string& where) {
    if (!obj.at(key).is_number_integer()) {
        throw std::invalid_argument(
            fmt::format("config: '{}.{}' must be an integer", where, key));
    }
    return obj.at(key).get<int>();
}

NormalizeMethod get_method(const json& j, const std::string& where) {
    if (!j.is_string()) {
        throw std::invalid_argument(
            fmt::format("config: '{}' must be a method name string", where));
    }
    return normalize_method_from_string(j.get<std::string>());
}

} // namespace

int NTildeRule::resolve(int r_total) const {
    switch (kind) {
        case Kind::four_r: return 0;  // SamplingRule default
        case Kind::four_r_minus_3: return 4 * r_total - 3;
        case Kind::explicit_value: return value;
    }
    return 0;
}

FineGrid RunConfig::make_grid() const { return FineGrid(domain, nx, ny); }

LevelGeometry RunConfig::make_level(const LevelConfig& lc) const {
    return make_level_geometry(domain, lc.r, lc.n_buffer.value_or(n_buffer),
                               lc.overlap.value_or(overlap));
}

std::vector<LevelGeometry> RunConfig::make_levels() const {
    std::vector<LevelGeometry> out;
    out.reserve(levels.size());
    for (const LevelConfig& lc : levels) {
        out.push_back(make_level(lc));
    }
    return out;
}

SamplingRule RunConfig::make_sampling_rule(int r_total) const {
    return SamplingRule{coarse_mode, n_tilde_rule.resolve(r_total)};
}

ModelSpec RunConfig::make_model_spec(NormalizeMethod method) const {
    ModelSpec spec;
    spec.levels = make_levels();
    spec.tau2 = tau2;
    spec.method = method;
    bool any_alpha = false;
    for (const LevelConfig& lc : levels) {
        spec.kappa2.push_back(lc.kappa2.value_or(kappa2));
        if (lc.alpha) any_alpha = true;
    }
    if (any_alpha) {
        for (const LevelConfig& lc : levels) {
            if (!lc.alpha) {
                throw std::invalid_argument(
                    "config: either give alpha for every level or for none");
            }
            spec.alpha.push_back(*lc.alpha);
        }
    }
    return spec;
}

RunConfig parse_run_config(const std::string& json_text) {
    json root = json::parse(json_text);
    require_object(root, "<root>");
    reject_unknown_keys(root, "<root>",
                        {"grid", "levels", "kappa2", "n_buffer", "overlap",
                         "tau2", "normalize_method", "coarse_mode",
                         "n_tilde_rule", "sampling", "seed", "sim", "bench",
                         "error", "pipeline", "dump_stages", "output"});

    RunConfig cfg;

    if (!root.contains("grid")) {
        throw std::invalid_argument("config: missing required section 'grid'");
    }
    const json& grid = root.at("grid");
    require_object(grid, "grid");
    reject_unknown_keys(grid, "grid", {"domain", "n", "nx", "ny"});
    if (grid.contains("domain")) {
        const json& dom = grid.at("domain");
        if (!dom.is_array() || dom.size() != 4) {
            throw std::invalid_argument(
                "config: 'grid.domain' must be [x_min, x_max, y_min, y_max]");
        }
        cfg.domain = Domain{dom[0].get<double>(), dom[1].get<double>(),
                            dom[2].get<double>(), dom[3].get<double>()};
        cfg.domain.validate();
    }
    if (grid.contains("n")) {
        cfg.nx = cfg.ny = get_int(grid, "n", "grid");
    }
    if (grid.contains("nx")) cfg.nx = get_int(grid, "nx", "grid");
    if (grid.contains("ny")) cfg.ny = get_int(grid, "ny", "grid");
    if (cfg.nx < 2 || cfg.ny < 2) {
        throw std::invalid_argument(
            "config: 'grid' needs n (or nx and ny) of at least 2");
    }

    if (root.contains("kappa2")) cfg.kappa2 = get_number(root, "kappa2", "<root>");
    if (root.contains("n_buffer")) cfg.n_buffer = get_int(root, "n_buffer", "<root>");
    if (root.contains("overlap")) cfg.overlap = get_number(root, "overlap", "<root>");
    if (root.contains("tau2")) cfg.tau2 = get_number(root, "tau2", "<root>");
    if (root.contains("seed")) {
        cfg.seed = root.at("seed").get<std::uint64_t>();
    }
    if (root.contains("dump_stages")) {
        cfg.dump_stages = root.at("dump_stages").get<bool>();
    }
    if (root.contains("output")) {
        cfg.output = root.at("output").get<std::string>();
    }
    if (root.contains("normalize_method")) {
        cfg.normalize_method =
            get_method(root.at("normalize_method"), "normalize_method");
    }
    if (root.contains("coarse_mode")) {
        const std::string mode = root.at("coarse_mode").get<std::string>();
        if (mode == "strict") {
            cfg.coarse_mode = CoarseMode::strict;
        } else if (mode == "relaxed") {
            cfg.coarse_mode = CoarseMode::relaxed;
        } else {
            throw std::invalid_argument(fmt::format(
                "config: 'coarse_mode' must be strict or relaxed, got '{}'", mode));
        }
    }
    if (root.contains("n_tilde_rule")) {
        const json& rule = root.at("n_tilde_rule");
        if (rule.is_string()) {
            const std::string s = rule.get<std::string>();
            if (s == "4r") {
                cfg.n_tilde_rule.kind = NTildeRule::Kind::four_r;
            } else if (s == "4r-3") {
                cfg.n_tilde_rule.kind = NTildeRule::Kind::four_r_minus_3;
            } else {
                throw std::invalid_argument(fmt::format(
                    "config: 'n_tilde_rule' must be \"4r\", \"4r-3\", or an "
                    "integer, got '{}'",
                    s));
            }
        } else if (rule.is_number_integer()) {
            cfg.n_tilde_rule.kind = NTildeRule::Kind::explicit_value;
            cfg.n_tilde_rule.value = rule.get<int>();
        } else {
            throw std::invalid_argument(
                "config: 'n_tilde_rule' must be \"4r\", \"4r-3\", or an integer");
        }
    }

    if (root.contains("levels")) {
        const json& levels = root.at("levels");
        if (!levels.is_array() || levels.empty()) {
            throw std::invalid_argument(
                "config: 'levels' must be a non-empty array");
        }
        for (const json& lv : levels) {
            require_object(lv, "levels[]");
            reject_unknown_keys(lv, "levels[]",
                                {"r", "n_buffer", "overlap", "kappa2", "alpha"});
            LevelConfig lc;
            lc.r = get_int(lv, "r", "levels[]");
            if (lv.contains("n_buffer")) lc.n_buffer = get_int(lv, "n_buffer", "levels[]");
            if (lv.contains("overlap")) lc.overlap = get_number(lv, "overlap", "levels[]");
            if (lv.contains("kappa2")) lc.kappa2 = get_number(lv, "kappa2", "levels[]");
            if (lv.contains("alpha")) lc.alpha = get_number(lv, "alpha", "levels[]");
            cfg.levels.push_back(lc);
        }
    }

    if (root.contains("sampling")) {
        const json& s = root.at("sampling");
        require_object(s, "sampling");
        reject_unknown_keys(s, "sampling", {"type", "fraction", "blocks"});
        SamplingConfig sc;
        const std::string type = s.at("type").get<std::string>();
        if (type == "mar") {
            sc.kind = SamplingConfig::Kind::mar;
            sc.fraction = get_number(s, "fraction", "sampling");
        } else if (type == "blocks") {
            sc.kind = SamplingConfig::Kind::blocks;
            const json& blocks = s.at("blocks");
            if (!blocks.is_array()) {
                throw std::invalid_argument(
                    "config: 'sampling.blocks' must be an array of "
                    "[row, col, side] triples");
            }
            for (const json& b : blocks) {
                if (!b.is_array() || b.size() != 3) {
                    throw std::invalid_argument(
                        "config: each block must be [row, col, side]");
                }
                sc.blocks.push_back(
                    Block{b[0].get<int>(), b[1].get<int>(), b[2].get<int>()});
            }
        } else {
            throw std::invalid_argument(fmt::format(
                "config: 'sampling.type' must be mar or blocks, got '{}'", type));
        }
        cfg.sampling = sc;
    }

    if (root.contains("sim")) {
        const json& s = root.at("sim");
        require_object(s, "sim");
        reject_unknown_keys(s, "sim", {"theta", "nu", "sigma2", "nugget"});
        MaternParams p;
        p.range = get_number(s, "theta", "sim");
        p.smoothness = get_number(s, "nu", "sim");
        if (s.contains("sigma2")) p.variance = get_number(s, "sigma2", "sim");
        if (s.contains("nugget")) p.nugget = get_number(s, "nugget", "sim");
        p.validate();
        cfg.sim = p;
    }

    if (root.contains("bench")) {
        const json& b = root.at("bench");
        require_object(b, "bench");
        reject_unknown_keys(b, "bench", {"methods", "r", "n", "repetitions"});
        BenchConfig bc;
        for (const json& m : b.at("methods")) {
            NormalizeMethod method = get_method(m, "bench.methods[]");
            if (method == NormalizeMethod::both) {
                throw std::invalid_argument(
                    "config: 'both' is a multi-level policy; bench cells take "
                    "none, exact, exactKronecker, or fft");
            }
            bc.methods.push_back(method);
        }
        for (const json& r : b.at("r")) bc.r_values.push_back(r.get<int>());
        for (const json& n : b.at("n")) bc.n_values.push_back(n.get<int>());
        if (b.contains("repetitions")) {
            bc.repetitions = get_int(b, "repetitions", "bench");
        }
        if (bc.repetitions < 1) {
            throw std::invalid_argument("config: 'bench.repetitions' must be >= 1");
        }
        if (bc.methods.empty() || bc.r_values.empty() || bc.n_values.empty()) {
            throw std::invalid_argument(
                "config: 'bench' needs non-empty methods, r, and n lists");
        }
        cfg.bench = bc;
    }

    if (root.contains("error")) {
        const json& e = root.at("error");
        require_object(e, "error");
        reject_unknown_keys(e, "error", {"method", "reference", "dump_field"});
        ErrorConfig ec;
        if (e.contains("method")) ec.method = get_method(e.at("method"), "error.method");
        if (e.contains("reference")) {
            ec.reference = get_method(e.at("reference"), "error.reference");
        }
        if (e.contains("dump_field")) ec.dump_field = e.at("dump_field").get<bool>();
        for (NormalizeMethod m : {ec.method, ec.reference}) {
            if (m == NormalizeMethod::none || m == NormalizeMethod::both) {
                throw std::invalid_argument(
                    "config: 'error' compares per-field methods (exact, "
                    "exactKronecker, fft)");
            }
        }
        cfg.error = ec;
    }

    if (root.contains("pipeline")) {
        const json& p = root.at("pipeline");
        require_object(p, "pipeline");
        reject_unknown_keys(p, "pipeline", {"methods"});
        PipelineConfig pc;
        for (const json& m : p.at("methods")) {
            pc.methods.push_back(get_method(m, "pipeline.methods[]"));
        }
        if (pc.methods.empty()) {
            throw std::invalid_argument("config: 'pipeline.methods' is empty");
        }
        cfg.pipeline = pc;
    }

    // Construction-level validation (spacings, buffers, overlap positivity).
    cfg.make_grid();
    if (!cfg.levels.empty()) {
        cfg.make_model_spec(NormalizeMethod::exact).validate();
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error(
            fmt::format("config: cannot open '{}'", path.string()));
    }
    std::string text((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    try {
        return parse_run_config(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(
            fmt::format("config: '{}' is not valid JSON: {}", path.string(),
                        e.what()));
    }
}

} // namespace gridnorm
