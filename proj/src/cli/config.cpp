#include "yamabe/cli/config.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "yamabe/errors.hpp"

namespace yamabe::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw UsageError(where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw UsageError("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& into, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError("bad value for '" + std::string(key) + "' in " + where);
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    reject_unknown(j, {"dimension", "r_max", "profile", "grid", "solver", "pipeline"}, "config");
    read(j, "dimension", cfg.dimension, "config");
    read(j, "r_max", cfg.r_max, "config");
    if (j.contains("profile")) {
        const auto& p = j.at("profile");
        reject_unknown(p, {"name", "params", "table"}, "profile");
        read(p, "name", cfg.profile.name, "profile");
        read(p, "params", cfg.profile.params, "profile");
        if (p.contains("table") && !p.at("table").is_null()) {
            std::filesystem::path t = p.at("table").get<std::string>();
            cfg.profile.table = t.is_absolute() ? t : base_dir / t;
        }
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        reject_unknown(g, {"per_unit"}, "grid");
        read(g, "per_unit", cfg.grid_per_unit, "grid");
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        reject_unknown(s, {"el_tol", "max_iters", "max_halvings", "eps_s", "schedule_length", "concentration_cap",
                           "min_cells", "max_refinements"},
                       "solver");
        read(s, "el_tol", cfg.solver.el_tol, "solver");
        read(s, "max_iters", cfg.solver.max_iters, "solver");
        read(s, "max_halvings", cfg.solver.max_halvings, "solver");
        read(s, "eps_s", cfg.solver.eps_s, "solver");
        read(s, "schedule_length", cfg.solver.schedule_length, "solver");
        read(s, "concentration_cap", cfg.solver.concentration_cap, "solver");
        read(s, "min_cells", cfg.solver.min_cells, "solver");
        read(s, "max_refinements", cfg.solver.max_refinements, "solver");
    }
    if (j.contains("pipeline")) {
        const auto& p = j.at("pipeline");
        reject_unknown(p, {"radii", "window_frac", "margin", "exterior_radii", "exterior_start", "tol_out",
                           "compact_radius", "growth_window", "alphas", "bubble_eps", "nodes_per_alpha"},
                       "pipeline");
        auto& pl = cfg.pipeline;
        read(p, "radii", pl.radii, "pipeline");
        read(p, "window_frac", pl.window_frac, "pipeline");
        read(p, "margin", pl.margin, "pipeline");
        read(p, "exterior_radii", pl.exterior_radii, "pipeline");
        read(p, "exterior_start", pl.exterior_start, "pipeline");
        read(p, "tol_out", pl.tol_out, "pipeline");
        read(p, "compact_radius", pl.compact_radius, "pipeline");
        read(p, "growth_window", pl.growth_window, "pipeline");
        read(p, "alphas", pl.alphas, "pipeline");
        read(p, "bubble_eps", pl.bubble_eps, "pipeline");
        read(p, "nodes_per_alpha", pl.nodes_per_alpha, "pipeline");
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path());
}

void validate(const RunConfig& cfg) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw UsageError(msg);
    };
    require(cfg.dimension >= 3 && cfg.dimension <= 12, "dimension must lie in [3, 12]");
    require(cfg.r_max > 0.0, "r_max must be positive");
    require(cfg.grid_per_unit >= 8.0, "grid.per_unit must be at least 8");
    const auto& s = cfg.solver;
    require(s.el_tol > 0.0 && s.el_tol <= 1e-3, "solver.el_tol must lie in (0, 1e-3]");
    require(s.max_iters >= 1, "solver.max_iters must be positive");
    require(s.max_halvings >= 0, "solver.max_halvings must be nonnegative");
    require(s.eps_s > 0.0 && s.eps_s < 0.1, "solver.eps_s must lie in (0, 0.1)");
    require(s.schedule_length >= 3, "solver.schedule_length must be at least 3");
    require(s.concentration_cap > 1.0, "solver.concentration_cap must exceed 1");
    require(s.min_cells >= 0.0, "solver.min_cells must be nonnegative");
    require(s.max_refinements >= 0, "solver.max_refinements must be nonnegative");
    const auto& p = cfg.pipeline;
    for (std::size_t i = 0; i < p.radii.size(); ++i) {
        require(p.radii[i] > 0.0 && p.radii[i] <= cfg.r_max, "pipeline.radii must lie in (0, r_max]");
        require(i == 0 || p.radii[i] > p.radii[i - 1], "pipeline.radii must increase");
    }
    require(p.window_frac > 0.0 && p.window_frac < 1.0, "pipeline.window_frac must lie in (0, 1)");
    require(p.margin >= 0.0 && p.margin < 1.0, "pipeline.margin must lie in [0, 1)");
    for (std::size_t i = 0; i < p.exterior_radii.size(); ++i) {
        require(p.exterior_radii[i] > 0.0 && p.exterior_radii[i] < cfg.r_max, "pipeline.exterior_radii must lie in (0, r_max)");
        require(i == 0 || p.exterior_radii[i] > p.exterior_radii[i - 1], "pipeline.exterior_radii must increase");
    }
    require(p.exterior_start > 1.0, "pipeline.exterior_start must exceed 1");
    require(p.tol_out > 0.0 && p.tol_out < 0.1, "pipeline.tol_out must lie in (0, 0.1)");
    require(p.compact_radius > 0.0, "pipeline.compact_radius must be positive");
    require(p.growth_window[0] > 0.0 && p.growth_window[1] > p.growth_window[0] && p.growth_window[1] <= cfg.r_max,
            "pipeline.growth_window must satisfy 0 < lo < hi <= r_max");
    for (double a : p.alphas) require(a > 0.0 && a <= p.bubble_eps, "pipeline.alphas must lie in (0, bubble_eps]");
    require(p.bubble_eps > 0.0 && 2.0 * p.bubble_eps <= cfg.r_max, "pipeline.bubble_eps must lie in (0, r_max / 2]");
    require(p.nodes_per_alpha >= 16, "pipeline.nodes_per_alpha must be at least 16");
    if (cfg.profile.table) require(std::filesystem::exists(*cfg.profile.table), "profile table " + cfg.profile.table->string() + " does not exist");
}

json to_json(const RunConfig& cfg) {
    json profile = {{"name", cfg.profile.name}, {"params", cfg.profile.params}};
    profile["table"] = cfg.profile.table ? json(cfg.profile.table->filename().string()) : json();
    const auto& s = cfg.solver;
    const auto& p = cfg.pipeline;
    return {{"dimension", cfg.dimension},
            {"r_max", cfg.r_max},
            {"profile", profile},
            {"grid", {{"per_unit", cfg.grid_per_unit}}},
            {"solver",
             {{"el_tol", s.el_tol},
              {"max_iters", s.max_iters},
              {"max_halvings", s.max_halvings},
              {"eps_s", s.eps_s},
              {"schedule_length", s.schedule_length},
              {"concentration_cap", s.concentration_cap},
              {"min_cells", s.min_cells},
              {"max_refinements", s.max_refinements}}},
            {"pipeline",
             {{"radii", p.radii},
              {"window_frac", p.window_frac},
              {"margin", p.margin},
              {"exterior_radii", p.exterior_radii},
              {"exterior_start", p.exterior_start},
              {"tol_out", p.tol_out},
              {"compact_radius", p.compact_radius},
              {"growth_window", p.growth_window},
              {"alphas", p.alphas},
              {"bubble_eps", p.bubble_eps},
              {"nodes_per_alpha", p.nodes_per_alpha}}}};
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        out += buf;
    }
    return out;
}

std::string config_hash(const RunConfig& cfg) {
    std::string text = to_json(cfg).dump();
    if (cfg.profile.table) text += "\n" + sha256_hex(read_file(*cfg.profile.table));
    return sha256_hex(text);
}

MetricProfile make_profile(const RunConfig& cfg) {
    try {
        if (cfg.profile.table) return MetricProfile(cfg.dimension, load_table_csv(*cfg.profile.table), cfg.r_max);
        return MetricProfile(cfg.dimension, make_named_warping(cfg.profile.name, cfg.profile.params), cfg.r_max);
    } catch (const PreconditionError& e) {
        throw UsageError(std::string("profile: ") + e.what());
    } catch (const DomainError& e) {
        throw UsageError(std::string("profile: ") + e.what());
    }
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find(',', start), text.size());
        std::string item = text.substr(start, end - start);
        while (!item.empty() && item.front() == ' ') item.erase(item.begin());
        while (!item.empty() && item.back() == ' ') item.pop_back();
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || !(v > 0.0))
            throw UsageError("expected a comma separated list of positive numbers, got '" + text + "'");
        out.push_back(v);
        start = end + 1;
    }
    return out;
}

std::string defaults_help() {
    return to_json(RunConfig{}).dump(2);
}

}  // namespace yamabe::cli
