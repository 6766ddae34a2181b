#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "yamabe/manifold.hpp"
#include "yamabe/subcritical.hpp"

namespace yamabe::cli {

// Bad flags or config contents; exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A pipeline stage failed; exit code 3.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

// Output files could not be written or inputs read; exit code 4.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitStage = 3;
inline constexpr int kExitIo = 4;

struct ProfileBlock {
    std::string name = "euclidean";
    std::map<std::string, double> params{};
    std::optional<std::filesystem::path> table{};  // resolved against the config directory
};

struct PipelineBlock {
    std::vector<double> radii{};
    double window_frac = 0.5;
    double margin = 0.05;
    std::vector<double> exterior_radii{1.0, 2.0, 4.0};
    double exterior_start = 2.0;  // first R_out as a multiple of r_in
    double tol_out = 1e-3;
    double compact_radius = 1.0;
    std::array<double, 2> growth_window{8.0, 64.0};
    std::vector<double> alphas{0.1, 0.05, 0.025};
    double bubble_eps = 0.5;
    std::size_t nodes_per_alpha = 64;
};

struct RunConfig {
    int dimension = 3;
    double r_max = 100.0;
    ProfileBlock profile{};
    double grid_per_unit = 128.0;
    SolverConfig solver{};
    PipelineBlock pipeline{};
};

// Missing keys take the defaults above; unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);
void validate(const RunConfig& cfg);

// Effective configuration, every default filled in.
nlohmann::json to_json(const RunConfig& cfg);

// SHA-256 of the effective configuration (and of the table file, if any).
std::string config_hash(const RunConfig& cfg);
std::string sha256_hex(const std::string& bytes);

MetricProfile make_profile(const RunConfig& cfg);

// Comma separated positive numbers.
std::vector<double> parse_number_list(const std::string& text);

// Documented defaults, rendered for --help.
std::string defaults_help();

}  // namespace yamabe::cli
