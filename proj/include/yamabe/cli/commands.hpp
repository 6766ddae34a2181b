#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"
#include "yamabe/cli/config.hpp"
#include "yamabe/exhaustion.hpp"
#include "yamabe/functional.hpp"

namespace yamabe::cli {

struct CommandOptions {
    std::filesystem::path out = "out";
    unsigned jobs = 1;
    std::optional<std::filesystem::path> trace{};
    std::optional<std::filesystem::path> field{};
    std::optional<double> y{};      // override Y (decay) or the field multiplier (blowup)
    std::optional<double> y_inf{};  // override the Y_inf estimate (decay)
    std::optional<double> rho{};    // override the fitted volume growth excess (decay)
    std::optional<double> s{};      // exponent of a stored field (blowup)
};

// Each command writes <out>/<command>.json and prints a table to `human`.
// The returned report is the JSON that was written.
nlohmann::json cmd_constants(const RunConfig& cfg, const CommandOptions& opt, std::ostream& human);
nlohmann::json cmd_exhaust(const RunConfig& cfg, const CommandOptions& opt, std::ostream& human);
nlohmann::json cmd_decay(const RunConfig& cfg, const CommandOptions& opt, std::ostream& human);
nlohmann::json cmd_bubble(const RunConfig& cfg, const CommandOptions& opt, std::ostream& human);
nlohmann::json cmd_blowup(const RunConfig& cfg, const CommandOptions& opt, std::ostream& human);

// Report envelope: command, config hash, module versions, function class, timestamp.
nlohmann::json envelope(const std::string& command, const RunConfig& cfg);

// Shared stages.
ExhaustionTrace exhaustion_stage(const MetricProfile& profile, const RunConfig& cfg, unsigned jobs);

struct ExteriorStage {
    std::vector<double> radii;
    std::vector<ExteriorEstimate> estimates;
    double y_inf = 0.0;   // value at the largest inner radius
    bool monotone = true; // nondecreasing in r_in within tol
};
ExteriorStage exterior_stage(const MetricProfile& profile, const RunConfig& cfg, unsigned jobs, double tol);

// Chain lower <= Y <= Y_inf <= Lambda (1 + 0.02), each link with tolerance 0.02 Lambda.
struct ChainCheck {
    bool lower_finite = true;
    bool lower_le_y = true;
    bool y_le_yinf = true;
    bool yinf_le_lambda = true;
    bool holds = true;
};
inline constexpr double kChainTolerance = 0.02;
ChainCheck chain_check(const LowerBound& lower, double y, double y_inf, double lambda);

// Trace files: one JSON line per radius plus one field CSV each.
void write_trace(const std::filesystem::path& dir, const ExhaustionTrace& trace);
ExhaustionTrace read_trace(const std::filesystem::path& path);
std::string field_file_name(double j);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Runs a bump-family candidate through the existence checks.
struct BumpCandidate {
    double a = 0.0;
    double b = 0.0;
    double y_est = 0.0;
    double y_inf = 0.0;
    double rho = 0.0;
    double rho0 = 0.0;
    std::string verdict;
    bool passes = false;
    std::string note;
};
BumpCandidate evaluate_bump(const RunConfig& base, double a, double b, unsigned jobs);

}  // namespace yamabe::cli
