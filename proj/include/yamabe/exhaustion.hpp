#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "yamabe/subcritical.hpp"

namespace yamabe {

struct ExhaustionRecord {
    double j = 0.0;
    std::size_t intervals = 0;
    double y_j = 0.0;
    double y_extrapolated = 0.0;
    std::optional<double> y_critical{};
    double upper_witness = 0.0;
    bool concentrated = false;
    std::string concentration_reason{};
    RadialField field;  // unit L^p norm
    // The stored field solves Delta u - c R u + multiplier u^{exponent-1} = 0.
    double field_exponent = 0.0;
    double field_multiplier = 0.0;
    double max_value = 0.0;
    double max_radius = 0.0;
    double boundary_max = 0.0;  // sup over d(x, boundary) < 1/8
    std::vector<std::pair<double, double>> tail{};  // samples in the outer half
    double final_residual = 0.0;
    double max_ratio = 1.0;
    std::vector<ContinuationStep> steps{};
};

struct ExhaustionTrace {
    int n = 3;
    std::string profile;
    std::vector<ExhaustionRecord> records;

    const ExhaustionRecord& at(double j) const;
};

struct ExhaustionConfig {
    double grid_per_unit = 128.0;
    SolverConfig solver;
    unsigned jobs = 1;
    double tol_mono_rel = 1e-3;
};

inline constexpr double kBoundaryLayer = 0.125;

// One continuation per radius, run concurrently up to cfg.jobs. Throws
// MonotonicityError when Y_j increases by more than tol_mono.
ExhaustionTrace run_exhaustion(const MetricProfile& profile, const std::vector<double>& radii,
                               const ExhaustionConfig& cfg = {});

ExhaustionRecord make_record(double j, const ContinuationResult& res, double p);

struct SubsolutionReport {
    double j = 0.0;
    double max_violation = 0.0;  // max positive part of the weak residual over hats
    double max_interior = 0.0;   // max |weak residual| over hats inside B_j
    double boundary_value = 0.0; // weak residual of the hat at the boundary node
    double scale = 0.0;
    double tol = 0.0;
    bool pass = false;
};

// Zero extension of the stored field to [0, 2j]; tests
// <grad u, grad phi> + c <R u, phi> - m <u^{q-1}, phi> <= tol for every hat phi.
SubsolutionReport subsolution_check(const ExhaustionTrace& trace, double j, const MetricProfile& profile);
SubsolutionReport subsolution_check(const RadialField& u, double multiplier, double exponent,
                                    const MetricProfile& profile);

inline constexpr double kDefaultEpsHat = 1e-6;

// Largest admissible beta0 for the product C0*Y < 1.
double beta0_select(int n, double c0y, double eps_hat = kDefaultEpsHat);

struct ExponentReport {
    int n = 3;
    double y = 0.0;
    double y_inf = 0.0;
    double beta0 = 0.0;
    double eps_hat = 0.0;
    double delta = 0.0;
    double rho = 0.0;
    double rho0 = 0.0;
    double alpha_predicted = 0.0;
    std::optional<double> alpha_fitted;
    double fit_residual = 0.0;
    bool negative_branch = false;
};

ExponentReport exponent_formulas(int n, double y, double y_inf, double rho, double eps_hat = kDefaultEpsHat);

struct DecayFit {
    double alpha = 0.0;
    double residual = 0.0;
    double r_lo = 0.0;
    double r_hi = 0.0;
    std::size_t nodes = 0;
};

DecayFit decay_fit(const RadialField& u, double window_frac);
DecayFit decay_fit(const ExhaustionTrace& trace, double window_frac);

struct BoundaryBound {
    std::vector<double> radii;
    std::vector<double> maxima;
    double ratio = 1.0;   // growth: max over the upper half / its first value
    double spread = 1.0;  // max / min over the upper half
    bool pass = true;
};

BoundaryBound boundary_bound(const ExhaustionTrace& trace);

enum class Verdict { converges_positive, concentrates, escapes, inconclusive };
std::string to_string(Verdict v);

struct ConcentrationVerdict {
    Verdict verdict = Verdict::inconclusive;
    std::string reason;
    double compact_radius = 0.0;
    std::vector<double> radii;
    std::vector<double> sup_ball;
    std::vector<double> max_value;
    std::vector<double> mass_ball;
    std::optional<double> limit_estimate;
};

ConcentrationVerdict concentration_verdict(const ExhaustionTrace& trace, double compact_radius,
                                           const MetricProfile& profile);

struct ConditionCheck {
    bool holds = false;
    std::string verdict;
    double y = 0.0;
    double y_inf = 0.0;
    double margin = 0.0;
};

// Y < Y_inf with relative margin, and Y_inf > 0.
ConditionCheck existence_condition(double y, double y_inf, double margin);

// Residual of Delta w - c R w + K w^{p-1} for w = |Y|^{1/(p-2)} u, K = sign(Y).
double k_normalized_residual(const RadialField& u, const MetricProfile& profile, double y);

nlohmann::json to_json(const ExhaustionRecord& r);
ExhaustionRecord record_from_json(const nlohmann::json& j, RadialField field);
nlohmann::json to_json(const SubsolutionReport& r);
nlohmann::json to_json(const ExponentReport& r);
nlohmann::json to_json(const DecayFit& r);
nlohmann::json to_json(const BoundaryBound& r);
nlohmann::json to_json(const ConcentrationVerdict& r);
nlohmann::json to_json(const ConditionCheck& r);

}  // namespace yamabe
