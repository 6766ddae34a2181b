#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "yamabe/subcritical.hpp"

namespace yamabe {

struct Domain {
    enum class Kind { ball, annulus } kind = Kind::ball;
    double inner = 0.0;
    double outer = 0.0;
};

struct QuotientReport {
    Domain domain;
    double s = 0.0;
    double energy = 0.0;
    double norm = 0.0;
    double quotient = 0.0;
};

QuotientReport make_quotient_report(const RadialField& u, const Discretization& disc, double s);

// Aubin bubble u_a = (a / (a^2 + r^2))^{(n-2)/2} cut off smoothly between eps and 2 eps.
struct BubbleSpec {
    double alpha = 0.1;
    double eps = 0.5;
};

double bubble_cutoff(double r, double eps);
RadialField bubble_field(const RadialGrid& grid, int n, const BubbleSpec& spec);

// Q_s of the cut-off bubble on a uniform grid over [0, 2 eps].
// Refuses grids with fewer than 16 nodes in r <= alpha.
QuotientReport bubble_quotient(const MetricProfile& profile, const BubbleSpec& spec, double s,
                               std::size_t intervals);

struct RefinedQuotient {
    double quotient = 0.0;  // Richardson value from the two grids
    double coarse = 0.0;
    double fine = 0.0;
    std::size_t intervals = 0;  // coarse grid
};

// Two-grid Richardson estimate with nodes_per_alpha nodes across the bubble core.
RefinedQuotient bubble_quotient_refined(const MetricProfile& profile, const BubbleSpec& spec, double s,
                                        std::size_t nodes_per_alpha = 64);

struct RateFit {
    double exponent = 0.0;
    double residual = 0.0;
};

// Slope of log(excess) against log(alpha).
RateFit fit_excess_rate(const std::vector<double>& alphas, const std::vector<double>& excess);

struct ExteriorConfig {
    double cells_per_efold = 64.0;
    double tol_out = 1e-3;
    double growth = 2.0;
    // Flat ends make the critical problem nearly scale invariant, so Newton
    // needs many damped steps there.
    SolverConfig solver{.max_iters = 2000};
};

struct ExteriorEstimate {
    QuotientReport report;
    double value = 0.0;
    bool stabilized = false;
    std::string flag;  // "r_max too small" when R_out could not grow further
    std::vector<std::pair<double, double>> history;  // (R_out, value)
};

// Minimum of Q_s over radial fields vanishing at r_in and R_out, with R_out
// doubled until the relative change drops below tol_out.
ExteriorEstimate exterior_quotient(const MetricProfile& profile, double r_in, double r_out, double s,
                                   const ExteriorConfig& cfg = {});

struct LowerBound {
    double value = 0.0;     // -c(n) |R_-|_{n/2}
    double integral = 0.0;  // integral of |R_-|^{n/2} dV up to R_out
    double tail_fraction = 0.0;
    bool divergent = false;
};

LowerBound scalar_lower_bound(const MetricProfile& profile, double r_out);

nlohmann::json to_json(const QuotientReport& q);
nlohmann::json to_json(const ExteriorEstimate& e);
nlohmann::json to_json(const LowerBound& b);

}  // namespace yamabe
