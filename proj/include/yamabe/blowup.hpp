#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "yamabe/radial.hpp"

namespace yamabe {

// (1 + Y x^2 / (n (n-2)))^{-(n-2)/2}: the entire solution of Delta v + Y v^{p-1} = 0 with v(0) = 1.
double standard_bubble(int n, double y, double x);

// Max over [x_lo, x_hi] of |v'' + (n-1)/x v' + Y v^{p-1}| with central differences of step h.
double bubble_fd_residual(int n, double y, double h, double x_lo, double x_hi);

// v(x) = u(center + delta x) / m with delta = m^{1 - s/2}, sampled on [0, window].
struct RescaledField {
    int n = 3;
    double s = 0.0;
    double m = 0.0;
    double delta = 0.0;
    double center = 0.0;
    double reach = 0.0;   // distance from the center to the boundary, in rescaled units
    double window = 0.0;
    std::vector<double> x{};
    std::vector<double> v{};
};

// Cubic resampling of u around its maximum. s defaults to the critical exponent,
// window to min(5, reach / 2). Off-pole maxima are rescaled along the radius.
RescaledField rescale(const RadialField& u, const MetricProfile& profile, std::optional<double> s = {},
                      std::optional<double> window = {}, std::size_t samples = 401);

// Sup over the window of |v - standard_bubble(n, y)|.
double bubble_distance(const RescaledField& v, double y);

struct IdentityReport {
    double radius = 0.0;
    double gradient = 0.0;  // integral over B_R of |grad v|^2
    double potential = 0.0; // Y times the integral of v^p
    double flux = 0.0;      // boundary term |S| R^{n-1} v v'
    double defect = 0.0;    // |gradient - potential - flux| / gradient
    double mass = 0.0;      // integral of v^p over B_R
};

// Samples on a uniform grid x_0 = 0 < ... < x_N = R, N even.
IdentityReport energy_identity_check(const std::vector<double>& x, const std::vector<double>& v, int n, double y);

struct ContradictionReport {
    double lambda = 0.0;       // best Sobolev constant
    double mass = 0.0;         // full-space integral of v^p, tail extrapolated
    double mass_error = 0.0;
    double rhs = 0.0;          // Y mass^{2/n}
    double rhs_error = 0.0;
    double tail_slope = 0.0;   // fitted log-slope of v over the outer window
    bool consistent = false;
    std::string verdict;
};

// Tests Lambda <= Y (integral v^p)^{2/n} with the tail integrated analytically.
ContradictionReport contradiction_test(const std::vector<double>& x, const std::vector<double>& v, int n, double y);

nlohmann::json to_json(const RescaledField& r);
nlohmann::json to_json(const IdentityReport& r);
nlohmann::json to_json(const ContradictionReport& r);

}  // namespace yamabe
