#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "yamabe/constants.hpp"

namespace yamabe {

// f(r) = r + a3 r^3 + a5 r^5 + a7 r^7 + ... near the pole.
struct PoleSeries {
    double a3 = 0.0;
    double a5 = 0.0;
    double a7 = 0.0;
};

// Warping function of g = dr^2 + f(r)^2 g_{S^{n-1}}.
class Warping {
public:
    virtual ~Warping() = default;
    virtual double f(double r) const = 0;
    virtual double df(double r) const = 0;
    virtual double d2f(double r) const = 0;
    // f'(r) - 1, evaluated without cancellation where the closed form allows.
    virtual double df_minus_one(double r) const { return df(r) - 1.0; }
    virtual PoleSeries pole_series() const = 0;
    // Below this radius curvature is taken from the pole series.
    virtual double series_radius() const { return 1e-3; }
    // Largest radius on which the closed form is meaningful (sphere: pi).
    virtual double natural_limit() const;
    virtual std::string name() const = 0;
    virtual std::map<std::string, double> params() const { return {}; }
    virtual bool tabulated() const { return false; }
};

std::shared_ptr<const Warping> make_euclidean();
std::shared_ptr<const Warping> make_hyperbolic();
std::shared_ptr<const Warping> make_cigar();
std::shared_ptr<const Warping> make_sphere();
// f = r (1 + a r^2 exp(-b r^2)); needs b > 0 and a > -b e.
std::shared_ptr<const Warping> make_power_bump(double a, double b);
// Rows must start at r = 0 and increase strictly; at least 8 rows.
std::shared_ptr<const Warping> make_table(std::span<const double> r, std::span<const double> f);
// CSV with header `r,f`.
std::shared_ptr<const Warping> load_table_csv(const std::filesystem::path& path);
// Named closed form: euclidean, hyperbolic, cigar, sphere, power-bump.
std::shared_ptr<const Warping> make_named_warping(const std::string& name,
                                                  const std::map<std::string, double>& params);

// Rotationally symmetric model (R^n, dr^2 + f(r)^2 g_{S^{n-1}}) on [0, r_max].
// Immutable; construction checks the pole conditions and positivity of f.
class MetricProfile {
public:
    MetricProfile(int n, std::shared_ptr<const Warping> warping, double r_max);

    int dimension() const { return constants_.n; }
    const DimensionConstants& constants() const { return constants_; }
    double r_max() const { return r_max_; }
    const Warping& warping() const { return *warping_; }
    std::string name() const { return warping_->name(); }

    double f(double r) const;
    // f(r)^{n-1}
    double area_density(double r) const;
    void check_radius(double r) const;

private:
    DimensionConstants constants_;
    std::shared_ptr<const Warping> warping_;
    double r_max_;
};

double scalar_curvature(const MetricProfile& profile, double r);

// omega_{n-1} * integral_0^r f^{n-1}
double ball_volume(const MetricProfile& profile, double r);

struct GrowthEstimate {
    double rho = 0.0;
    double slope = 0.0;
    double loglog_residual = 0.0;
    double loglinear_residual = 0.0;
    bool exponential = false;
    bool polynomial = true;
    std::size_t samples = 0;
    double r_lo = 0.0;
    double r_hi = 0.0;
};

// Least-squares slope of log V against log r on a log-spaced window, minus n.
GrowthEstimate volume_growth_exponent(const MetricProfile& profile, double r_lo, double r_hi,
                                      std::size_t samples = 16);

// sup of max(-R, 0) r^2 over a sampled window; finite means R >= -C r^{-2} there.
double curvature_decay_constant(const MetricProfile& profile, double r_lo, double r_hi,
                                std::size_t samples = 256);

}  // namespace yamabe
