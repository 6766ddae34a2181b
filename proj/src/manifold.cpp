#include "yamabe/manifold.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "yamabe/errors.hpp"
#include "yamabe/quadrature.hpp"
#include "yamabe/spline.hpp"

namespace yamabe {

double Warping::natural_limit() const { return std::numeric_limits<double>::infinity(); }

double integrate(const std::function<double(double)>& g, double a, double b, double rel_tol) {
    using boost::math::quadrature::gauss_kronrod;
    if (!(b > a)) return 0.0;
    double total = 0.0;
    double lo = a;
    while (lo < b) {
        const double hi = std::min(b, std::max(2.0 * lo, lo + 1.0));
        total += gauss_kronrod<double, 31>::integrate(g, lo, hi, 12, rel_tol);
        lo = hi;
    }
    return total;
}

namespace {

class Euclidean final : public Warping {
public:
    double f(double r) const override { return r; }
    double df(double) const override { return 1.0; }
    double d2f(double) const override { return 0.0; }
    double df_minus_one(double) const override { return 0.0; }
    PoleSeries pole_series() const override { return {}; }
    std::string name() const override { return "euclidean"; }
};

class Hyperbolic final : public Warping {
public:
    double f(double r) const override { return std::sinh(r); }
    double df(double r) const override { return std::cosh(r); }
    double d2f(double r) const override { return std::sinh(r); }
    double df_minus_one(double r) const override {
        const double h = std::sinh(0.5 * r);
        return 2.0 * h * h;
    }
    PoleSeries pole_series() const override { return {1.0 / 6.0, 1.0 / 120.0, 1.0 / 5040.0}; }
    std::string name() const override { return "hyperbolic"; }
};

class Cigar final : public Warping {
public:
    double f(double r) const override { return std::tanh(r); }
    double df(double r) const override {
        const double c = 1.0 / std::cosh(r);
        return c * c;
    }
    double d2f(double r) const override {
        const double c = 1.0 / std::cosh(r);
        return -2.0 * std::tanh(r) * c * c;
    }
    double df_minus_one(double r) const override {
        const double t = std::tanh(r);
        return -t * t;
    }
    PoleSeries pole_series() const override { return {-1.0 / 3.0, 2.0 / 15.0, -17.0 / 315.0}; }
    std::string name() const override { return "cigar"; }
};

class Sphere final : public Warping {
public:
    double f(double r) const override { return std::sin(r); }
    double df(double r) const override { return std::cos(r); }
    double d2f(double r) const override { return -std::sin(r); }
    double df_minus_one(double r) const override {
        const double h = std::sin(0.5 * r);
        return -2.0 * h * h;
    }
    PoleSeries pole_series() const override { return {-1.0 / 6.0, 1.0 / 120.0, -1.0 / 5040.0}; }
    double natural_limit() const override { return std::numbers::pi; }
    std::string name() const override { return "sphere"; }
};

class PowerBump final : public Warping {
public:
    PowerBump(double a, double b) : a_(a), b_(b) {
        if (!(b > 0.0)) throw PreconditionError("power-bump: b must be positive");
        if (!(a > -b * std::numbers::e)) throw PreconditionError("power-bump: a must exceed -b*e so that f > 0");
    }
    double f(double r) const override {
        const double r2 = r * r;
        return r + a_ * r * r2 * std::exp(-b_ * r2);
    }
    double df(double r) const override { return 1.0 + df_minus_one(r); }
    double df_minus_one(double r) const override {
        const double r2 = r * r;
        return a_ * std::exp(-b_ * r2) * (3.0 * r2 - 2.0 * b_ * r2 * r2);
    }
    double d2f(double r) const override {
        const double r2 = r * r;
        return a_ * std::exp(-b_ * r2) * r * (6.0 - 14.0 * b_ * r2 + 4.0 * b_ * b_ * r2 * r2);
    }
    PoleSeries pole_series() const override { return {a_, -a_ * b_, 0.5 * a_ * b_ * b_}; }
    std::string name() const override { return "power-bump"; }
    std::map<std::string, double> params() const override { return {{"a", a_}, {"b", b_}}; }

private:
    double a_;
    double b_;
};

class Table final : public Warping {
public:
    Table(std::span<const double> r, std::span<const double> f) {
        if (r.size() != f.size()) throw PreconditionError("table: r and f columns differ in length");
        if (r.size() < 8) throw PreconditionError("table too sparse for stable differentiation (need at least 8 rows)");
        if (r.front() != 0.0) throw PreconditionError("table must start at r = 0");
        spline_ = std::make_unique<CubicSpline>(r, f);
        h0_ = r[1] - r[0];
        const double c3 = (spline_->second_derivative(r[1]) - spline_->second_derivative(0.0)) / h0_;
        series_.a3 = c3 / 6.0;
    }
    double f(double r) const override { return (*spline_)(r); }
    double df(double r) const override { return spline_->derivative(r); }
    double d2f(double r) const override { return spline_->second_derivative(r); }
    PoleSeries pole_series() const override { return series_; }
    double series_radius() const override { return h0_; }
    double natural_limit() const override { return spline_->back(); }
    std::string name() const override { return "table"; }
    bool tabulated() const override { return true; }

private:
    std::unique_ptr<CubicSpline> spline_;
    PoleSeries series_;
    double h0_ = 0.0;
};

}  // namespace

std::shared_ptr<const Warping> make_euclidean() { return std::make_shared<Euclidean>(); }
std::shared_ptr<const Warping> make_hyperbolic() { return std::make_shared<Hyperbolic>(); }
std::shared_ptr<const Warping> make_cigar() { return std::make_shared<Cigar>(); }
std::shared_ptr<const Warping> make_sphere() { return std::make_shared<Sphere>(); }
std::shared_ptr<const Warping> make_power_bump(double a, double b) { return std::make_shared<PowerBump>(a, b); }

std::shared_ptr<const Warping> make_table(std::span<const double> r, std::span<const double> f) {
    return std::make_shared<Table>(r, f);
}

std::shared_ptr<const Warping> load_table_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open table file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw PreconditionError("empty table file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "r,f") throw PreconditionError("table header must be `r,f` in " + path.string());
    std::vector<double> rs, fs;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b))
            throw PreconditionError("malformed table row: " + line);
        rs.push_back(std::stod(a));
        fs.push_back(std::stod(b));
    }
    return make_table(rs, fs);
}

std::shared_ptr<const Warping> make_named_warping(const std::string& name,
                                                  const std::map<std::string, double>& params) {
    auto param = [&](const char* key) {
        auto it = params.find(key);
        if (it == params.end()) throw PreconditionError(name + ": missing parameter '" + key + "'");
        return it->second;
    };
    if (name == "euclidean" || name == "flat") return make_euclidean();
    if (name == "hyperbolic") return make_hyperbolic();
    if (name == "cigar") return make_cigar();
    if (name == "sphere") return make_sphere();
    if (name == "power-bump") return make_power_bump(param("a"), param("b"));
    throw PreconditionError("unknown profile name '" + name + "'");
}

MetricProfile::MetricProfile(int n, std::shared_ptr<const Warping> warping, double r_max)
    : constants_(dimension_constants(n)), warping_(std::move(warping)), r_max_(r_max) {
    if (!warping_) throw PreconditionError("profile: null warping");
    if (!(r_max_ > 0.0) || !std::isfinite(r_max_)) throw PreconditionError("profile: r_max must be positive and finite");
    if (warping_->tabulated() ? r_max_ > warping_->natural_limit() : r_max_ >= warping_->natural_limit())
        throw PreconditionError("profile: r_max beyond the range where f is positive");
    const double tol = warping_->tabulated() ? 1e-4 : 1e-8;
    if (std::abs(warping_->f(0.0)) > tol) throw PreconditionError("profile: f(0) != 0");
    if (std::abs(warping_->df(0.0) - 1.0) > tol) throw PreconditionError("profile: f'(0) != 1");
    // Positivity on a linear and a logarithmic sweep of (0, r_max].
    const int sweep = 2000;
    const double r_min = std::min(1e-6, 1e-3 * r_max_);
    for (int k = 1; k <= sweep; ++k) {
        const double lin = r_max_ * k / sweep;
        const double lg = r_min * std::pow(r_max_ / r_min, static_cast<double>(k) / sweep);
        for (double r : {lin, lg}) {
            const double v = warping_->f(r);
            if (!(v > 0.0) || !std::isfinite(v))
                throw PreconditionError("profile: f must be positive and finite on (0, r_max]; fails at r = " +
                                        std::to_string(r));
        }
    }
}

void MetricProfile::check_radius(double r) const {
    if (!(r >= 0.0 && r <= r_max_))
        throw DomainError("radius " + std::to_string(r) + " outside [0, " + std::to_string(r_max_) + "]");
}

double MetricProfile::f(double r) const {
    check_radius(r);
    return warping_->f(r);
}

double MetricProfile::area_density(double r) const {
    return std::pow(warping_->f(r), constants_.n - 1);
}

double scalar_curvature(const MetricProfile& profile, double r) {
    profile.check_radius(r);
    const double n = profile.dimension();
    const Warping& w = profile.warping();
    if (r < w.series_radius()) {
        const PoleSeries a = w.pole_series();
        const double r2 = r * r;
        const double f_over_r = 1.0 + r2 * (a.a3 + r2 * (a.a5 + r2 * a.a7));
        const double d2_over_r = 6.0 * a.a3 + r2 * (20.0 * a.a5 + 42.0 * a.a7 * r2);
        const double dm_over_r2 = 3.0 * a.a3 + r2 * (5.0 * a.a5 + 7.0 * a.a7 * r2);
        const double dp = 2.0 + r2 * dm_over_r2;
        return -(n - 1.0) * (2.0 * d2_over_r / f_over_r + (n - 2.0) * dm_over_r2 * dp / (f_over_r * f_over_r));
    }
    const double fv = w.f(r);
    const double dm = w.df_minus_one(r);
    return -(n - 1.0) * (2.0 * w.d2f(r) / fv + (n - 2.0) * dm * (dm + 2.0) / (fv * fv));
}

double ball_volume(const MetricProfile& profile, double r) {
    profile.check_radius(r);
    const double omega = sphere_area(profile.dimension() - 1);
    return omega * integrate([&](double t) { return profile.area_density(t); }, 0.0, r);
}

namespace {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    const double m = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += e * e;
    }
    fit.rms = std::sqrt(ss / m);
    return fit;
}

}  // namespace

GrowthEstimate volume_growth_exponent(const MetricProfile& profile, double r_lo, double r_hi,
                                      std::size_t samples) {
    if (!(r_lo > 0.0 && r_hi > r_lo)) throw PreconditionError("growth window must satisfy 0 < r_lo < r_hi");
    if (samples < 8) throw PreconditionError("growth window needs at least 8 samples");
    profile.check_radius(r_hi);
    std::vector<double> log_r(samples), r(samples), log_v(samples);
    const double omega = sphere_area(profile.dimension() - 1);
    double acc = omega * integrate([&](double t) { return profile.area_density(t); }, 0.0, r_lo);
    double prev = r_lo;
    for (std::size_t k = 0; k < samples; ++k) {
        r[k] = r_lo * std::pow(r_hi / r_lo, static_cast<double>(k) / static_cast<double>(samples - 1));
        acc += omega * integrate([&](double t) { return profile.area_density(t); }, prev, r[k]);
        prev = r[k];
        log_r[k] = std::log(r[k]);
        log_v[k] = std::log(acc);
    }
    const LineFit loglog = least_squares(log_r, log_v);
    const LineFit loglin = least_squares(r, log_v);
    GrowthEstimate out;
    out.slope = loglog.slope;
    out.rho = loglog.slope - profile.dimension();
    out.loglog_residual = loglog.rms;
    out.loglinear_residual = loglin.rms;
    out.exponential = loglin.rms < loglog.rms;
    out.polynomial = !out.exponential && loglog.rms < 1e-2;
    out.samples = samples;
    out.r_lo = r_lo;
    out.r_hi = r_hi;
    return out;
}

double curvature_decay_constant(const MetricProfile& profile, double r_lo, double r_hi, std::size_t samples) {
    profile.check_radius(r_hi);
    double worst = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double r = r_lo + (r_hi - r_lo) * static_cast<double>(k) / static_cast<double>(samples - 1);
        worst = std::max(worst, std::max(0.0, -scalar_curvature(profile, r)) * r * r);
    }
    return worst;
}

}  // namespace yamabe
