#include "yamabe/blowup.hpp"

#include <algorithm>
#include <cmath>

#include "yamabe/constants.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/spline.hpp"

namespace yamabe {

double standard_bubble(int n, double y, double x) {
    if (n < 3) throw PreconditionError("dimension must be at least 3");
    if (!(y > 0.0)) throw PreconditionError("standard bubble needs Y > 0");
    const double nd = n;
    return std::pow(1.0 + y * x * x / (nd * (nd - 2.0)), -(nd - 2.0) / 2.0);
}

double bubble_fd_residual(int n, double y, double h, double x_lo, double x_hi) {
    if (!(h > 0.0 && x_lo > h && x_hi > x_lo)) throw PreconditionError("need 0 < h < x_lo < x_hi");
    const double p = dimension_constants(n).p;
    double worst = 0.0;
    const int samples = 64;
    for (int k = 0; k <= samples; ++k) {
        const double x = x_lo + (x_hi - x_lo) * k / samples;
        const double a = standard_bubble(n, y, x - h), b = standard_bubble(n, y, x), c = standard_bubble(n, y, x + h);
        const double d2 = (a - 2.0 * b + c) / (h * h);
        const double d1 = (c - a) / (2.0 * h);
        worst = std::max(worst, std::abs(d2 + (n - 1) / x * d1 + y * std::pow(b, p - 1.0)));
    }
    return worst;
}

RescaledField rescale(const RadialField& u, const MetricProfile& profile, std::optional<double> s,
                      std::optional<double> window, std::size_t samples) {
    const double p = profile.constants().p;
    const double se = s.value_or(p);
    if (!(se > 2.0 && se <= p)) throw PreconditionError("rescale: s must lie in (2, p]");
    if (samples < 3) throw PreconditionError("rescale: need at least 3 samples");
    const auto r = u.grid.nodes();
    const std::size_t k = u.argmax();
    const double m = u.values[k];
    if (!(m > 0.0)) throw PreconditionError("rescale: field has no positive maximum");
    if (k + 1 == r.size() || (k == 0 && !u.grid.has_pole()))
        throw PreconditionError("rescale: maximum sits on the boundary");

    RescaledField out;
    out.n = profile.dimension();
    out.s = se;
    out.m = m;
    out.delta = std::pow(m, 1.0 - se / 2.0);
    out.center = r[k];
    out.reach = (u.grid.outer() - out.center) / out.delta;
    out.window = window.value_or(std::min(5.0, out.reach / 2.0));
    if (!(out.window > 0.0 && out.window <= out.reach)) throw PreconditionError("rescale: window leaves the grid");

    std::vector<double> xs, ys;
    if (u.grid.has_pole()) {
        for (std::size_t i = r.size() - 1; i > 0; --i) {
            xs.push_back(-r[i]);
            ys.push_back(u.values[i]);
        }
    }
    xs.insert(xs.end(), r.begin(), r.end());
    ys.insert(ys.end(), u.values.begin(), u.values.end());
    const CubicSpline spline(xs, ys);

    out.x.resize(samples);
    out.v.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = out.window * static_cast<double>(i) / static_cast<double>(samples - 1);
        out.x[i] = x;
        out.v[i] = std::clamp(spline(std::min(out.center + out.delta * x, u.grid.outer())) / m, 0.0, 1.0);
    }
    out.v[0] = 1.0;
    return out;
}

double bubble_distance(const RescaledField& v, double y) {
    double worst = 0.0;
    for (std::size_t i = 0; i < v.x.size(); ++i)
        worst = std::max(worst, std::abs(v.v[i] - standard_bubble(v.n, y, v.x[i])));
    return worst;
}

namespace {

double check_uniform(const std::vector<double>& x, std::size_t min_samples) {
    if (x.size() != 0 && x.front() != 0.0) throw PreconditionError("samples must start at 0");
    if (x.size() < min_samples) throw PreconditionError("too few samples");
    const double h = x[1] - x[0];
    if (!(h > 0.0)) throw PreconditionError("samples must increase");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (std::abs(x[i] - x[i - 1] - h) > 1e-9 * h) throw PreconditionError("samples must be uniformly spaced");
    return h;
}

double simpson(const std::vector<double>& g, double h, std::size_t stride = 1) {
    const std::size_t n = (g.size() - 1) / stride;
    if (n % 2 != 0) throw PreconditionError("Simpson rule needs an even number of intervals");
    double acc = g.front() + g[n * stride];
    for (std::size_t i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * g[i * stride];
    return acc * h * static_cast<double>(stride) / 3.0;
}

// Fourth-order first derivative; even reflection through x = 0.
std::vector<double> derivative(const std::vector<double>& v, double h) {
    const std::size_t n = v.size();
    auto at = [&](std::ptrdiff_t i) { return v[static_cast<std::size_t>(i < 0 ? -i : i)]; };
    std::vector<double> d(n);
    for (std::size_t i = 0; i + 2 < n; ++i) {
        const auto k = static_cast<std::ptrdiff_t>(i);
        d[i] = (-at(k + 2) + 8.0 * at(k + 1) - 8.0 * at(k - 1) + at(k - 2)) / (12.0 * h);
    }
    const std::size_t a = n - 1;
    d[a] = (25.0 * v[a] - 48.0 * v[a - 1] + 36.0 * v[a - 2] - 16.0 * v[a - 3] + 3.0 * v[a - 4]) / (12.0 * h);
    d[a - 1] = (3.0 * v[a] + 10.0 * v[a - 1] - 18.0 * v[a - 2] + 6.0 * v[a - 3] - v[a - 4]) / (12.0 * h);
    return d;
}

}  // namespace

IdentityReport energy_identity_check(const std::vector<double>& x, const std::vector<double>& v, int n, double y) {
    if (x.size() != v.size()) throw PreconditionError("sample lists differ in length");
    const double h = check_uniform(x, 9);
    const double p = dimension_constants(n).p;
    const double omega = sphere_area(n - 1);
    const auto dv = derivative(v, h);
    std::vector<double> g(x.size()), q(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = std::pow(x[i], n - 1);
        g[i] = dv[i] * dv[i] * w;
        q[i] = std::pow(std::abs(v[i]), p) * w;
    }
    IdentityReport rep;
    rep.radius = x.back();
    rep.gradient = omega * simpson(g, h);
    rep.mass = omega * simpson(q, h);
    rep.potential = y * rep.mass;
    rep.flux = omega * std::pow(rep.radius, n - 1) * v.back() * dv.back();
    rep.defect = std::abs(rep.gradient - rep.potential - rep.flux) / std::abs(rep.gradient);
    return rep;
}

ContradictionReport contradiction_test(const std::vector<double>& x, const std::vector<double>& v, int n, double y) {
    if (x.size() != v.size()) throw PreconditionError("sample lists differ in length");
    const double h = check_uniform(x, 41);
    for (double t : v)
        if (!(t > 0.0)) throw PreconditionError("contradiction test needs v > 0 on every sample");
    const double p = dimension_constants(n).p;
    const double omega = sphere_area(n - 1);
    const double big_r = x.back();
    const double nd = n;

    ContradictionReport rep;
    rep.lambda = lambda_constant(n);

    // Decay check on the outer quarter.
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < 0.75 * big_r) continue;
            const double a = std::log(x[i]), b = std::log(v[i]);
            sx += a, sy += b, sxx += a * a, sxy += a * b, m += 1;
        }
        rep.tail_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    if (!(rep.tail_slope < -0.5 * (nd - 2.0)))
        throw PreconditionError("v does not decay at the bubble rate; tail extrapolation refused");

    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = std::pow(v[i], p) * std::pow(x[i], n - 1);
    const std::size_t intervals = x.size() - 1;
    double inner = 0.0, quad_err = 0.0;
    if (intervals % 4 == 0) {
        inner = simpson(g, h);
        quad_err = std::abs(inner - simpson(g, h, 2));
    } else if (intervals % 2 == 0) {
        inner = simpson(g, h);
        double trap = 0.5 * (g.front() + g.back());
        for (std::size_t i = 1; i < intervals; ++i) trap += g[i];
        quad_err = std::abs(inner - trap * h);
    } else {
        throw PreconditionError("Simpson rule needs an even number of intervals");
    }

    // Tail of the integrand ~ C r^k with the bubble exponent k.
    const double k = (2.0 - nd) * p + nd - 1.0;
    auto tail_from = [&](double frac) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < (1.0 - frac) * big_r) continue;
            const double b = std::pow(x[i], k);
            num += g[i] * b;
            den += b * b;
        }
        const double c = num / den;
        return c * std::pow(big_r, k + 1.0) / (-(k + 1.0));
    };
    const double t1 = tail_from(0.1), t2 = tail_from(0.25);
    rep.mass = omega * (inner + t1);
    rep.mass_error = omega * (std::abs(t1 - t2) + quad_err);
    rep.rhs = y * std::pow(rep.mass, 2.0 / nd);
    rep.rhs_error = y * (2.0 / nd) * std::pow(rep.mass, 2.0 / nd - 1.0) * rep.mass_error;
    rep.consistent = rep.lambda <= rep.rhs + rep.rhs_error + 1e-9 * rep.lambda;
    rep.verdict = rep.consistent ? "consistent-with-contradiction" : "inequality violated";
    return rep;
}

nlohmann::json to_json(const RescaledField& r) {
    return {{"n", r.n},         {"s", r.s},           {"m", r.m}, {"delta", r.delta}, {"center", r.center},
            {"reach", r.reach}, {"window", r.window}, {"x", r.x}, {"v", r.v}};
}

nlohmann::json to_json(const IdentityReport& r) {
    return {{"radius", r.radius}, {"gradient", r.gradient}, {"potential", r.potential},
            {"flux", r.flux},     {"defect", r.defect},     {"mass", r.mass}};
}

nlohmann::json to_json(const ContradictionReport& r) {
    return {{"lambda", r.lambda},         {"mass", r.mass},           {"mass_error", r.mass_error},
            {"rhs", r.rhs},               {"rhs_error", r.rhs_error}, {"tail_slope", r.tail_slope},
            {"consistent", r.consistent}, {"verdict", r.verdict}};
}

}  // namespace yamabe
