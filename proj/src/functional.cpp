#include "yamabe/functional.hpp"

#include <algorithm>
#include <cmath>

#include "yamabe/errors.hpp"
#include "yamabe/quadrature.hpp"

namespace yamabe {

QuotientReport make_quotient_report(const RadialField& u, const Discretization& disc, double s) {
    QuotientReport q;
    const auto& g = u.grid;
    q.domain = g.has_pole() ? Domain{Domain::Kind::ball, 0.0, g.outer()}
                            : Domain{Domain::Kind::annulus, g.inner(), g.outer()};
    q.s = s;
    q.energy = yamabe_energy(u, disc);
    q.norm = lp_norm(u, s, disc);
    if (!(q.norm > 0.0)) throw PreconditionError("quotient of the zero field");
    q.quotient = q.energy / (q.norm * q.norm);
    return q;
}

double bubble_cutoff(double r, double eps) {
    if (r <= eps) return 1.0;
    if (r >= 2.0 * eps) return 0.0;
    const double t = (r - eps) / eps;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return 1.0 - a / (a + b);
}

RadialField bubble_field(const RadialGrid& grid, int n, const BubbleSpec& spec) {
    const double k = 0.5 * (n - 2);
    return RadialField::sample(
        grid,
        [&](double r) { return std::pow(spec.alpha / (spec.alpha * spec.alpha + r * r), k) * bubble_cutoff(r, spec.eps); },
        Boundary::dirichlet_zero);
}

namespace {

void check_spec(const MetricProfile& profile, const BubbleSpec& spec) {
    if (!(spec.alpha > 0.0 && spec.eps > 0.0)) throw PreconditionError("bubble: alpha and eps must be positive");
    if (spec.alpha > spec.eps) throw PreconditionError("bubble: alpha must not exceed eps");
    if (2.0 * spec.eps > profile.r_max()) throw PreconditionError("bubble: 2 eps exceeds r_max");
}

}  // namespace

QuotientReport bubble_quotient(const MetricProfile& profile, const BubbleSpec& spec, double s, std::size_t intervals) {
    check_spec(profile, spec);
    const double outer = 2.0 * spec.eps;
    const double h = outer / static_cast<double>(intervals);
    const auto inside = static_cast<std::size_t>(std::floor(spec.alpha / h)) + 1;
    if (inside < 16) {
        const auto need = static_cast<std::size_t>(std::ceil(15.0 * outer / spec.alpha));
        throw PreconditionError("grid too coarse to resolve alpha: " + std::to_string(inside) +
                                " nodes inside r <= alpha, need N >= " + std::to_string(need));
    }
    const auto grid = RadialGrid::uniform(outer, intervals);
    const Discretization disc(profile, grid);
    return make_quotient_report(bubble_field(grid, profile.dimension(), spec), disc, s);
}

RefinedQuotient bubble_quotient_refined(const MetricProfile& profile, const BubbleSpec& spec, double s,
                                        std::size_t nodes_per_alpha) {
    check_spec(profile, spec);
    const double per = static_cast<double>(std::max<std::size_t>(nodes_per_alpha, 16));
    const auto n = std::max<std::size_t>(32, static_cast<std::size_t>(std::ceil(per * 2.0 * spec.eps / spec.alpha)));
    RefinedQuotient out;
    out.intervals = n;
    out.coarse = bubble_quotient(profile, spec, s, n).quotient;
    out.fine = bubble_quotient(profile, spec, s, 2 * n).quotient;
    out.quotient = (4.0 * out.fine - out.coarse) / 3.0;
    return out;
}

RateFit fit_excess_rate(const std::vector<double>& alphas, const std::vector<double>& excess) {
    if (alphas.size() != excess.size() || alphas.size() < 2) throw PreconditionError("rate fit needs matching lists of length >= 2");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(excess[i] > 0.0)) throw PreconditionError("rate fit needs positive excess values");
        x.push_back(std::log(alphas[i]));
        y.push_back(std::log(excess[i]));
    }
    const double m = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / m, my += y[i] / m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
    RateFit fit;
    fit.exponent = sxy / sxx;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - my - fit.exponent * (x[i] - mx);
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / m);
    return fit;
}

namespace {

SubcriticalSolution solve_by_continuation(const Discretization& disc, double s, const SolverConfig& cfg) {
    const double p = disc.profile().constants().p;
    const double e0 = 0.99 * (p - 2.0);
    const double e1 = s < p ? p - s : p * cfg.eps_s;
    // March geometrically in p - s from just above 2, halving the step after a failure.
    RadialField current = dirichlet_eigenpair(disc).field;
    SubcriticalSolution sol = solve_constrained(disc, p - e0, current, cfg);
    current = sol.field;
    const double span = std::log(e0 / e1);
    double at = 0.0, step = span / 24.0;
    int halvings = 0;
    while (at < span) {
        const double next = std::min(span, at + step);
        const double target = next == span && s < p ? s : p - e0 * std::exp(-next);
        try {
            sol = solve_constrained(disc, target, current, cfg);
        } catch (const ConvergenceError&) {
            if (++halvings > 12) throw;
            step *= 0.5;
            continue;
        }
        current = sol.field;
        at = next;
    }
    if (s == p) sol = solve_constrained(disc, p, current, cfg);
    return sol;
}

// Spacing follows the local length scale min(r, f / |f'|): geometric on flat ends,
// uniform where f grows exponentially.
RadialGrid exterior_grid(const MetricProfile& profile, double r_in, double r_out, double cells) {
    const Warping& w = profile.warping();
    auto scale = [&](double r) {
        const double d = std::abs(w.df(r));
        return d > 0.0 ? std::min(r, w.f(r) / d) : r;
    };
    std::vector<double> nodes{r_in};
    while (nodes.back() < r_out) nodes.push_back(nodes.back() + scale(nodes.back()) / cells);
    if (nodes.size() < 33) return RadialGrid::geometric(r_in, r_out, 32);
    const double stretch = (r_out - r_in) / (nodes.back() - r_in);
    for (double& r : nodes) r = r_in + (r - r_in) * stretch;
    nodes.back() = r_out;
    return RadialGrid::from_nodes(std::move(nodes));
}

// Previous annulus solution transferred to a larger annulus: linear in log r, zero beyond.
RadialField transfer(const RadialField& prev, const RadialGrid& grid) {
    const auto src = prev.grid.nodes();
    return RadialField::sample(
        grid,
        [&](double r) {
            if (r <= src.front() || r >= src.back()) return 0.0;
            const auto it = std::upper_bound(src.begin(), src.end(), r);
            const std::size_t i = static_cast<std::size_t>(it - src.begin());
            const double t = std::log(r / src[i - 1]) / std::log(src[i] / src[i - 1]);
            return (1.0 - t) * prev.values[i - 1] + t * prev.values[i];
        },
        Boundary::dirichlet_zero);
}

}  // namespace

ExteriorEstimate exterior_quotient(const MetricProfile& profile, double r_in, double r_out, double s,
                                   const ExteriorConfig& cfg) {
    const double p = profile.constants().p;
    if (!(r_in > 0.0 && r_out > r_in)) throw PreconditionError("exterior: need 0 < r_in < R_out");
    if (r_out > profile.r_max()) throw PreconditionError("exterior: R_out exceeds r_max");
    if (!(s > 2.0 && s <= p)) throw PreconditionError("exterior: s must lie in (2, p]");
    if (!(cfg.growth > 1.0)) throw PreconditionError("exterior: growth factor must exceed 1");

    ExteriorEstimate out;
    double radius = r_out;
    std::optional<RadialField> prev;
    double prev_value = 0.0;
    for (;;) {
        const auto grid = exterior_grid(profile, r_in, radius, cfg.cells_per_efold);
        const Discretization disc(profile, grid);
        std::optional<SubcriticalSolution> sol;
        if (prev) {
            try {
                sol = solve_constrained(disc, s, transfer(*prev, grid), cfg.solver);
            } catch (const ConvergenceError&) {
            }
        }
        if (!sol) sol = solve_by_continuation(disc, s, cfg.solver);
        out.history.emplace_back(radius, sol->lambda);
        out.report = make_quotient_report(sol->field, disc, s);
        out.value = sol->lambda;
        if (prev && std::abs(sol->lambda - prev_value) <= cfg.tol_out * std::abs(sol->lambda)) {
            out.stabilized = true;
            break;
        }
        prev = sol->field;
        prev_value = sol->lambda;
        const double next = radius * cfg.growth;
        if (next > profile.r_max()) {
            out.flag = "r_max too small";
            break;
        }
        radius = next;
    }
    return out;
}

LowerBound scalar_lower_bound(const MetricProfile& profile, double r_out) {
    profile.check_radius(r_out);
    const int n = profile.dimension();
    const double omega = sphere_area(n - 1);
    auto g = [&](double r) {
        const double neg = std::max(0.0, -scalar_curvature(profile, r));
        return neg == 0.0 ? 0.0 : omega * std::pow(neg, 0.5 * n) * profile.area_density(r);
    };
    LowerBound out;
    const double inner = integrate(g, 0.0, 0.5 * r_out, 1e-12);
    out.integral = inner + integrate(g, 0.5 * r_out, r_out, 1e-12);
    const double tail = out.integral - inner;
    out.tail_fraction = out.integral > 0.0 ? tail / out.integral : 0.0;
    out.divergent = out.integral > 0.0 && out.tail_fraction > 1e-6;
    out.value = -profile.constants().c * std::pow(out.integral, 2.0 / n);
    return out;
}

nlohmann::json to_json(const QuotientReport& q) {
    nlohmann::json d;
    if (q.domain.kind == Domain::Kind::ball)
        d = {{"kind", "ball"}, {"radius", q.domain.outer}};
    else
        d = {{"kind", "annulus"}, {"inner", q.domain.inner}, {"outer", q.domain.outer}};
    return {{"domain", d}, {"s", q.s}, {"energy", q.energy}, {"norm", q.norm}, {"quotient", q.quotient}};
}

nlohmann::json to_json(const ExteriorEstimate& e) {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& [r, v] : e.history) hist.push_back({{"R_out", r}, {"value", v}});
    return {{"value", e.value},
            {"stabilized", e.stabilized},
            {"flag", e.flag},
            {"report", to_json(e.report)},
            {"history", hist}};
}

nlohmann::json to_json(const LowerBound& b) {
    return {{"value", b.value}, {"integral", b.integral}, {"tail_fraction", b.tail_fraction}, {"divergent", b.divergent}};
}

}  // namespace yamabe
