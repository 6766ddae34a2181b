#include "yamabe/exhaustion.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "yamabe/errors.hpp"

namespace yamabe {

const ExhaustionRecord& ExhaustionTrace::at(double j) const {
    for (const auto& r : records)
        if (std::abs(r.j - j) <= 1e-12 * std::max(1.0, std::abs(j))) return r;
    throw PreconditionError("trace has no record for j = " + std::to_string(j));
}

ExhaustionRecord make_record(double j, const ContinuationResult& res, double p) {
    ExhaustionRecord rec{.field = res.final_field};
    rec.j = j;
    rec.intervals = res.final_field.grid.intervals();
    rec.y_j = res.y_j;
    rec.y_extrapolated = res.y_extrapolated;
    rec.y_critical = res.y_critical;
    rec.upper_witness = res.upper_witness;
    rec.concentrated = res.concentrated;
    rec.concentration_reason = res.concentration_reason;
    rec.steps = res.steps;
    rec.final_residual = res.final_residual;
    rec.max_ratio = res.max_ratio;

    const auto& dc = res.final_field.grid;
    // Exponent and multiplier of the equation the stored field satisfies.
    if (res.y_critical) {
        rec.field_exponent = p;
        rec.field_multiplier = *res.y_critical;
    } else {
        const auto& last = res.steps.back();
        const double scale = res.last_subcritical.max_value() / res.final_field.max_value();
        rec.field_exponent = last.s;
        rec.field_multiplier = last.lambda * std::pow(scale, last.s - 2.0);
    }

    const auto r = dc.nodes();
    const auto& u = rec.field.values;
    const std::size_t k = rec.field.argmax();
    rec.max_value = u[k];
    rec.max_radius = r[k];
    for (std::size_t i = 0; i < r.size(); ++i)
        if (r[i] > j - kBoundaryLayer) rec.boundary_max = std::max(rec.boundary_max, u[i]);

    std::vector<std::size_t> tail;
    for (std::size_t i = 0; i < r.size(); ++i)
        if (r[i] >= 0.5 * j) tail.push_back(i);
    const std::size_t want = 64;
    const std::size_t stride = std::max<std::size_t>(1, tail.size() / want);
    for (std::size_t t = 0; t < tail.size(); t += stride) rec.tail.emplace_back(r[tail[t]], u[tail[t]]);
    if (!tail.empty() && rec.tail.back().first != r[tail.back()]) rec.tail.emplace_back(r[tail.back()], u[tail.back()]);
    return rec;
}

ExhaustionTrace run_exhaustion(const MetricProfile& profile, const std::vector<double>& radii,
                               const ExhaustionConfig& cfg) {
    if (radii.size() < 3) throw PreconditionError("exhaustion needs at least 3 radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) throw PreconditionError("radii must be positive");
        if (i > 0 && !(radii[i] > radii[i - 1])) throw PreconditionError("radii must increase");
    }
    if (radii.back() > profile.r_max()) throw PreconditionError("radius exceeds r_max of the profile");
    if (!(cfg.grid_per_unit > 0.0)) throw PreconditionError("grid resolution must be positive");

    const int n = profile.dimension();
    const double p = profile.constants().p;
    const auto schedule = default_schedule(n, cfg.solver);

    const std::size_t m = radii.size();
    std::vector<std::optional<ExhaustionRecord>> slots(m);
    std::vector<std::exception_ptr> errors(m);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < m; i = next++) {
            try {
                const double j = radii[i];
                const auto intervals =
                    std::max<std::size_t>(32, static_cast<std::size_t>(std::llround(cfg.grid_per_unit * j)));
                const auto grid = RadialGrid::uniform(j, intervals);
                const auto res = continue_to_critical(profile, grid, schedule, cfg.solver);
                slots[i] = make_record(j, res, p);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(m)));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }

    ExhaustionTrace trace;
    trace.n = n;
    trace.profile = profile.name();
    for (std::size_t i = 0; i < m; ++i) {
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                throw RadiusError(radii[i], e.what());
            }
        }
        trace.records.push_back(std::move(*slots[i]));
    }

    const double tol = cfg.tol_mono_rel * std::abs(trace.records.front().y_j);
    for (std::size_t i = 1; i < m; ++i) {
        const auto& a = trace.records[i - 1];
        const auto& b = trace.records[i];
        if (b.y_j > a.y_j + tol)
            throw MonotonicityError("Y_j increased from " + std::to_string(a.y_j) + " at j = " + std::to_string(a.j) +
                                    " to " + std::to_string(b.y_j) + " at j = " + std::to_string(b.j) +
                                    " (under-resolved solve?)");
    }
    return trace;
}

SubsolutionReport subsolution_check(const RadialField& u, double multiplier, double exponent,
                                    const MetricProfile& profile) {
    const auto src = u.grid.nodes();
    const double j = u.grid.outer();
    if (!u.grid.has_pole()) throw PreconditionError("subsolution check needs a ball grid");
    if (!(u.values.back() == 0.0)) throw PreconditionError("subsolution check needs a field vanishing at the boundary");
    const double h = src[src.size() - 1] - src[src.size() - 2];
    const double outer = std::min(2.0 * j, profile.r_max());
    if (outer < j + 2.0 * h) throw PreconditionError("r_max leaves no room to extend the field by zero");

    std::vector<double> nodes(src.begin(), src.end());
    const auto extra = static_cast<std::size_t>(std::ceil((outer - j) / h));
    for (std::size_t k = 1; k <= extra; ++k) nodes.push_back(std::min(outer, j + (outer - j) * static_cast<double>(k) / extra));
    const auto grid = RadialGrid::from_nodes(nodes);
    std::vector<double> ext(nodes.size(), 0.0);
    std::copy(u.values.begin(), u.values.end(), ext.begin());
    const Discretization disc(profile, grid);

    const double c = profile.constants().c;
    const auto ku = disc.stiffness(ext);
    const auto vol = disc.volumes();
    const auto curv = disc.curvature();
    const std::size_t nb = src.size() - 1;  // boundary node

    SubsolutionReport rep;
    rep.j = j;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) rep.scale = std::max(rep.scale, std::abs(ku[k]));
    rep.tol = 1e-6 * rep.scale;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double x = ext[k];
        const double w = ku[k] + c * vol[k] * curv[k] * x - multiplier * vol[k] * std::pow(std::abs(x), exponent - 2.0) * x;
        rep.max_violation = std::max(rep.max_violation, w);
        if (k < nb) rep.max_interior = std::max(rep.max_interior, std::abs(w));
        if (k == nb) rep.boundary_value = w;
    }
    rep.pass = rep.max_violation <= rep.tol;
    return rep;
}

SubsolutionReport subsolution_check(const ExhaustionTrace& trace, double j, const MetricProfile& profile) {
    const auto& rec = trace.at(j);
    return subsolution_check(rec.field, rec.field_multiplier, rec.field_exponent, profile);
}

double beta0_select(int n, double c0y, double eps_hat) {
    if (n < 3) throw PreconditionError("dimension must be at least 3");
    if (!(eps_hat >= 0.0 && eps_hat < 1.0)) throw PreconditionError("slack must lie in [0, 1)");
    if (!(c0y < 1.0)) throw HypothesisError("margin", "condition margin exhausted: C0*Y = " + std::to_string(c0y) + " >= 1");
    const double cap = static_cast<double>(n) / (n - 2) * (1.0 - 1e-9);
    if (c0y <= 0.0) return cap;
    return std::min(std::sqrt((1.0 - eps_hat) / c0y), cap);
}

ExponentReport exponent_formulas(int n, double y, double y_inf, double rho, double eps_hat) {
    if (!(y_inf > 0.0)) throw HypothesisError("Y_inf > 0", "Y_inf must be positive (got " + std::to_string(y_inf) + ")");
    if (!(y < y_inf)) throw HypothesisError("Y < Y_inf", "Y must lie below Y_inf (got Y = " + std::to_string(y) +
                                                             ", Y_inf = " + std::to_string(y_inf) + ")");
    ExponentReport rep;
    rep.n = n;
    rep.y = y;
    rep.y_inf = y_inf;
    rep.rho = rho;
    rep.eps_hat = eps_hat;
    const double nd = n;
    const double crit = 2.0 * nd / (nd - 2.0);
    rep.negative_branch = y < 0.0;
    rep.beta0 = beta0_select(n, rep.negative_branch ? 0.0 : y / y_inf, eps_hat);
    rep.delta = (nd - 2.0) * rep.beta0 / (nd * rep.beta0 - 2.0);
    if (rep.negative_branch) {
        rep.rho0 = crit;
    } else {
        rep.rho0 = y > 0.0 ? std::min(nd * std::sqrt(y_inf / y) - nd, crit) : crit;
    }
    if (!(rho < rep.rho0))
        throw HypothesisError("rho < rho0", "volume growth excess rho = " + std::to_string(rho) +
                                                " is not below rho0 = " + std::to_string(rep.rho0));
    if (rep.negative_branch)
        rep.alpha_predicted = (nd - 2.0) * (2.0 * nd - rho * (nd - 2.0)) / (4.0 * nd);
    else
        rep.alpha_predicted = (nd - 2.0) / 2.0 - (nd - 2.0) * rho / (2.0 * nd * (rep.beta0 - 1.0));
    return rep;
}

DecayFit decay_fit(const RadialField& u, double window_frac) {
    if (!(window_frac > 0.0 && window_frac < 1.0)) throw PreconditionError("window fraction must lie in (0, 1)");
    const auto r = u.grid.nodes();
    const double hi = u.grid.outer();
    const double lo = std::max(u.grid.inner(), (1.0 - window_frac) * hi);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] < lo || r[i] >= hi || r[i] <= 0.0) continue;
        if (!(u.values[i] > 0.0)) break;  // shrink to the positive part
        x.push_back(std::log(r[i]));
        y.push_back(std::log(u.values[i]));
    }
    if (x.size() < 10) throw PreconditionError("decay window holds fewer than 10 positive nodes");
    const double m = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / m, my += y[i] / m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
    const double slope = sxy / sxx;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - my - slope * (x[i] - mx);
        ss += e * e;
    }
    return DecayFit{-slope, std::sqrt(ss / m), std::exp(x.front()), std::exp(x.back()), x.size()};
}

DecayFit decay_fit(const ExhaustionTrace& trace, double window_frac) {
    if (trace.records.empty()) throw PreconditionError("empty trace");
    const auto it = std::max_element(trace.records.begin(), trace.records.end(),
                                     [](const auto& a, const auto& b) { return a.j < b.j; });
    return decay_fit(it->field, window_frac);
}

BoundaryBound boundary_bound(const ExhaustionTrace& trace) {
    if (trace.records.empty()) throw PreconditionError("empty trace");
    BoundaryBound out;
    for (const auto& r : trace.records) {
        out.radii.push_back(r.j);
        out.maxima.push_back(r.boundary_max);
    }
    const std::size_t m = out.maxima.size();
    const std::size_t first = m / 2;
    const auto top = *std::max_element(out.maxima.begin() + static_cast<std::ptrdiff_t>(first), out.maxima.end());
    const auto bottom = *std::min_element(out.maxima.begin() + static_cast<std::ptrdiff_t>(first), out.maxima.end());
    const double base = out.maxima[first];
    out.spread = bottom > 0.0 ? top / bottom : (top > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    out.ratio = base > 0.0 ? top / base : (top > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    out.pass = out.ratio <= 2.0;
    return out;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::converges_positive: return "converges-positive";
        case Verdict::concentrates: return "concentrates";
        case Verdict::escapes: return "escapes";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

ConcentrationVerdict concentration_verdict(const ExhaustionTrace& trace, double compact_radius,
                                           const MetricProfile& profile) {
    if (trace.records.size() < 3) throw PreconditionError("verdict needs at least 3 radii");
    if (!(compact_radius > 0.0)) throw PreconditionError("compact radius must be positive");
    for (const auto& r : trace.records)
        if (!(compact_radius < r.j)) throw PreconditionError("compact radius must lie below every radius");

    ConcentrationVerdict out;
    out.compact_radius = compact_radius;
    const double p = profile.constants().p;
    std::size_t flagged = 0;
    for (const auto& rec : trace.records) {
        const auto r = rec.field.grid.nodes();
        const Discretization disc(profile, rec.field.grid);
        const auto vol = disc.volumes();
        double sup = 0.0, mass = 0.0;
        for (std::size_t i = 0; i < r.size() && r[i] <= compact_radius; ++i) {
            sup = std::max(sup, rec.field.values[i]);
            mass += vol[i] * std::pow(std::abs(rec.field.values[i]), p);
        }
        out.radii.push_back(rec.j);
        out.sup_ball.push_back(sup);
        out.max_value.push_back(rec.max_value);
        out.mass_ball.push_back(mass);
        if (rec.concentrated) ++flagged;
    }
    const std::size_t m = out.radii.size();
    if (flagged == m) {
        out.verdict = Verdict::concentrates;
        out.reason = "continuation flagged concentration at every radius";
        return out;
    }
    if (flagged > 0) {
        out.reason = "concentration flagged at some radii only";
        return out;
    }

    const auto& a = out.sup_ball;
    const auto& mv = out.max_value;
    const double top = *std::max_element(a.begin(), a.end());
    if (!(top > 0.0)) {
        out.verdict = Verdict::escapes;
        out.reason = "field vanishes on the compact ball";
        return out;
    }
    bool max_up = true;
    for (std::size_t i = 1; i < m; ++i) max_up = max_up && mv[i] > mv[i - 1];
    const auto& last = trace.records.back();
    if (max_up && mv.back() >= 2.0 * mv.front() && last.max_radius <= compact_radius) {
        out.verdict = Verdict::concentrates;
        out.reason = "maximum grows inside the compact ball";
        return out;
    }

    std::vector<double> d(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) d[i] = a[i + 1] - a[i];
    const double still = 1e-9 * top;
    if (std::all_of(d.begin(), d.end(), [&](double x) { return std::abs(x) <= still; })) {
        out.verdict = Verdict::converges_positive;
        out.limit_estimate = a.back();
        out.reason = "sup over the compact ball is stationary";
        return out;
    }
    const bool down = std::all_of(d.begin(), d.end(), [&](double x) { return x <= still; });
    const bool up = std::all_of(d.begin(), d.end(), [&](double x) { return x >= -still; });
    if (!down && !up) {
        out.reason = "sup over the compact ball is not monotone";
        return out;
    }
    const double q = d[m - 3] != 0.0 ? d[m - 2] / d[m - 3] : 0.0;
    if (q >= 0.0 && q < 1.0) {
        const double limit = a.back() + d.back() * q / (1.0 - q);
        out.limit_estimate = limit;
        if (limit >= 0.25 * top) {
            out.verdict = Verdict::converges_positive;
            out.reason = "sup over the compact ball converges to a positive limit";
        } else if (limit <= 0.05 * top) {
            out.verdict = Verdict::escapes;
            out.reason = "sup over the compact ball tends to zero";
        } else {
            out.reason = "limit of the sup over the compact ball is small but not negligible";
        }
        return out;
    }
    if (down && a.back() < 0.5 * a.front()) {
        out.verdict = Verdict::escapes;
        out.reason = "sup over the compact ball decreases without slowing";
        return out;
    }
    out.reason = "increments of the sup over the compact ball do not contract";
    return out;
}

ConditionCheck existence_condition(double y, double y_inf, double margin) {
    if (!(margin >= 0.0)) throw PreconditionError("margin must be nonnegative");
    ConditionCheck c{false, "", y, y_inf, margin};
    const double band = margin * std::abs(y_inf);
    if (!(y_inf > 0.0))
        c.verdict = "existence condition fails: Y_inf <= 0";
    else if (y < y_inf - band) {
        c.holds = true;
        c.verdict = "holds";
    } else if (y <= y_inf + band)
        c.verdict = "existence condition fails: Y = Y_inf within margin";
    else
        c.verdict = "existence condition fails: Y > Y_inf";
    return c;
}

double k_normalized_residual(const RadialField& u, const MetricProfile& profile, double y) {
    const double p = profile.constants().p;
    RadialField w = u;
    double k = 0.0;
    if (y != 0.0) {
        const double a = std::pow(std::abs(y), 1.0 / (p - 2.0));
        for (double& v : w.values) v *= a;
        k = y > 0.0 ? 1.0 : -1.0;
    }
    return el_residual(w, profile, k, p);
}

nlohmann::json to_json(const ExhaustionRecord& r) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.steps)
        steps.push_back({{"s", s.s},
                         {"lambda", s.lambda},
                         {"residual", s.residual},
                         {"iterations", s.iterations},
                         {"max_value", s.max_value},
                         {"half_width", s.half_width}});
    nlohmann::json tail = nlohmann::json::array();
    for (const auto& [x, v] : r.tail) tail.push_back({x, v});
    return {{"j", r.j},
            {"intervals", r.intervals},
            {"y_j", r.y_j},
            {"y_extrapolated", r.y_extrapolated},
            {"y_critical", r.y_critical ? nlohmann::json(*r.y_critical) : nlohmann::json()},
            {"upper_witness", r.upper_witness},
            {"concentrated", r.concentrated},
            {"concentration_reason", r.concentration_reason},
            {"field_exponent", r.field_exponent},
            {"field_multiplier", r.field_multiplier},
            {"max_value", r.max_value},
            {"max_radius", r.max_radius},
            {"boundary_max", r.boundary_max},
            {"final_residual", r.final_residual},
            {"max_ratio", r.max_ratio},
            {"tail", tail},
            {"steps", steps}};
}

ExhaustionRecord record_from_json(const nlohmann::json& j, RadialField field) {
    ExhaustionRecord r{.field = std::move(field)};
    r.j = j.at("j").get<double>();
    r.intervals = j.at("intervals").get<std::size_t>();
    r.y_j = j.at("y_j").get<double>();
    r.y_extrapolated = j.at("y_extrapolated").get<double>();
    if (!j.at("y_critical").is_null()) r.y_critical = j.at("y_critical").get<double>();
    r.upper_witness = j.at("upper_witness").get<double>();
    r.concentrated = j.at("concentrated").get<bool>();
    r.concentration_reason = j.at("concentration_reason").get<std::string>();
    r.field_exponent = j.at("field_exponent").get<double>();
    r.field_multiplier = j.at("field_multiplier").get<double>();
    r.max_value = j.at("max_value").get<double>();
    r.max_radius = j.at("max_radius").get<double>();
    r.boundary_max = j.at("boundary_max").get<double>();
    r.final_residual = j.at("final_residual").get<double>();
    r.max_ratio = j.at("max_ratio").get<double>();
    for (const auto& t : j.at("tail")) r.tail.emplace_back(t.at(0).get<double>(), t.at(1).get<double>());
    for (const auto& s : j.at("steps"))
        r.steps.push_back({s.at("s").get<double>(), s.at("lambda").get<double>(), s.at("residual").get<double>(),
                           s.at("iterations").get<int>(), s.at("max_value").get<double>(),
                           s.at("half_width").get<double>()});
    return r;
}

nlohmann::json to_json(const SubsolutionReport& r) {
    return {{"j", r.j},
            {"max_violation", r.max_violation},
            {"max_interior", r.max_interior},
            {"boundary_value", r.boundary_value},
            {"scale", r.scale},
            {"tol", r.tol},
            {"pass", r.pass}};
}

nlohmann::json to_json(const ExponentReport& r) {
    return {{"n", r.n},
            {"Y", r.y},
            {"Y_inf", r.y_inf},
            {"beta0", r.beta0},
            {"beta0_choice", "largest admissible"},
            {"eps_hat", r.eps_hat},
            {"delta", r.delta},
            {"rho", r.rho},
            {"rho0", r.rho0},
            {"alpha_predicted", r.alpha_predicted},
            {"alpha_fitted", r.alpha_fitted ? nlohmann::json(*r.alpha_fitted) : nlohmann::json()},
            {"fit_residual", r.fit_residual},
            {"branch", r.negative_branch ? "Y < 0" : "Y >= 0"}};
}

nlohmann::json to_json(const DecayFit& r) {
    return {{"alpha", r.alpha}, {"residual", r.residual}, {"r_lo", r.r_lo}, {"r_hi", r.r_hi}, {"nodes", r.nodes}};
}

nlohmann::json to_json(const BoundaryBound& r) {
    auto finite = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json("inf"); };
    return {{"radii", r.radii}, {"maxima", r.maxima}, {"ratio", finite(r.ratio)}, {"spread", finite(r.spread)},
            {"pass", r.pass}};
}

nlohmann::json to_json(const ConcentrationVerdict& r) {
    return {{"verdict", to_string(r.verdict)},
            {"reason", r.reason},
            {"compact_radius", r.compact_radius},
            {"radii", r.radii},
            {"sup_ball", r.sup_ball},
            {"max_value", r.max_value},
            {"mass_ball", r.mass_ball},
            {"limit_estimate", r.limit_estimate ? nlohmann::json(*r.limit_estimate) : nlohmann::json()}};
}

nlohmann::json to_json(const ConditionCheck& r) {
    return {{"holds", r.holds}, {"verdict", r.verdict}, {"Y", r.y}, {"Y_inf", r.y_inf}, {"margin", r.margin}};
}

}  // namespace yamabe
