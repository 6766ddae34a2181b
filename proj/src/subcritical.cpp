#include "yamabe/subcritical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "yamabe/errors.hpp"
#include "yamabe/tridiagonal.hpp"

namespace yamabe {

namespace {

// Dirichlet system restricted to the unknown nodes [first, last).
class System {
public:
    explicit System(const Discretization& disc)
        : disc_(disc), first_(disc.first_unknown()), last_(disc.last_unknown()) {
        const double c = disc.profile().constants().c;
        const auto vol = disc.volumes();
        const auto curv = disc.curvature();
        for (std::size_t i = first_; i < last_; ++i) {
            vol_.push_back(vol[i]);
            potential_.push_back(c * vol[i] * curv[i]);
        }
        const auto cond = disc.conductances();
        for (std::size_t i = first_; i < last_; ++i) {
            double d = cond[i];
            if (i > 0) d += cond[i - 1];
            stiff_diag_.push_back(d);
            if (i + 1 < last_) stiff_off_.push_back(-cond[i]);
        }
    }

    std::size_t size() const { return vol_.size(); }
    std::span<const double> volumes() const { return vol_; }

    std::vector<double> restrict(std::span<const double> full) const {
        return {full.begin() + static_cast<std::ptrdiff_t>(first_), full.begin() + static_cast<std::ptrdiff_t>(last_)};
    }

    RadialField extend(std::span<const double> x) const {
        std::vector<double> full(disc_.grid().size(), 0.0);
        std::copy(x.begin(), x.end(), full.begin() + static_cast<std::ptrdiff_t>(first_));
        return RadialField(disc_.grid(), std::move(full), Boundary::dirichlet_zero);
    }

    std::vector<double> apply_stiffness(std::span<const double> x) const {
        const std::size_t m = x.size();
        std::vector<double> out(m);
        for (std::size_t i = 0; i < m; ++i) {
            double v = stiff_diag_[i] * x[i];
            if (i > 0) v += stiff_off_[i - 1] * x[i - 1];
            if (i + 1 < m) v += stiff_off_[i] * x[i + 1];
            out[i] = v;
        }
        return out;
    }

    double energy(std::span<const double> x) const {
        const auto kx = apply_stiffness(x);
        double e = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) e += x[i] * (kx[i] + potential_[i] * x[i]);
        return e;
    }

    double power_sum(std::span<const double> x, double s) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += vol_[i] * std::pow(std::abs(x[i]), s);
        return acc;
    }

    // F = K x + c V R x - lambda V |x|^{s-2} x
    std::vector<double> residual(std::span<const double> x, double lambda, double s) const {
        auto f = apply_stiffness(x);
        for (std::size_t i = 0; i < x.size(); ++i)
            f[i] += potential_[i] * x[i] - lambda * vol_[i] * std::pow(std::abs(x[i]), s - 2.0) * x[i];
        return f;
    }

    // Discrete L2 norm of the strong-form residual F / V.
    double merit(std::span<const double> f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * f[i] / vol_[i];
        return std::sqrt(acc);
    }

    std::span<const double> stiff_diag() const { return stiff_diag_; }
    std::span<const double> stiff_off() const { return stiff_off_; }
    std::span<const double> potential() const { return potential_; }
    const Discretization& disc() const { return disc_; }

private:
    const Discretization& disc_;
    std::size_t first_, last_;
    std::vector<double> vol_, potential_, stiff_diag_, stiff_off_;
};

double sup_norm(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

SubcriticalSolution newton(const System& sys, double s, std::vector<double> u, const SolverConfig& cfg) {
    const std::size_t m = sys.size();
    const auto vol = sys.volumes();
    double nn = std::pow(sys.power_sum(u, s), 1.0 / s);
    if (!(nn > 0.0)) throw PreconditionError("initial guess vanishes identically");
    for (double& v : u) v /= nn;
    double lambda = sys.energy(u);
    auto f = sys.residual(u, lambda, s);
    double merit = sys.merit(f);
    const double target = 1e-3 * cfg.el_tol;
    int it = 0;
    for (; it < cfg.max_iters && merit > target; ++it) {
        std::vector<double> diag(m), lower(sys.stiff_off().begin(), sys.stiff_off().end());
        std::vector<double> upper = lower;
        std::vector<double> col(m), row(m), x(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double w = std::pow(std::abs(u[i]), s - 2.0);
            diag[i] = sys.stiff_diag()[i] + sys.potential()[i] - lambda * (s - 1.0) * vol[i] * w;
            col[i] = -vol[i] * w * u[i];
            row[i] = s * vol[i] * w * u[i];
            x[i] = -f[i];
        }
        const double g = sys.power_sum(u, s) - 1.0;
        TridiagonalLU lu(std::move(lower), std::move(diag), std::move(upper));
        lu.solve(x);
        std::vector<double> y = col;
        lu.solve(y);
        const double denom = std::inner_product(row.begin(), row.end(), y.begin(), 0.0);
        if (denom == 0.0 || !std::isfinite(denom)) break;
        const double dlambda = (std::inner_product(row.begin(), row.end(), x.begin(), 0.0) + g) / denom;
        std::vector<double> du(m);
        for (std::size_t i = 0; i < m; ++i) du[i] = x[i] - y[i] * dlambda;

        double t = 1.0;
        bool accepted = false;
        std::vector<double> trial(m);
        for (int h = 0; h <= cfg.max_halvings; ++h, t *= 0.5) {
            for (std::size_t i = 0; i < m; ++i) trial[i] = u[i] + t * du[i];
            const double tn = std::pow(sys.power_sum(trial, s), 1.0 / s);
            if (!(tn > 0.0) || !std::isfinite(tn)) continue;
            for (double& v : trial) v /= tn;
            const double tl = (lambda + t * dlambda) * std::pow(tn, s - 2.0);
            auto tf = sys.residual(trial, tl, s);
            const double tm = sys.merit(tf);
            if (std::isfinite(tm) && tm < merit) {
                u.swap(trial);
                lambda = tl;
                f.swap(tf);
                merit = tm;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        if (t * sup_norm(du) <= 1e-13 * sup_norm(u)) {
            ++it;
            break;
        }
    }
    if (!(merit <= cfg.el_tol) || !std::isfinite(lambda))
        throw ConvergenceError("Newton did not converge at s = " + std::to_string(s) + " (residual " +
                                   std::to_string(merit) + ")",
                               u, lambda, merit);
    for (double v : u)
        if (!(v > 0.0))
            throw ConvergenceError("negative nodes after convergence at s = " + std::to_string(s) +
                                       " (discretization too coarse)",
                                   u, lambda, merit);
    return SubcriticalSolution{sys.extend(u), lambda, s, merit, it};
}

double half_width(const RadialField& u) {
    const std::size_t k = u.argmax();
    const double top = u.values[k];
    const auto r = u.grid.nodes();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = k + 1; i < r.size(); ++i) {
        if (u.values[i] < 0.5 * top) {
            const double a = u.values[i - 1], b = u.values[i];
            const double t = (a - 0.5 * top) / (a - b);
            best = std::min(best, r[i - 1] + t * (r[i] - r[i - 1]) - r[k]);
            break;
        }
    }
    for (std::size_t i = k; i-- > 0;) {
        if (u.values[i] < 0.5 * top) {
            const double a = u.values[i + 1], b = u.values[i];
            const double t = (a - 0.5 * top) / (a - b);
            best = std::min(best, r[k] - (r[i + 1] - t * (r[i + 1] - r[i])));
            break;
        }
    }
    return best;
}

double local_step(const RadialField& u) {
    const std::size_t k = u.argmax();
    const auto r = u.grid.nodes();
    return k + 1 < r.size() ? r[k + 1] - r[k] : r[k] - r[k - 1];
}

}  // namespace

Eigenpair dirichlet_eigenpair(const Discretization& disc) {
    const System sys(disc);
    const std::size_t m = sys.size();
    const auto vol = sys.volumes();
    std::vector<double> diag(m);
    for (std::size_t i = 0; i < m; ++i) diag[i] = sys.stiff_diag()[i] + sys.potential()[i];
    const auto off = sys.stiff_off();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < m; ++i) {
        double radius = 0.0;
        if (i > 0) radius += std::abs(off[i - 1]) / std::sqrt(vol[i] * vol[i - 1]);
        if (i + 1 < m) radius += std::abs(off[i]) / std::sqrt(vol[i] * vol[i + 1]);
        lo = std::min(lo, diag[i] / vol[i] - radius);
        hi = std::max(hi, diag[i] / vol[i] + radius);
    }
    lo -= 1e-12 * std::abs(lo) + 1e-300;
    for (int k = 0; k < 300 && hi - lo > 1e-15 * std::max(std::abs(lo), std::abs(hi)); ++k) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (count_below(diag, off, vol, mid) >= 1 ? hi : lo) = mid;
    }
    const double shift = lo - 1e-9 * std::max(std::abs(lo), 1e-300);
    std::vector<double> shifted(m);
    for (std::size_t i = 0; i < m; ++i) shifted[i] = diag[i] - shift * vol[i];
    TridiagonalLU lu(std::vector<double>(off.begin(), off.end()), shifted, std::vector<double>(off.begin(), off.end()));
    std::vector<double> x(m, 1.0);
    for (int k = 0; k < 4; ++k) {
        for (std::size_t i = 0; i < m; ++i) x[i] *= vol[i];
        lu.solve(x);
        double nrm = 0.0;
        for (std::size_t i = 0; i < m; ++i) nrm += vol[i] * x[i] * x[i];
        nrm = std::sqrt(nrm);
        for (double& v : x) v /= nrm;
    }
    if (std::accumulate(x.begin(), x.end(), 0.0) < 0.0)
        for (double& v : x) v = -v;
    const auto kx = sys.apply_stiffness(x);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        num += x[i] * (kx[i] + sys.potential()[i] * x[i]);
        den += vol[i] * x[i] * x[i];
    }
    return Eigenpair{num / den, sys.extend(x)};
}

SubcriticalSolution solve_constrained(const Discretization& disc, double s, const RadialField& init,
                                      const SolverConfig& cfg) {
    const double p = disc.profile().constants().p;
    if (!(s > 2.0 && s <= p)) throw PreconditionError("exponent s must lie in (2, p]");
    const System sys(disc);
    return newton(sys, s, sys.restrict(init.values), cfg);
}

SubcriticalSolution solve_subcritical(const MetricProfile& profile, const RadialGrid& grid, double s,
                                      const RadialField& init, const SolverConfig& cfg) {
    const double p = profile.constants().p;
    if (!(s > 2.0 && s < p)) throw PreconditionError("solve_subcritical needs 2 < s < p");
    if (init.grid.size() != grid.size()) throw PreconditionError("initial guess lives on a different grid");
    const Discretization disc(profile, grid);
    const std::size_t first = disc.first_unknown(), last = disc.last_unknown();
    const double sign = init.values[first] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = first; i < last; ++i)
        if (!(sign * init.values[i] > 0.0)) throw PreconditionError("initial guess must be positive in the interior");
    std::vector<double> start(init.values);
    for (double& v : start) v *= sign;
    start.back() = 0.0;
    if (!grid.has_pole()) start.front() = 0.0;
    const RadialField guess(grid, std::move(start), Boundary::dirichlet_zero);
    try {
        return solve_constrained(disc, s, guess, cfg);
    } catch (const ConvergenceError&) {
    }
    // Homotopy in s from just above 2, with doubling resolution.
    for (int steps = 4; steps <= 256; steps *= 2) {
        try {
            RadialField current = guess;
            SubcriticalSolution sol{guess, 0.0, 0.0, 0.0, 0};
            for (int k = 1; k <= steps; ++k) {
                sol = solve_constrained(disc, 2.0 + (s - 2.0) * k / steps, current, cfg);
                current = sol.field;
            }
            return sol;
        } catch (const ConvergenceError&) {
        }
    }
    const System sys(disc);
    return newton(sys, s, sys.restrict(guess.values), cfg);
}

SubcriticalSolution solve_subcritical(const MetricProfile& profile, const RadialGrid& grid, double s,
                                      const SolverConfig& cfg) {
    const Discretization disc(profile, grid);
    return solve_subcritical(profile, grid, s, dirichlet_eigenpair(disc).field, cfg);
}

std::vector<double> default_schedule(int n, const SolverConfig& cfg) {
    const double p = dimension_constants(n).p;
    if (cfg.schedule_length < 3) throw PreconditionError("schedule needs at least 3 points");
    if (!(cfg.eps_s > 0.0 && cfg.eps_s < 0.1)) throw PreconditionError("eps_s must lie in (0, 0.1)");
    const double e0 = 0.9 * (p - 2.0);
    const double e1 = p * cfg.eps_s;
    std::vector<double> out(static_cast<std::size_t>(cfg.schedule_length));
    for (int k = 0; k < cfg.schedule_length; ++k)
        out[static_cast<std::size_t>(k)] = p - e0 * std::pow(e1 / e0, static_cast<double>(k) / (cfg.schedule_length - 1));
    return out;
}

ContinuationResult continue_to_critical(const MetricProfile& profile, const RadialGrid& grid,
                                        std::span<const double> schedule, const SolverConfig& cfg) {
    return continue_to_critical(Discretization(profile, grid), schedule, cfg);
}

ContinuationResult continue_to_critical(const Discretization& disc, std::span<const double> schedule,
                                        const SolverConfig& cfg) {
    const double p = disc.profile().constants().p;
    if (schedule.empty()) throw PreconditionError("empty schedule");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i] > 2.0 && schedule[i] < p)) throw PreconditionError("schedule entries must lie in (2, p)");
        if (i > 0 && !(schedule[i] > schedule[i - 1])) throw PreconditionError("schedule must increase");
    }
    const Eigenpair eig = dirichlet_eigenpair(disc);

    std::vector<ContinuationStep> steps;
    RadialField current = eig.field;
    double current_s = 2.0;
    double init_max = 0.0;
    bool concentrated = false;
    std::string reason;

    enum class Outcome { ok, fold, flagged };
    auto accept = [&](const SubcriticalSolution& sol) {
        const double mx = sol.field.max_value();
        const double hw = half_width(sol.field);
        if (steps.empty()) init_max = mx;
        if (!steps.empty() && mx > cfg.concentration_cap * init_max) {
            reason = "max u_s exceeded the concentration cap";
            return Outcome::flagged;
        }
        if (hw < cfg.min_cells * local_step(sol.field)) {
            reason = "peak narrower than the resolution limit";
            return Outcome::flagged;
        }
        steps.push_back({sol.s, sol.lambda, sol.residual, sol.iterations, mx, hw});
        current = sol.field;
        current_s = sol.s;
        return Outcome::ok;
    };
    auto advance = [&](auto&& self, double s_to, int depth) -> Outcome {
        try {
            return accept(solve_constrained(disc, s_to, current, cfg));
        } catch (const ConvergenceError&) {
        }
        if (depth >= cfg.max_refinements) return Outcome::fold;
        const Outcome mid = self(self, 0.5 * (current_s + s_to), depth + 1);
        if (mid != Outcome::ok) return mid;
        return self(self, s_to, depth + 1);
    };

    for (double s : schedule) {
        const Outcome out = advance(advance, s, 0);
        if (out == Outcome::ok) continue;
        if (out == Outcome::fold) reason = "solution branch folded before s_max (Newton failed under refinement)";
        concentrated = true;
        break;
    }
    if (steps.empty())
        throw ConvergenceError("continuation produced no converged solution", {}, eig.value, 0.0);

    // Linear extrapolation in e = p - s through the last three steps.
    const std::size_t k = std::min<std::size_t>(3, steps.size());
    double y_extra = steps.back().lambda;
    if (k >= 2) {
        double se = 0, sl = 0;
        for (std::size_t i = steps.size() - k; i < steps.size(); ++i) se += p - steps[i].s, sl += steps[i].lambda;
        const double me = se / k, ml = sl / k;
        double see = 0, sel = 0;
        for (std::size_t i = steps.size() - k; i < steps.size(); ++i) {
            const double e = p - steps[i].s;
            see += (e - me) * (e - me);
            sel += (e - me) * (steps[i].lambda - ml);
        }
        y_extra = ml - (sel / see) * me;
    }

    const RadialField last_sub = current;
    const double last_norm_p = lp_norm(last_sub, p, disc);
    RadialField final_field = last_sub;
    for (double& v : final_field.values) v /= last_norm_p;
    const double witness = quotient(last_sub, disc, p);

    std::optional<double> y_critical;
    if (!concentrated) {
        try {
            SubcriticalSolution crit = solve_constrained(disc, p, last_sub, cfg);
            const double mx = crit.field.max_value();
            if (mx > cfg.concentration_cap * init_max) {
                concentrated = true;
                reason = "critical solution exceeded the concentration cap";
            } else if (half_width(crit.field) < cfg.min_cells * local_step(crit.field)) {
                concentrated = true;
                reason = "critical solution narrower than the resolution limit";
            } else {
                y_critical = crit.lambda;
                final_field = crit.field;
            }
        } catch (const ConvergenceError&) {
            concentrated = true;
            reason = "critical solve did not converge";
        }
    }
    const double y_j = y_critical ? *y_critical : y_extra;
    double mx_hi = 0.0, mx_lo = std::numeric_limits<double>::infinity();
    for (const auto& st : steps) mx_hi = std::max(mx_hi, st.max_value), mx_lo = std::min(mx_lo, st.max_value);
    const double final_res = el_residual(final_field, disc, y_j, p);
    return ContinuationResult{std::move(steps), y_extra,   y_critical, y_j,          witness,     concentrated,
                              std::move(reason), final_field, last_sub, final_res, mx_hi / mx_lo};
}

double el_residual(const RadialField& u, const MetricProfile& profile, double lambda, std::optional<double> s) {
    const Discretization disc(profile, u.grid);
    return el_residual(u, disc, lambda, s ? *s : profile.constants().p);
}

double el_residual(const RadialField& u, const Discretization& disc, double lambda, double s) {
    if (!u.compactly_supported()) throw PreconditionError("el_residual needs a field vanishing at the boundary");
    const System sys(disc);
    const auto x = sys.restrict(u.values);
    return sys.merit(sys.residual(x, lambda, s));
}

double quotient(const RadialField& u, const Discretization& disc, double s) {
    const double nrm = lp_norm(u, s, disc);
    if (!(nrm > 0.0)) throw PreconditionError("quotient of the zero field");
    return yamabe_energy(u, disc) / (nrm * nrm);
}

}  // namespace yamabe
