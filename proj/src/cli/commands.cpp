#include "yamabe/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "yamabe/blowup.hpp"
#include "yamabe/constants.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/version.hpp"

namespace yamabe::cli {

using nlohmann::json;

namespace {

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

std::string timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Runs f and maps library errors onto CLI error kinds, naming the stage.
template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const UsageError&) {
        throw;
    } catch (const IoError&) {
        throw;
    } catch (const StageError&) {
        throw;
    } catch (const PreconditionError& e) {
        throw UsageError(name + ": " + e.what());
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

// Runs f(i) for i < m on up to `jobs` threads; results land in index order.
template <class F>
void parallel_for(std::size_t m, unsigned jobs, F&& f) {
    std::vector<std::exception_ptr> errors(m);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < m; i = next++) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const unsigned w = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(m, 1))));
        for (unsigned k = 1; k < w; ++k) pool.emplace_back(worker);
        worker();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string number(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

void require_radii(const RunConfig& cfg) {
    if (cfg.pipeline.radii.empty()) throw UsageError("config missing radii (set pipeline.radii or pass --radii)");
    if (cfg.pipeline.radii.size() < 3) throw UsageError("at least 3 radii are required");
}

}  // namespace

json envelope(const std::string& command, const RunConfig& cfg) {
    json versions = json::object();
    for (const auto& [name, v] : kModuleVersions) versions[std::string(name)] = std::string(v);
    return {{"command", command},
            {"config_hash", config_hash(cfg)},
            {"module_versions", versions},
            {"function_class", std::string(kFunctionClass)},
            {"timestamp", timestamp()},
            {"config", to_json(cfg)}};
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

std::string field_file_name(double j) { return "field_j" + number(j) + ".csv"; }

void write_trace(const std::filesystem::path& dir, const ExhaustionTrace& trace) {
    const auto path = dir / "trace.jsonl";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& rec : trace.records) {
        json line = to_json(rec);
        line["n"] = trace.n;
        line["profile"] = trace.profile;
        line["field_csv"] = field_file_name(rec.j);
        out << line.dump() << "\n";
        try {
            write_field_csv(dir / field_file_name(rec.j), rec.field);
        } catch (const std::exception& e) {
            throw IoError(e.what());
        }
    }
    if (!out) throw IoError("write failed for " + path.string());
}

ExhaustionTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read trace " + path.string());
    ExhaustionTrace trace;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            trace.n = j.at("n").get<int>();
            trace.profile = j.at("profile").get<std::string>();
            auto field = read_field_csv(path.parent_path() / j.at("field_csv").get<std::string>());
            trace.records.push_back(record_from_json(j, std::move(field)));
        } catch (const json::exception& e) {
            throw UsageError("malformed trace line in " + path.string() + ": " + e.what());
        } catch (const std::exception& e) {
            throw IoError(e.what());
        }
    }
    if (trace.records.empty()) throw UsageError("trace " + path.string() + " holds no records");
    return trace;
}

ExhaustionTrace exhaustion_stage(const MetricProfile& profile, const RunConfig& cfg, unsigned jobs) {
    return stage("exhaustion", [&] {
        ExhaustionConfig ec;
        ec.grid_per_unit = cfg.grid_per_unit;
        ec.solver = cfg.solver;
        ec.jobs = jobs;
        return run_exhaustion(profile, cfg.pipeline.radii, ec);
    });
}

ExteriorStage exterior_stage(const MetricProfile& profile, const RunConfig& cfg, unsigned jobs, double tol) {
    return stage("exterior", [&] {
        ExteriorStage out;
        out.radii = cfg.pipeline.exterior_radii;
        if (out.radii.empty()) throw UsageError("pipeline.exterior_radii is empty");
        const double p = profile.constants().p;
        ExteriorConfig ec;
        ec.tol_out = cfg.pipeline.tol_out;
        std::vector<std::optional<ExteriorEstimate>> slots(out.radii.size());
        parallel_for(out.radii.size(), jobs, [&](std::size_t i) {
            const double r_in = out.radii[i];
            const double r_out = std::min(cfg.pipeline.exterior_start * r_in, profile.r_max());
            slots[i] = exterior_quotient(profile, r_in, r_out, p, ec);
        });
        for (auto& s : slots) out.estimates.push_back(std::move(*s));
        out.y_inf = out.estimates.back().value;
        for (std::size_t i = 1; i < out.estimates.size(); ++i)
            if (out.estimates[i].value < out.estimates[i - 1].value - tol) out.monotone = false;
        return out;
    });
}

ChainCheck chain_check(const LowerBound& lower, double y, double y_inf, double lambda) {
    ChainCheck c;
    const double tol = kChainTolerance * lambda;
    c.lower_finite = !lower.divergent;
    c.lower_le_y = !c.lower_finite || lower.value <= y + tol;
    c.y_le_yinf = y <= y_inf + tol;
    c.yinf_le_lambda = y_inf <= lambda + tol;
    c.holds = c.lower_le_y && c.y_le_yinf && c.yinf_le_lambda;
    return c;
}

namespace {

json chain_json(const ChainCheck& c) {
    return {{"tolerance_over_lambda", kChainTolerance},
            {"lower_bound_finite", c.lower_finite},
            {"lower_le_Y", c.lower_finite ? json(c.lower_le_y) : json("skipped")},
            {"Y_le_Y_inf", c.y_le_yinf},
            {"Y_inf_le_lambda", c.yinf_le_lambda},
            {"holds", c.holds}};
}

json exterior_json(const ExteriorStage& ext) {
    json list = json::array();
    for (std::size_t i = 0; i < ext.radii.size(); ++i) {
        json e = to_json(ext.estimates[i]);
        e["r_in"] = ext.radii[i];
        list.push_back(e);
    }
    return {{"estimates", list}, {"Y_inf_est", ext.y_inf}, {"monotone", ext.monotone}};
}

void prepare_out(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

json cmd_constants(const RunConfig& cfg, const CommandOptions& opt, std::ostream& human) {
    require_radii(cfg);
    prepare_out(opt.out);
    const MetricProfile profile = make_profile(cfg);
    const double lambda = lambda_constant(cfg.dimension);
    const auto trace = exhaustion_stage(profile, cfg, opt.jobs);
    const double tol = 1e-3 * std::abs(trace.records.front().y_j);
    const auto ext = exterior_stage(profile, cfg, opt.jobs, tol);
    const auto lower = stage("lower_bound", [&] { return scalar_lower_bound(profile, profile.r_max()); });

    const double y_est = trace.records.back().y_j;
    const auto chain = chain_check(lower, y_est, ext.y_inf, lambda);
    const auto cond = existence_condition(y_est, ext.y_inf, cfg.pipeline.margin);

    json rows = json::array();
    for (const auto& r : trace.records)
        rows.push_back({{"j", r.j},
                        {"Y_j", r.y_j},
                        {"Y_j_over_lambda", r.y_j / lambda},
                        {"attained", r.y_critical.has_value()},
                        {"concentrated", r.concentrated},
                        {"concentration_reason", r.concentration_reason},
                        {"upper_witness", r.upper_witness}});
    json report = envelope("constants", cfg);
    report["result"] = {{"lambda", lambda},
                        {"Y_j", rows},
                        {"Y_est", y_est},
                        {"Y_inf_est", ext.y_inf},
                        {"exterior", exterior_json(ext)},
                        {"lower_bound", to_json(lower)},
                        {"chain", chain_json(chain)},
                        {"condition", to_json(cond)}};
    write_json(opt.out / "constants.json", report);

    human << fmt("profile %s, n = %d   (constants over %s)\n", profile.name().c_str(), cfg.dimension,
                 std::string(kFunctionClass).c_str());
    human << fmt("%8s %14s %10s %10s\n", "j", "Y_j", "Y_j/Lambda", "attained");
    for (const auto& r : trace.records)
        human << fmt("%8g %14.8f %10.5f %10s\n", r.j, r.y_j, r.y_j / lambda, r.y_critical ? "yes" : "no");
    human << fmt("%-18s %14.8f\n", "Lambda", lambda);
    human << fmt("%-18s %14.8f\n", "Y estimate", y_est);
    human << fmt("%-18s %14.8f%s\n", "Y_inf estimate", ext.y_inf, ext.monotone ? "" : "  (exterior not monotone)");
    human << fmt("%-18s %14.8f%s\n", "lower bound", lower.value, lower.divergent ? "  (divergent)" : "");
    human << fmt("%-18s %14s\n", "chain", chain.holds ? "holds" : "fails");
    human << fmt("%-18s %s (margin %g)\n", "existence", cond.verdict.c_str(), cfg.pipeline.margin);
    return report;
}

json cmd_exhaust(const RunConfig& cfg, const CommandOptions& opt, std::ostream& human) {
    require_radii(cfg);
    prepare_out(opt.out);
    const MetricProfile profile = make_profile(cfg);
    const double lambda = lambda_constant(cfg.dimension);
    const auto trace = exhaustion_stage(profile, cfg, opt.jobs);

    std::vector<std::optional<SubsolutionReport>> subs(trace.records.size());
    stage("subsolution", [&] {
        parallel_for(subs.size(), opt.jobs, [&](std::size_t i) { subs[i] = subsolution_check(trace, trace.records[i].j, profile); });
        return 0;
    });
    const auto bound = stage("boundary_bound", [&] { return boundary_bound(trace); });
    const auto verdict = stage("verdict", [&] { return concentration_verdict(trace, cfg.pipeline.compact_radius, profile); });
    const auto& last = trace.records.back();
    const double k_res = stage("k_normalized", [&] { return k_normalized_residual(last.field, profile, last.y_j); });

    stage("write", [&] {
        write_trace(opt.out, trace);
        return 0;
    });

    json subj = json::array();
    for (const auto& s : subs) subj.push_back(to_json(*s));
    json rows = json::array();
    for (const auto& r : trace.records)
        rows.push_back({{"j", r.j},
                        {"Y_j", r.y_j},
                        {"Y_j_over_lambda", r.y_j / lambda},
                        {"concentrated", r.concentrated},
                        {"final_residual", r.final_residual},
                        {"max_value", r.max_value},
                        {"boundary_max", r.boundary_max}});
    json report = envelope("exhaust", cfg);
    report["result"] = {{"records", rows},
                        {"subsolution", subj},
                        {"boundary_bound", to_json(bound)},
                        {"verdict", to_json(verdict)},
                        {"final_residual", last.final_residual},
                        {"k_normalized_residual", k_res},
                        {"trace", "trace.jsonl"}};
    write_json(opt.out / "exhaust.json", report);

    json files = json::array();
    auto add = [&](const std::string& name) {
        std::ifstream in(opt.out / name, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files.push_back({{"path", name}, {"sha256", sha256_hex(ss.str())}});
    };
    add("trace.jsonl");
    for (const auto& r : trace.records) add(field_file_name(r.j));
    json manifest = {{"command", "exhaust"},
                     {"config_hash", report["config_hash"]},
                     {"module_versions", report["module_versions"]},
                     {"timestamp", report["timestamp"]},
                     {"report", "exhaust.json"},
                     {"files", files}};
    write_json(opt.out / "manifest.json", manifest);

    human << fmt("%8s %14s %10s %6s %12s %12s %6s\n", "j", "Y_j", "Y_j/Lambda", "conc", "residual", "bnd max", "sub");
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const auto& r = trace.records[i];
        human << fmt("%8g %14.8f %10.5f %6s %12.3e %12.3e %6s\n", r.j, r.y_j, r.y_j / lambda, r.concentrated ? "yes" : "no",
                     r.final_residual, r.boundary_max, subs[i]->pass ? "pass" : "FAIL");
    }
    human << fmt("boundary bound ratio %g (%s)\n", bound.ratio, bound.pass ? "pass" : "fail");
    human << fmt("verdict: %s (%s)\n", to_string(verdict.verdict).c_str(), verdict.reason.c_str());
    human << fmt("final residual %.3e, K-normalized residual %.3e\n", last.final_residual, k_res);
    return report;
}

json cmd_decay(const RunConfig& cfg, const CommandOptions& opt, std::ostream& human) {
    prepare_out(opt.out);
    const MetricProfile profile = make_profile(cfg);
    ExhaustionTrace trace;
    if (opt.trace) {
        trace = read_trace(*opt.trace);
        if (trace.n != cfg.dimension) throw UsageError("trace dimension differs from the config");
    } else {
        require_radii(cfg);
        trace = exhaustion_stage(profile, cfg, opt.jobs);
    }
    const double y = opt.y.value_or(trace.records.back().y_j);
    double y_inf = 0.0;
    json ext_json;
    if (opt.y_inf) {
        y_inf = *opt.y_inf;
    } else {
        const auto ext = exterior_stage(profile, cfg, opt.jobs, 1e-3 * std::abs(trace.records.front().y_j));
        y_inf = ext.y_inf;
        ext_json = exterior_json(ext);
    }
    const auto& gw = cfg.pipeline.growth_window;
    const auto growth = stage("volume_growth", [&] { return volume_growth_exponent(profile, gw[0], gw[1]); });

    json result = {{"Y", y},
                   {"Y_inf", y_inf},
                   {"exterior", ext_json},
                   {"growth",
                    {{"rho", growth.rho},
                     {"slope", growth.slope},
                     {"exponential", growth.exponential},
                     {"polynomial", growth.polynomial},
                     {"loglog_residual", growth.loglog_residual},
                     {"r_lo", growth.r_lo},
                     {"r_hi", growth.r_hi}}}};
    std::string verdict;
    if (growth.exponential && !opt.rho) {
        verdict = "hypothesis fails: volume growth is exponential";
    } else {
        const double rho = opt.rho.value_or(growth.rho);
        try {
            auto rep = exponent_formulas(cfg.dimension, y, y_inf, rho);
            const auto fit = stage("decay_fit", [&] { return decay_fit(trace, cfg.pipeline.window_frac); });
            rep.alpha_fitted = fit.alpha;
            rep.fit_residual = fit.residual;
            const bool ok = fit.alpha >= rep.alpha_predicted - 0.2;
            verdict = ok ? "empirical decay consistent with the predicted bound"
                         : "empirical decay slower than predicted";
            result["exponents"] = to_json(rep);
            result["fit"] = to_json(fit);
            result["consistent"] = ok;
        } catch (const HypothesisError& e) {
            verdict = std::string("hypothesis fails: ") + e.what();
            result["failed_hypothesis"] = e.name();
        }
    }
    result["verdict"] = verdict;
    json report = envelope("decay", cfg);
    report["result"] = result;
    write_json(opt.out / "decay.json", report);

    human << fmt("Y = %.8f, Y_inf = %.8f, rho = %.4f%s\n", y, y_inf, opt.rho.value_or(growth.rho),
                 growth.exponential ? " (exponential growth)" : "");
    if (result.contains("exponents")) {
        const auto& e = result["exponents"];
        human << fmt("beta0 %.6f  delta %.6f  rho0 %.6f  alpha predicted %.6f  alpha fitted %.6f\n",
                     e["beta0"].get<double>(), e["delta"].get<double>(), e["rho0"].get<double>(),
                     e["alpha_predicted"].get<double>(), e["alpha_fitted"].get<double>());
    }
    human << "verdict: " << verdict << "\n";
    return report;
}

json cmd_bubble(const RunConfig& cfg, const CommandOptions& opt, std::ostream& human) {
    prepare_out(opt.out);
    const MetricProfile profile = make_profile(cfg);
    const auto& alphas = cfg.pipeline.alphas;
    if (alphas.size() < 2) throw UsageError("bubble needs at least two alphas");
    const double p = profile.constants().p;
    const double lambda = lambda_constant(cfg.dimension);
    std::vector<std::optional<RefinedQuotient>> q(alphas.size());
    stage("bubble_quotient", [&] {
        parallel_for(alphas.size(), opt.jobs, [&](std::size_t i) {
            q[i] = bubble_quotient_refined(profile, BubbleSpec{alphas[i], cfg.pipeline.bubble_eps}, p,
                                           cfg.pipeline.nodes_per_alpha);
        });
        return 0;
    });
    std::vector<double> excess;
    json rows = json::array();
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        excess.push_back(q[i]->quotient - lambda);
        rows.push_back({{"alpha", alphas[i]},
                        {"quotient", q[i]->quotient},
                        {"coarse", q[i]->coarse},
                        {"fine", q[i]->fine},
                        {"intervals", q[i]->intervals},
                        {"excess", excess.back()}});
    }
    json result = {{"lambda", lambda}, {"eps", cfg.pipeline.bubble_eps}, {"rows", rows}};
    const int n = cfg.dimension;
    result["expected_rate"] = n == 3 ? 1.0 : 2.0;
    try {
        const auto fit = fit_excess_rate(alphas, excess);
        result["rate"] = fit.exponent;
        result["rate_residual"] = fit.residual;
    } catch (const PreconditionError& e) {
        result["rate"] = json();
        result["rate_note"] = e.what();
    }
    json report = envelope("bubble", cfg);
    report["result"] = result;
    write_json(opt.out / "bubble.json", report);

    human << fmt("%10s %16s %14s\n", "alpha", "Q", "Q - Lambda");
    for (std::size_t i = 0; i < alphas.size(); ++i)
        human << fmt("%10g %16.10f %14.6e\n", alphas[i], q[i]->quotient, excess[i]);
    if (result["rate"].is_number()) human << fmt("fitted excess exponent %.4f\n", result["rate"].get<double>());
    else human << "fitted excess exponent unavailable: " << result["rate_note"].get<std::string>() << "\n";
    return report;
}

json cmd_blowup(const RunConfig& cfg, const CommandOptions& opt, std::ostream& human) {
    if (!opt.field) throw UsageError("blowup needs --field PATH");
    prepare_out(opt.out);
    const MetricProfile profile = make_profile(cfg);
    RadialField u = [&] {
        try {
            return read_field_csv(*opt.field);
        } catch (const std::exception& e) {
            throw IoError(e.what());
        }
    }();
    const double p = profile.constants().p;
    const double s = opt.s.value_or(p);
    const int n = cfg.dimension;

    // Multiplier of the equation the field solves: E(u) / integral |u|^s.
    const double mult = opt.y ? *opt.y : stage("multiplier", [&] {
        const Discretization disc(profile, u.grid);
        const double e = yamabe_energy(u, disc);
        const double norm = lp_norm(u, s, disc);
        return e / std::pow(norm, s);
    });
    const auto rf = stage("rescale", [&] { return rescale(u, profile, s); });
    json result = {{"s", s}, {"multiplier", mult}, {"rescaled", {{"m", rf.m}, {"delta", rf.delta}, {"center", rf.center},
                                                                {"reach", rf.reach}, {"window", rf.window}}}};
    if (mult > 0.0) {
        result["bubble_distance"] = bubble_distance(rf, mult);
        const auto id = stage("energy_identity", [&] { return energy_identity_check(rf.x, rf.v, n, mult); });
        result["energy_identity"] = to_json(id);
        try {
            result["contradiction"] = to_json(contradiction_test(rf.x, rf.v, n, mult));
        } catch (const PreconditionError& e) {
            result["contradiction"] = {{"verdict", "refused"}, {"reason", e.what()}};
        }
    } else {
        result["bubble_distance"] = json();
        result["note"] = "nonpositive multiplier: no positive entire solution to compare against";
    }
    {
        std::ofstream out(opt.out / "rescaled.csv", std::ios::binary);
        if (!out) throw IoError("cannot write rescaled.csv");
        out << "x,v\n";
        for (std::size_t i = 0; i < rf.x.size(); ++i) out << number(rf.x[i]) << "," << number(rf.v[i]) << "\n";
    }
    json report = envelope("blowup", cfg);
    report["result"] = result;
    write_json(opt.out / "blowup.json", report);

    human << fmt("m = %.6g, delta = %.6g, window = %.3f, multiplier = %.8f\n", rf.m, rf.delta, rf.window, mult);
    if (result["bubble_distance"].is_number())
        human << fmt("sup distance to the standard bubble: %.4e\n", result["bubble_distance"].get<double>());
    if (result.contains("energy_identity"))
        human << fmt("energy identity defect: %.3e\n", result["energy_identity"]["defect"].get<double>());
    if (result.contains("contradiction"))
        human << "contradiction test: " << result["contradiction"]["verdict"].get<std::string>() << "\n";
    return report;
}

BumpCandidate evaluate_bump(const RunConfig& base, double a, double b, unsigned jobs) {
    BumpCandidate c;
    c.a = a;
    c.b = b;
    RunConfig cfg = base;
    cfg.profile = ProfileBlock{"power-bump", {{"a", a}, {"b", b}}, std::nullopt};
    try {
        const MetricProfile profile = make_profile(cfg);
        const auto trace = exhaustion_stage(profile, cfg, jobs);
        const auto ext = exterior_stage(profile, cfg, jobs, 1e-3 * std::abs(trace.records.front().y_j));
        c.y_est = trace.records.back().y_j;
        c.y_inf = ext.y_inf;
        const auto& gw = cfg.pipeline.growth_window;
        const auto growth = volume_growth_exponent(profile, gw[0], gw[1]);
        c.rho = growth.rho;
        const auto cond = existence_condition(c.y_est, c.y_inf, cfg.pipeline.margin);
        if (!cond.holds) {
            c.note = cond.verdict;
            return c;
        }
        const auto rep = exponent_formulas(cfg.dimension, c.y_est, c.y_inf, c.rho);
        c.rho0 = rep.rho0;
        const auto v = concentration_verdict(trace, cfg.pipeline.compact_radius, profile);
        c.verdict = to_string(v.verdict);
        const auto& last = trace.records.back();
        const double k_res = k_normalized_residual(last.field, profile, last.y_j);
        const auto fit = decay_fit(trace, cfg.pipeline.window_frac);
        const bool decay_ok = fit.alpha >= rep.alpha_predicted - 0.2;
        c.passes = v.verdict == Verdict::converges_positive && k_res <= 1e-6 && decay_ok && !growth.exponential;
        c.note = fmt("K-normalized residual %.2e, alpha fitted %.3f vs predicted %.3f", k_res, fit.alpha, rep.alpha_predicted);
    } catch (const std::exception& e) {
        c.note = e.what();
    }
    return c;
}

}  // namespace yamabe::cli
