// Command-line front end: constants | exhaust | decay | bubble | blowup.
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "yamabe/cli/commands.hpp"

using namespace yamabe::cli;

int main(int argc, char** argv) {
    CLI::App app{"Yamabe constants and approximate solutions on rotationally symmetric models"};
    app.require_subcommand(1);
    app.footer("Config file (JSON), every key optional; defaults:\n" + defaults_help() +
               "\n\nExit codes: 0 ok (whatever the mathematical verdict), 2 usage or config error, "
               "3 a pipeline stage failed, 4 file I/O error.");

    std::string config_path;
    std::string out_dir = "out";
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    std::string radii, alphas, trace, field;
    double s_max_eps = 0.0, window_frac = 0.0, margin = -1.0;
    double y = 0.0, y_inf = 0.0, rho = 0.0, s = 0.0, eps = 0.0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--jobs", jobs, "parallel solves")->check(CLI::Range(1u, 1024u))->capture_default_str();
    };
    auto* constants = app.add_subcommand("constants", "Y_j table, Y and Y_inf estimates, chain check, existence verdict");
    auto* exhaust = app.add_subcommand("exhaust", "exhaustion trace with subsolution, boundary and concentration checks");
    auto* decay = app.add_subcommand("decay", "decay exponents against the fitted tail of the largest field");
    auto* bubble = app.add_subcommand("bubble", "cut-off bubble quotients and the fitted excess rate");
    auto* blowup = app.add_subcommand("blowup", "rescale a stored field and compare with the standard bubble");
    for (auto* sub : {constants, exhaust, decay, bubble, blowup}) common(sub);
    for (auto* sub : {constants, exhaust, decay}) {
        sub->add_option("--radii", radii, "ball radii, comma separated (overrides pipeline.radii)");
        sub->add_option("--s-max-eps", s_max_eps, "schedule ends at p (1 - eps) (overrides solver.eps_s)");
        sub->add_option("--margin", margin, "relative margin for Y < Y_inf (overrides pipeline.margin)");
    }
    decay->add_option("--trace", trace, "trace.jsonl from a previous exhaust run")->check(CLI::ExistingFile);
    decay->add_option("--window-frac", window_frac, "outer window fraction (overrides pipeline.window_frac)");
    decay->add_option("--y", y, "use this Y instead of the trace estimate");
    decay->add_option("--y-inf", y_inf, "use this Y_inf instead of the exterior estimate");
    decay->add_option("--rho", rho, "use this volume growth excess instead of the fitted one");
    bubble->add_option("--alphas", alphas, "bubble scales, comma separated (overrides pipeline.alphas)");
    bubble->add_option("--eps", eps, "cutoff radius (overrides pipeline.bubble_eps)");
    blowup->add_option("--field", field, "field CSV (r,u)")->required()->check(CLI::ExistingFile);
    blowup->add_option("--s", s, "exponent of the equation the field solves (default p)");
    blowup->add_option("--y", y, "multiplier of that equation (default energy over the s-th power integral)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        RunConfig cfg = load_config(config_path);
        CommandOptions opt;
        opt.out = out_dir;
        opt.jobs = jobs;
        auto* sub = app.get_subcommands().front();
        auto given = [&](const char* flag) { return sub->get_option_no_throw(flag) && sub->count(flag) > 0; };
        if (given("--radii")) cfg.pipeline.radii = parse_number_list(radii);
        if (given("--alphas")) cfg.pipeline.alphas = parse_number_list(alphas);
        if (given("--s-max-eps")) cfg.solver.eps_s = s_max_eps;
        if (given("--window-frac")) cfg.pipeline.window_frac = window_frac;
        if (given("--margin")) cfg.pipeline.margin = margin;
        if (given("--eps")) cfg.pipeline.bubble_eps = eps;
        if (given("--trace")) opt.trace = trace;
        if (given("--field")) opt.field = field;
        if (given("--y")) opt.y = y;
        if (given("--y-inf")) opt.y_inf = y_inf;
        if (given("--rho")) opt.rho = rho;
        if (given("--s")) opt.s = s;
        validate(cfg);

        if (sub == constants) cmd_constants(cfg, opt, std::cout);
        else if (sub == exhaust) cmd_exhaust(cfg, opt, std::cout);
        else if (sub == decay) cmd_decay(cfg, opt, std::cout);
        else if (sub == bubble) cmd_bubble(cfg, opt, std::cout);
        else cmd_blowup(cfg, opt, std::cout);
        return kExitOk;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const StageError& e) {
        std::cerr << "stage '" << e.stage() << "' failed: " << e.what() << "\n";
        return kExitStage;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "stage 'unknown' failed: " << e.what() << "\n";
        return kExitStage;
    }
}
