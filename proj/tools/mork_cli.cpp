// Command-line front end: order sweeps, trajectories, stability scans and
// graph reports over the named method catalog, CSV out.

#include <complex>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mork/mork.hpp"

namespace {

// initial jet entries: "re" or "re:im", comma-separated via CLI11
std::vector<mork::cplx> parse_jet(const std::vector<std::string>& parts) {
    std::vector<mork::cplx> jet;
    for (const auto& p : parts) {
        auto colon = p.find(':');
        try {
            if (colon == std::string::npos)
                jet.emplace_back(std::stod(p), 0.0);
            else
                jet.emplace_back(std::stod(p.substr(0, colon)),
                                 std::stod(p.substr(colon + 1)));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--y0", "bad jet entry '" + p + "'");
        }
    }
    return jet;
}

void add_problem_flags(CLI::App* sub, mork::RunConfig& cfg,
                       std::vector<std::string>& y0_raw) {
    sub->add_option("--method", cfg.method, "catalog method name")->required();
    sub->add_option("--order", cfg.order, "problem/method order n")
        ->check(CLI::PositiveNumber);
    sub->add_option("--lambda-re", cfg.lambda_re, "Re of the confluent eigenvalue");
    sub->add_option("--lambda-im", cfg.lambda_im, "Im of the confluent eigenvalue");
    sub->add_option("--t0", cfg.t0, "initial time");
    sub->add_option("--y0", y0_raw,
                    "initial jet, rank 1..n entries re[:im] (default: pure exponential)")
        ->delimiter(',');
    sub->add_option("--picard-threshold", cfg.picard_threshold,
                    "fixed-point convergence threshold");
    sub->add_option("--picard-max", cfg.picard_max, "fixed-point iteration cap");
    sub->add_option("--out", cfg.out, "output file (default: stdout)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-order Runge-Kutta experiment harness"};
    // long-form help only: the default -h alias would clash with --h
    app.set_help_flag("--help", "print usage");
    app.require_subcommand(1);
    mork::RunConfig cfg;
    std::vector<std::string> y0_raw;
    int rc = 0;

    auto* sweep = app.add_subcommand(
        "order-sweep", "one step per h on the confluent problem, error-vs-h CSV");
    add_problem_flags(sweep, cfg, y0_raw);
    sweep->add_option("--h-min", cfg.h_min, "smallest step size");
    sweep->add_option("--h-max", cfg.h_max, "largest step size");
    sweep->add_option("--h-count", cfg.h_count, "grid size (log-spaced)");
    sweep->add_option("--rank", cfg.rank, "restrict to one rank (default: all)");
    sweep->callback([&] {
        if (!y0_raw.empty()) cfg.y0 = parse_jet(y0_raw);
        rc = mork::run_order_sweep(cfg);
    });

    auto* traj = app.add_subcommand(
        "trajectory", "constant-step trajectory with exact-solution comparison");
    add_problem_flags(traj, cfg, y0_raw);
    traj->add_option("--h", cfg.h, "step size");
    traj->add_option("--steps", cfg.steps, "number of steps")
        ->check(CLI::NonNegativeNumber);
    traj->callback([&] {
        if (!y0_raw.empty()) cfg.y0 = parse_jet(y0_raw);
        rc = mork::run_trajectory(cfg);
    });

    auto* stab = app.add_subcommand("stability-scan",
                                    "spectral-radius scan for a stability notion");
    stab->add_option("--method", cfg.method, "catalog method name")->required();
    stab->add_option("--order", cfg.order, "order n")->check(CLI::PositiveNumber);
    stab->add_option("--notion", cfg.notion, "a | absolute-a | l | half-line");
    stab->add_option("--direction", cfg.direction, "half-line direction (comma reals)")
        ->delimiter(',');
    stab->add_option("--h-min", cfg.h_min, "scan grid start")->capture_default_str();
    stab->add_option("--h-max", cfg.h_max, "scan grid end")->capture_default_str();
    stab->add_option("--h-count", cfg.h_count, "scan grid size")->capture_default_str();
    stab->add_option("--seed", cfg.seed, "sampling seed for the Monte-Carlo grid");
    stab->add_option("--out", cfg.out, "output file (default: stdout)");
    stab->callback([&] {
        // scan grids cover magnitudes, not step sizes: wider default range
        if (stab->count("--h-min") == 0) cfg.h_min = 1e-3;
        if (stab->count("--h-max") == 0) cfg.h_max = 1e6;
        if (stab->count("--h-count") == 0) cfg.h_count = 40;
        rc = mork::run_stability_scan(cfg);
    });

    auto* graph = app.add_subcommand("graph-report",
                                     "stage dependency graph, blocks and priorities");
    graph->add_option("--method", cfg.method, "catalog method name")->required();
    graph->add_option("--order", cfg.order, "order n")->check(CLI::PositiveNumber);
    graph->add_option("--out", cfg.out, "output file (default: stdout)");
    graph->callback([&] { rc = mork::run_graph_report(cfg); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    return rc;
}
