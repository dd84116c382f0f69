#ifndef MORK_CLI_HPP
#define MORK_CLI_HPP

// Experiment harness behind the command-line tool: one-step order sweeps,
// fixed-step trajectories, stability scans, and computation-graph reports on
// the confluent linear test problem.  Everything returns strings/exit codes
// so it is unit-testable without a process boundary.

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mork/conditions.hpp"
#include "mork/core.hpp"
#include "mork/graph.hpp"
#include "mork/methods.hpp"
#include "mork/stability.hpp"
#include "mork/stepper.hpp"

namespace mork {

struct RunConfig {
    std::string method;
    int order = 1;  // n
    double lambda_re = 0.0, lambda_im = 0.0;
    double t0 = 0.0;
    std::vector<cplx> y0;  // empty = pure exponential jet at t0
    double h_min = 1e-3, h_max = 1e-1;
    int h_count = 20;
    double h = 0.1;
    int steps = 30;
    int rank = 0;   // 0 = all ranks
    std::string out;  // empty = stdout
    double picard_threshold = 1e-12;
    int picard_max = 200;
    std::uint32_t seed = 0x5EED;
    std::string notion = "a";
    std::vector<double> direction;
};

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, int count) {
    if (count < 2) throw std::invalid_argument("h grid needs at least 2 points");
    if (lo <= 0.0 || hi <= lo) throw std::invalid_argument("h grid needs 0 < h-min < h-max");
    std::vector<double> g(count);
    double llo = std::log10(lo), lhi = std::log10(hi);
    for (int i = 0; i < count; ++i)
        g[i] = std::pow(10.0, llo + (lhi - llo) * i / (count - 1));
    return g;
}

// pure exponential e^{lambda t}: rank N carries derivative n-N
inline std::vector<cplx> pure_exp_jet(int n, cplx lambda, double t) {
    std::vector<cplx> jet(n);
    cplx e = std::exp(lambda * t);
    for (int N = 1; N <= n; ++N) jet[N - 1] = ipow(lambda, n - N) * e;
    return jet;
}

inline void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << content;
}

}  // namespace detail

// assembles the confluent problem a config describes
inline InitialValueProblem<cplx> config_problem(const RunConfig& cfg, cplx lambda,
                                                std::vector<cplx>& y0_out) {
    y0_out = cfg.y0.empty() ? detail::pure_exp_jet(cfg.order, lambda, cfg.t0) : cfg.y0;
    if (static_cast<int>(y0_out.size()) != cfg.order)
        throw std::invalid_argument("initial jet must have one value per rank");
    return confluent_linear_ivp(cfg.order, lambda, cfg.t0, y0_out);
}

// ---------------------------------------------------------------------------
// order-sweep: one step per h, per-rank absolute errors, slope footer

inline int run_order_sweep(const RunConfig& cfg) {
    const cplx lambda(cfg.lambda_re, cfg.lambda_im);
    const int n = cfg.order;
    std::vector<cplx> y0v;
    auto ivp = config_problem(cfg, lambda, y0v);
    JetState<cplx> y0({y0v});
    auto hs = detail::log_grid(cfg.h_min, cfg.h_max, cfg.h_count);
    PicardConfig pc;
    pc.threshold = cfg.picard_threshold;
    pc.max_iter = cfg.picard_max;

    std::vector<int> ranks;
    if (cfg.rank > 0)
        ranks = {cfg.rank};
    else
        for (int N = 1; N <= n; ++N) ranks.push_back(N);

    // errors[rank index][grid index]
    std::vector<std::vector<double>> errs(ranks.size()), scales(ranks.size());
    const bool rk = is_rk_name(cfg.method);
    RKTableau rkt;
    MethodTableau mt;
    ComputationPlan plan;
    if (rk) {
        rkt = rk_catalog(cfg.method);
        plan = rk_computation_plan(rkt, n);
    } else {
        mt = catalog(cfg.method);
        plan = computation_plan(mt, n);
    }
    std::string csv = "h,rank,abs_error\n";
    for (double h : hs) {
        JetState<cplx> stepped = rk ? rk_step(rkt, plan, ivp, cfg.t0, y0, h, pc).final_stage()
                                    : mork_step(mt, plan, ivp, cfg.t0, y0, h, pc).final_stage();
        JetState<cplx> exact = ivp.exact_solution(cfg.t0 + h);
        for (size_t i = 0; i < ranks.size(); ++i) {
            double e = std::abs(stepped.at(0, ranks[i]) - exact.at(0, ranks[i]));
            errs[i].push_back(e);
            scales[i].push_back(std::abs(exact.at(0, ranks[i])));
            csv += detail::g17(h) + ',' + std::to_string(ranks[i]) + ',' + detail::g17(e) + '\n';
        }
    }
    for (size_t i = 0; i < ranks.size(); ++i) {
        auto est = fit_error_slope(hs, errs[i], scales[i], ranks[i]);
        csv += "slope," + std::to_string(ranks[i]) + ',' +
               (est.conclusive ? detail::g17(est.slope) : std::string("inconclusive")) + '\n';
    }
    detail::write_output(cfg.out, csv);
    return 0;
}

// ---------------------------------------------------------------------------
// trajectory: constant-step run, per-rank values/exact/error per row

inline int run_trajectory(const RunConfig& cfg) {
    const cplx lambda(cfg.lambda_re, cfg.lambda_im);
    const int n = cfg.order;
    std::vector<cplx> y0v;
    auto ivp = config_problem(cfg, lambda, y0v);
    JetState<cplx> y0({y0v});
    PicardConfig pc;
    pc.threshold = cfg.picard_threshold;
    pc.max_iter = cfg.picard_max;
    std::vector<double> hs(cfg.steps, cfg.h);

    std::vector<TrajectoryPoint<cplx>> points;
    const bool rk = is_rk_name(cfg.method);
    if (rk) {
        RKTableau rkt = rk_catalog(cfg.method);
        auto plan = rk_computation_plan(rkt, n);
        points = step_sequence(rkt, plan, ivp, cfg.t0, y0, hs, pc);
    } else {
        MethodTableau mt = catalog(cfg.method);
        auto plan = computation_plan(mt, n);
        points = step_sequence(mt, plan, ivp, cfg.t0, y0, hs, pc);
    }

    std::string csv = "t";
    for (int N = 1; N <= n; ++N) {
        std::string r = std::to_string(N);
        csv += ",y_r" + r + "_re,y_r" + r + "_im,exact_r" + r + "_re,exact_r" + r +
               "_im,abs_error_r" + r;
    }
    csv += ",picard_iters,converged\n";
    for (const auto& pt : points) {
        csv += detail::g17(pt.t);
        JetState<cplx> exact = ivp.exact_solution(pt.t);
        for (int N = 1; N <= n; ++N) {
            cplx v = pt.y.at(0, N), e = exact.at(0, N);
            csv += ',' + detail::g17(v.real()) + ',' + detail::g17(v.imag()) + ',' +
                   detail::g17(e.real()) + ',' + detail::g17(e.imag()) + ',' +
                   detail::g17(std::abs(v - e));
        }
        csv += ',' + std::to_string(pt.picard_iters);
        csv += pt.converged ? ",1\n" : ",0\n";
    }
    detail::write_output(cfg.out, csv);
    // a rejected step leaves the run short: partial output, nonzero exit
    return static_cast<int>(points.size()) == cfg.steps + 1 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// stability-scan: drive the chosen notion, CSV + verdict on stderr

inline int run_stability_scan(const RunConfig& cfg) {
    const int n = cfg.order;
    MethodTableau mt =
        is_rk_name(cfg.method) ? rk_as_gmork(rk_catalog(cfg.method)) : catalog(cfg.method);

    StabilityReport rep;
    if (cfg.notion == "a" || cfg.notion == "absolute-a") {
        rep = a_stability_scan(mt, n, cfg.notion == "absolute-a", cfg.seed);
    } else if (cfg.notion == "half-line") {
        if (static_cast<int>(cfg.direction.size()) != n)
            throw std::invalid_argument("half-line notion needs --direction with n entries");
        std::vector<cplx> dir(cfg.direction.begin(), cfg.direction.end());
        rep = half_line_scan(mt, n, dir, detail::log_grid(cfg.h_min, cfg.h_max, cfg.h_count));
    } else if (cfg.notion == "l") {
        rep = l_stability_probe(mt, n, detail::log_grid(cfg.h_min, cfg.h_max, cfg.h_count));
    } else {
        throw std::invalid_argument("unknown stability notion: " + cfg.notion);
    }
    detail::write_output(cfg.out, rep.to_csv());
    std::cerr << rep.verdict_line() << "\n";
    return rep.no_violation ? 0 : 1;
}

// ---------------------------------------------------------------------------
// graph-report: dependency structure of one step

inline int run_graph_report(const RunConfig& cfg) {
    MethodTableau mt =
        is_rk_name(cfg.method) ? rk_as_gmork(rk_catalog(cfg.method)) : catalog(cfg.method);
    detail::write_output(cfg.out, graph_report(mt, cfg.order));
    return 0;
}

}  // namespace mork

#endif  // MORK_CLI_HPP
