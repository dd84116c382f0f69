#pragma once
// Stage-system evaluation.  One step of a method computes every stage jet
//   y_{j,k,N} = sum_{N'=0}^{N-1} wt_{N,N',j} h^N' y0_{k,N-N'}
//             + h^N/N! sum_{j'} w_{N,j,j'} f_k(t + tau_{j'} h, y_{j'})
// following a computation plan: explicit blocks directly, implicit blocks
// by Picard fixed-point iteration over their implicit ranks only (the rest
// of each stage jet is a constant of the block).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mork/core.hpp"
#include "mork/graph.hpp"

namespace mork {

struct PicardConfig {
    double threshold = 1e-12;  // max-norm change of cached f evaluations
    int min_iter = 2;
    int max_iter = 200;
};

template <class S>
struct StepOutcome {
    std::vector<JetState<S>> stages;  // j in [0, s]; back() is the step result
    std::vector<int> f_evals;         // per evaluation stage
    std::vector<int> picard_iters;    // per implicit block, in plan order
    bool converged = true;

    const JetState<S>& final_stage() const { return stages.back(); }
};

namespace detail {

inline double abs_of(double x) { return std::fabs(x); }
inline double abs_of(const cplx& x) { return std::abs(x); }

template <class S>
void check_step_shapes(const InitialValueProblem<S>& ivp, const JetState<S>& y0,
                       const ComputationPlan& plan, int n_max) {
    if (y0.entries() != ivp.d)
        throw std::invalid_argument("step: initial jet entry count differs from the problem");
    for (int k = 0; k < ivp.d; ++k)
        if (y0.order(k) != ivp.orders[k])
            throw std::invalid_argument("step: initial jet orders differ from the problem");
    if (static_cast<int>(plan.implicit_ranks.size()) < n_max)
        throw std::invalid_argument("step: computation plan is shorter than the problem order");
}

inline std::vector<double> powers_of(double h, int n) {
    std::vector<double> hp(n + 1);
    hp[0] = 1.0;
    for (int N = 1; N <= n; ++N) hp[N] = hp[N - 1] * h;
    return hp;
}

template <class S>
void reject_if_outside(const InitialValueProblem<S>& ivp, double tj, const JetState<S>& yj,
                       int j) {
    if (!ivp.in_domain(tj, yj))
        throw StepRejected("stage " + std::to_string(j + 1) + " left the problem domain");
}

}  // namespace detail

// One step of a general multi-order method.  The plan must have been built
// from the same method at length >= the largest entry order.  Implicit
// blocks that hit max_iter still return values, flagged not-converged;
// domain violations throw StepRejected.
template <class S>
StepOutcome<S> mork_step(const MethodTableau& m, const ComputationPlan& plan,
                         const InitialValueProblem<S>& ivp, double t, const JetState<S>& y0,
                         double h, const PicardConfig& cfg = {}) {
    const int s = m.s;
    const int d = ivp.d;
    int n_max = 1;
    for (int n : ivp.orders) n_max = std::max(n_max, n);
    m.ensure_length(n_max);
    detail::check_step_shapes(ivp, y0, plan, n_max);
    const std::vector<double> hp = detail::powers_of(h, n_max);

    StepOutcome<S> out;
    out.stages.assign(s + 1, JetState<S>::zeros(ivp.orders));
    out.f_evals.assign(s, 0);
    std::vector<std::vector<S>> F(s, std::vector<S>(d, S(0)));

    // Taylor parts: the h^N' lag terms of every stage, fixed for the step.
    std::vector<JetState<S>> taylor(s + 1, JetState<S>::zeros(ivp.orders));
    for (int j = 0; j <= s; ++j)
        for (int k = 0; k < d; ++k)
            for (int N = 1; N <= ivp.orders[k]; ++N) {
                S acc = S(0);
                for (int Np = 0; Np < N; ++Np)
                    acc += m.wt(N, Np, j) * hp[Np] * y0.at(k, N - Np);
                taylor[j].at(k, N) = acc;
            }

    auto f_part = [&](int j, int k, int N, const std::vector<int>& over) {
        const Mat& wN = m.w(N);
        S acc = S(0);
        for (int j1 : over) acc += wN[j][j1] * F[j1][k];
        return acc;
    };

    std::vector<int> all_stages(s);
    for (int j = 0; j < s; ++j) all_stages[j] = j;

    for (const SccBlock& block : plan.blocks) {
        if (!block.implicit) {
            int j = block.stages[0];
            for (int k = 0; k < d; ++k)
                for (int N = 1; N <= ivp.orders[k]; ++N)
                    out.stages[j].at(k, N) =
                        taylor[j].at(k, N) +
                        hp[N] / factorial(N) * f_part(j, k, N, all_stages);
            double tj = t + m.node(j) * h;
            detail::reject_if_outside(ivp, tj, out.stages[j], j);
            if (j != s) {
                F[j] = ivp.f(tj, out.stages[j]);
                ++out.f_evals[j];
            }
            continue;
        }

        // implicit block: constant part = Taylor terms + known-stage f terms
        std::vector<JetState<S>> constant(block.stages.size());
        for (size_t bi = 0; bi < block.stages.size(); ++bi) {
            int j = block.stages[bi];
            constant[bi] = taylor[j];
            for (int k = 0; k < d; ++k)
                for (int N = 1; N <= ivp.orders[k]; ++N)
                    constant[bi].at(k, N) +=
                        hp[N] / factorial(N) * f_part(j, k, N, block.complement);
            out.stages[j] = constant[bi];
        }

        int iter = 0;
        double change = cfg.threshold + 1.0;
        while (iter < cfg.min_iter || (change > cfg.threshold && iter < cfg.max_iter)) {
            ++iter;
            change = 0.0;
            for (int j : block.stages) {
                double tj = t + m.node(j) * h;
                detail::reject_if_outside(ivp, tj, out.stages[j], j);
                std::vector<S> fj = ivp.f(tj, out.stages[j]);
                ++out.f_evals[j];
                for (int k = 0; k < d; ++k) {
                    double delta = detail::abs_of(fj[k] - F[j][k]);
                    // a NaN delta must read as divergence, not as zero change
                    if (!std::isfinite(delta)) delta = std::numeric_limits<double>::infinity();
                    change = std::max(change, delta);
                }
                F[j] = std::move(fj);
            }
            for (size_t bi = 0; bi < block.stages.size(); ++bi) {
                int j = block.stages[bi];
                for (int k = 0; k < d; ++k)
                    for (int N = 1; N <= ivp.orders[k]; ++N) {
                        if (!plan.implicit_ranks[N - 1][j]) continue;
                        out.stages[j].at(k, N) =
                            constant[bi].at(k, N) +
                            hp[N] / factorial(N) * f_part(j, k, N, block.stages);
                    }
            }
        }
        out.picard_iters.push_back(iter);
        if (change > cfg.threshold) out.converged = false;
    }
    return out;
}

// Weight digraph of a plain Runge-Kutta tableau (arcs from w_1 alone; the
// same matrix chains every rank).
inline Digraph rk_weight_digraph(const RKTableau& rk, double tol = 0.0) {
    Digraph g(rk.s + 1);
    for (int j = 0; j <= rk.s; ++j)
        for (int j1 = 0; j1 < rk.s; ++j1)
            if (detail::weight_nonzero(rk.w1[j][j1], tol)) g.adj[j][j1] = 1;
    return g;
}

// Computation plan for an RK tableau at order n: inside an implicit block
// every rank is implicit (each rank chains through the same coupling).
inline ComputationPlan rk_computation_plan(const RKTableau& rk, int n, double tol = 0.0,
                                           int picard_estimate = 20) {
    Digraph g = rk_weight_digraph(rk, tol);
    ComputationPlan plan = plan_from_digraph(g, rk.s, picard_estimate);
    plan.implicit_ranks.assign(n, std::vector<char>(rk.s + 1, 0));
    for (const SccBlock& b : plan.blocks)
        if (b.implicit)
            for (int j : b.stages)
                for (int N = 1; N <= n; ++N) plan.implicit_ranks[N - 1][j] = 1;
    return plan;
}

// One step of a Runge-Kutta method on a (possibly higher-order) problem:
// rank 1 is the usual weighted f combination, rank N > 1 weights the rank
// N-1 stage values instead.  Equivalent to stepping the order-1 reduction.
// Picard updates run rank-descending so rank 1 closes each sweep.
template <class S>
StepOutcome<S> rk_step(const RKTableau& rk, const ComputationPlan& plan,
                       const InitialValueProblem<S>& ivp, double t, const JetState<S>& y0,
                       double h, const PicardConfig& cfg = {}) {
    const int s = rk.s;
    const int d = ivp.d;
    int n_max = 1;
    for (int n : ivp.orders) n_max = std::max(n_max, n);
    detail::check_step_shapes(ivp, y0, plan, n_max);

    StepOutcome<S> out;
    out.stages.assign(s + 1, y0);
    out.f_evals.assign(s, 0);
    std::vector<std::vector<S>> F(s, std::vector<S>(d, S(0)));

    // weighted sum over `over` of the f evaluations (rank 1) or the rank
    // N-1 stage values (rank N > 1)
    auto chain = [&](int j, int k, int N, const std::vector<int>& over) {
        S acc = S(0);
        if (N == 1)
            for (int j1 : over) acc += rk.w1[j][j1] * F[j1][k];
        else
            for (int j1 : over) acc += rk.w1[j][j1] * out.stages[j1].at(k, N - 1);
        return acc;
    };

    std::vector<int> all_stages(s);
    for (int j = 0; j < s; ++j) all_stages[j] = j;

    for (const SccBlock& block : plan.blocks) {
        if (!block.implicit) {
            int j = block.stages[0];
            for (int k = 0; k < d; ++k)
                for (int N = 1; N <= ivp.orders[k]; ++N)
                    out.stages[j].at(k, N) = y0.at(k, N) + h * chain(j, k, N, all_stages);
            double tj = t + rk.node(j) * h;
            detail::reject_if_outside(ivp, tj, out.stages[j], j);
            if (j != s) {
                F[j] = ivp.f(tj, out.stages[j]);
                ++out.f_evals[j];
            }
            continue;
        }

        std::vector<JetState<S>> constant(block.stages.size());
        for (size_t bi = 0; bi < block.stages.size(); ++bi) {
            int j = block.stages[bi];
            constant[bi] = y0;
            for (int k = 0; k < d; ++k)
                for (int N = 1; N <= ivp.orders[k]; ++N)
                    constant[bi].at(k, N) += h * chain(j, k, N, block.complement);
            out.stages[j] = constant[bi];
        }

        int iter = 0;
        double change = cfg.threshold + 1.0;
        while (iter < cfg.min_iter || (change > cfg.threshold && iter < cfg.max_iter)) {
            ++iter;
            change = 0.0;
            for (int j : block.stages) {
                double tj = t + rk.node(j) * h;
                detail::reject_if_outside(ivp, tj, out.stages[j], j);
                std::vector<S> fj = ivp.f(tj, out.stages[j]);
                ++out.f_evals[j];
                for (int k = 0; k < d; ++k) {
                    double delta = detail::abs_of(fj[k] - F[j][k]);
                    // a NaN delta must read as divergence, not as zero change
                    if (!std::isfinite(delta)) delta = std::numeric_limits<double>::infinity();
                    change = std::max(change, delta);
                }
                F[j] = std::move(fj);
            }
            for (size_t bi = 0; bi < block.stages.size(); ++bi) {
                int j = block.stages[bi];
                for (int k = 0; k < d; ++k) {
                    for (int N = ivp.orders[k]; N >= 2; --N)
                        out.stages[j].at(k, N) =
                            constant[bi].at(k, N) + h * chain(j, k, N, block.stages);
                    out.stages[j].at(k, 1) =
                        constant[bi].at(k, 1) + h * chain(j, k, 1, block.stages);
                }
            }
        }
        out.picard_iters.push_back(iter);
        if (change > cfg.threshold) out.converged = false;
    }
    return out;
}

template <class S>
struct TrajectoryPoint {
    double t = 0.0;
    JetState<S> y;
    int picard_iters = 0;  // summed over the arriving step's implicit blocks
    bool converged = true;
};

// Chain steps along a step-size sequence.  A rejected step ends the
// trajectory early; the points so far are returned.
template <class S>
std::vector<TrajectoryPoint<S>> step_sequence(const MethodTableau& m,
                                              const ComputationPlan& plan,
                                              const InitialValueProblem<S>& ivp, double t0,
                                              const JetState<S>& y0,
                                              const std::vector<double>& hs,
                                              const PicardConfig& cfg = {}) {
    std::vector<TrajectoryPoint<S>> points;
    points.push_back({t0, y0, 0, true});
    double t = t0;
    for (double h : hs) {
        StepOutcome<S> step;
        try {
            step = mork_step(m, plan, ivp, t, points.back().y, h, cfg);
        } catch (const StepRejected&) {
            break;
        }
        t += h;
        int iters = 0;
        for (int it : step.picard_iters) iters += it;
        points.push_back({t, step.final_stage(), iters, step.converged});
    }
    return points;
}

template <class S>
std::vector<TrajectoryPoint<S>> step_sequence(const RKTableau& rk,
                                              const ComputationPlan& plan,
                                              const InitialValueProblem<S>& ivp, double t0,
                                              const JetState<S>& y0,
                                              const std::vector<double>& hs,
                                              const PicardConfig& cfg = {}) {
    std::vector<TrajectoryPoint<S>> points;
    points.push_back({t0, y0, 0, true});
    double t = t0;
    for (double h : hs) {
        StepOutcome<S> step;
        try {
            step = rk_step(rk, plan, ivp, t, points.back().y, h, cfg);
        } catch (const StepRejected&) {
            break;
        }
        t += h;
        int iters = 0;
        for (int it : step.picard_iters) iters += it;
        points.push_back({t, step.final_stage(), iters, step.converged});
    }
    return points;
}

enum class StepBoundMode { Global, PerBlock };

// Step sizes below this bound make every Picard block a contraction for an
// L-Lipschitz rhs.  Global mode uses the whole-tableau constant
//   C_w = max_{j, N<=n} sum_{j'} |w_{N,j,j'}| / N!,   h* = min(1/(L C_w), (L C_w)^{-1/n});
// per-block mode restricts the constant to each implicit block and uses its
// extreme implicit ranks a_J (largest) and b_J (smallest):
//   h* = min_J min((L C_{w,J})^{-1/b_J}, (L C_{w,J})^{-1/a_J}).
// Methods without implicit blocks are unconstrained in per-block mode.
inline double safe_step_bound(const MethodTableau& m, int n, double L, StepBoundMode mode,
                              const ComputationPlan* plan = nullptr) {
    if (L <= 0) throw std::invalid_argument("safe_step_bound: L must be positive");
    if (n < 1) throw std::invalid_argument("safe_step_bound: n must be >= 1");
    m.ensure_length(n);
    const double inf = std::numeric_limits<double>::infinity();

    if (mode == StepBoundMode::Global) {
        double cw = 0.0;
        for (int N = 1; N <= n; ++N) {
            const Mat& wN = m.w(N);
            for (int j = 0; j <= m.s; ++j) {
                double row = 0.0;
                for (double x : wN[j]) row += std::fabs(x);
                cw = std::max(cw, row / factorial(N));
            }
        }
        if (cw == 0.0) return inf;
        double lc = L * cw;
        return std::min(1.0 / lc, std::pow(lc, -1.0 / n));
    }

    if (!plan) throw std::invalid_argument("safe_step_bound: per-block mode needs a plan");
    if (static_cast<int>(plan->implicit_ranks.size()) < n)
        throw std::invalid_argument("safe_step_bound: plan shorter than n");
    double best = inf;
    for (const SccBlock& b : plan->blocks) {
        if (!b.implicit) continue;
        int aJ = 0, bJ = n + 1;
        double cw = 0.0;
        for (int j : b.stages)
            for (int N = 1; N <= n; ++N) {
                if (!plan->implicit_ranks[N - 1][j]) continue;
                aJ = std::max(aJ, N);
                bJ = std::min(bJ, N);
                double row = 0.0;
                for (int j1 : b.stages)
                    if (j1 < m.s) row += std::fabs(m.w(N)[j][j1]);
                cw = std::max(cw, row / factorial(N));
            }
        if (aJ == 0 || cw == 0.0) continue;  // no implicit rank up to n
        double lc = L * cw;
        best = std::min(best, std::min(std::pow(lc, -1.0 / bJ), std::pow(lc, -1.0 / aJ)));
    }
    return best;
}

}  // namespace mork
