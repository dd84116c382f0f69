#ifndef MORK_CONDITIONS_HPP
#define MORK_CONDITIONS_HPP

// Numeric order-of-consistency verification: approximation times, convergence
// checks, solved-system and elementary-sum order conditions, and experimental
// order estimation from one-step error slopes.

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mork/core.hpp"
#include "mork/stepper.hpp"

namespace mork {

namespace detail {

// 17 significant digits: enough to round-trip a double exactly
inline std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Residual reporting

inline constexpr double kResidualTol = 1e-11;

struct ConditionEntry {
    std::string condition_id;
    int rank = 0;       // N
    int stage = 0;      // 1-based; s+1 is the final stage
    double residual = 0.0;
    double rhs = 0.0;   // the target value, for tolerance scaling
    bool pass = false;
};

struct ResidualReport {
    int rank = 0;
    int stage = 0;
    int target_order = 0;
    std::vector<ConditionEntry> entries;

    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }
    double max_abs_residual() const {
        double m = 0.0;
        for (const auto& e : entries) m = std::max(m, std::abs(e.residual));
        return m;
    }
    std::string to_csv() const {
        std::string out = "condition_id,rank,stage,residual,pass\n";
        for (const auto& e : entries) {
            out += e.condition_id + ',' + std::to_string(e.rank) + ',' +
                   std::to_string(e.stage) + ',' + detail::g17(e.residual) + ',' +
                   (e.pass ? '1' : '0');
            out += '\n';
        }
        return out;
    }
};

// residuals of magnitude-varying targets pass relative to the target size
inline bool residual_pass(double residual, double rhs) {
    return std::abs(residual) < kResidualTol * std::max(1.0, std::abs(rhs));
}

// ---------------------------------------------------------------------------
// Approximation times and convergence

// xi[j][N-1] for all stages including the final one
inline std::vector<std::vector<double>> approximation_times(const MethodTableau& m, int n) {
    if (n < 1) throw std::invalid_argument("approximation_times: n must be >= 1");
    std::vector<std::vector<double>> xi(m.s + 1, std::vector<double>(n));
    for (int j = 0; j <= m.s; ++j)
        for (int N = 1; N <= n; ++N) xi[j][N - 1] = m.xi(j, N);
    return xi;
}

// entries whose secondary weights stray from the xi^{N'}/N'! shape; any such
// deviation forces a negative order of consistency at that (N, N', j)
struct FormDeviation {
    int rank = 0;  // N
    int lag = 0;   // N'
    int stage = 0; // 1-based
    double deviation = 0.0;
};

inline std::vector<FormDeviation> mork_form_deviations(const MethodTableau& m, int n,
                                                       double tol = 1e-12) {
    std::vector<FormDeviation> out;
    for (int N = 1; N <= n; ++N)
        for (int j = 0; j <= m.s; ++j) {
            double xi = m.xi(j, N);
            for (int Np = 0; Np < N; ++Np) {
                double want = ipow(xi, Np) / factorial(Np);
                double dev = m.wt(N, Np, j) - want;
                if (std::abs(dev) > tol) out.push_back({N, Np, j + 1, dev});
            }
        }
    return out;
}

struct ConvergenceReport {
    bool convergent = false;
    double max_deviation = 0.0;
    bool sufficient_variant = false;  // general-form fallback was used
};

// final-stage approximation times must all be 1.  For general-form tableaus
// the equivalent xi bookkeeping is unavailable, so check the sufficient
// condition instead: unit lag-0 weights at the final stage and at every
// stage feeding it.
inline ConvergenceReport convergence_check(const MethodTableau& m, int n) {
    ConvergenceReport rep;
    if (m.kind != MethodTableau::Kind::General) {
        for (int N = 1; N <= n; ++N)
            rep.max_deviation = std::max(rep.max_deviation, std::abs(m.xi(m.s, N) - 1.0));
        rep.convergent = rep.max_deviation < 1e-12;
        return rep;
    }
    rep.sufficient_variant = true;
    for (int N = 1; N <= n; ++N) {
        rep.max_deviation = std::max(rep.max_deviation, std::abs(m.wt(N, 0, m.s) - 1.0));
        const Mat& w = m.w(N);
        for (int j1 = 0; j1 < m.s; ++j1)
            if (w[m.s][j1] != 0.0)
                rep.max_deviation =
                    std::max(rep.max_deviation, std::abs(m.wt(N, 0, j1) - 1.0));
    }
    rep.convergent = rep.max_deviation < 1e-12;
    return rep;
}

// ---------------------------------------------------------------------------
// Solved system conditions

// order nu at stage j (1-based), rank N:
//   sum_{j'} w_{N,j,j'} tau_{j'}^k = xi^{N+k} k! N!/(k+N)!   for k = 0..nu-1
inline ResidualReport solved_system_residuals(const MethodTableau& m, int n, int j, int N,
                                              int nu) {
    if (N < 1 || N > n) throw std::invalid_argument("solved_system_residuals: bad rank");
    if (j < 1 || j > m.s + 1) throw std::invalid_argument("solved_system_residuals: bad stage");
    if (nu < 1) throw std::invalid_argument("solved_system_residuals: order must be >= 1");
    const int j0 = j - 1;
    const Mat& w = m.w(N);
    const double xi = m.xi(j0, N);
    ResidualReport rep{N, j, nu, {}};
    for (int k = 0; k < nu; ++k) {
        double lhs = 0.0;
        for (int j1 = 0; j1 < m.s; ++j1) lhs += w[j0][j1] * ipow(m.node(j1), k);
        double rhs = ipow(xi, N + k) * factorial(k) * factorial(N) / factorial(k + N);
        double res = lhs - rhs;
        rep.entries.push_back(
            {"k=" + std::to_string(k), N, j, res, rhs, residual_pass(res, rhs)});
    }
    return rep;
}

// same conditions under the quadrature transform b = w/xi^N, c = tau/xi:
// residual'_k = sum b c^k - k! N!/(k+N)!; equals the solved-system residual
// divided by xi^{N+k}
inline ResidualReport gauss_jacobi_residuals(const MethodTableau& m, int n, int j, int N,
                                             int nu) {
    if (N < 1 || N > n) throw std::invalid_argument("gauss_jacobi_residuals: bad rank");
    const int j0 = j - 1;
    const double xi = m.xi(j0, N);
    if (xi == 0.0)
        throw std::invalid_argument("gauss_jacobi_residuals: zero approximation time");
    const Mat& w = m.w(N);
    ResidualReport rep{N, j, nu, {}};
    for (int k = 0; k < nu; ++k) {
        double lhs = 0.0;
        for (int j1 = 0; j1 < m.s; ++j1)
            lhs += w[j0][j1] / ipow(xi, N) * ipow(m.node(j1) / xi, k);
        double rhs = factorial(k) * factorial(N) / factorial(k + N);
        double res = lhs - rhs;
        rep.entries.push_back(
            {"q.k=" + std::to_string(k), N, j, res, rhs, residual_pass(res, rhs)});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Generalized solved system conditions

namespace detail {

// multi-indices over ranks 1..n with |lambda| <= cap, lexicographic order
inline std::vector<std::vector<int>> multi_indices(int n, int cap) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(n, 0);
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == n) {
            out.push_back(cur);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            cur[pos] = v;
            rec(pos + 1, remaining - v);
        }
        cur[pos] = 0;
    };
    rec(0, cap);
    return out;
}

inline std::string lambda_id(const std::vector<int>& l) {
    std::string s = "l=";
    for (size_t i = 0; i < l.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(l[i]);
    }
    return s;
}

}  // namespace detail

// order nu at stage j, rank N, with approximation-time factors:
//   sum_{j'} w_{N,j,j'} tau_{j'}^k prod_M xi_{j',M}^{lambda_M}
//     = xi^{N+k+|lambda|} N! (k+|lambda|)!/(k+|lambda|+N)!
// for all k >= 0, lambda in N^n with k + |lambda| <= nu-1
inline ResidualReport generalized_solved_residuals(const MethodTableau& m, int n, int j,
                                                   int N, int nu) {
    if (N < 1 || N > n)
        throw std::invalid_argument("generalized_solved_residuals: bad rank");
    if (n > 8)
        throw std::invalid_argument(
            "generalized_solved_residuals: n capped at 8 (multi-index growth)");
    if (m.kind == MethodTableau::Kind::General)
        throw std::invalid_argument(
            "generalized_solved_residuals: needs per-rank approximation times");
    const int j0 = j - 1;
    const Mat& w = m.w(N);
    const double xi = m.xi(j0, N);
    ResidualReport rep{N, j, nu, {}};
    for (int k = 0; k < nu; ++k) {
        for (const auto& lambda : detail::multi_indices(n, nu - 1 - k)) {
            int size = 0;
            for (int v : lambda) size += v;
            double lhs = 0.0;
            for (int j1 = 0; j1 < m.s; ++j1) {
                double term = w[j0][j1] * ipow(m.node(j1), k);
                for (int M = 1; M <= n; ++M)
                    if (lambda[M - 1] > 0) term *= ipow(m.xi(j1, M), lambda[M - 1]);
                lhs += term;
            }
            double rhs = ipow(xi, N + k + size) * factorial(N) * factorial(k + size) /
                         factorial(k + size + N);
            double res = lhs - rhs;
            rep.entries.push_back({"k=" + std::to_string(k) + ";" + detail::lambda_id(lambda),
                                   N, j, res, rhs, residual_pass(res, rhs)});
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Elementary-sum order conditions (the explicit lists up to order 4)

// order conditions as nested weighted sums over the rank-1..3 weights; the
// usual Runge-Kutta trees specialized to rank N, numbered <order>.<index>.
inline ResidualReport order_conditions_residuals(const MethodTableau& m, int n, int j,
                                                 int N, int up_to) {
    if (up_to < 1 || up_to > 4)
        throw std::invalid_argument("order_conditions_residuals: up_to must be in 1..4");
    if (N < 1 || N > n) throw std::invalid_argument("order_conditions_residuals: bad rank");
    const int j0 = j - 1;
    const int s = m.s;
    const Mat& wN = m.w(N);
    const Mat& w1 = m.w(1);
    const double xi = m.xi(j0, N);

    auto tau = [&](int p) { return m.node(p); };
    // row sums of the rank-1 and (when present) rank-2/3 weights
    std::vector<double> A(s), B, C3;
    for (int p = 0; p < s; ++p)
        for (int q = 0; q < s; ++q) A[p] += w1[p][q];
    if (n > 1) {
        const Mat& w2 = m.w(2);
        B.assign(s, 0.0);
        for (int p = 0; p < s; ++p)
            for (int q = 0; q < s; ++q) B[p] += w2[p][q];
    }
    if (n > 2) {
        const Mat& w3 = m.w(3);
        C3.assign(s, 0.0);
        for (int p = 0; p < s; ++p)
            for (int q = 0; q < s; ++q) C3[p] += w3[p][q];
    }
    auto sum1 = [&](std::function<double(int)> g) {  // sum_q w1[p][q] g(q), per p
        std::vector<double> out(s, 0.0);
        for (int p = 0; p < s; ++p)
            for (int q = 0; q < s; ++q) out[p] += w1[p][q] * g(q);
        return out;
    };
    auto sum2 = [&](std::function<double(int)> g) {
        const Mat& w2 = m.w(2);
        std::vector<double> out(s, 0.0);
        for (int p = 0; p < s; ++p)
            for (int q = 0; q < s; ++q) out[p] += w2[p][q] * g(q);
        return out;
    };
    auto S = [&](std::function<double(int)> g) {  // sum over the rank-N row at j
        double acc = 0.0;
        for (int p = 0; p < s; ++p) acc += wN[j0][p] * g(p);
        return acc;
    };

    const double R1 = ipow(xi, N);
    const double R2a = ipow(xi, N + 1) / (1.0 + N);
    const double R2 = ipow(xi, N + 2) * factorial(N) / factorial(N + 2);
    const double R3 = ipow(xi, N + 3) * factorial(N) / factorial(N + 3);

    ResidualReport rep{N, j, up_to, {}};
    auto emit = [&](const std::string& id, double lhs, double rhs) {
        double res = lhs - rhs;
        rep.entries.push_back({id, N, j, res, rhs, residual_pass(res, rhs)});
    };

    emit("1.1", S([](int) { return 1.0; }), R1);
    if (up_to >= 2) {
        emit("2.1", S([&](int p) { return tau(p); }), R2a);
        emit("2.2", S([&](int p) { return A[p]; }), R2a);
    }
    if (up_to >= 3) {
        auto s1t = sum1([&](int q) { return tau(q); });
        auto s1A = sum1([&](int q) { return A[q]; });
        emit("3.1", S([&](int p) { return tau(p) * tau(p); }), 2 * R2);
        emit("3.2", S([&](int p) { return tau(p) * A[p]; }), 2 * R2);
        emit("3.3", S([&](int p) { return s1t[p]; }), R2);
        emit("3.4", S([&](int p) { return s1A[p]; }), R2);
        emit("3.5", S([&](int p) { return A[p] * A[p]; }), 2 * R2);
        if (n > 1) emit("3.6", S([&](int p) { return B[p]; }), 2 * R2);
    }
    if (up_to >= 4) {
        auto s1t = sum1([&](int q) { return tau(q); });
        auto s1A = sum1([&](int q) { return A[q]; });
        auto s1tt = sum1([&](int q) { return tau(q) * tau(q); });
        auto s1tA = sum1([&](int q) { return tau(q) * A[q]; });
        auto s1AA = sum1([&](int q) { return A[q] * A[q]; });
        auto s1s1t = sum1([&](int q) { return s1t[q]; });
        auto s1s1A = sum1([&](int q) { return s1A[q]; });
        emit("4.1", S([&](int p) { return tau(p) * tau(p) * tau(p); }), 6 * R3);
        emit("4.2", S([&](int p) { return s1tt[p]; }), 2 * R3);
        emit("4.3", S([&](int p) { return tau(p) * s1t[p]; }), 3 * R3);
        emit("4.4", S([&](int p) { return tau(p) * tau(p) * A[p]; }), 6 * R3);
        emit("4.5", S([&](int p) { return s1s1t[p]; }), R3);
        emit("4.6", S([&](int p) { return s1tA[p]; }), 2 * R3);
        emit("4.7", S([&](int p) { return tau(p) * s1A[p]; }), 3 * R3);
        emit("4.8", S([&](int p) { return A[p] * s1t[p]; }), 3 * R3);
        emit("4.9", S([&](int p) { return tau(p) * A[p] * A[p]; }), 6 * R3);
        emit("4.10", S([&](int p) { return s1s1A[p]; }), R3);
        emit("4.11", S([&](int p) { return s1AA[p]; }), 2 * R3);
        emit("4.12", S([&](int p) { return A[p] * A[p] * A[p]; }), 6 * R3);
        emit("4.13", S([&](int p) { return A[p] * s1A[p]; }), 3 * R3);
        if (n > 1) {
            auto s2t = sum2([&](int q) { return tau(q); });
            auto s2A = sum2([&](int q) { return A[q]; });
            auto s1B = sum1([&](int q) { return B[q]; });
            emit("4.14", S([&](int p) { return s2t[p]; }), 2 * R3);
            emit("4.15", S([&](int p) { return A[p] * B[p]; }), 6 * R3);
            emit("4.16", S([&](int p) { return s2A[p]; }), 2 * R3);
            emit("4.17", S([&](int p) { return s1B[p]; }), 2 * R3);
            emit("4.18", S([&](int p) { return tau(p) * B[p]; }), 6 * R3);
        }
        if (n > 2) emit("4.19", S([&](int p) { return C3[p]; }), 6 * R3);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Experimental order estimation

struct SlopeEstimate {
    bool conclusive = false;
    double slope = 0.0;
    double order = 0.0;  // slope minus the rank
    int used_points = 0;
    bool dropped_largest_h = false;
};

namespace detail {

struct FitResult {
    double slope, intercept;
};

inline FitResult least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    return {(n * sxy - sx * sy) / denom, (sy * sxx - sx * sxy) / denom};
}

}  // namespace detail

// least-squares slope of log|one-step error| vs log h.  Points in the
// round-off "flat line" (|error| below 100 eps relative to the solution
// scale) and exact zeros are filtered out; with fewer than 3 usable points
// the estimate is inconclusive.  The largest-h point is refit away when it
// sits more than 3 sigma off the line (pre-asymptotic bend).
inline SlopeEstimate fit_error_slope(std::vector<double> hs, std::vector<double> errors,
                                     std::vector<double> scales, int rank) {
    std::vector<double> lx, ly;
    const double eps = std::numeric_limits<double>::epsilon();
    for (size_t i = 0; i < hs.size(); ++i) {
        double floor_val = 1e2 * eps * std::max(1.0, scales[i]);
        if (errors[i] == 0.0 || errors[i] < floor_val) continue;
        lx.push_back(std::log(hs[i]));
        ly.push_back(std::log(errors[i]));
    }
    SlopeEstimate est;
    est.used_points = static_cast<int>(lx.size());
    if (lx.size() < 3) return est;

    auto fit = detail::least_squares(lx, ly);
    // residual spread around the fit
    std::vector<double> resid(lx.size());
    double var = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) {
        resid[i] = ly[i] - (fit.slope * lx[i] + fit.intercept);
        var += resid[i] * resid[i];
    }
    double sigma = std::sqrt(var / static_cast<double>(lx.size()));
    size_t imax = 0;
    for (size_t i = 1; i < lx.size(); ++i)
        if (lx[i] > lx[imax]) imax = i;
    if (lx.size() > 3 && sigma > 0.0 && std::abs(resid[imax]) > 3.0 * sigma) {
        lx.erase(lx.begin() + imax);
        ly.erase(ly.begin() + imax);
        fit = detail::least_squares(lx, ly);
        est.dropped_largest_h = true;
        est.used_points = static_cast<int>(lx.size());
    }
    est.conclusive = true;
    est.slope = fit.slope;
    est.order = fit.slope - rank;
    return est;
}

// one step per grid point with the multi-order stepper, then slope-fit the
// rank-N entry-k error against the exact solution
template <class S>
SlopeEstimate experimental_order(const MethodTableau& m, const ComputationPlan& plan,
                                 const InitialValueProblem<S>& ivp, int rank, int entry,
                                 const std::vector<double>& h_grid, double t0,
                                 const JetState<S>& y0, const PicardConfig& cfg = {}) {
    if (!ivp.exact_solution)
        throw std::invalid_argument("experimental_order: problem has no exact solution");
    std::vector<double> errs, scales;
    for (double h : h_grid) {
        auto out = mork_step(m, plan, ivp, t0, y0, h, cfg);
        JetState<S> exact = ivp.exact_solution(t0 + h);
        double e = std::abs(out.final_stage().at(entry, rank) - exact.at(entry, rank));
        errs.push_back(e);
        scales.push_back(std::abs(exact.at(entry, rank)));
    }
    return fit_error_slope(h_grid, errs, scales, rank);
}

template <class S>
SlopeEstimate experimental_order(const RKTableau& rk, const ComputationPlan& plan,
                                 const InitialValueProblem<S>& ivp, int rank, int entry,
                                 const std::vector<double>& h_grid, double t0,
                                 const JetState<S>& y0, const PicardConfig& cfg = {}) {
    if (!ivp.exact_solution)
        throw std::invalid_argument("experimental_order: problem has no exact solution");
    std::vector<double> errs, scales;
    for (double h : h_grid) {
        auto out = rk_step(rk, plan, ivp, t0, y0, h, cfg);
        JetState<S> exact = ivp.exact_solution(t0 + h);
        double e = std::abs(out.final_stage().at(entry, rank) - exact.at(entry, rank));
        errs.push_back(e);
        scales.push_back(std::abs(exact.at(entry, rank)));
    }
    return fit_error_slope(h_grid, errs, scales, rank);
}

}  // namespace mork

#endif  // MORK_CONDITIONS_HPP
