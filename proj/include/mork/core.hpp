#pragma once
// Core domain types for multi-order Runge-Kutta (MORK) integration:
// method tableaus, solution jets, initial value problems, IVP-level
// rewrites, and linear test problems with closed-form solutions.
//
// Indexing conventions used throughout the library:
//  - stages are 0-based: j in [0, s-1] are the evaluation stages, j == s is
//    the final (output) stage; its node is 1 by convention.
//  - ranks are 1-based (they appear in exponents and factorials): rank N of
//    an order-n entry is its (n-N)-th derivative, so rank n is the solution
//    value itself.  Jet storage is v[entry][N-1].

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mork {

using Mat = std::vector<std::vector<double>>;
using cplx = std::complex<double>;

// factorial as double; rejected beyond 170 (would overflow double).
inline double factorial(int n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(171);
        t[0] = 1.0;
        for (int i = 1; i <= 170; ++i) t[i] = t[i - 1] * i;
        return t;
    }();
    if (n < 0 || n > 170) throw std::invalid_argument("factorial: n outside [0,170]");
    return table[n];
}

// binomial coefficient, exact integer arithmetic up to n = 60.
inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    if (n > 60) throw std::invalid_argument("binomial: n > 60 not supported exactly");
    std::uint64_t num = 1;
    k = std::min(k, n - k);
    for (int i = 1; i <= k; ++i)
        num = num * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return static_cast<double>(num);
}

// integer power with the 0^0 = 1 convention
template <class S>
S ipow(S base, int e) {
    S acc = S(1);
    for (int i = 0; i < e; ++i) acc *= base;
    return acc;
}

// elementary symmetric polynomials e_0..e_n of the given values, by the
// stable product recurrence (coefficients of prod (X + r_i)).
template <class S>
std::vector<S> elementary_symmetric(const std::vector<S>& r) {
    std::vector<S> e(r.size() + 1, S(0));
    e[0] = S(1);
    for (const S& ri : r)
        for (int N = static_cast<int>(r.size()); N >= 1; --N)
            e[N] += ri * e[N - 1];
    return e;
}

// ---------------------------------------------------------------------------
// MethodTableau: a GMORK method (tau, w, w-tilde).
//
// main_weights(N) is the (s+1) x s matrix w_N (rows = stages incl. final).
// secondary_weights(N) has s+1 rows of N entries each: row j, entry N' is
// the Taylor-part weight at lag N' (N' in [0, N-1]).
// Methods may be infinite in N (no max_length) or finite (max_length = cap).

struct MethodTableau {
    enum class Kind { General, NodeDetermined, Mork };

    int s = 0;                        // evaluation stage count (>= 1)
    std::vector<double> nodes;        // tau, length s or s+1 (final defaults to 1)
    Kind kind = Kind::General;
    std::optional<int> max_length;    // largest valid rank, if finite
    std::function<Mat(int)> main_weights;
    std::function<std::vector<std::vector<double>>(int)> secondary_weights;
    std::function<double(int, int)> xi_fn;  // optional exact xi(j, N) for mork kind

    // deques: growth must not invalidate references handed out by w()/wt()
    mutable std::deque<Mat> w_cache;
    mutable std::deque<std::vector<std::vector<double>>> wt_cache;

    double node(int j) const {
        return j < static_cast<int>(nodes.size()) ? nodes[j] : 1.0;
    }

    int cached_length() const { return static_cast<int>(w_cache.size()); }

    void ensure_length(int n) const {
        if (max_length && n > *max_length)
            throw std::invalid_argument("method length " + std::to_string(*max_length) +
                                        " exceeded (requested " + std::to_string(n) + ")");
        for (int N = cached_length() + 1; N <= n; ++N) {
            Mat wN = main_weights(N);
            if (static_cast<int>(wN.size()) != s + 1)
                throw std::runtime_error("main_weights(" + std::to_string(N) + "): wrong row count");
            for (auto& row : wN)
                if (static_cast<int>(row.size()) != s)
                    throw std::runtime_error("main_weights(" + std::to_string(N) + "): wrong column count");
            auto wtN = secondary_weights(N);
            if (static_cast<int>(wtN.size()) != s + 1)
                throw std::runtime_error("secondary_weights(" + std::to_string(N) + "): wrong row count");
            for (auto& row : wtN)
                if (static_cast<int>(row.size()) != N)
                    throw std::runtime_error("secondary_weights(" + std::to_string(N) + "): wrong entry count");
            w_cache.push_back(std::move(wN));
            wt_cache.push_back(std::move(wtN));
        }
    }

    const Mat& w(int N) const {
        ensure_length(N);
        return w_cache[N - 1];
    }

    // Taylor-part weight at rank N, lag Np, stage j.
    double wt(int N, int Np, int j) const {
        ensure_length(N);
        return wt_cache[N - 1][j][Np];
    }

    // approximation time of stage j at rank N: row sum of w_1 at rank 1,
    // the lag-1 secondary weight otherwise.
    double xi(int j, int N) const {
        if (xi_fn) return xi_fn(j, N);
        if (N == 1) {
            const Mat& w1 = w(1);
            double acc = 0.0;
            for (double x : w1[j]) acc += x;
            return acc;
        }
        return wt(N, 1, j);
    }
};

// A plain Runge-Kutta tableau: nodes and the single weight matrix.  Higher
// ranks are integrated by chaining rank N through the stage values of rank
// N-1, which is what stepping the order-1 reduction does.
struct RKTableau {
    int s = 0;
    std::vector<double> nodes;  // length s or s+1 (final defaults to 1)
    Mat w1;                     // (s+1) x s

    double node(int j) const {
        return j < static_cast<int>(nodes.size()) ? nodes[j] : 1.0;
    }
};

// node-determined construction: secondary weights tau_j^N'/N'! from the nodes
// (final stage node defaults to 1 when tau has length s).
inline MethodTableau node_determined(std::vector<double> tau, int s,
                                     std::function<Mat(int)> main_weights,
                                     std::optional<int> max_length = std::nullopt) {
    MethodTableau m;
    m.s = s;
    m.nodes = std::move(tau);
    m.kind = MethodTableau::Kind::NodeDetermined;
    m.max_length = max_length;
    m.main_weights = std::move(main_weights);
    std::vector<double> full(s + 1);
    for (int j = 0; j <= s; ++j) full[j] = m.node(j);
    m.secondary_weights = [s, full](int N) {
        std::vector<std::vector<double>> rows(s + 1, std::vector<double>(N));
        for (int j = 0; j <= s; ++j)
            for (int Np = 0; Np < N; ++Np)
                rows[j][Np] = ipow(full[j], Np) / factorial(Np);
        return rows;
    };
    return m;
}

// ---------------------------------------------------------------------------
// JetState: per-entry, per-rank approximation of a solution jet.

template <class S>
struct JetState {
    std::vector<std::vector<S>> v;  // v[entry][rank-1]

    JetState() = default;
    explicit JetState(std::vector<std::vector<S>> values) : v(std::move(values)) {}

    static JetState zeros(const std::vector<int>& orders) {
        JetState j;
        j.v.reserve(orders.size());
        for (int n : orders) j.v.emplace_back(n, S(0));
        return j;
    }

    int entries() const { return static_cast<int>(v.size()); }
    int order(int k) const { return static_cast<int>(v[k].size()); }
    S& at(int k, int N) { return v[k][N - 1]; }
    const S& at(int k, int N) const { return v[k][N - 1]; }

    std::vector<int> orders() const {
        std::vector<int> out(v.size());
        for (size_t k = 0; k < v.size(); ++k) out[k] = static_cast<int>(v[k].size());
        return out;
    }
};

// ---------------------------------------------------------------------------
// InitialValueProblem: dimension d, per-entry orders, rhs f(t, jet) -> d
// values (the n_k-th derivative of each entry).  The optional domain
// predicate causes step rejection when violated; exact_solution is present
// on constructed test problems.

template <class S>
struct InitialValueProblem {
    int d = 0;
    std::vector<int> orders;
    std::function<std::vector<S>(double, const JetState<S>&)> f;
    std::function<bool(double, const JetState<S>&)> domain;  // empty = everywhere
    std::function<JetState<S>(double)> exact_solution;       // optional

    bool in_domain(double t, const JetState<S>& y) const {
        return !domain || domain(t, y);
    }
    std::optional<int> uniform_order() const {
        for (int n : orders)
            if (n != orders[0]) return std::nullopt;
        return orders.empty() ? std::nullopt : std::optional<int>(orders[0]);
    }
};

// thrown when a stage value leaves the problem domain
struct StepRejected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Confluent linear problem: y^(n) has characteristic polynomial (X - lam)^n,
// i.e. f(t, x) = -sum_{N=1}^n C(n,N) (-lam)^N x_N.  The exact solution is
// e^{lam (t-t0)} P(t-t0) with deg P <= n-1; P's coefficients come from the
// initial jet by a_i = sum_{k<=i} (-lam)^(i-k) / (k! (i-k)!) y0_{rank n-k}.

struct ConfluentLinearProblem {
    int n = 1;
    cplx lambda;
    double t0 = 0.0;
    std::vector<cplx> y0;  // ranks 1..n
};

inline std::vector<cplx> confluent_poly_coeffs(int n, cplx lambda,
                                               const std::vector<cplx>& y0) {
    std::vector<cplx> a(n);
    for (int i = 0; i < n; ++i) {
        cplx acc = 0.0;
        for (int k = 0; k <= i; ++k)
            acc += ipow(-lambda, i - k) / (factorial(k) * factorial(i - k)) * y0[n - k - 1];
        a[i] = acc;
    }
    return a;
}

// exact jet (ranks 1..n) of the confluent solution at offset u = t - t0,
// via the generalized Leibniz rule on e^{lam u} P(u).
inline std::vector<cplx> confluent_exact_jet(int n, cplx lambda,
                                             const std::vector<cplx>& a, double u) {
    std::vector<cplx> jet(n);
    cplx eu = std::exp(lambda * u);
    for (int N = 1; N <= n; ++N) {
        int i = n - N;  // derivative order
        cplx acc = 0.0;
        for (int k = 0; k <= i; ++k) {
            cplx inner = 0.0;
            for (int p = k; p <= n - 1; ++p)
                inner += a[p] * (factorial(p) / factorial(p - k)) * ipow(cplx(u), p - k);
            acc += binomial(i, k) * ipow(lambda, i - k) * inner;
        }
        jet[N - 1] = eu * acc;
    }
    return jet;
}

inline InitialValueProblem<cplx> confluent_linear_ivp(int n, cplx lambda, double t0,
                                                      std::vector<cplx> y0) {
    if (n < 1) throw std::invalid_argument("confluent_linear_ivp: n must be >= 1");
    if (static_cast<int>(y0.size()) != n)
        throw std::invalid_argument("confluent_linear_ivp: y0 must have n ranks");
    InitialValueProblem<cplx> ivp;
    ivp.d = 1;
    ivp.orders = {n};
    std::vector<cplx> coeff(n);  // coefficient of x_N
    for (int N = 1; N <= n; ++N) coeff[N - 1] = -binomial(n, N) * ipow(-lambda, N);
    ivp.f = [coeff, n](double, const JetState<cplx>& y) {
        cplx acc = 0.0;
        for (int N = 1; N <= n; ++N) acc += coeff[N - 1] * y.at(0, N);
        return std::vector<cplx>{acc};
    };
    auto a = confluent_poly_coeffs(n, lambda, y0);
    ivp.exact_solution = [n, lambda, a, t0](double t) {
        return JetState<cplx>({confluent_exact_jet(n, lambda, a, t - t0)});
    };
    return ivp;
}

// Linear problem from arbitrary characteristic roots (Vieta coefficients):
// f(t, x) = sum alpha_N x_N with alpha_N = (-1)^(N+1) e_N(roots).
// When all roots coincide this delegates to the confluent constructor so the
// exact solution is available.
inline InitialValueProblem<cplx> linear_ivp_from_roots(const std::vector<cplx>& roots,
                                                       double t0, std::vector<cplx> y0) {
    if (roots.empty()) throw std::invalid_argument("linear_ivp_from_roots: no roots");
    int n = static_cast<int>(roots.size());
    bool confluent = std::all_of(roots.begin(), roots.end(),
                                 [&](cplx r) { return r == roots[0]; });
    if (confluent) return confluent_linear_ivp(n, roots[0], t0, std::move(y0));
    if (static_cast<int>(y0.size()) != n)
        throw std::invalid_argument("linear_ivp_from_roots: y0 must have n ranks");
    std::vector<cplx> negated(roots.size());
    std::transform(roots.begin(), roots.end(), negated.begin(), [](cplx r) { return -r; });
    auto e = elementary_symmetric(negated);  // coefficients of prod (X - r_i)
    std::vector<cplx> alpha(n);
    for (int N = 1; N <= n; ++N) alpha[N - 1] = -e[N];  // alpha_N = (-1)^(N+1) e_N(roots)
    InitialValueProblem<cplx> ivp;
    ivp.d = 1;
    ivp.orders = {n};
    ivp.f = [alpha, n](double, const JetState<cplx>& y) {
        cplx acc = 0.0;
        for (int N = 1; N <= n; ++N) acc += alpha[N - 1] * y.at(0, N);
        return std::vector<cplx>{acc};
    };
    return ivp;
}

// ---------------------------------------------------------------------------
// IVP rewrites

// reduction to order 1: stacked state (x_1; ...; x_n), dimension n*d,
// rhs (f(t, x); x_1; ...; x_{n-1}).  New entry (N-1)*d + k carries original
// rank N of entry k.
template <class S>
InitialValueProblem<S> reduce_to_first_order(const InitialValueProblem<S>& ivp) {
    auto n_opt = ivp.uniform_order();
    if (!n_opt) throw std::invalid_argument("reduce_to_first_order: mixed-order input");
    int n = *n_opt, d = ivp.d;
    InitialValueProblem<S> out;
    out.d = n * d;
    out.orders.assign(n * d, 1);
    auto f = ivp.f;
    auto gather = [n, d](const JetState<S>& z) {
        JetState<S> y;
        y.v.assign(d, std::vector<S>(n));
        for (int k = 0; k < d; ++k)
            for (int N = 1; N <= n; ++N) y.at(k, N) = z.at((N - 1) * d + k, 1);
        return y;
    };
    out.f = [f, gather, n, d](double t, const JetState<S>& z) {
        JetState<S> y = gather(z);
        std::vector<S> fv = f(t, y);
        std::vector<S> rhs(n * d);
        for (int k = 0; k < d; ++k) rhs[k] = fv[k];
        for (int N = 1; N <= n - 1; ++N)
            for (int k = 0; k < d; ++k) rhs[N * d + k] = y.at(k, N);
        return rhs;
    };
    if (ivp.domain) {
        auto dom = ivp.domain;
        out.domain = [dom, gather](double t, const JetState<S>& z) { return dom(t, gather(z)); };
    }
    if (ivp.exact_solution) {
        auto ex = ivp.exact_solution;
        out.exact_solution = [ex, n, d](double t) {
            JetState<S> y = ex(t);
            JetState<S> z = JetState<S>::zeros(std::vector<int>(n * d, 1));
            for (int k = 0; k < d; ++k)
                for (int N = 1; N <= n; ++N) z.at((N - 1) * d + k, 1) = y.at(k, N);
            return z;
        };
    }
    return out;
}

// prolongation to a higher order: rank indices are preserved, the new ranks
// n+1..n~ are antiderivatives with zero initial values, f ignores them.
template <class S>
InitialValueProblem<S> prolong_ivp(const InitialValueProblem<S>& ivp, int target) {
    auto n_opt = ivp.uniform_order();
    if (!n_opt) throw std::invalid_argument("prolong_ivp: mixed-order input");
    int n = *n_opt, d = ivp.d;
    if (target <= n) throw std::invalid_argument("prolong_ivp: target must exceed the order");
    InitialValueProblem<S> out;
    out.d = d;
    out.orders.assign(d, target);
    auto f = ivp.f;
    auto restrict_jet = [n, d](const JetState<S>& z) {
        JetState<S> y;
        y.v.assign(d, std::vector<S>(n));
        for (int k = 0; k < d; ++k)
            for (int N = 1; N <= n; ++N) y.at(k, N) = z.at(k, N);
        return y;
    };
    out.f = [f, restrict_jet](double t, const JetState<S>& z) { return f(t, restrict_jet(z)); };
    if (ivp.domain) {
        auto dom = ivp.domain;
        out.domain = [dom, restrict_jet](double t, const JetState<S>& z) {
            return dom(t, restrict_jet(z));
        };
    }
    return out;
}

// prolong an initial jet to the target order (new high ranks zero)
template <class S>
JetState<S> prolong_jet(const JetState<S>& y0, int target) {
    JetState<S> z = y0;
    for (auto& entry : z.v) entry.resize(target, S(0));
    return z;
}

// reduction to a lower order n~: each original entry becomes n-n~+1 entries;
// new entry m in [0, n-n~] at rank N carries original rank N+m.  Original
// rank values are gathered from entry 0 when below n~, from entry N_o-n~ at
// rank n~ otherwise.
template <class S>
InitialValueProblem<S> reduce_ivp(const InitialValueProblem<S>& ivp, int target) {
    auto n_opt = ivp.uniform_order();
    if (!n_opt) throw std::invalid_argument("reduce_ivp: mixed-order input");
    int n = *n_opt, d = ivp.d;
    if (target >= n || target < 1)
        throw std::invalid_argument("reduce_ivp: target must be in [1, order)");
    int blocks = n - target + 1;
    InitialValueProblem<S> out;
    out.d = blocks * d;
    out.orders.assign(blocks * d, target);
    auto f = ivp.f;
    // original rank value from the reduced jet
    auto orig = [target, blocks](const JetState<S>& z, int k, int No) {
        if (No < target) return z.at(k * blocks, No);
        return z.at(k * blocks + (No - target), target);
    };
    auto gather = [orig, n, d](const JetState<S>& z) {
        JetState<S> y;
        y.v.assign(d, std::vector<S>(n));
        for (int k = 0; k < d; ++k)
            for (int No = 1; No <= n; ++No) y.at(k, No) = orig(z, k, No);
        return y;
    };
    out.f = [f, gather, orig, n, d, target, blocks](double t, const JetState<S>& z) {
        JetState<S> y = gather(z);
        std::vector<S> fv = f(t, y);
        std::vector<S> rhs(blocks * d);
        for (int k = 0; k < d; ++k) {
            rhs[k * blocks] = fv[k];
            // entry m's solution is the original rank n~+m; its n~-th
            // derivative is the original rank m value.
            for (int m = 1; m < blocks; ++m) rhs[k * blocks + m] = orig(z, k, m);
        }
        return rhs;
    };
    if (ivp.domain) {
        auto dom = ivp.domain;
        out.domain = [dom, gather](double t, const JetState<S>& z) { return dom(t, gather(z)); };
    }
    if (ivp.exact_solution) {
        auto ex = ivp.exact_solution;
        out.exact_solution = [ex, n, d, target, blocks](double t) {
            JetState<S> y = ex(t);
            JetState<S> z = JetState<S>::zeros(std::vector<int>(blocks * d, target));
            for (int k = 0; k < d; ++k)
                for (int m = 0; m < blocks; ++m)
                    for (int N = 1; N <= target; ++N) z.at(k * blocks + m, N) = y.at(k, N + m);
            return z;
        };
    }
    return out;
}

// reduce an initial jet to the target order (matching reduce_ivp's layout)
template <class S>
JetState<S> reduce_jet(const JetState<S>& y0, int target) {
    int d = y0.entries();
    int n = y0.order(0);
    int blocks = n - target + 1;
    JetState<S> z = JetState<S>::zeros(std::vector<int>(blocks * d, target));
    for (int k = 0; k < d; ++k)
        for (int m = 0; m < blocks; ++m)
            for (int N = 1; N <= target; ++N) z.at(k * blocks + m, N) = y0.at(k, N + m);
    return z;
}

// rank-1 autonomization: appended order-1 entry tracks the time (rhs 1,
// initial value t0); the rhs reads the time from that entry instead of t.
template <class S>
InitialValueProblem<S> autonomize_rank1(const InitialValueProblem<S>& ivp) {
    int d = ivp.d;
    InitialValueProblem<S> out;
    out.d = d + 1;
    out.orders = ivp.orders;
    out.orders.push_back(1);
    auto f = ivp.f;
    auto strip = [d](const JetState<S>& z) {
        JetState<S> y;
        y.v.assign(z.v.begin(), z.v.begin() + d);
        return y;
    };
    out.f = [f, strip, d](double, const JetState<S>& z) {
        double t_tracked = std::real(static_cast<cplx>(z.at(d, 1)));
        std::vector<S> rhs = f(t_tracked, strip(z));
        rhs.push_back(S(1));
        return rhs;
    };
    if (ivp.domain) {
        auto dom = ivp.domain;
        out.domain = [dom, strip, d](double, const JetState<S>& z) {
            return dom(std::real(static_cast<cplx>(z.at(d, 1))), strip(z));
        };
    }
    return out;
}

// append the time entry to an initial jet for autonomize_rank1
template <class S>
JetState<S> autonomize_jet(const JetState<S>& y0, double t0) {
    JetState<S> z = y0;
    z.v.push_back({S(t0)});
    return z;
}

}  // namespace mork
