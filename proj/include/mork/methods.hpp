#ifndef MORK_METHODS_HPP
#define MORK_METHODS_HPP

// Named method catalog and tableau surgery.  Catalog weights are the exact
// closed forms in the rank N (rational except for the sqrt(3) quadrature
// constants), evaluated on demand, so any order works without drift.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mork/core.hpp"
#include "mork/graph.hpp"

namespace mork {

// ---------------------------------------------------------------------------
// Runge-Kutta catalog

inline RKTableau rk_catalog(const std::string& name) {
    static const double s3 = std::sqrt(3.0);
    if (name == "rk-euler") return {1, {0.0}, {{0.0}, {1.0}}};
    if (name == "rk-midpoint") return {2, {0.0, 0.5}, {{0, 0}, {0.5, 0}, {0.0, 1.0}}};
    if (name == "rk-ralston")
        return {2, {0.0, 2.0 / 3.0}, {{0, 0}, {2.0 / 3.0, 0}, {0.25, 0.75}}};
    if (name == "rk-heun")
        return {3,
                {0.0, 1.0 / 3.0, 2.0 / 3.0},
                {{0, 0, 0}, {1.0 / 3.0, 0, 0}, {0.0, 2.0 / 3.0, 0}, {0.25, 0.0, 0.75}}};
    if (name == "rk4")
        return {4,
                {0.0, 0.5, 0.5, 1.0},
                {{0, 0, 0, 0},
                 {0.5, 0, 0, 0},
                 {0.0, 0.5, 0, 0},
                 {0.0, 0.0, 1.0, 0},
                 {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0}}};
    if (name == "rk4b")
        return {4,
                {0.0, 0.5, 0.5, 1.0},
                {{0, 0, 0, 0},
                 {0.5, 0, 0, 0},
                 {0.25, 0.25, 0, 0},
                 {0.0, -1.0, 2.0, 0},
                 {1.0 / 6.0, 0.0, 4.0 / 6.0, 1.0 / 6.0}}};
    if (name == "rk-implicit-euler") return {1, {1.0}, {{1.0}, {1.0}}};
    if (name == "rk-implicit-midpoint") return {1, {0.5}, {{0.5}, {1.0}}};
    if (name == "rk-crank-nicolson")
        return {2, {0.0, 1.0}, {{0, 0}, {0.5, 0.5}, {0.5, 0.5}}};
    if (name == "rk-cnb")
        return {2, {0.0, 2.0 / 3.0}, {{0, 0}, {1.0 / 3.0, 1.0 / 3.0}, {0.25, 0.75}}};
    if (name == "rk-gauss-legendre-4")
        return {2,
                {0.5 - s3 / 6.0, 0.5 + s3 / 6.0},
                {{0.25, 0.25 - s3 / 6.0}, {0.25 + s3 / 6.0, 0.25}, {0.5, 0.5}}};
    throw std::invalid_argument("rk_catalog: unknown method '" + name + "'");
}

// ---------------------------------------------------------------------------
// Multi-order catalog

// secondary weights xi^{N'}/N'! synthesized from per-rank approximation
// times; this is the shape every order >= 0 method must have.
inline MethodTableau mork_form(std::vector<double> tau, int s, std::function<Mat(int)> w,
                               std::function<double(int, int)> xi,
                               std::optional<int> max_length = std::nullopt) {
    MethodTableau m;
    m.s = s;
    m.nodes = std::move(tau);
    m.kind = MethodTableau::Kind::Mork;
    m.max_length = max_length;
    m.main_weights = std::move(w);
    m.xi_fn = xi;
    m.secondary_weights = [s, xi](int N) {
        std::vector<std::vector<double>> rows(s + 1, std::vector<double>(N));
        for (int j = 0; j <= s; ++j)
            for (int Np = 0; Np < N; ++Np)
                rows[j][Np] = ipow(xi(j, N), Np) / factorial(Np);
        return rows;
    };
    return m;
}

// two-point explicit family of order 2 with free interior node t2 != 0;
// t2 = 1/2 and t2 = 2/3 reproduce the midpoint and Ralston tableaus.
inline MethodTableau emork_2_3_2(double t2) {
    if (t2 == 0.0)
        throw std::invalid_argument("emork-2-3-2: the interior node must be nonzero");
    return node_determined({0.0, t2, 1.0}, 2, [t2](int N) -> Mat {
        double c = 1.0 / (t2 * (1.0 + N));
        return {{0, 0}, {ipow(t2, N), 0}, {1.0 - c, c}};
    });
}

// one-point implicit family: order 1 at rank 1, order 2 at higher ranks,
// with per-rank approximation times (1+N)x at the stage.
inline MethodTableau imork_1_1_2(double x) {
    auto xi = [x](int j, int N) {
        if (j == 1) return 1.0;
        return N == 1 ? x : (1.0 + N) * x;
    };
    return mork_form({x, 1.0}, 1,
                     [x](int N) -> Mat {
                         if (N == 1) return {{x}, {1.0}};
                         return {{ipow((1.0 + N) * x, N)}, {1.0}};
                     },
                     xi);
}

inline MethodTableau catalog(const std::string& full_name) {
    std::string name = full_name;
    std::optional<double> param;
    if (auto pos = full_name.find(':'); pos != std::string::npos) {
        name = full_name.substr(0, pos);
        try {
            param = std::stod(full_name.substr(pos + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("catalog: bad parameter in '" + full_name + "'");
        }
    }

    if (name == "emork-2-3-2") {
        if (!param) throw std::invalid_argument("catalog: emork-2-3-2 needs a node parameter");
        return emork_2_3_2(*param);
    }
    if (name == "imork-1-1-2") {
        if (!param) throw std::invalid_argument("catalog: imork-1-1-2 needs a time parameter");
        return imork_1_1_2(*param);
    }
    if (param) throw std::invalid_argument("catalog: '" + name + "' takes no parameter");

    if (name == "mork-euler")
        return node_determined({0.0, 1.0}, 1, [](int) -> Mat { return {{0.0}, {1.0}}; });
    if (name == "mork-midpoint")
        return node_determined({0.0, 0.5, 1.0}, 2, [](int N) -> Mat {
            return {{0, 0}, {ipow(0.5, N), 0}, {(N - 1.0) / (1.0 + N), 2.0 / (1.0 + N)}};
        });
    if (name == "mork-ralston")
        return node_determined({0.0, 2.0 / 3.0, 1.0}, 2, [](int N) -> Mat {
            return {{0, 0},
                    {ipow(2.0 / 3.0, N), 0},
                    {(2.0 * N - 1.0) / (2.0 * (1.0 + N)), 3.0 / (2.0 * (1.0 + N))}};
        });
    if (name == "mork-heun")
        return node_determined({0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}, 3, [](int N) -> Mat {
            double p = ipow(2.0 / 3.0, N);
            double d2 = (1.0 + N) * (2.0 + N);
            return {{0, 0, 0},
                    {ipow(1.0 / 3.0, N), 0, 0},
                    {p * (N - 1.0) / (1.0 + N), p * 2.0 / (1.0 + N), 0},
                    {1.0 - 9.0 * N / (2.0 * d2), 6.0 * (N - 1.0) / d2,
                     3.0 * (4.0 - N) / (2.0 * d2)}};
        });
    if (name == "mork4")
        return node_determined({0.0, 0.5, 0.5, 1.0, 1.0}, 4, [](int N) -> Mat {
            double p = ipow(0.5, N);
            double d2 = (1.0 + N) * (2.0 + N);
            return {{0, 0, 0, 0},
                    {p, 0, 0, 0},
                    {p * (N - 1.0) / (1.0 + N), 2.0 * p / (1.0 + N), 0, 0},
                    {(N - 1.0) / (1.0 + N), (1.0 - N) / (1.0 + N), 1.0, 0},
                    {N * N / d2, 2.0 * N / d2, 2.0 * N / d2, (2.0 - N) / d2}};
        });
    if (name == "mork4b")
        return node_determined({0.0, 0.5, 0.5, 1.0, 1.0}, 4, [](int N) -> Mat {
            double p = ipow(0.5, N);
            double d2 = (1.0 + N) * (2.0 + N);
            return {{0, 0, 0, 0},
                    {p, 0, 0, 0},
                    {p * N / (1.0 + N), p / (1.0 + N), 0, 0},
                    {(N - 1.0) / (1.0 + N), 2.0 * (N - 2.0) / (1.0 + N),
                     2.0 * (3.0 - N) / (1.0 + N), 0},
                    {N * N / d2, 0.0, 4.0 * N / d2, (2.0 - N) / d2}};
        });
    if (name == "mork-implicit-euler")
        return node_determined({1.0, 1.0}, 1, [](int) -> Mat { return {{1.0}, {1.0}}; });
    if (name == "mork-implicit-midpoint")
        return node_determined({0.5, 1.0}, 1,
                               [](int N) -> Mat { return {{ipow(0.5, N)}, {1.0}}; });
    if (name == "mork-crank-nicolson")
        return node_determined({0.0, 1.0, 1.0}, 2,
                               [](int) -> Mat { return {{0, 0}, {0.5, 0.5}, {0.5, 0.5}}; });
    if (name == "mork-cnb")
        return node_determined({0.0, 2.0 / 3.0, 1.0}, 2, [](int N) -> Mat {
            double p = ipow(2.0 / 3.0, N);
            return {{0, 0},
                    {p * N / (1.0 + N), p / (1.0 + N)},
                    {(2.0 * N - 1.0) / (2.0 * (1.0 + N)), 3.0 / (2.0 * (1.0 + N))}};
        });
    if (name == "mork-gauss-jacobi-4") {
        static const double s3 = std::sqrt(3.0);
        double gm = 0.5 - s3 / 6.0, gp = 0.5 + s3 / 6.0;
        return node_determined({gm, gp, 1.0}, 2, [gm, gp](int N) -> Mat {
            double d = 1.0 + N;
            return {{(1.0 + (1.0 + s3) * N / 2.0) / d * ipow(gm, N),
                     -s3 * N / d * ipow(gm, N + 1)},
                    {s3 * N / d * ipow(gp, N + 1),
                     (1.0 + (1.0 - s3) * N / 2.0) / d * ipow(gp, N)},
                    {0.5 + s3 * (N - 1.0) / (2.0 * d), 0.5 - s3 * (N - 1.0) / (2.0 * d)}};
        });
    }
    throw std::invalid_argument("catalog: unknown method '" + full_name + "'");
}

inline bool is_rk_name(const std::string& name) { return name.rfind("rk", 0) == 0; }

// ---------------------------------------------------------------------------
// Conversions

// view an RK tableau as a length-1 method (node-determined, cap 1)
inline MethodTableau rk_as_gmork(const RKTableau& rk) {
    Mat w1 = rk.w1;
    return node_determined(rk.nodes, rk.s, [w1](int) { return w1; }, 1);
}

inline RKTableau rk_from_gmork(const MethodTableau& m) {
    return {m.s, m.nodes, m.w(1)};
}

// ---------------------------------------------------------------------------
// Permutation

// bijection on stages fixing the final one, stored 0-based
struct Permutation {
    std::vector<int> map;  // size s+1, map[s] = s

    int operator()(int j) const { return map[j]; }
    int stages() const { return static_cast<int>(map.size()) - 1; }

    static Permutation identity(int s) {
        Permutation p;
        p.map.resize(s + 1);
        for (int j = 0; j <= s; ++j) p.map[j] = j;
        return p;
    }

    // cycle in the usual 1-based notation: (c0 c1 ... ck) sends c0 to c1,
    // c1 to c2, ..., ck back to c0
    static Permutation from_cycle(int s, const std::vector<int>& cycle) {
        Permutation p = identity(s);
        for (size_t i = 0; i < cycle.size(); ++i) {
            int from = cycle[i] - 1;
            int to = cycle[(i + 1) % cycle.size()] - 1;
            p.map[from] = to;
        }
        p.validate();
        return p;
    }

    Permutation inverse() const {
        Permutation p;
        p.map.resize(map.size());
        for (size_t j = 0; j < map.size(); ++j) p.map[map[j]] = static_cast<int>(j);
        return p;
    }

    void validate() const {
        int s = stages();
        if (map.empty() || map[s] != s)
            throw std::invalid_argument("permutation must fix the final stage");
        std::vector<char> seen(map.size(), 0);
        for (int v : map) {
            if (v < 0 || v > s || seen[v])
                throw std::invalid_argument("permutation is not a bijection on the stages");
            seen[v] = 1;
        }
    }
};

// relabel stages: tau'_j = tau_{phi(j)}, w'_{N,j,j'} = w_{N,phi(j),phi(j')},
// secondary rows follow the stage relabeling.
inline MethodTableau permute(const MethodTableau& m, const Permutation& phi) {
    phi.validate();
    if (phi.stages() != m.s)
        throw std::invalid_argument("permute: permutation size differs from the method");
    const int s = m.s;
    std::vector<int> p = phi.map;
    MethodTableau out;
    out.s = s;
    out.kind = m.kind;
    out.max_length = m.max_length;
    out.nodes.resize(s + 1);
    for (int j = 0; j <= s; ++j) out.nodes[j] = m.node(p[j]);
    auto src_w = m.main_weights;
    out.main_weights = [src_w, p, s](int N) {
        Mat w = src_w(N);
        Mat res(s + 1, std::vector<double>(s));
        for (int j = 0; j <= s; ++j)
            for (int j1 = 0; j1 < s; ++j1) res[j][j1] = w[p[j]][p[j1]];
        return res;
    };
    auto src_wt = m.secondary_weights;
    out.secondary_weights = [src_wt, p, s](int N) {
        auto wt = src_wt(N);
        std::vector<std::vector<double>> res(s + 1);
        for (int j = 0; j <= s; ++j) res[j] = wt[p[j]];
        return res;
    };
    if (m.xi_fn) {
        auto src_xi = m.xi_fn;
        out.xi_fn = [src_xi, p](int j, int N) { return src_xi(p[j], N); };
    }
    return out;
}

inline RKTableau permute(const RKTableau& rk, const Permutation& phi) {
    phi.validate();
    if (phi.stages() != rk.s)
        throw std::invalid_argument("permute: permutation size differs from the tableau");
    const int s = rk.s;
    RKTableau out;
    out.s = s;
    out.nodes.resize(s + 1);
    for (int j = 0; j <= s; ++j) out.nodes[j] = rk.node(phi.map[j]);
    out.w1.assign(s + 1, std::vector<double>(s));
    for (int j = 0; j <= s; ++j)
        for (int j1 = 0; j1 < s; ++j1) out.w1[j][j1] = rk.w1[phi.map[j]][phi.map[j1]];
    return out;
}

// ---------------------------------------------------------------------------
// Length surgery

// cap the usable length at n; weights below the cap are untouched
inline MethodTableau truncate(const MethodTableau& m, int n) {
    if (n < 1) throw std::invalid_argument("truncate: n must be >= 1");
    if (m.max_length && n > *m.max_length)
        throw std::invalid_argument("truncate: n exceeds the method length");
    MethodTableau out = m;
    out.max_length = n;
    return out;
}

namespace detail {

inline Mat mat_mul(const Mat& A, const Mat& B) {
    const int r = static_cast<int>(A.size());
    const int k = static_cast<int>(B.size());
    const int c = static_cast<int>(B[0].size());
    Mat C(r, std::vector<double>(c, 0.0));
    for (int i = 0; i < r; ++i)
        for (int p = 0; p < k; ++p) {
            double a = A[i][p];
            if (a == 0.0) continue;
            for (int j = 0; j < c; ++j) C[i][j] += a * B[p][j];
        }
    return C;
}

inline std::vector<double> mat_vec(const Mat& A, const std::vector<double>& x) {
    std::vector<double> y(A.size(), 0.0);
    for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < x.size(); ++j) y[i] += A[i][j] * x[j];
    return y;
}

}  // namespace detail

// Extend a finite method of length n~ to length n.  Rank N = p*n~ + r
// composes the top-rank coupling p times with the rank-r weights,
//   w'_N = N! * U * V^{p-1} * W_r,   U = w_n~/n~!,  W_r = w_r/r!,
// with V, W_r restricted to the evaluation rows; the secondary weights
// splice the source rows at lag N' through the same products.  This is the
// dynamic-programming form of the diwalk sums (matrix powers, never tuple
// enumeration).
inline MethodTableau extend(const MethodTableau& m, int n) {
    if (!m.max_length)
        throw std::invalid_argument("extend: source method must have finite length");
    const int nt = *m.max_length;
    if (n <= nt) throw std::invalid_argument("extend: target must exceed the source length");
    m.ensure_length(nt);
    const int s = m.s;

    auto w_src = std::make_shared<std::vector<Mat>>(m.w_cache.begin(), m.w_cache.end());
    auto wt_src = std::make_shared<std::vector<std::vector<std::vector<double>>>>(
        m.wt_cache.begin(), m.wt_cache.end());

    Mat U(s + 1, std::vector<double>(s));
    for (int j = 0; j <= s; ++j)
        for (int j1 = 0; j1 < s; ++j1) U[j][j1] = (*w_src)[nt - 1][j][j1] / factorial(nt);
    Mat V(U.begin(), U.begin() + s);
    auto Wr = std::make_shared<std::vector<Mat>>();
    Wr->push_back({});  // rank 0 unused
    for (int r = 1; r <= nt; ++r) {
        Mat rows((*w_src)[r - 1].begin(), (*w_src)[r - 1].begin() + s);
        for (auto& row : rows)
            for (double& x : row) x /= factorial(r);
        Wr->push_back(std::move(rows));
    }

    MethodTableau out;
    out.s = s;
    out.nodes = m.nodes;
    out.kind = MethodTableau::Kind::General;  // composition loses the node form
    out.max_length = n;
    out.main_weights = [w_src, Wr, U, V, nt](int N) {
        int p = (N - 1) / nt, r = N - p * nt;
        if (p == 0) return (*w_src)[N - 1];
        Mat acc = U;
        for (int i = 0; i < p - 1; ++i) acc = detail::mat_mul(acc, V);
        acc = detail::mat_mul(acc, (*Wr)[r]);
        for (auto& row : acc)
            for (double& x : row) x *= factorial(N);
        return acc;
    };
    out.secondary_weights = [wt_src, U, V, nt, s](int N) {
        std::vector<std::vector<double>> rows(s + 1, std::vector<double>(N));
        for (int Np = 0; Np < N; ++Np) {
            int pp = Np / nt;
            if (pp == 0) {
                int rank = std::min(N, nt);
                for (int j = 0; j <= s; ++j) rows[j][Np] = (*wt_src)[rank - 1][j][Np];
            } else {
                int rank = std::min(N - pp * nt, nt);
                int lag = Np - pp * nt;
                std::vector<double> g(s);
                for (int j2 = 0; j2 < s; ++j2) g[j2] = (*wt_src)[rank - 1][j2][lag];
                for (int i = 0; i < pp - 1; ++i) g = detail::mat_vec(V, g);
                std::vector<double> col = detail::mat_vec(U, g);
                for (int j = 0; j <= s; ++j) rows[j][Np] = col[j];
            }
        }
        return rows;
    };
    return out;
}

// Overwrite rank N with rank N': rank N's update is re-expressed through an
// intermediate pass at rank N', composing the two weight matrices; the
// secondary weights splice the low-rank rows in at lags >= N'.  All other
// ranks are untouched.
inline MethodTableau overwrite(const MethodTableau& m, int N, int Np) {
    if (N < 2) throw std::invalid_argument("overwrite: rank must be >= 2");
    if (Np < 1 || Np >= N) throw std::invalid_argument("overwrite: need 1 <= N' < N");
    if (m.max_length && N > *m.max_length)
        throw std::invalid_argument("overwrite: rank exceeds the method length");
    const int s = m.s;
    const Mat a = m.w(Np);                // the pass that replaces rank N's direct one
    const Mat b = m.w(N - Np);            // the remaining ranks' pass
    std::vector<std::vector<double>> wt_low(m.s + 1, std::vector<double>(N - Np));
    for (int j = 0; j <= s; ++j)
        for (int lag = 0; lag < N - Np; ++lag) wt_low[j][lag] = m.wt(N - Np, lag, j);
    auto src_w = m.main_weights;
    auto src_wt = m.secondary_weights;

    MethodTableau out;
    out.s = s;
    out.nodes = m.nodes;
    out.kind = MethodTableau::Kind::General;
    out.max_length = m.max_length;
    out.main_weights = [src_w, a, b, N, Np, s](int rank) {
        if (rank != N) return src_w(rank);
        Mat res(s + 1, std::vector<double>(s, 0.0));
        double scale = factorial(N) / (factorial(Np) * factorial(N - Np));
        for (int j = 0; j <= s; ++j)
            for (int j1 = 0; j1 < s; ++j1) {
                double acc = 0.0;
                for (int j2 = 0; j2 < s; ++j2) acc += a[j][j2] * b[j2][j1];
                res[j][j1] = scale * acc;
            }
        return res;
    };
    out.secondary_weights = [src_wt, a, wt_low, N, Np, s](int rank) {
        auto rows = src_wt(rank);
        if (rank != N) return rows;
        for (int lag = Np; lag < N; ++lag)
            for (int j = 0; j <= s; ++j) {
                double acc = 0.0;
                for (int j1 = 0; j1 < s; ++j1)
                    acc += a[j][j1] / factorial(Np) * wt_low[j1][lag - Np];
                rows[j][lag] = acc;
            }
        return rows;
    };
    return out;
}

// Drop the stages with no diwalk to the final stage; the surviving rows and
// columns are re-indexed and the final-stage output is unchanged.
inline MethodTableau remove_useless(const MethodTableau& m, int n) {
    std::vector<int> keep = useful_stages(m, n);
    if (static_cast<int>(keep.size()) == m.s) return m;
    const int s2 = static_cast<int>(keep.size());
    std::vector<int> old_index = keep;
    old_index.push_back(m.s);  // final stage always survives

    MethodTableau out;
    out.s = s2;
    out.kind = m.kind;
    out.max_length = m.max_length;
    out.nodes.resize(s2 + 1);
    for (int j = 0; j <= s2; ++j) out.nodes[j] = m.node(old_index[j]);
    auto src_w = m.main_weights;
    out.main_weights = [src_w, old_index, s2](int N) {
        Mat w = src_w(N);
        Mat res(s2 + 1, std::vector<double>(s2));
        for (int j = 0; j <= s2; ++j)
            for (int j1 = 0; j1 < s2; ++j1) res[j][j1] = w[old_index[j]][old_index[j1]];
        return res;
    };
    auto src_wt = m.secondary_weights;
    out.secondary_weights = [src_wt, old_index, s2](int N) {
        auto wt = src_wt(N);
        std::vector<std::vector<double>> res(s2 + 1);
        for (int j = 0; j <= s2; ++j) res[j] = wt[old_index[j]];
        return res;
    };
    if (m.xi_fn) {
        auto src_xi = m.xi_fn;
        out.xi_fn = [src_xi, old_index](int j, int N) { return src_xi(old_index[j], N); };
    }
    return out;
}

}  // namespace mork

#endif  // MORK_METHODS_HPP
