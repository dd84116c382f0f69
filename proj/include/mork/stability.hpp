#pragma once
// Linear-stability algebra for multi-order methods: the resolvent and
// stability matrices in root and coefficient form, spectral radii, the
// closed-form linear step, and A/L/half-line stability scans.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mork/core.hpp"

namespace mork {

using CMat = Eigen::MatrixXcd;

// ---------------------------------------------------------------------------
// Characteristic roots <-> linear-combination coefficients

// coefficients of y^(n) = sum_N alpha_N y^(n-N) from the characteristic
// roots: alpha_N = (-1)^{N+1} e_N(roots)
inline std::vector<cplx> vieta(const std::vector<cplx>& roots) {
    if (roots.empty()) throw std::invalid_argument("vieta: no roots given");
    const int n = static_cast<int>(roots.size());
    // product recurrence for the elementary symmetric polynomials
    std::vector<cplx> e(n + 1, 0.0);
    e[0] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k >= 1; --k) e[k] += roots[i] * e[k - 1];
    std::vector<cplx> alpha(n);
    for (int N = 1; N <= n; ++N) alpha[N - 1] = (N % 2 == 1 ? e[N] : -e[N]);
    return alpha;
}

// inverse of vieta via companion-matrix eigenvalues, sorted by (re, im)
inline std::vector<cplx> roots_from_coefficients(const std::vector<cplx>& alpha) {
    if (alpha.empty()) throw std::invalid_argument("roots_from_coefficients: empty");
    const int n = static_cast<int>(alpha.size());
    CMat C = CMat::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) C(i + 1, i) = 1.0;
    // X^n - alpha_1 X^{n-1} - ... - alpha_n: last column holds alpha_{n-i}
    for (int i = 0; i < n; ++i) C(i, n - 1) = alpha[n - 1 - i];
    Eigen::ComplexEigenSolver<CMat> es(C, false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("roots_from_coefficients: eigen solve failed");
    std::vector<cplx> roots(n);
    for (int i = 0; i < n; ++i) roots[i] = es.eigenvalues()(i);
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return roots;
}

namespace detail {

// canonical coordinate order; the stability matrices are symmetric functions
// of z, so sorting makes them exactly permutation-invariant in floating point
inline std::vector<cplx> canonical_z(std::vector<cplx> z) {
    std::sort(z.begin(), z.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return z;
}

inline std::vector<cplx> elem_sym(const std::vector<cplx>& vals) {
    std::vector<cplx> e(vals.size() + 1, 0.0);
    e[0] = 1.0;
    for (size_t i = 0; i < vals.size(); ++i)
        for (size_t k = i + 1; k >= 1; --k) e[k] += vals[i] * e[k - 1];
    return e;
}

// z-independent blocks of the stability function
struct StabilityBlocks {
    CMat Wt;             // n x n, lower triangular final-stage Taylor weights
    CMat W;              // n x s, final-stage main rows per rank
    CMat D;              // n x n, diag 1/N!
    std::vector<CMat> T; // per rank: s x n stage Taylor weights, shifted
};

inline StabilityBlocks make_blocks(const MethodTableau& m, int n) {
    m.ensure_length(n);
    const int s = m.s;
    StabilityBlocks b;
    b.Wt = CMat::Zero(n, n);
    for (int a = 1; a <= n; ++a)
        for (int col = 1; col <= a; ++col) b.Wt(a - 1, col - 1) = m.wt(a, a - col, s);
    b.W = CMat::Zero(n, s);
    for (int N = 1; N <= n; ++N)
        for (int j1 = 0; j1 < s; ++j1) b.W(N - 1, j1) = m.w(N)[s][j1];
    b.D = CMat::Zero(n, n);
    for (int N = 1; N <= n; ++N) b.D(N - 1, N - 1) = 1.0 / factorial(N);
    b.T.resize(n);
    for (int N = 1; N <= n; ++N) {
        b.T[N - 1] = CMat::Zero(s, n);
        for (int j1 = 0; j1 < s; ++j1)
            for (int col = 1; col <= N; ++col)
                b.T[N - 1](j1, col - 1) = m.wt(N, N - col, j1);
    }
    return b;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Resolvent and stability matrices

// Q_n(z) = I_s + sum_N e_N(z) E_s w_N / N!
inline CMat resolvent(const MethodTableau& m, int n, const std::vector<cplx>& z) {
    if (static_cast<int>(z.size()) != n)
        throw std::invalid_argument("resolvent: z must have length n");
    m.ensure_length(n);
    const int s = m.s;
    auto e = detail::elem_sym(detail::canonical_z(z));
    CMat Q = CMat::Identity(s, s);
    for (int N = 1; N <= n; ++N) {
        cplx c = e[N] / factorial(N);
        if (c == cplx(0.0)) continue;
        const Mat& w = m.w(N);
        for (int i = 0; i < s; ++i)
            for (int j1 = 0; j1 < s; ++j1) Q(i, j1) += c * w[i][j1];
    }
    return Q;
}

namespace detail {

// shared evaluation path so scans can also record |det Q|
inline CMat stability_from_blocks(const StabilityBlocks& b, const MethodTableau& m, int n,
                                  const std::vector<cplx>& z, double* abs_det_out) {
    CMat Q = resolvent(m, n, z);
    const int s = m.s;
    cplx det = Q.determinant();
    double scale = std::max(1.0, std::pow(Q.cwiseAbs().maxCoeff(), s));
    if (abs_det_out) *abs_det_out = std::abs(det);
    if (std::abs(det) < 1e-300 * scale)
        throw std::runtime_error(
            "stability_matrix: resolvent is singular (z outside the stability domain)");
    auto e = elem_sym(canonical_z(z));
    CMat Tz = CMat::Zero(s, n);
    for (int N = 1; N <= n; ++N)
        if (e[N] != cplx(0.0)) Tz += e[N] * b.T[N - 1];
    CMat X = Q.partialPivLu().solve(Tz);
    return b.Wt - b.D * b.W * X;
}

}  // namespace detail

// R_n(z) = Wt - D W Q_n(z)^{-1} sum_N e_N(z) T_{n,N}
inline CMat stability_matrix(const MethodTableau& m, int n, const std::vector<cplx>& z) {
    auto blocks = detail::make_blocks(m, n);
    return detail::stability_from_blocks(blocks, m, n, z, nullptr);
}

// coefficient form: Qc = I - sum_N zc_N E w_N/N!,
// Rc = Wt + D W Qc^{-1} sum_N zc_N T_{n,N}
inline CMat stability_matrix_coeff(const MethodTableau& m, int n,
                                   const std::vector<cplx>& zc) {
    if (static_cast<int>(zc.size()) != n)
        throw std::invalid_argument("stability_matrix_coeff: z must have length n");
    auto b = detail::make_blocks(m, n);
    const int s = m.s;
    CMat Q = CMat::Identity(s, s);
    for (int N = 1; N <= n; ++N) {
        cplx c = zc[N - 1] / factorial(N);
        if (c == cplx(0.0)) continue;
        const Mat& w = m.w(N);
        for (int i = 0; i < s; ++i)
            for (int j1 = 0; j1 < s; ++j1) Q(i, j1) -= c * w[i][j1];
    }
    cplx det = Q.determinant();
    double scale = std::max(1.0, std::pow(Q.cwiseAbs().maxCoeff(), s));
    if (std::abs(det) < 1e-300 * scale)
        throw std::runtime_error(
            "stability_matrix_coeff: resolvent is singular (z outside the stability domain)");
    CMat Tz = CMat::Zero(s, n);
    for (int N = 1; N <= n; ++N)
        if (zc[N - 1] != cplx(0.0)) Tz += zc[N - 1] * b.T[N - 1];
    CMat X = Q.partialPivLu().solve(Tz);
    return b.Wt + b.D * b.W * X;
}

// ---------------------------------------------------------------------------
// Spectral radius

inline double spectral_radius(const CMat& M) {
    if (M.rows() != M.cols()) throw std::invalid_argument("spectral_radius: not square");
    if (M.rows() > 64) throw std::invalid_argument("spectral_radius: dimension > 64");
    Eigen::ComplexEigenSolver<CMat> es(M, false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spectral_radius: eigenvalue iteration failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Closed-form linear stepping

// one step of the method on y^(n) = sum alpha_N y^(n-N) with the given
// characteristic roots: conjugate R_n(-h r) by the h-power scaling per rank.
// h = 0 degenerates to the diagonal lag-0 Taylor weights.
template <class S>
JetState<S> linear_step_closed_form(const MethodTableau& m, int n,
                                    const std::vector<cplx>& roots, double /*t*/,
                                    const JetState<S>& y0, double h) {
    if (static_cast<int>(roots.size()) != n)
        throw std::invalid_argument("linear_step_closed_form: need n roots");
    const int d = static_cast<int>(y0.v.size());
    JetState<S> out = y0;
    if (h == 0.0) {
        for (int k = 0; k < d; ++k)
            for (int N = 1; N <= n; ++N)
                out.v[k][N - 1] = S(m.wt(N, 0, m.s)) * y0.at(k, N);
        return out;
    }
    std::vector<cplx> z(n);
    for (int i = 0; i < n; ++i) z[i] = -h * roots[i];
    CMat R = stability_matrix(m, n, z);
    std::vector<double> hp(n + 1, 1.0);
    for (int i = 1; i <= n; ++i) hp[i] = hp[i - 1] * h;
    for (int k = 0; k < d; ++k) {
        for (int a = 0; a < n; ++a) {
            cplx acc = 0.0;
            for (int b = 0; b < n; ++b)
                acc += R(a, b) * (cplx(y0.at(k, b + 1)) / hp[b]);
            out.v[k][a] = S(hp[a] * acc);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stability scans

struct ScanSample {
    std::vector<cplx> z;
    double abs_det_q = 0.0;
    double rho = 0.0;
    bool pass = true;
    bool singular = false;
};

struct StabilityReport {
    std::string notion;
    std::string grid;
    double worst_rho = 0.0;
    std::vector<cplx> worst_z;
    bool no_violation = true;
    int singular_skipped = 0;
    int boundary_flagged = 0;  // rho within 1e-9 of 1: bounded powers not implied
    std::vector<ScanSample> samples;

    std::string to_csv() const;
    std::string verdict_line() const;
};

namespace detail {

inline bool worse_than(const ScanSample& a, double best_rho,
                       const std::vector<cplx>& best_z) {
    if (a.rho != best_rho) return a.rho > best_rho;
    // deterministic tie-break: lexicographic on (re, im) pairs
    for (size_t i = 0; i < a.z.size() && i < best_z.size(); ++i) {
        if (a.z[i].real() != best_z[i].real()) return a.z[i].real() < best_z[i].real();
        if (a.z[i].imag() != best_z[i].imag()) return a.z[i].imag() < best_z[i].imag();
    }
    return false;
}

inline void reduce_sample(StabilityReport& rep, const ScanSample& smp) {
    rep.samples.push_back(smp);
    if (smp.singular) {
        ++rep.singular_skipped;
        return;
    }
    if (smp.rho >= 1.0 - 1e-9 && smp.rho <= 1.0 + 1e-9) ++rep.boundary_flagged;
    if (!smp.pass) rep.no_violation = false;
    if (rep.worst_z.empty() || worse_than(smp, rep.worst_rho, rep.worst_z)) {
        rep.worst_rho = smp.rho;
        rep.worst_z = smp.z;
    }
}

inline ScanSample eval_scan_point(const StabilityBlocks& blocks, const MethodTableau& m,
                                  int n, const std::vector<cplx>& z, bool strict) {
    ScanSample smp;
    smp.z = z;
    try {
        CMat R = stability_from_blocks(blocks, m, n, z, &smp.abs_det_q);
        smp.rho = spectral_radius(R);
        bool in_strict_domain = true;
        for (cplx c : z)
            if (c.real() <= 0.0) in_strict_domain = false;
        if (strict)
            smp.pass = !in_strict_domain || smp.rho < 1.0;
        else
            smp.pass = smp.rho <= 1.0 + 1e-9;
    } catch (const std::runtime_error&) {
        smp.singular = true;
        smp.rho = std::numeric_limits<double>::quiet_NaN();
    }
    return smp;
}

}  // namespace detail

// Scan the closed right half-plane (componentwise) for spectral radii above
// 1.  Evidence only: a clean scan is "no violation found", not a proof.
// n <= 2 uses a full angle x log-radius mesh per coordinate plus the origin;
// larger n samples 4096 log-radial points from a fixed-seed generator.
inline StabilityReport a_stability_scan(const MethodTableau& m, int n, bool strict = false,
                                        std::uint32_t seed = 0x5EED) {
    auto blocks = detail::make_blocks(m, n);
    StabilityReport rep;
    rep.notion = strict ? "absolute-a" : "a";
    const double pi = 3.14159265358979323846;

    std::vector<cplx> coord_points = {cplx(0.0, 0.0)};
    for (int ri = 0; ri < 12; ++ri) {
        double r = std::pow(10.0, -2.0 + 8.0 * ri / 11.0);
        for (int ai = 0; ai < 16; ++ai) {
            double th = -pi / 2 + pi * ai / 15.0;
            coord_points.push_back(r * cplx(std::cos(th), std::sin(th)));
        }
    }

    if (n <= 2) {
        rep.grid = "mesh:16 angles x 12 log-radii (1e-2..1e6) + origin, per coordinate";
        std::vector<cplx> z(n);
        if (n == 1) {
            for (cplx p : coord_points) {
                z[0] = p;
                detail::reduce_sample(rep, detail::eval_scan_point(blocks, m, n, z, strict));
            }
        } else {
            for (cplx p : coord_points)
                for (cplx q : coord_points) {
                    z[0] = p;
                    z[1] = q;
                    detail::reduce_sample(rep,
                                          detail::eval_scan_point(blocks, m, n, z, strict));
                }
        }
    } else {
        rep.grid = "monte-carlo:4096 samples, radii 1e-2..1e6, seed " + std::to_string(seed);
        std::mt19937 rng(seed);
        auto u01 = [&rng]() { return rng() / 4294967296.0; };
        std::vector<cplx> z(n, 0.0);
        detail::reduce_sample(rep, detail::eval_scan_point(blocks, m, n, z, strict));
        for (int i = 0; i < 4096; ++i) {
            for (int k = 0; k < n; ++k) {
                double r = std::pow(10.0, -2.0 + 8.0 * u01());
                double th = -pi / 2 + pi * u01();
                z[k] = r * cplx(std::cos(th), std::sin(th));
            }
            detail::reduce_sample(rep, detail::eval_scan_point(blocks, m, n, z, strict));
        }
    }
    return rep;
}

// sample R_n(h z) along a fixed direction z with Re >= 0 (componentwise)
inline StabilityReport half_line_scan(const MethodTableau& m, int n,
                                      const std::vector<cplx>& direction,
                                      const std::vector<double>& h_grid,
                                      bool strict = false) {
    if (static_cast<int>(direction.size()) != n)
        throw std::invalid_argument("half_line_scan: direction must have length n");
    for (cplx c : direction) {
        if (c.real() < 0.0)
            throw std::invalid_argument("half_line_scan: direction needs Re >= 0");
        if (strict && c.real() == 0.0 && c != cplx(0.0))
            throw std::invalid_argument("half_line_scan: strict notion needs Re > 0");
    }
    auto blocks = detail::make_blocks(m, n);
    StabilityReport rep;
    rep.notion = "half-line";
    rep.grid = "h grid, " + std::to_string(h_grid.size()) + " points";
    std::vector<cplx> z(n);
    for (double h : h_grid) {
        for (int k = 0; k < n; ++k) z[k] = h * direction[k];
        // the strict spectral test is rho < 1 regardless of the boundary
        ScanSample smp = detail::eval_scan_point(blocks, m, n, z, false);
        if (strict && !smp.singular) smp.pass = smp.rho < 1.0;
        detail::reduce_sample(rep, smp);
    }
    return rep;
}

// probe the decay of R_n(mu 1_n) for growing magnitudes mu; "decaying" means
// strictly decreasing max-norms ending below 1e-3
inline StabilityReport l_stability_probe(const MethodTableau& m, int n,
                                         const std::vector<double>& magnitudes) {
    auto blocks = detail::make_blocks(m, n);
    StabilityReport rep;
    rep.notion = "l";
    rep.grid = "magnitudes, " + std::to_string(magnitudes.size()) + " points";
    double prev = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    double last = std::numeric_limits<double>::infinity();
    for (double mu : magnitudes) {
        std::vector<cplx> z(n, cplx(mu, 0.0));
        ScanSample smp;
        smp.z = z;
        CMat R = detail::stability_from_blocks(blocks, m, n, z, &smp.abs_det_q);
        smp.rho = R.cwiseAbs().maxCoeff();  // max-norm decay table
        if (smp.rho >= prev) decreasing = false;
        prev = smp.rho;
        last = smp.rho;
        smp.pass = true;
        rep.samples.push_back(smp);
        if (rep.worst_z.empty() || smp.rho > rep.worst_rho) {
            rep.worst_rho = smp.rho;
            rep.worst_z = smp.z;
        }
    }
    rep.no_violation = decreasing && last < 1e-3;
    return rep;
}

// ---------------------------------------------------------------------------
// Report serialization

inline std::string StabilityReport::to_csv() const {
    auto g17 = [](double x) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        return std::string(buf);
    };
    std::string out;
    const size_t nz = samples.empty() ? 0 : samples[0].z.size();
    for (size_t i = 0; i < nz; ++i)
        out += "z" + std::to_string(i + 1) + "_re,z" + std::to_string(i + 1) + "_im,";
    out += "abs_det_q,rho,pass\n";
    for (const auto& s : samples) {
        for (cplx c : s.z) out += g17(c.real()) + ',' + g17(c.imag()) + ',';
        out += g17(s.abs_det_q) + ',' + g17(s.rho) + ',' + (s.singular || s.pass ? '1' : '0');
        out += '\n';
    }
    return out;
}

inline std::string StabilityReport::verdict_line() const {
    auto g17 = [](double x) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        return std::string(buf);
    };
    std::string line = "notion=" + notion + " ";
    line += no_violation ? "no violation found on grid (evidence, not proof)"
                         : "violation found";
    line += "; worst rho=" + g17(worst_rho);
    if (!worst_z.empty()) {
        line += " at z=(";
        for (size_t i = 0; i < worst_z.size(); ++i) {
            if (i) line += ';';
            line += g17(worst_z[i].real()) + (worst_z[i].imag() < 0 ? "-" : "+") +
                    g17(std::abs(worst_z[i].imag())) + "i";
        }
        line += ")";
    }
    if (singular_skipped) line += "; singular samples skipped=" + std::to_string(singular_skipped);
    if (boundary_flagged) line += "; boundary samples flagged=" + std::to_string(boundary_flagged);
    return line;
}

}  // namespace mork
