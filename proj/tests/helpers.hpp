#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <mork/core.hpp>

// shared bits for the test binaries

namespace testutil {

using mork::cplx;

// |a - b| relative to max(1, |b|)
inline double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline bool near(cplx a, cplx b, double tol) { return rel_err(a, b) <= tol; }

// single-entry complex jet from a rank list
inline mork::JetState<cplx> jet1(std::vector<cplx> ranks) {
    std::vector<std::vector<cplx>> v{std::move(ranks)};
    return mork::JetState<cplx>(v);
}

inline mork::JetState<double> djet1(std::vector<double> ranks) {
    std::vector<std::vector<double>> v{std::move(ranks)};
    return mork::JetState<double>(v);
}

// pure-exponential confluent initial jet: rank N = lambda^(n-N) at u = 0
inline std::vector<cplx> pure_exp_ranks(int n, cplx lambda) {
    std::vector<cplx> y0(n);
    for (int N = 1; N <= n; ++N) y0[N - 1] = mork::ipow(lambda, n - N);
    return y0;
}

}  // namespace testutil
