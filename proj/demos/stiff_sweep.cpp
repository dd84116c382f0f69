// Compares explicit and implicit multi-order methods on a stiff confluent
// problem, then prints the absolute-stability verdict for each method.
//
// Two step sizes are shown on purpose.  At h = 0.05 the explicit method is
// unstable, and the implicit ones are A-stable as formulas but their Picard
// inner iteration -- a plain fixed-point map whose loop gain here is roughly
// h times the top companion coefficient 3|lambda| ~ 120 -- diverges, so the
// solver flags non-convergence instead of returning garbage.  At h = 0.004
// the gain is ~0.5, the iteration contracts, and every method resolves the
// decay.
//
//   ./demo_stiff_sweep

#include <mork/mork.hpp>

#include <cstdio>

using namespace mork;

namespace {

void run_and_report(const std::string& name, const InitialValueProblem<cplx>& ivp,
                    const JetState<cplx>& y0, int n, double h, int steps) {
    MethodTableau m = catalog(name);
    auto plan = computation_plan(m, n);
    std::vector<double> hs(steps, h);
    auto points = step_sequence(m, plan, ivp, 0.0, y0, hs);
    const auto& last = points.back();
    JetState<cplx> exact = ivp.exact_solution(last.t);

    std::printf("%-22s t=%.3f", name.c_str(), last.t);
    for (int N = 1; N <= n; ++N)
        std::printf("  r%d=%.2e", N, std::abs(last.y.at(0, N) - exact.at(0, N)));
    std::printf("%s\n", last.converged ? "" : "  (picard not converged)");
}

}  // namespace

int main() {
    const int n = 3;
    const cplx lambda(-40.0, 5.0);  // fast decay: explicit methods need tiny h
    std::vector<cplx> y0v(n);
    for (int N = 1; N <= n; ++N) y0v[N - 1] = ipow(lambda, n - N);
    auto ivp = confluent_linear_ivp(n, lambda, 0.0, y0v);
    JetState<cplx> y0({y0v});

    const auto names = {"mork-heun", "mork-implicit-euler", "mork-crank-nicolson"};

    std::printf("errors after 30 steps of h=0.05 (|h*lambda| ~ 2):\n");
    for (const auto& name : names) run_and_report(name, ivp, y0, n, 0.05, 30);

    std::printf("\nerrors after 30 steps of h=0.004 (fixed-point gain ~ 0.5):\n");
    for (const auto& name : names) run_and_report(name, ivp, y0, n, 0.004, 30);

    std::printf("\nabsolute-stability scans (order 1):\n");
    for (const auto& name : names) {
        auto rep = a_stability_scan(catalog(name), 1);
        std::printf("%-22s %s\n", name, rep.verdict_line().c_str());
    }
    std::printf(
        "\nnote: the implicit formulas pass the A-stability scan, but the Picard\n"
        "inner solver only contracts when h times the Lipschitz scale of f is\n"
        "below 1; exploiting A-stability past that needs a Newton-type solver.\n");
    return 0;
}
