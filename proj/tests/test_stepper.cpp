#include <catch2/catch_amalgamated.hpp>

#include <mork/graph.hpp>
#include <mork/methods.hpp>
#include <mork/stepper.hpp>

#include "helpers.hpp"

using namespace mork;
using testutil::jet1;
using testutil::near;

TEST_CASE("zero right-hand side leaves the Taylor part") {
    // one step of the forward method on f = 0 only shifts the jet
    auto m = catalog("mork-euler");
    InitialValueProblem<double> ivp;
    ivp.d = 1;
    ivp.orders = {3};
    ivp.f = [](double, const JetState<double>&) { return std::vector<double>{0.0}; };
    auto plan = computation_plan(m, 3);
    auto out = mork_step(m, plan, ivp, 0.0, testutil::djet1({1.0, 2.0, 3.0}), 1.0);
    REQUIRE(out.final_stage().at(0, 1) == 1.0);
    REQUIRE(out.final_stage().at(0, 2) == 3.0);
    REQUIRE(out.final_stage().at(0, 3) == 5.5);
    REQUIRE(out.f_evals == std::vector<int>{1});
    REQUIRE(out.converged);
}

TEST_CASE("midpoint step on an order-3 confluent problem") {
    cplx lam(-0.5, 1.0);
    std::vector<cplx> y0{cplx(0.3, -0.2), cplx(0.1, 0.4), cplx(1.1, 0.25)};
    auto ivp = confluent_linear_ivp(3, lam, 0.2, y0);
    auto m = catalog("mork-midpoint");
    auto plan = computation_plan(m, 3);
    auto out = mork_step(m, plan, ivp, 0.2, jet1(y0), 0.05);
    REQUIRE(near(out.final_stage().at(0, 1),
                 cplx(0.32864308573404947917, -0.077043259175618489583), 1e-14));
    REQUIRE(near(out.final_stage().at(0, 2),
                 cplx(0.11578988476223415799, 0.39307792484707302517), 1e-14));
    REQUIRE(near(out.final_stage().at(0, 3),
                 cplx(1.105388779809527927, 0.26980133213350507948), 1e-14));
}

TEST_CASE("five-stage fourth-order step on an order-4 problem") {
    int n = 4;
    cplx lam(-0.5, 1.0);
    auto y0 = testutil::pure_exp_ranks(n, lam);
    auto ivp = confluent_linear_ivp(n, lam, 0.0, y0);
    auto m = catalog("mork4b");
    auto plan = computation_plan(m, n);
    auto out = mork_step(m, plan, ivp, 0.0, jet1(y0), 0.02);
    REQUIRE(near(out.final_stage().at(0, 1),
                 cplx(1.365996189572420943, -0.22023839996400534297), 1e-14));
    REQUIRE(near(out.final_stage().at(0, 2),
                 cplx(-0.72258919604733552067, -1.0047015889347862901), 1e-14));
    REQUIRE(near(out.final_stage().at(0, 3),
                 cplx(-0.51472559182550346592, 0.97995199205652098979), 1e-14));
    REQUIRE(near(out.final_stage().at(0, 4),
                 cplx(0.98985183038266616359, 0.019799676634895937082), 1e-14));
}

TEST_CASE("implicit midpoint solves its stage by fixed point") {
    auto ivp = confluent_linear_ivp(2, cplx(-1.0), 0.0, {cplx(0.7), cplx(1.3)});
    auto m = catalog("mork-implicit-midpoint");
    auto plan = computation_plan(m, 2);
    auto out = mork_step(m, plan, ivp, 0.0, jet1({cplx(0.7), cplx(1.3)}), 0.1);
    REQUIRE(near(out.final_stage().at(0, 1), cplx(0.45164585698070374574), 1e-11));
    REQUIRE(near(out.final_stage().at(0, 2), cplx(1.3575822928490351873), 1e-11));
    REQUIRE(out.converged);
    REQUIRE(out.picard_iters.size() == 1);  // one entry per implicit block
    REQUIRE(out.picard_iters[0] >= 2);

    // starving the iteration flips the convergence flag
    PicardConfig starved;
    starved.threshold = 1e-30;
    starved.max_iter = 3;
    auto bad = mork_step(m, plan, ivp, 0.0, jet1({cplx(0.7), cplx(1.3)}), 0.1, starved);
    REQUIRE_FALSE(bad.converged);
}

TEST_CASE("runge-kutta step equals the classical hand computation") {
    auto rk = rk_catalog("rk4");
    InitialValueProblem<double> ivp;
    ivp.d = 1;
    ivp.orders = {1};
    auto f = [](double t, double y) { return std::sin(t) + y * y; };
    ivp.f = [f](double t, const JetState<double>& y) {
        return std::vector<double>{f(t, y.at(0, 1))};
    };
    double t = 0.3, y = 0.4, h = 0.1;
    auto plan = rk_computation_plan(rk, 1);
    auto out = rk_step(rk, plan, ivp, t, testutil::djet1({y}), h);

    double k1 = f(t, y);
    double k2 = f(t + h / 2, y + h / 2 * k1);
    double k3 = f(t + h / 2, y + h / 2 * k2);
    double k4 = f(t + h, y + h * k3);
    double classical = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    REQUIRE(out.final_stage().at(0, 1) == Catch::Approx(classical).epsilon(1e-14));
    REQUIRE(out.f_evals == std::vector<int>{1, 1, 1, 1});
}

TEST_CASE("rank chaining equals stepping the first-order reduction") {
    int n = 3;
    cplx lam(0.3, -0.6);
    std::vector<cplx> y0{cplx(1.0, 0.5), cplx(-0.2, 0.1), cplx(0.4)};
    auto ivp = confluent_linear_ivp(n, lam, 0.0, y0);
    auto rk = rk_catalog("rk-heun");
    auto plan_hi = rk_computation_plan(rk, n);
    auto direct = rk_step(rk, plan_hi, ivp, 0.0, jet1(y0), 0.07);

    auto red = reduce_to_first_order(ivp);
    std::vector<std::vector<cplx>> zv;
    for (int N = 1; N <= n; ++N) zv.push_back({y0[N - 1]});
    JetState<cplx> z0(zv);
    auto plan_lo = rk_computation_plan(rk, 1);
    auto reduced = rk_step(rk, plan_lo, red, 0.0, z0, 0.07);

    for (int N = 1; N <= n; ++N)
        REQUIRE(near(direct.final_stage().at(0, N), reduced.final_stage().at(N - 1, 1),
                     1e-13));
}

TEST_CASE("implicit runge-kutta step converges on a linear problem") {
    auto rk = rk_catalog("rk-gauss-legendre-4");
    auto ivp = confluent_linear_ivp(1, cplx(-2.0), 0.0, {cplx(1.0)});
    auto plan = rk_computation_plan(rk, 1);
    auto out = rk_step(rk, plan, ivp, 0.0, jet1({cplx(1.0)}), 0.1);
    REQUIRE(out.converged);
    // fourth-order accuracy: the (2,2) Pade error is about z^5/720 ~ 4e-7
    REQUIRE(std::abs(out.final_stage().at(0, 1) - std::exp(cplx(-0.2))) < 1e-6);
}

TEST_CASE("a stage leaving the domain cuts the trajectory short") {
    auto ivp = confluent_linear_ivp(1, cplx(1.0), 0.0, {cplx(1.0)});
    ivp.domain = [](double, const JetState<cplx>& y) { return std::real(y.at(0, 1)) <= 2.0; };
    auto m = catalog("mork-euler");
    auto plan = computation_plan(m, 1);
    std::vector<double> hs(10, 0.5);
    auto points = step_sequence(m, plan, ivp, 0.0, jet1({cplx(1.0)}), hs);
    // 1 -> 1.5 fine; the next step's output 2.25 violates the bound
    REQUIRE(points.size() == 2);
    REQUIRE(near(points[1].y.at(0, 1), cplx(1.5), 1e-15));

    // same cut with the runge-kutta sequence driver
    auto rk = rk_catalog("rk-euler");
    auto rkplan = rk_computation_plan(rk, 1);
    auto rkpoints = step_sequence(rk, rkplan, ivp, 0.0, jet1({cplx(1.0)}), hs);
    REQUIRE(rkpoints.size() == 2);
}

TEST_CASE("trajectory accumulates picard iterations") {
    auto ivp = confluent_linear_ivp(1, cplx(-1.0), 0.0, {cplx(1.0)});
    auto m = catalog("mork-implicit-euler");
    auto plan = computation_plan(m, 1);
    auto points = step_sequence(m, plan, ivp, 0.0, jet1({cplx(1.0)}), {0.1, 0.1, 0.1});
    REQUIRE(points.size() == 4);
    REQUIRE(points[0].picard_iters == 0);
    for (int i = 1; i < 4; ++i) {
        REQUIRE(points[i].picard_iters >= 2);
        REQUIRE(points[i].converged);
    }
    // backward method on y' = -y: each step divides by (1 + h)
    REQUIRE(near(points[3].y.at(0, 1), cplx(1.0 / (1.1 * 1.1 * 1.1)), 1e-10));
}

TEST_CASE("contraction step bounds") {
    auto ie = catalog("mork-implicit-euler");
    REQUIRE(safe_step_bound(ie, 2, 2.0, StepBoundMode::Global) == Catch::Approx(0.5));
    // L C = 0.5 < 1: the n-th root term dominates
    REQUIRE(safe_step_bound(ie, 2, 0.5, StepBoundMode::Global) ==
            Catch::Approx(std::pow(0.5, -0.5)));

    auto im = catalog("mork-implicit-midpoint");
    auto implan = computation_plan(im, 2);
    REQUIRE(safe_step_bound(im, 2, 4.0, StepBoundMode::PerBlock, &implan) ==
            Catch::Approx(0.5));

    // fully explicit methods are unconstrained per block
    auto m4 = catalog("mork4");
    auto plan4 = computation_plan(m4, 4);
    REQUIRE(std::isinf(safe_step_bound(m4, 4, 10.0, StepBoundMode::PerBlock, &plan4)));

    REQUIRE_THROWS_AS(safe_step_bound(ie, 2, -1.0, StepBoundMode::Global),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(safe_step_bound(ie, 2, 1.0, StepBoundMode::PerBlock, nullptr),
                      std::invalid_argument);
}

TEST_CASE("step shape mismatches are rejected up front") {
    auto m = catalog("mork-euler");
    auto plan = computation_plan(m, 2);
    auto ivp = confluent_linear_ivp(2, cplx(1.0), 0.0, {cplx(1.0), cplx(0.0)});
    auto short_jet = jet1({cplx(1.0)});
    REQUIRE_THROWS_AS(mork_step(m, plan, ivp, 0.0, short_jet, 0.1), std::invalid_argument);
    auto plan1 = computation_plan(m, 1);
    auto good_jet = jet1({cplx(1.0), cplx(0.0)});
    REQUIRE_THROWS_AS(mork_step(m, plan1, ivp, 0.0, good_jet, 0.1), std::invalid_argument);
}
