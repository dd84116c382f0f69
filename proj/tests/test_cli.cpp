// End-to-end checks of the command-line tool: exit codes, CSV shape, and
// byte-level determinism.  The binary path is injected by the build as
// MORK_CLI_PATH.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef MORK_CLI_PATH
#error "MORK_CLI_PATH must point at the built CLI binary"
#endif

namespace {

int run_cli(const std::string& args, const std::string& stdout_file = "") {
    std::string cmd = std::string(MORK_CLI_PATH) + " " + args;
    cmd += stdout_file.empty() ? " >/dev/null" : (" >" + stdout_file);
    cmd += " 2>/dev/null";
    int raw = std::system(cmd.c_str());
#ifdef _WIN32
    return raw;
#else
    return WEXITSTATUS(raw);
#endif
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli("") == 2);                                   // subcommand required
    CHECK(run_cli("order-sweep") == 2);                        // --method required
    CHECK(run_cli("order-sweep --method no-such-method") == 2);
    CHECK(run_cli("order-sweep --method mork-euler --h-count 1") == 2);
    CHECK(run_cli("order-sweep --method mork-euler --order 0") == 2);
    CHECK(run_cli("stability-scan --method rk-euler --notion bogus") == 2);
    CHECK(run_cli("stability-scan --method rk-euler --notion half-line") == 2);
    // y0 must provide one entry per rank
    CHECK(run_cli("trajectory --method mork-euler --order 2 --y0 1.0") == 2);
}

TEST_CASE("order-sweep CSV has per-rank rows and slope footer") {
    const std::string out = "cli_sweep.csv";
    int rc = run_cli(
        "order-sweep --method mork-midpoint --order 2 --lambda-re -0.5 --lambda-im 1.0 "
        "--h-min 1e-3 --h-max 1e-1 --h-count 20 --out " + out);
    REQUIRE(rc == 0);
    auto ls = lines_of(slurp(out));
    REQUIRE(ls.size() == 1 + 20 * 2 + 2);  // header, 20 h x 2 ranks, 2 slope rows
    CHECK(ls[0] == "h,rank,abs_error");
    // data rows alternate rank 1 / rank 2 for each h
    CHECK(ls[1].find(",1,") != std::string::npos);
    CHECK(ls[2].find(",2,") != std::string::npos);
    // footer: slope per rank.  Rank 1 is the order-3 quadrature; rank 2 is
    // held at 4 by the O(h^2) stage error feeding the rank-2 row.
    auto tail1 = ls[ls.size() - 2], tail2 = ls[ls.size() - 1];
    REQUIRE(tail1.rfind("slope,1,", 0) == 0);
    REQUIRE(tail2.rfind("slope,2,", 0) == 0);
    double s1 = std::strtod(tail1.c_str() + 8, nullptr);
    double s2 = std::strtod(tail2.c_str() + 8, nullptr);
    CHECK(s1 == Catch::Approx(3.0).margin(0.2));
    CHECK(s2 == Catch::Approx(4.0).margin(0.2));
    // no CR anywhere: LF-only output
    CHECK(slurp(out).find('\r') == std::string::npos);
    std::remove(out.c_str());
}

TEST_CASE("order-sweep --rank restricts the output") {
    const std::string out = "cli_sweep_rank.csv";
    int rc = run_cli(
        "order-sweep --method mork-euler --order 3 --lambda-re -1.0 --rank 2 "
        "--h-count 5 --out " + out);
    REQUIRE(rc == 0);
    auto ls = lines_of(slurp(out));
    REQUIRE(ls.size() == 1 + 5 + 1);
    for (size_t i = 1; i + 1 < ls.size(); ++i)
        CHECK(ls[i].find(",2,") != std::string::npos);
    CHECK(ls.back().rfind("slope,2,", 0) == 0);
    std::remove(out.c_str());
}

TEST_CASE("trajectory rows, exit code, and convergence flags") {
    const std::string out = "cli_traj.csv";
    SECTION("zero steps emits just the initial point") {
        int rc = run_cli(
            "trajectory --method rk4 --order 1 --lambda-re -1.0 --steps 0 --out " + out);
        REQUIRE(rc == 0);
        auto ls = lines_of(slurp(out));
        REQUIRE(ls.size() == 2);
        CHECK(ls[0] ==
              "t,y_r1_re,y_r1_im,exact_r1_re,exact_r1_im,abs_error_r1,picard_iters,converged");
    }
    SECTION("default run: 31 points, every step converged") {
        int rc = run_cli(
            "trajectory --method mork-midpoint --order 2 --lambda-re -0.3 --lambda-im 0.4 "
            "--h 0.05 --out " + out);
        REQUIRE(rc == 0);
        auto ls = lines_of(slurp(out));
        REQUIRE(ls.size() == 1 + 31);  // default --steps 30 plus the initial point
        for (size_t i = 1; i < ls.size(); ++i) {
            CHECK(ls[i].size() >= 2);
            CHECK(ls[i].substr(ls[i].size() - 2) == ",1");
        }
    }
    std::remove(out.c_str());
}

TEST_CASE("stability-scan exit codes track the verdict") {
    const std::string out = "cli_stab.csv";
    // implicit Euler: no violation on the absolute-stability grid
    CHECK(run_cli("stability-scan --method mork-implicit-euler --order 1 --notion a --out " +
                  out) == 0);
    // explicit Euler: the scan finds growth in the left half-plane
    CHECK(run_cli("stability-scan --method mork-euler --order 1 --notion a --out " + out) == 1);
    // decay probe along large negative real arguments
    CHECK(run_cli("stability-scan --method mork-implicit-euler --order 1 --notion l --out " +
                  out) == 0);
    auto head = lines_of(slurp(out));
    REQUIRE(!head.empty());
    CHECK(head[0].rfind("z1_re,z1_im", 0) == 0);
    std::remove(out.c_str());
}

TEST_CASE("graph-report prints the block structure") {
    const std::string out = "cli_graph.txt";
    REQUIRE(run_cli("graph-report --method rk4 --order 1 --out " + out) == 0);
    std::string rep = slurp(out);
    CHECK(rep.find("stages: 5") != std::string::npos);
    CHECK(rep.find("block 5: {5} explicit") != std::string::npos);
    CHECK(rep.find("} implicit") == std::string::npos);
    CHECK(rep.find("implicit ranks:\nnone") != std::string::npos);
    std::remove(out.c_str());
}

TEST_CASE("identical invocations produce byte-identical files") {
    const std::string args =
        "order-sweep --method mork4b --order 4 --lambda-re -0.5 --lambda-im 1.0 "
        "--h-min 1e-3 --h-max 1e-1 --h-count 12 --out ";
    REQUIRE(run_cli(args + "cli_det_a.csv") == 0);
    REQUIRE(run_cli(args + "cli_det_b.csv") == 0);
    CHECK(slurp("cli_det_a.csv") == slurp("cli_det_b.csv"));
    std::remove("cli_det_a.csv");
    std::remove("cli_det_b.csv");

    const std::string scan =
        "stability-scan --method mork-heun --order 2 --notion a --seed 77 --out ";
    int rc1 = run_cli(scan + "cli_det_c.csv");
    int rc2 = run_cli(scan + "cli_det_d.csv");
    CHECK(rc1 == rc2);
    CHECK(slurp("cli_det_c.csv") == slurp("cli_det_d.csv"));
    std::remove("cli_det_c.csv");
    std::remove("cli_det_d.csv");
}
