#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include <mork/graph.hpp>
#include <mork/methods.hpp>

using namespace mork;

namespace {

// transitive closure by Floyd-Warshall; closure[i][j] = path i -> j (length >= 1)
std::vector<std::vector<char>> brute_closure(const Digraph& g) {
    int s = g.size();
    std::vector<std::vector<char>> r(s, std::vector<char>(s, 0));
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) r[i][j] = g.arc(i, j);
    for (int k = 0; k < s; ++k)
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j)
                if (r[i][k] && r[k][j]) r[i][j] = 1;
    return r;
}

// mutual-reachability partition, canonically sorted
std::vector<std::vector<int>> brute_scc(const Digraph& g) {
    auto r = brute_closure(g);
    int s = g.size();
    std::vector<char> placed(s, 0);
    std::vector<std::vector<int>> parts;
    for (int i = 0; i < s; ++i) {
        if (placed[i]) continue;
        std::vector<int> comp{i};
        placed[i] = 1;
        for (int j = i + 1; j < s; ++j)
            if (!placed[j] && r[i][j] && r[j][i]) {
                comp.push_back(j);
                placed[j] = 1;
            }
        parts.push_back(std::move(comp));
    }
    return parts;
}

std::vector<std::vector<int>> canonical(std::vector<std::vector<int>> parts) {
    for (auto& p : parts) std::sort(p.begin(), p.end());
    std::sort(parts.begin(), parts.end());
    return parts;
}

Digraph random_digraph(std::mt19937& rng, int max_v) {
    std::uniform_int_distribution<int> nv(1, max_v);
    int v = nv(rng);
    Digraph g(v);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double p = 0.1 + 0.5 * u(rng);
    for (int i = 0; i < v; ++i)
        for (int j = 0; j < v; ++j)
            if (u(rng) < p) g.add_arc(i, j);
    return g;
}

}  // namespace

TEST_CASE("digraph arc bookkeeping") {
    Digraph g(3);
    g.add_arc(0, 2);
    g.add_arc(2, 2);
    REQUIRE(g.arc(0, 2));
    REQUIRE(g.arc(2, 2));
    REQUIRE_FALSE(g.arc(2, 0));
    REQUIRE(g.adj[2][0] == 1);  // stored as adj[to][from]
}

TEST_CASE("weight digraph of the trapezoidal methods") {
    auto m = catalog("mork-crank-nicolson");
    Digraph g = build_weight_digraph(m, 2);
    REQUIRE(g.size() == 3);
    // stage 2 couples to itself and to stage 1; stage 1 feeds everything
    REQUIRE(g.arc(0, 1));
    REQUIRE(g.arc(1, 1));
    REQUIRE(g.arc(0, 2));
    REQUIRE(g.arc(1, 2));
    REQUIRE_FALSE(g.arc(1, 0));
    REQUIRE_FALSE(g.arc(2, 0));  // final stage feeds nothing
    REQUIRE_THROWS_AS(build_weight_digraph(m, 0), std::invalid_argument);
}

TEST_CASE("path-based scc matches mutual reachability") {
    std::mt19937 rng(0xC0FFEE);
    for (int trial = 0; trial < 200; ++trial) {
        Digraph g = random_digraph(rng, 8);
        auto got = canonical(gabow_scc(g));
        auto want = canonical(brute_scc(g));
        REQUIRE(got == want);
    }
}

TEST_CASE("scc output order is deterministic") {
    Digraph g(4);
    g.add_arc(0, 1);
    g.add_arc(1, 0);
    g.add_arc(2, 3);
    auto a = gabow_scc(g);
    auto b = gabow_scc(g);
    REQUIRE(a == b);
}

TEST_CASE("topological sort puts every arc forward") {
    std::mt19937 rng(0xDA6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        int v = 2 + static_cast<int>(u(rng) * 7);
        // random DAG: arcs only from lower to higher labels, then relabel
        std::vector<int> label(v);
        for (int i = 0; i < v; ++i) label[i] = i;
        std::shuffle(label.begin(), label.end(), rng);
        Digraph g(v);
        std::vector<std::pair<int, int>> arcs;
        for (int i = 0; i < v; ++i)
            for (int j = i + 1; j < v; ++j)
                if (u(rng) < 0.4) {
                    g.add_arc(label[i], label[j]);
                    arcs.emplace_back(label[i], label[j]);
                }
        auto order = topological_sort(g);
        std::vector<int> pos(v);
        for (int i = 0; i < v; ++i) pos[order[i]] = i;
        for (auto [from, to] : arcs) REQUIRE(pos[from] < pos[to]);
    }
}

TEST_CASE("topological sort rejects cycles") {
    Digraph g(2);
    g.add_arc(0, 1);
    g.add_arc(1, 0);
    REQUIRE_THROWS_AS(topological_sort(g), std::invalid_argument);
}

TEST_CASE("contraction collapses components") {
    Digraph g(4);
    g.add_arc(0, 1);
    g.add_arc(1, 0);
    g.add_arc(1, 2);
    g.add_arc(3, 2);
    Digraph c = contract_graph(g, {{0, 1}, {2}, {3}});
    REQUIRE(c.size() == 3);
    REQUIRE(c.arc(0, 1));
    REQUIRE(c.arc(2, 1));
    REQUIRE_FALSE(c.arc(0, 0));  // intra-component arcs vanish
}

TEST_CASE("classical four-stage method plans as five explicit blocks") {
    auto m = rk_as_gmork(rk_catalog("rk4"));
    auto plan = computation_plan(m, 1);
    REQUIRE(plan.blocks.size() == 5);
    std::vector<int> expect{0, 1, 2, 3, 4};
    for (size_t i = 0; i < plan.blocks.size(); ++i) {
        REQUIRE_FALSE(plan.blocks[i].implicit);
        REQUIRE(plan.blocks[i].stages == std::vector<int>{expect[i]});
    }
    // chain of singleton costs: priorities count the remaining blocks
    REQUIRE(plan.priorities == std::vector<int>{5, 4, 3, 2, 1});
}

TEST_CASE("implicit midpoint couples every rank of its stage") {
    auto m = catalog("mork-implicit-midpoint");
    auto plan = computation_plan(m, 2);
    REQUIRE(plan.blocks.size() == 2);
    REQUIRE(plan.blocks[0].implicit);
    REQUIRE(plan.blocks[0].stages == std::vector<int>{0});
    REQUIRE(plan.blocks[0].complement.empty());
    REQUIRE_FALSE(plan.blocks[1].implicit);
    REQUIRE(plan.implicit_ranks[0][0] == 1);
    REQUIRE(plan.implicit_ranks[1][0] == 1);
    REQUIRE(plan.implicit_ranks[0][1] == 0);
}

TEST_CASE("trapezoidal plan interleaves explicit and implicit blocks") {
    auto m = catalog("mork-crank-nicolson");
    auto plan = computation_plan(m, 2);
    REQUIRE(plan.blocks.size() == 3);
    REQUIRE_FALSE(plan.blocks[0].implicit);
    REQUIRE(plan.blocks[1].implicit);
    REQUIRE(plan.blocks[1].stages == std::vector<int>{1});
    REQUIRE(plan.blocks[1].complement == std::vector<int>{0});
    REQUIRE_FALSE(plan.blocks[2].implicit);
    REQUIRE(plan.priorities == std::vector<int>{22, 21, 1});
}

TEST_CASE("stage report snapshot") {
    auto m = catalog("mork-crank-nicolson");
    std::string expect =
        "stages: 3\n"
        "arcs:\n"
        "1 -> 2\n"
        "1 -> 3\n"
        "2 -> 2\n"
        "2 -> 3\n"
        "blocks:\n"
        "block 1: {1} explicit\n"
        "block 2: {2} implicit\n"
        "block 3: {3} explicit\n"
        "implicit ranks:\n"
        "rank 1: {2}\n"
        "rank 2: {2}\n"
        "priorities:\n"
        "block 1: 22\n"
        "block 2: 21\n"
        "block 3: 1\n";
    REQUIRE(graph_report(m, 2) == expect);
}

TEST_CASE("stages that never reach the output are flagged") {
    // embed midpoint in a 3-stage tableau whose stage 3 feeds nothing
    auto mid = catalog("mork-midpoint");
    auto base = mid.main_weights;
    auto m = node_determined({0.0, 0.5, 0.77}, 3, [base](int N) {
        Mat w = base(N);
        Mat out(4, std::vector<double>(3, 0.0));
        for (int j = 0; j < 2; ++j)
            for (int j1 = 0; j1 < 2; ++j1) out[j][j1] = w[j][j1];
        out[2] = {0.3, 0.4, 0.0};  // the useless stage may read others
        for (int j1 = 0; j1 < 2; ++j1) out[3][j1] = w[2][j1];
        return out;
    });
    REQUIRE(useful_stages(m, 3) == std::vector<int>{0, 1});
    REQUIRE(useful_stages(catalog("mork4"), 4) == std::vector<int>{0, 1, 2, 3});
}
