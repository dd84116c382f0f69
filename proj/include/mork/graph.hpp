#ifndef MORK_GRAPH_HPP
#define MORK_GRAPH_HPP

// Stage-dependency analysis.  The weight digraph of a method has an arc
// j' -> j whenever some rank's main weight w_{N,j,j'} is nonzero; its
// strongly connected components decide which stages must be solved
// together (implicitly) and in which order the blocks can be computed.

#include <stdexcept>
#include <string>
#include <vector>

#include "mork/core.hpp"

namespace mork {

// Adjacency is stored as in the reference pseudocode: adj[j][j1] is true
// iff there is an arc into j from j1.
struct Digraph {
    std::vector<std::vector<char>> adj;

    Digraph() = default;
    explicit Digraph(int v) : adj(v, std::vector<char>(v, 0)) {}

    int size() const { return static_cast<int>(adj.size()); }
    bool arc(int from, int to) const { return adj[to][from] != 0; }
    void add_arc(int from, int to) { adj[to][from] = 1; }

    bool operator==(const Digraph&) const = default;
};

namespace detail {
inline bool weight_nonzero(double w, double tol) {
    // tableau weights are constructed, not computed, so the default test is
    // exact; a tolerance can be supplied for user-entered tableaus.
    return tol == 0.0 ? w != 0.0 : (w > tol || w < -tol);
}
}  // namespace detail

// Maximum weight digraph up to length n: (s+1) vertices, arc j1 -> j iff
// w_{N,j,j1} != 0 for some N <= n.  The final stage never feeds another
// stage, so its column stays empty.
inline Digraph build_weight_digraph(const MethodTableau& m, int n, double tol = 0.0) {
    if (n < 1) throw std::invalid_argument("build_weight_digraph: n must be >= 1");
    Digraph g(m.s + 1);
    for (int N = 1; N <= n; ++N) {
        const Mat& wN = m.w(N);
        for (int j = 0; j <= m.s; ++j)
            for (int j1 = 0; j1 < m.s; ++j1)
                if (detail::weight_nonzero(wN[j][j1], tol)) g.adj[j][j1] = 1;
    }
    return g;
}

// Gabow's path-based SCC algorithm, iterative.  Each vertex moves through
// NotVisited -> InPath(position on the S stack) -> InSCC(component id); B
// holds the boundaries of the open blocks.  Roots and neighbours are
// explored in ascending index order so the output is deterministic.
inline std::vector<std::vector<int>> gabow_scc(const Digraph& g) {
    const int s = g.size();
    if (s == 0) return {};

    enum class Tag { NotVisited, InPath, InScc };
    struct NodeState {
        Tag tag = Tag::NotVisited;
        int index = 0;  // S-position while InPath, component id once InScc
    };
    std::vector<NodeState> state(s);
    std::vector<int> S, B, path;
    std::vector<std::vector<int>> tree;  // DFS stack of pending neighbour lists
    {
        std::vector<int> roots(s);
        for (int i = 0; i < s; ++i) roots[i] = s - 1 - i;  // popped back-to-front
        tree.push_back(std::move(roots));
    }
    int scc_count = 0;

    while (!tree.empty()) {
        if (!tree.back().empty()) {
            int j = tree.back().back();
            tree.back().pop_back();
            switch (state[j].tag) {
                case Tag::NotVisited: {
                    path.push_back(j);
                    S.push_back(j);
                    state[j] = {Tag::InPath, static_cast<int>(S.size()) - 1};
                    B.push_back(static_cast<int>(S.size()) - 1);
                    std::vector<int> neighbours;
                    for (int j1 = s - 1; j1 >= 0; --j1)
                        if (g.adj[j][j1]) neighbours.push_back(j1);
                    tree.push_back(std::move(neighbours));
                    break;
                }
                case Tag::InPath:
                    // back-arc into the open path: merge blocks down to j's
                    while (state[j].index < B.back()) B.pop_back();
                    break;
                case Tag::InScc:
                    break;
            }
        } else {
            tree.pop_back();
            if (!path.empty()) {
                int j = path.back();
                path.pop_back();
                int k1 = state[j].index;
                if (!B.empty() && k1 == B.back()) {
                    // j is the root of its block: everything above it on S
                    // is one strongly connected component.
                    B.pop_back();
                    while (static_cast<int>(S.size()) > k1) {
                        state[S.back()] = {Tag::InScc, scc_count};
                        S.pop_back();
                    }
                    ++scc_count;
                }
            }
        }
    }

    std::vector<std::vector<int>> scc(scc_count);
    for (int j = 0; j < s; ++j) scc[state[j].index].push_back(j);
    return scc;
}

// Contraction of a digraph by a partition of its vertices, loops removed.
inline Digraph contract_graph(const Digraph& g, const std::vector<std::vector<int>>& partition) {
    const int s = g.size();
    const int p = static_cast<int>(partition.size());
    std::vector<int> inverse_map(s, 0);
    for (int i = 0; i < p; ++i)
        for (int j : partition[i]) inverse_map[j] = i;
    Digraph contracted(p);
    for (int j1 = 0; j1 < s; ++j1)
        for (int j2 = 0; j2 < s; ++j2) {
            int p1 = inverse_map[j1], p2 = inverse_map[j2];
            if (p1 != p2 && g.adj[j1][j2]) contracted.adj[p1][p2] = 1;
        }
    return contracted;
}

// Kahn's source-removal topological sort; ties between simultaneous sources
// are broken by smallest index so the order is deterministic.  A vertex is
// a source when its row holds no arc from a surviving vertex.
inline std::vector<int> topological_sort(const Digraph& dag) {
    const int s = dag.size();
    std::vector<char> removed(s, 0);
    std::vector<int> order;
    order.reserve(s);
    for (int emitted = 0; emitted < s; ++emitted) {
        int node = -1;
        for (int j = 0; j < s && node < 0; ++j) {
            if (removed[j]) continue;
            bool source = true;
            for (int j1 = 0; j1 < s && source; ++j1)
                if (!removed[j1] && dag.adj[j][j1]) source = false;
            if (source) node = j;
        }
        if (node < 0) throw std::invalid_argument("topological_sort: digraph has a cycle");
        removed[node] = 1;
        order.push_back(node);
    }
    return order;
}

// One block of a computation plan: a single explicit stage, or a set of
// mutually dependent stages that must be solved together.  For implicit
// blocks `complement` lists the evaluation stages outside the block (their
// contributions are constants of the fixed-point problem).
struct SccBlock {
    bool implicit = false;
    std::vector<int> stages;
    std::vector<int> complement;
};

struct ComputationPlan {
    std::vector<SccBlock> blocks;                   // in execution order
    std::vector<std::vector<char>> implicit_ranks;  // [N-1][j]
    std::vector<int> priorities;                    // per block, scheduling weight
};

// Longest-path-to-sink priorities on an acyclic block digraph; each block's
// own cost is included.  Computed by relaxation in reverse topological
// order (the negated-weight shortest-path construction lands on the same
// values).
inline std::vector<int> scc_priorities(const std::vector<int>& costs, const Digraph& dag) {
    const int s = dag.size();
    if (static_cast<int>(costs.size()) != s)
        throw std::invalid_argument("scc_priorities: one cost per vertex required");
    std::vector<int> order = topological_sort(dag);  // rejects cycles
    std::vector<int> priority(s, 0);
    for (int i = s - 1; i >= 0; --i) {
        int v = order[i];
        int best = 0;
        for (int u = 0; u < s; ++u)
            if (dag.adj[u][v] && priority[u] > best) best = priority[u];
        priority[v] = costs[v] + best;
    }
    return priority;
}

// Implicit-rank table: rank N is implicit at stage j iff j sits in an
// implicit block J and w_N couples j to some stage of J.
inline std::vector<std::vector<char>> implicit_rank_table(const MethodTableau& m,
                                                          const std::vector<SccBlock>& blocks,
                                                          int n, double tol = 0.0) {
    std::vector<std::vector<char>> ranks(n, std::vector<char>(m.s + 1, 0));
    for (int N = 1; N <= n; ++N) {
        const Mat& wN = m.w(N);
        for (const SccBlock& b : blocks) {
            if (!b.implicit) continue;
            for (int j : b.stages)
                for (int j1 : b.stages)
                    if (j1 < m.s && detail::weight_nonzero(wN[j][j1], tol)) {
                        ranks[N - 1][j] = 1;
                        break;
                    }
        }
    }
    return ranks;
}

// Blocks and priorities of a stage digraph: SCCs, contracted and
// topologically sorted; a block is explicit iff it is a singleton without
// a self-loop.  `s` is the evaluation stage count (the digraph has s+1
// vertices); implicit block costs estimate `picard_estimate` rhs
// evaluations per stage.  The implicit-rank table is left for the caller,
// since it depends on the weights per rank.
inline ComputationPlan plan_from_digraph(const Digraph& g, int s, int picard_estimate = 20) {
    auto scc = gabow_scc(g);
    Digraph contracted = contract_graph(g, scc);
    std::vector<int> order = topological_sort(contracted);

    ComputationPlan plan;
    plan.blocks.reserve(order.size());
    for (int idx : order) {
        const std::vector<int>& part = scc[idx];
        SccBlock b;
        if (part.size() == 1 && !g.adj[part[0]][part[0]]) {
            b.implicit = false;
            b.stages = part;
        } else {
            b.implicit = true;
            b.stages = part;
            std::vector<char> in_block(s + 1, 0);
            for (int j : part) in_block[j] = 1;
            for (int j = 0; j < s; ++j)
                if (!in_block[j]) b.complement.push_back(j);
        }
        plan.blocks.push_back(std::move(b));
    }

    // block digraph in plan order, for the priorities
    const int nb = static_cast<int>(order.size());
    Digraph block_dag(nb);
    for (int a = 0; a < nb; ++a)
        for (int bidx = 0; bidx < nb; ++bidx)
            block_dag.adj[a][bidx] = contracted.adj[order[a]][order[bidx]];
    std::vector<int> costs(nb);
    for (int bidx = 0; bidx < nb; ++bidx) {
        const SccBlock& b = plan.blocks[bidx];
        costs[bidx] = b.implicit ? picard_estimate * static_cast<int>(b.stages.size()) : 1;
    }
    plan.priorities = scc_priorities(costs, block_dag);
    return plan;
}

// Full stage-dependency analysis of a method at length n.
inline ComputationPlan computation_plan(const MethodTableau& m, int n, double tol = 0.0,
                                        int picard_estimate = 20) {
    Digraph g = build_weight_digraph(m, n, tol);
    ComputationPlan plan = plan_from_digraph(g, m.s, picard_estimate);
    plan.implicit_ranks = implicit_rank_table(m, plan.blocks, n, tol);
    return plan;
}

// Evaluation stages with a non-empty diwalk to the final stage; the rest
// never influence the output and can be removed.  Returned 0-based and
// ascending, final stage excluded.
inline std::vector<int> useful_stages(const MethodTableau& m, int n, double tol = 0.0) {
    Digraph g = build_weight_digraph(m, n, tol);
    const int s = m.s;
    std::vector<char> reach(s + 1, 0);
    std::vector<int> frontier{s};
    reach[s] = 1;
    while (!frontier.empty()) {
        int j = frontier.back();
        frontier.pop_back();
        for (int j1 = 0; j1 < s; ++j1)
            if (g.adj[j][j1] && !reach[j1]) {
                reach[j1] = 1;
                frontier.push_back(j1);
            }
    }
    std::vector<int> out;
    for (int j = 0; j < s; ++j)
        if (reach[j]) out.push_back(j);
    return out;
}

namespace detail {
inline std::string stage_set(const std::vector<int>& stages) {
    std::string out = "{";
    for (size_t i = 0; i < stages.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(stages[i] + 1);
    }
    out += "}";
    return out;
}
}  // namespace detail

// Human-readable dependency report (stages printed 1-based): arcs, the
// computation order with explicit/implicit classification, implicit ranks,
// and block priorities.
inline std::string graph_report(const MethodTableau& m, int n, double tol = 0.0,
                                int picard_estimate = 20) {
    Digraph g = build_weight_digraph(m, n, tol);
    ComputationPlan plan = computation_plan(m, n, tol, picard_estimate);
    std::string out;
    out += "stages: " + std::to_string(m.s + 1) + "\n";
    out += "arcs:\n";
    for (int j1 = 0; j1 <= m.s; ++j1)
        for (int j = 0; j <= m.s; ++j)
            if (g.adj[j][j1])
                out += std::to_string(j1 + 1) + " -> " + std::to_string(j + 1) + "\n";
    out += "blocks:\n";
    for (size_t k = 0; k < plan.blocks.size(); ++k) {
        const SccBlock& b = plan.blocks[k];
        out += "block " + std::to_string(k + 1) + ": " + detail::stage_set(b.stages) +
               (b.implicit ? " implicit" : " explicit") + "\n";
    }
    out += "implicit ranks:\n";
    bool any_implicit = false;
    for (int N = 1; N <= n; ++N) {
        std::vector<int> stages;
        for (int j = 0; j <= m.s; ++j)
            if (plan.implicit_ranks[N - 1][j]) stages.push_back(j);
        if (!stages.empty()) {
            any_implicit = true;
            out += "rank " + std::to_string(N) + ": " + detail::stage_set(stages) + "\n";
        }
    }
    if (!any_implicit) out += "none\n";
    out += "priorities:\n";
    for (size_t k = 0; k < plan.blocks.size(); ++k)
        out += "block " + std::to_string(k + 1) + ": " + std::to_string(plan.priorities[k]) + "\n";
    return out;
}

}  // namespace mork

#endif  // MORK_GRAPH_HPP
