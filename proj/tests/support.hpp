#pragma once

// Shared helpers and independent oracles for the test suite.  The oracles
// deliberately use different algorithms from the library (matrix closure
// instead of DFS, exhaustive enumeration instead of incremental search) so
// that agreement is meaningful.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "pcd/graph.hpp"

namespace testsupport {

using pcd::Dag;
using pcd::MixedGraph;
using pcd::NodeId;

// -- random graphs ----------------------------------------------------------

// Random DAG: a uniformly shuffled node order, each unordered pair made an
// edge with probability `edge_prob`, oriented along the order.
inline Dag random_dag(std::mt19937_64& rng, int p, double edge_prob) {
    std::vector<NodeId> order(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) order[static_cast<size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> pos(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) pos[static_cast<size_t>(order[static_cast<size_t>(i)])] = i;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId a = 0; a < p; ++a)
        for (NodeId b = a + 1; b < p; ++b)
            if (unif(rng) < edge_prob) {
                if (pos[static_cast<size_t>(a)] < pos[static_cast<size_t>(b)])
                    edges.emplace_back(a, b);
                else
                    edges.emplace_back(b, a);
            }
    return Dag(p, edges);
}

// Random edge set (not necessarily acyclic) over ordered pairs.
inline std::vector<std::pair<NodeId, NodeId>> random_directed_edges(std::mt19937_64& rng, int p,
                                                                    double edge_prob) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId a = 0; a < p; ++a)
        for (NodeId b = 0; b < p; ++b)
            if (a != b && unif(rng) < edge_prob) edges.emplace_back(a, b);
    return edges;
}

// -- reachability oracle (boolean matrix closure) ---------------------------

// Transitive closure by repeated squaring of the boolean adjacency matrix.
inline std::vector<std::vector<char>> closure_oracle(int p,
                                                     const std::vector<std::pair<NodeId, NodeId>>& edges) {
    std::vector<std::vector<char>> r(static_cast<size_t>(p),
                                     std::vector<char>(static_cast<size_t>(p), 0));
    for (auto [u, v] : edges) r[static_cast<size_t>(u)][static_cast<size_t>(v)] = 1;
    for (int step = 1; step < p; step *= 2) {
        auto nxt = r;
        for (int i = 0; i < p; ++i)
            for (int k = 0; k < p; ++k)
                if (r[static_cast<size_t>(i)][static_cast<size_t>(k)])
                    for (int j = 0; j < p; ++j)
                        if (r[static_cast<size_t>(k)][static_cast<size_t>(j)])
                            nxt[static_cast<size_t>(i)][static_cast<size_t>(j)] = 1;
        r = nxt;
    }
    return r;
}

inline bool cyclic_by_closure(int p, const std::vector<std::pair<NodeId, NodeId>>& edges) {
    auto r = closure_oracle(p, edges);
    for (int v = 0; v < p; ++v)
        if (r[static_cast<size_t>(v)][static_cast<size_t>(v)]) return true;
    return false;
}

// -- exhaustive DAG enumeration ---------------------------------------------

// Every labeled DAG on p nodes (use only for p <= 5).  Each unordered pair is
// assigned none / lo->hi / hi->lo and cyclic results are discarded.
inline std::vector<Dag> all_dags(int p) {
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (NodeId a = 0; a < p; ++a)
        for (NodeId b = a + 1; b < p; ++b) pairs.emplace_back(a, b);
    std::vector<Dag> out;
    std::vector<int> state(pairs.size(), 0);
    while (true) {
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (size_t i = 0; i < pairs.size(); ++i) {
            if (state[i] == 1) edges.push_back(pairs[i]);
            if (state[i] == 2) edges.emplace_back(pairs[i].second, pairs[i].first);
        }
        if (!cyclic_by_closure(p, edges)) out.emplace_back(p, edges);
        size_t i = 0;
        while (i < state.size() && state[i] == 2) state[i++] = 0;
        if (i == state.size()) break;
        ++state[i];
    }
    return out;
}

// Key identifying a Markov equivalence class: (skeleton, unshielded colliders).
using MecKey = std::pair<std::vector<std::pair<NodeId, NodeId>>, std::vector<std::tuple<NodeId, NodeId, NodeId>>>;

inline MecKey mec_key(const Dag& g) {
    std::vector<std::pair<NodeId, NodeId>> skel;
    for (auto [u, v] : g.edges()) skel.emplace_back(std::min(u, v), std::max(u, v));
    std::sort(skel.begin(), skel.end());
    std::vector<std::tuple<NodeId, NodeId, NodeId>> vs;
    for (const auto& c : pcd::unshielded_colliders(g)) vs.emplace_back(c.u, c.v, c.w);
    return {skel, vs};
}

// Union-over-MEC CPDAG oracle: given all DAGs of the class, an edge is
// directed u->v iff every member orients it u->v, otherwise undirected.
inline MixedGraph cpdag_union_oracle(const std::vector<Dag>& mec_members) {
    const Dag& rep = mec_members.front();
    MixedGraph out(rep.p());
    for (auto [u, v] : rep.edges()) {
        bool always_uv = true, always_vu = true;
        for (const Dag& m : mec_members) {
            if (!m.has_edge(u, v)) always_uv = false;
            if (!m.has_edge(v, u)) always_vu = false;
        }
        NodeId lo = std::min(u, v), hi = std::max(u, v);
        if (always_uv)
            out.add_edge(u, v, pcd::Mark::Tail, pcd::Mark::Arrow);
        else if (always_vu)
            out.add_edge(v, u, pcd::Mark::Tail, pcd::Mark::Arrow);
        else
            out.add_edge(lo, hi, pcd::Mark::Tail, pcd::Mark::Tail);
    }
    return out;
}

// -- d-separation oracle ----------------------------------------------------

// Moralized-ancestral-graph reading: x and y are d-separated by Z iff they
// are disconnected after (1) restricting to ancestors of {x,y} u Z,
// (2) marrying parents, (3) dropping directions and removing Z.
inline bool d_separated(const Dag& g, NodeId x, NodeId y, const std::vector<NodeId>& z) {
    int p = g.p();
    std::vector<char> in_a(static_cast<size_t>(p), 0);
    std::vector<NodeId> stack{x, y};
    for (NodeId s : z) stack.push_back(s);
    for (NodeId s : stack) in_a[static_cast<size_t>(s)] = 1;
    while (!stack.empty()) {
        NodeId v = stack.back();
        stack.pop_back();
        for (NodeId pa : g.parents(v))
            if (!in_a[static_cast<size_t>(pa)]) {
                in_a[static_cast<size_t>(pa)] = 1;
                stack.push_back(pa);
            }
    }
    std::vector<std::set<NodeId>> undir(static_cast<size_t>(p));
    auto link = [&](NodeId a, NodeId b) {
        undir[static_cast<size_t>(a)].insert(b);
        undir[static_cast<size_t>(b)].insert(a);
    };
    for (NodeId v = 0; v < p; ++v) {
        if (!in_a[static_cast<size_t>(v)]) continue;
        const auto& pas = g.parents(v);
        for (NodeId pa : pas) link(pa, v);
        for (size_t i = 0; i < pas.size(); ++i)
            for (size_t j = i + 1; j < pas.size(); ++j) link(pas[i], pas[j]);
    }
    std::vector<char> blocked(static_cast<size_t>(p), 0);
    for (NodeId s : z) blocked[static_cast<size_t>(s)] = 1;
    if (blocked[static_cast<size_t>(x)] || blocked[static_cast<size_t>(y)]) return true;
    std::vector<char> seen(static_cast<size_t>(p), 0);
    seen[static_cast<size_t>(x)] = 1;
    std::vector<NodeId> bfs{x};
    while (!bfs.empty()) {
        NodeId v = bfs.back();
        bfs.pop_back();
        if (v == y) return false;
        for (NodeId w : undir[static_cast<size_t>(v)])
            if (!seen[static_cast<size_t>(w)] && !blocked[static_cast<size_t>(w)]) {
                seen[static_cast<size_t>(w)] = 1;
                bfs.push_back(w);
            }
    }
    return true;
}

// -- simple path enumeration ------------------------------------------------

// Every simple path from u to v in the skeleton of a DAG, as node sequences.
inline std::vector<std::vector<NodeId>> all_simple_paths(const Dag& g, NodeId u, NodeId v) {
    int p = g.p();
    std::vector<std::vector<NodeId>> adj(static_cast<size_t>(p));
    for (auto [a, b] : g.edges()) {
        adj[static_cast<size_t>(a)].push_back(b);
        adj[static_cast<size_t>(b)].push_back(a);
    }
    for (auto& xs : adj) std::sort(xs.begin(), xs.end());
    std::vector<std::vector<NodeId>> out;
    std::vector<NodeId> path{u};
    std::vector<char> used(static_cast<size_t>(p), 0);
    used[static_cast<size_t>(u)] = 1;
    struct Frame {
        NodeId node;
        size_t idx;
    };
    std::vector<Frame> stack{{u, 0}};
    while (!stack.empty()) {
        auto& top = stack.back();
        const auto& ns = adj[static_cast<size_t>(top.node)];
        if (top.idx == ns.size()) {
            used[static_cast<size_t>(top.node)] = 0;
            path.pop_back();
            stack.pop_back();
            continue;
        }
        NodeId nxt = ns[top.idx++];
        if (used[static_cast<size_t>(nxt)]) continue;
        if (nxt == v) {
            auto full = path;
            full.push_back(v);
            out.push_back(full);
            continue;
        }
        used[static_cast<size_t>(nxt)] = 1;
        path.push_back(nxt);
        stack.push_back({nxt, 0});
    }
    return out;
}

}  // namespace testsupport
