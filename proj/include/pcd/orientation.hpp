#pragma once

#include <optional>
#include <vector>

#include "pcd/graph.hpp"

namespace pcd {

namespace detail {

/**
 * Meek rule 1:  (z -> x - y)  =>  (x -> y)
 *
 * Assume x - y.  Condition: exists z with
 *  1. z -> x
 *  2. z not adjacent to y
 */
inline bool meek_rule_1(const MixedGraph& g, NodeId x, NodeId y) {
    for (NodeId z : g.neighbors(x))
        if (g.has_directed(z, x) && !g.adjacent(z, y)) return true;
    return false;
}

/**
 * Meek rule 2:  (x -> z -> y) and (x - y)  =>  (x -> y)
 */
inline bool meek_rule_2(const MixedGraph& g, NodeId x, NodeId y) {
    for (NodeId z : g.neighbors(x))
        if (g.has_directed(x, z) && g.has_directed(z, y)) return true;
    return false;
}

/**
 * Meek rule 3:  (x - z -> y) and (x - w -> y) and (x - y)  =>  (x -> y)
 *
 * Assume x - y.  Condition: exists z != w with
 *  1. z - x and w - x
 *  2. z -> y and w -> y
 *  3. z, w not adjacent
 */
inline bool meek_rule_3(const MixedGraph& g, NodeId x, NodeId y) {
    std::vector<NodeId> cands;
    for (NodeId z : g.neighbors(x))
        if (g.has_undirected(x, z) && g.has_directed(z, y)) cands.push_back(z);
    for (size_t a = 0; a < cands.size(); ++a)
        for (size_t b = a + 1; b < cands.size(); ++b)
            if (!g.adjacent(cands[a], cands[b])) return true;
    return false;
}

/**
 * Meek rule 4:  (w - x - y) and (w -> z -> y) and (w - y)  =>  (x -> y)
 *
 * Assume x - y.  Condition: exists (z, w) with
 *  1. w - x and w - y
 *  2. w -> z and z -> y
 *  3. z, x not adjacent
 */
inline bool meek_rule_4(const MixedGraph& g, NodeId x, NodeId y) {
    for (NodeId w : g.neighbors(x)) {
        if (!g.has_undirected(w, x) || !g.has_undirected(w, y)) continue;
        for (NodeId z : g.neighbors(w))
            if (g.has_directed(w, z) && g.has_directed(z, y) && !g.adjacent(z, x)) return true;
    }
    return false;
}

inline bool meek_oriented(const MixedGraph& g, NodeId x, NodeId y) {
    return meek_rule_1(g, x, y) || meek_rule_2(g, x, y) || meek_rule_3(g, x, y) ||
           meek_rule_4(g, x, y);
}

}  // namespace detail

/**
 * Apply Meek rules 1-4 to a fixpoint, turning undirected edges into directed
 * ones where the rules demand it.  Circle-marked and bidirected edges never
 * trigger a rule and are never re-oriented.  Deterministic: edges are swept
 * in canonical order and each sweep tries (u,v) before (v,u).
 */
inline void apply_meek_closure(MixedGraph& g) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& e : g.edges()) {
            if (!(e.mark_u == Mark::Tail && e.mark_v == Mark::Tail)) continue;
            if (detail::meek_oriented(g, e.u, e.v)) {
                g.orient(e.u, e.v);
                changed = true;
            } else if (detail::meek_oriented(g, e.v, e.u)) {
                g.orient(e.v, e.u);
                changed = true;
            }
        }
    }
}

/**
 * CPDAG of a DAG: skeleton kept, unshielded colliders directed, every other
 * orientation forced by Meek rules; remaining edges undirected.
 */
inline MixedGraph cpdag_of_dag(const Dag& g) {
    MixedGraph out(g.p());
    for (auto [u, v] : g.edges()) out.add_undirected(std::min(u, v), std::max(u, v));
    for (const auto& c : unshielded_colliders(g)) {
        out.orient(c.u, c.v);
        out.orient(c.w, c.v);
    }
    apply_meek_closure(out);
    return out;
}

/**
 * Same-Markov-equivalence-class test: identical node count, identical
 * skeleton and identical unshielded colliders (compared by Arrow marks, so
 * circle-ended and bidirected edges can witness colliders too).
 */
inline bool mec_equivalent(const MixedGraph& a, const MixedGraph& b) {
    if (a.p() != b.p())
        throw std::invalid_argument("mec_equivalent: node counts differ (" + std::to_string(a.p()) +
                                    " vs " + std::to_string(b.p()) + ")");
    if (a.skeleton() != b.skeleton()) return false;
    return unshielded_colliders(a) == unshielded_colliders(b);
}

/**
 * Consistent extension of a partially directed graph into a DAG with the same
 * skeleton, keeping every directed edge and creating no new unshielded
 * collider.  Returns nullopt if no such extension exists.  Circle marks are
 * not supported here; the input must use Tail/Arrow marks only.
 *
 * Classic sink-elimination: repeatedly remove a node x that has no outgoing
 * directed edge and whose undirected neighbors are adjacent to every other
 * neighbor of x, orienting x's undirected edges toward x.
 */
inline std::optional<Dag> consistent_extension(const MixedGraph& g) {
    for (const auto& e : g.edges())
        if (e.mark_u == Mark::Circle || e.mark_v == Mark::Circle)
            throw std::invalid_argument("consistent_extension: circle marks unsupported");

    MixedGraph work = g;
    std::vector<std::pair<NodeId, NodeId>> oriented;  // final directed edges
    for (const auto& e : g.edges()) {
        if (e.mark_u == Mark::Tail && e.mark_v == Mark::Arrow) oriented.emplace_back(e.u, e.v);
        if (e.mark_u == Mark::Arrow && e.mark_v == Mark::Tail) oriented.emplace_back(e.v, e.u);
        if (e.mark_u == Mark::Arrow && e.mark_v == Mark::Arrow) return std::nullopt;
    }

    std::vector<char> removed(static_cast<size_t>(g.p()), 0);
    int remaining = g.p();
    while (remaining > 0) {
        NodeId pick = -1;
        for (NodeId x = 0; x < g.p() && pick < 0; ++x) {
            if (removed[static_cast<size_t>(x)]) continue;
            if (!work.directed_children(x).empty()) continue;
            bool ok = true;
            for (NodeId y : work.undirected_neighbors(x)) {
                for (NodeId z : work.neighbors(x)) {
                    if (z == y) continue;
                    if (!work.adjacent(y, z)) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) break;
            }
            if (ok) pick = x;
        }
        if (pick < 0) return std::nullopt;
        for (NodeId y : work.undirected_neighbors(pick)) oriented.emplace_back(y, pick);
        for (NodeId y : std::vector<NodeId>(work.neighbors(pick)))
            work.remove_edge(pick, y);
        removed[static_cast<size_t>(pick)] = 1;
        --remaining;
    }
    return Dag(g.p(), oriented);
}

}  // namespace pcd
