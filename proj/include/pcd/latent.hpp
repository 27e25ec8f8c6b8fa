#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcd/graph.hpp"

namespace pcd {

// ---------------------------------------------------------------------------
// Subset: a non-empty sorted set of nodes of a host graph, with local ids
// 0..size-1 assigned in ascending member order.
// ---------------------------------------------------------------------------
class Subset {
  public:
    Subset(int host_p, std::vector<NodeId> members)
        : host_p_(detail::checked_node_count(host_p, "Subset")), members_(std::move(members)) {
        if (members_.empty()) throw std::invalid_argument("Subset: empty member list");
        std::sort(members_.begin(), members_.end());
        if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
            throw std::invalid_argument("Subset: duplicate member");
        for (NodeId v : members_) detail::check_node(v, host_p_, "Subset");
    }

    int host_p() const { return host_p_; }
    int size() const { return static_cast<int>(members_.size()); }
    const std::vector<NodeId>& members() const { return members_; }

    bool contains(NodeId global) const {
        return detail::sorted_contains(members_, global);
    }

    NodeId global_of(int local) const {
        if (local < 0 || local >= size())
            throw std::invalid_argument("Subset::global_of: local id " + std::to_string(local) +
                                        " out of range");
        return members_[static_cast<size_t>(local)];
    }

    int local_of(NodeId global) const {
        auto it = std::lower_bound(members_.begin(), members_.end(), global);
        if (it == members_.end() || *it != global)
            throw std::invalid_argument("Subset::local_of: node " + std::to_string(global) +
                                        " is not a member");
        return static_cast<int>(it - members_.begin());
    }

    bool operator==(const Subset&) const = default;

  private:
    int host_p_;
    std::vector<NodeId> members_;
};

struct InducingPathQuery {
    const Dag& g;
    const Subset& s;
    NodeId u, v;
};

/**
 * Inducing-path test relative to the observed set s.  True iff some simple
 * path u = x0, ..., xk = v in the skeleton of g satisfies:
 *   - every non-endpoint x_i that lies in s is a collider on the path, and
 *   - every collider on the path is an ancestor of u or of v.
 * A direct edge counts (no internal nodes).  The search walks simple paths
 * depth-first, pruning as soon as an internal node violates its constraint;
 * constraints are local to a node and its two flanking edges, so pruning is
 * exact.
 */
inline bool has_inducing_path(const Dag& g, const Subset& s, NodeId u, NodeId v) {
    const int p = g.p();
    detail::check_node(u, p, "has_inducing_path");
    detail::check_node(v, p, "has_inducing_path");
    if (s.host_p() != p) throw std::invalid_argument("has_inducing_path: subset host mismatch");
    if (u == v) throw std::invalid_argument("has_inducing_path: endpoints coincide");

    std::vector<std::vector<NodeId>> adj(static_cast<size_t>(p));
    for (auto [a, b] : g.edges()) {
        adj[static_cast<size_t>(a)].push_back(b);
        adj[static_cast<size_t>(b)].push_back(a);
    }
    for (auto& xs : adj) std::sort(xs.begin(), xs.end());

    std::vector<char> anc_uv(static_cast<size_t>(p), 0);
    for (NodeId x : ancestors(g, u)) anc_uv[static_cast<size_t>(x)] = 1;
    for (NodeId x : ancestors(g, v)) anc_uv[static_cast<size_t>(x)] = 1;

    std::vector<char> visited(static_cast<size_t>(p), 0);
    visited[static_cast<size_t>(u)] = 1;

    auto dfs = [&](auto&& self, NodeId prev, NodeId cur) -> bool {
        if (cur == v) return true;
        bool arrived_into_cur = g.has_edge(prev, cur);
        for (NodeId nxt : adj[static_cast<size_t>(cur)]) {
            if (visited[static_cast<size_t>(nxt)]) continue;
            bool collider = arrived_into_cur && g.has_edge(nxt, cur);
            if (s.contains(cur)) {
                if (!collider || !anc_uv[static_cast<size_t>(cur)]) continue;
            } else if (collider && !anc_uv[static_cast<size_t>(cur)]) {
                continue;
            }
            visited[static_cast<size_t>(nxt)] = 1;
            if (self(self, cur, nxt)) return true;
            visited[static_cast<size_t>(nxt)] = 0;
        }
        return false;
    };

    for (NodeId x : adj[static_cast<size_t>(u)]) {
        if (x == v) return true;  // direct edge
        visited[static_cast<size_t>(x)] = 1;
        if (dfs(dfs, u, x)) return true;
        visited[static_cast<size_t>(x)] = 0;
    }
    return false;
}

inline bool has_inducing_path(const InducingPathQuery& q) {
    return has_inducing_path(q.g, q.s, q.u, q.v);
}

/**
 * Projection of a DAG onto an observed subset, with everything outside s
 * treated as latent.  Over local ids:
 *   - members joined by a g-edge keep it, directed the same way;
 *   - members joined only by an inducing path get an edge oriented by
 *     ancestry in g (a -> b if a is an ancestor of b, b -> a if the reverse,
 *     bidirected if neither);
 *   - everything else stays non-adjacent.
 * The result never contains a directed or almost-directed cycle; this is
 * verified before returning.
 */
inline MixedGraph latent_mag(const Dag& g, const Subset& s) {
    if (s.host_p() != g.p()) throw std::invalid_argument("latent_mag: subset host mismatch");
    const int k = s.size();
    MixedGraph out(k);
    auto anc = ancestor_matrix(g);
    auto is_anc = [&](NodeId a, NodeId b) {  // a strict ancestor of b in g
        return anc[static_cast<size_t>(b)][static_cast<size_t>(a)] != 0;
    };
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) {
            NodeId ga = s.global_of(a), gb = s.global_of(b);
            if (g.has_edge(ga, gb)) {
                out.add_directed(a, b);
            } else if (g.has_edge(gb, ga)) {
                out.add_directed(b, a);
            } else if (has_inducing_path(g, s, ga, gb)) {
                if (is_anc(ga, gb))
                    out.add_directed(a, b);
                else if (is_anc(gb, ga))
                    out.add_directed(b, a);
                else
                    out.add_edge(a, b, Mark::Arrow, Mark::Arrow);
            }
        }

    // Sanity: no directed cycle, and no bidirected edge whose endpoints are
    // ordered by the directed part (almost-directed cycle).
    if (find_directed_cycle(out))
        throw std::logic_error("latent_mag: directed cycle in projection");
    std::vector<std::pair<NodeId, NodeId>> dir;
    for (const auto& e : out.edges()) {
        if (e.mark_u == Mark::Tail && e.mark_v == Mark::Arrow) dir.emplace_back(e.u, e.v);
        if (e.mark_u == Mark::Arrow && e.mark_v == Mark::Tail) dir.emplace_back(e.v, e.u);
    }
    Dag dir_dag(k, dir);
    auto dir_anc = ancestor_matrix(dir_dag);
    for (const auto& e : out.edges())
        if (e.mark_u == Mark::Arrow && e.mark_v == Mark::Arrow)
            if (dir_anc[static_cast<size_t>(e.u)][static_cast<size_t>(e.v)] ||
                dir_anc[static_cast<size_t>(e.v)][static_cast<size_t>(e.u)])
                throw std::logic_error("latent_mag: almost-directed cycle in projection");
    return out;
}

/**
 * Idealized subset learner: the adjacency structure of latent_mag(g, s) with
 * non-committal circle marks everywhere, except that each unshielded collider
 * of g lying entirely inside s puts an Arrow at its collision node on both of
 * its edges.
 */
inline MixedGraph oracle_learn(const Dag& g, const Subset& s) {
    MixedGraph mag = latent_mag(g, s);
    MixedGraph out(mag.p());
    for (const auto& e : mag.edges()) out.add_edge(e.u, e.v, Mark::Circle, Mark::Circle);
    for (const auto& c : unshielded_colliders(g)) {
        if (!(s.contains(c.u) && s.contains(c.v) && s.contains(c.w))) continue;
        int lu = s.local_of(c.u), lv = s.local_of(c.v), lw = s.local_of(c.w);
        // Both edges of the collider are direct g-edges, so they survive the
        // projection; keep the far endpoint's mark, arrow the collision node.
        out.set_marks(lu, lv, out.mark_at(lu, lv), Mark::Arrow);
        out.set_marks(lw, lv, out.mark_at(lw, lv), Mark::Arrow);
    }
    return out;
}

}  // namespace pcd
