#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcd {

// Nodes are dense non-negative integers [0, p).
using NodeId = int;

// Endpoint mark of an edge at one of its two incident nodes.
//   Tail  '-'   Arrow '>'   Circle 'o'
enum class Mark : unsigned char { Tail, Arrow, Circle };

inline char mark_char(Mark m) {
    switch (m) {
        case Mark::Tail: return '-';
        case Mark::Arrow: return '>';
        case Mark::Circle: return 'o';
    }
    throw std::logic_error("mark_char: bad mark");
}

inline Mark mark_from_char(char c) {
    switch (c) {
        case '-': return Mark::Tail;
        case '>': return Mark::Arrow;
        case 'o': return Mark::Circle;
    }
    throw std::invalid_argument(std::string("mark_from_char: unknown mark character '") + c + "'");
}

namespace detail {

inline void check_node(NodeId v, int p, const char* where) {
    if (v < 0 || v >= p)
        throw std::invalid_argument(std::string(where) + ": node " + std::to_string(v) +
                                    " out of range [0," + std::to_string(p) + ")");
}

inline void sorted_insert(std::vector<NodeId>& xs, NodeId v) {
    xs.insert(std::lower_bound(xs.begin(), xs.end(), v), v);
}

inline void sorted_erase(std::vector<NodeId>& xs, NodeId v) {
    auto it = std::lower_bound(xs.begin(), xs.end(), v);
    if (it != xs.end() && *it == v) xs.erase(it);
}

inline bool sorted_contains(const std::vector<NodeId>& xs, NodeId v) {
    return std::binary_search(xs.begin(), xs.end(), v);
}

inline int checked_node_count(int p, const char* what) {
    if (p < 0) throw std::invalid_argument(std::string(what) + ": negative node count");
    return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dag: directed acyclic graph, at most one edge per ordered pair, no
// self-loops.  Acyclicity is checked at construction.
// ---------------------------------------------------------------------------
class Dag {
  public:
    explicit Dag(int p, const std::vector<std::pair<NodeId, NodeId>>& edges = {})
        : p_(detail::checked_node_count(p, "Dag")),
          parents_(static_cast<size_t>(p_)),
          children_(static_cast<size_t>(p_)) {
        for (auto [u, v] : edges) add_edge_unchecked(u, v);
        for (auto& xs : parents_) std::sort(xs.begin(), xs.end());
        for (auto& xs : children_) std::sort(xs.begin(), xs.end());
        check_no_duplicates();
        topo_ = compute_topological_order();
    }

    int p() const { return p_; }

    bool has_edge(NodeId u, NodeId v) const {
        detail::check_node(u, p_, "Dag::has_edge");
        detail::check_node(v, p_, "Dag::has_edge");
        return detail::sorted_contains(children_[static_cast<size_t>(u)], v);
    }

    bool adjacent(NodeId u, NodeId v) const { return has_edge(u, v) || has_edge(v, u); }

    const std::vector<NodeId>& parents(NodeId v) const {
        detail::check_node(v, p_, "Dag::parents");
        return parents_[static_cast<size_t>(v)];
    }

    const std::vector<NodeId>& children(NodeId v) const {
        detail::check_node(v, p_, "Dag::children");
        return children_[static_cast<size_t>(v)];
    }

    // Edges as (u, v) pairs meaning u -> v, sorted lexicographically.
    std::vector<std::pair<NodeId, NodeId>> edges() const {
        std::vector<std::pair<NodeId, NodeId>> out;
        for (NodeId u = 0; u < p_; ++u)
            for (NodeId v : children_[static_cast<size_t>(u)]) out.emplace_back(u, v);
        return out;
    }

    int edge_count() const {
        size_t m = 0;
        for (const auto& xs : children_) m += xs.size();
        return static_cast<int>(m);
    }

    // A fixed topological order computed at construction (parents precede
    // children; ties broken by smallest node id first).
    const std::vector<NodeId>& topological_order() const { return topo_; }

  private:
    void add_edge_unchecked(NodeId u, NodeId v) {
        detail::check_node(u, p_, "Dag");
        detail::check_node(v, p_, "Dag");
        if (u == v) throw std::invalid_argument("Dag: self-loop at node " + std::to_string(u));
        children_[static_cast<size_t>(u)].push_back(v);
        parents_[static_cast<size_t>(v)].push_back(u);
    }

    void check_no_duplicates() const {
        for (NodeId u = 0; u < p_; ++u) {
            const auto& cs = children_[static_cast<size_t>(u)];
            if (std::adjacent_find(cs.begin(), cs.end()) != cs.end())
                throw std::invalid_argument("Dag: duplicate edge out of node " + std::to_string(u));
        }
    }

    // Kahn's algorithm; throws if a directed cycle exists.
    std::vector<NodeId> compute_topological_order() const {
        std::vector<int> indeg(static_cast<size_t>(p_), 0);
        for (NodeId v = 0; v < p_; ++v)
            indeg[static_cast<size_t>(v)] = static_cast<int>(parents_[static_cast<size_t>(v)].size());
        std::vector<NodeId> ready;
        for (NodeId v = 0; v < p_; ++v)
            if (indeg[static_cast<size_t>(v)] == 0) ready.push_back(v);
        std::vector<NodeId> order;
        order.reserve(static_cast<size_t>(p_));
        while (!ready.empty()) {
            std::pop_heap(ready.begin(), ready.end(), std::greater<>{});
            NodeId v = ready.back();
            ready.pop_back();
            order.push_back(v);
            for (NodeId c : children_[static_cast<size_t>(v)])
                if (--indeg[static_cast<size_t>(c)] == 0) {
                    ready.push_back(c);
                    std::push_heap(ready.begin(), ready.end(), std::greater<>{});
                }
        }
        if (static_cast<int>(order.size()) != p_)
            throw std::invalid_argument("Dag: edge set contains a directed cycle");
        return order;
    }

    int p_;
    std::vector<std::vector<NodeId>> parents_;
    std::vector<std::vector<NodeId>> children_;
    std::vector<NodeId> topo_;
};

// Strict ancestors of v (v itself excluded), sorted ascending.
inline std::vector<NodeId> ancestors(const Dag& g, NodeId v) {
    detail::check_node(v, g.p(), "ancestors");
    std::vector<char> seen(static_cast<size_t>(g.p()), 0);
    std::vector<NodeId> stack{v};
    while (!stack.empty()) {
        NodeId x = stack.back();
        stack.pop_back();
        for (NodeId pa : g.parents(x))
            if (!seen[static_cast<size_t>(pa)]) {
                seen[static_cast<size_t>(pa)] = 1;
                stack.push_back(pa);
            }
    }
    std::vector<NodeId> out;
    for (NodeId x = 0; x < g.p(); ++x)
        if (seen[static_cast<size_t>(x)]) out.push_back(x);
    return out;
}

// Strict descendants of v (v itself excluded), sorted ascending.
inline std::vector<NodeId> descendants(const Dag& g, NodeId v) {
    detail::check_node(v, g.p(), "descendants");
    std::vector<char> seen(static_cast<size_t>(g.p()), 0);
    std::vector<NodeId> stack{v};
    while (!stack.empty()) {
        NodeId x = stack.back();
        stack.pop_back();
        for (NodeId c : g.children(x))
            if (!seen[static_cast<size_t>(c)]) {
                seen[static_cast<size_t>(c)] = 1;
                stack.push_back(c);
            }
    }
    std::vector<NodeId> out;
    for (NodeId x = 0; x < g.p(); ++x)
        if (seen[static_cast<size_t>(x)]) out.push_back(x);
    return out;
}

// Ancestor indicator matrix: row v marks the strict ancestors of v.
inline std::vector<std::vector<char>> ancestor_matrix(const Dag& g) {
    std::vector<std::vector<char>> anc(static_cast<size_t>(g.p()),
                                       std::vector<char>(static_cast<size_t>(g.p()), 0));
    // Process in topological order so each node's ancestors are the union of
    // its parents' ancestors plus the parents themselves.
    for (NodeId v : g.topological_order()) {
        auto& row = anc[static_cast<size_t>(v)];
        for (NodeId pa : g.parents(v)) {
            row[static_cast<size_t>(pa)] = 1;
            const auto& prow = anc[static_cast<size_t>(pa)];
            for (NodeId x = 0; x < g.p(); ++x)
                if (prow[static_cast<size_t>(x)]) row[static_cast<size_t>(x)] = 1;
        }
    }
    return anc;
}

// ---------------------------------------------------------------------------
// MixedGraph: at most one edge per unordered pair, each edge carrying one
// mark per endpoint.  Covers directed (-  >), undirected (-  -), bidirected
// (>  >) and circle-marked edges in one representation.
// ---------------------------------------------------------------------------
struct EdgeRecord {
    NodeId u, v;      // u < v
    Mark mark_u, mark_v;

    bool operator==(const EdgeRecord&) const = default;
};

class MixedGraph {
  public:
    explicit MixedGraph(int p)
        : p_(detail::checked_node_count(p, "MixedGraph")), adj_(static_cast<size_t>(p_)) {}

    int p() const { return p_; }

    void add_edge(NodeId u, NodeId v, Mark mark_u, Mark mark_v) {
        detail::check_node(u, p_, "MixedGraph::add_edge");
        detail::check_node(v, p_, "MixedGraph::add_edge");
        if (u == v) throw std::invalid_argument("MixedGraph: self-loop at node " + std::to_string(u));
        auto key = ordered(u, v);
        if (marks_.count(key))
            throw std::invalid_argument("MixedGraph: duplicate edge {" + std::to_string(u) + "," +
                                        std::to_string(v) + "}");
        marks_[key] = (u < v) ? std::pair{mark_u, mark_v} : std::pair{mark_v, mark_u};
        detail::sorted_insert(adj_[static_cast<size_t>(u)], v);
        detail::sorted_insert(adj_[static_cast<size_t>(v)], u);
    }

    void add_undirected(NodeId u, NodeId v) { add_edge(u, v, Mark::Tail, Mark::Tail); }
    void add_directed(NodeId u, NodeId v) { add_edge(u, v, Mark::Tail, Mark::Arrow); }

    void remove_edge(NodeId u, NodeId v) {
        auto key = ordered_checked(u, v, "MixedGraph::remove_edge");
        marks_.erase(key);
        detail::sorted_erase(adj_[static_cast<size_t>(u)], v);
        detail::sorted_erase(adj_[static_cast<size_t>(v)], u);
    }

    bool adjacent(NodeId u, NodeId v) const {
        detail::check_node(u, p_, "MixedGraph::adjacent");
        detail::check_node(v, p_, "MixedGraph::adjacent");
        if (u == v) return false;
        return marks_.count(ordered(u, v)) > 0;
    }

    // Mark at endpoint `at` of edge {at, other}; the edge must exist.
    Mark mark_at(NodeId at, NodeId other) const {
        auto key = ordered_checked(at, other, "MixedGraph::mark_at");
        const auto& [lo_mark, hi_mark] = marks_.at(key);
        return (at < other) ? lo_mark : hi_mark;
    }

    void set_marks(NodeId u, NodeId v, Mark mark_u, Mark mark_v) {
        auto key = ordered_checked(u, v, "MixedGraph::set_marks");
        marks_[key] = (u < v) ? std::pair{mark_u, mark_v} : std::pair{mark_v, mark_u};
    }

    // Make {u,v} a directed edge u -> v regardless of its current marks.
    void orient(NodeId u, NodeId v) { set_marks(u, v, Mark::Tail, Mark::Arrow); }

    // u -> v: tail at u, arrow at v.
    bool has_directed(NodeId u, NodeId v) const {
        if (!adjacent(u, v)) return false;
        return mark_at(u, v) == Mark::Tail && mark_at(v, u) == Mark::Arrow;
    }

    bool has_undirected(NodeId u, NodeId v) const {
        if (!adjacent(u, v)) return false;
        return mark_at(u, v) == Mark::Tail && mark_at(v, u) == Mark::Tail;
    }

    bool has_bidirected(NodeId u, NodeId v) const {
        if (!adjacent(u, v)) return false;
        return mark_at(u, v) == Mark::Arrow && mark_at(v, u) == Mark::Arrow;
    }

    const std::vector<NodeId>& neighbors(NodeId v) const {
        detail::check_node(v, p_, "MixedGraph::neighbors");
        return adj_[static_cast<size_t>(v)];
    }

    std::vector<NodeId> directed_parents(NodeId v) const {
        std::vector<NodeId> out;
        for (NodeId u : neighbors(v))
            if (has_directed(u, v)) out.push_back(u);
        return out;
    }

    std::vector<NodeId> directed_children(NodeId v) const {
        std::vector<NodeId> out;
        for (NodeId u : neighbors(v))
            if (has_directed(v, u)) out.push_back(u);
        return out;
    }

    std::vector<NodeId> undirected_neighbors(NodeId v) const {
        std::vector<NodeId> out;
        for (NodeId u : neighbors(v))
            if (has_undirected(v, u)) out.push_back(u);
        return out;
    }

    // Edge records with u < v, sorted by (u, v).
    std::vector<EdgeRecord> edges() const {
        std::vector<EdgeRecord> out;
        out.reserve(marks_.size());
        for (const auto& [key, mk] : marks_)
            out.push_back(EdgeRecord{key.first, key.second, mk.first, mk.second});
        return out;
    }

    int edge_count() const { return static_cast<int>(marks_.size()); }

    // Unordered adjacency pairs (u, v) with u < v, sorted.
    std::vector<std::pair<NodeId, NodeId>> skeleton() const {
        std::vector<std::pair<NodeId, NodeId>> out;
        out.reserve(marks_.size());
        for (const auto& [key, mk] : marks_) out.push_back(key);
        return out;
    }

    bool operator==(const MixedGraph& o) const { return p_ == o.p_ && marks_ == o.marks_; }

  private:
    static std::pair<NodeId, NodeId> ordered(NodeId u, NodeId v) {
        return (u < v) ? std::pair{u, v} : std::pair{v, u};
    }

    std::pair<NodeId, NodeId> ordered_checked(NodeId u, NodeId v, const char* where) const {
        detail::check_node(u, p_, where);
        detail::check_node(v, p_, where);
        auto key = ordered(u, v);
        if (!marks_.count(key))
            throw std::invalid_argument(std::string(where) + ": no edge {" + std::to_string(u) +
                                        "," + std::to_string(v) + "}");
        return key;
    }

    int p_;
    std::vector<std::vector<NodeId>> adj_;
    std::map<std::pair<NodeId, NodeId>, std::pair<Mark, Mark>> marks_;
};

// View a DAG as a MixedGraph of directed edges.
inline MixedGraph mixed_from_dag(const Dag& g) {
    MixedGraph out(g.p());
    for (auto [u, v] : g.edges()) out.add_directed(u, v);
    return out;
}

// ---------------------------------------------------------------------------
// Superstructure: an undirected candidate-adjacency graph.  `perfect` records
// whether it is known to contain every true adjacency.
// ---------------------------------------------------------------------------
class Superstructure {
  public:
    explicit Superstructure(int p, bool perfect = false)
        : p_(detail::checked_node_count(p, "Superstructure")),
          perfect_(perfect),
          adj_(static_cast<size_t>(p_)) {}

    int p() const { return p_; }
    bool perfect() const { return perfect_; }
    void set_perfect(bool b) { perfect_ = b; }

    void add_edge(NodeId u, NodeId v) {
        detail::check_node(u, p_, "Superstructure::add_edge");
        detail::check_node(v, p_, "Superstructure::add_edge");
        if (u == v) throw std::invalid_argument("Superstructure: self-loop at node " + std::to_string(u));
        if (has_edge(u, v))
            throw std::invalid_argument("Superstructure: duplicate edge {" + std::to_string(u) + "," +
                                        std::to_string(v) + "}");
        detail::sorted_insert(adj_[static_cast<size_t>(u)], v);
        detail::sorted_insert(adj_[static_cast<size_t>(v)], u);
    }

    bool has_edge(NodeId u, NodeId v) const {
        detail::check_node(u, p_, "Superstructure::has_edge");
        detail::check_node(v, p_, "Superstructure::has_edge");
        if (u == v) return false;
        return detail::sorted_contains(adj_[static_cast<size_t>(u)], v);
    }

    const std::vector<NodeId>& neighbors(NodeId v) const {
        detail::check_node(v, p_, "Superstructure::neighbors");
        return adj_[static_cast<size_t>(v)];
    }

    std::vector<std::pair<NodeId, NodeId>> edges() const {
        std::vector<std::pair<NodeId, NodeId>> out;
        for (NodeId u = 0; u < p_; ++u)
            for (NodeId v : adj_[static_cast<size_t>(u)])
                if (u < v) out.emplace_back(u, v);
        return out;
    }

    int edge_count() const {
        size_t m = 0;
        for (const auto& xs : adj_) m += xs.size();
        return static_cast<int>(m / 2);
    }

  private:
    int p_;
    bool perfect_;
    std::vector<std::vector<NodeId>> adj_;
};

// Superstructure holding exactly the skeleton of a DAG (a perfect one).
inline Superstructure skeleton_superstructure(const Dag& g) {
    Superstructure ss(g.p(), /*perfect=*/true);
    for (auto [u, v] : g.edges()) ss.add_edge(std::min(u, v), std::max(u, v));
    return ss;
}

// ---------------------------------------------------------------------------
// Directed cycles
// ---------------------------------------------------------------------------

/**
 * First directed cycle of the edge set, as consecutive (from, to) pairs, or
 * nullopt if the directed graph is acyclic.  Deterministic: DFS roots and
 * successors are visited in ascending order and the reported cycle is rotated
 * to start at its smallest node.  Edges may contain both (u,v) and (v,u); a
 * 2-cycle is reported as [(u,v),(v,u)].
 */
inline std::optional<std::vector<std::pair<NodeId, NodeId>>> find_directed_cycle(
    int p, const std::vector<std::pair<NodeId, NodeId>>& directed_edges) {
    std::vector<std::vector<NodeId>> succ(static_cast<size_t>(p));
    for (auto [u, v] : directed_edges) {
        detail::check_node(u, p, "find_directed_cycle");
        detail::check_node(v, p, "find_directed_cycle");
        succ[static_cast<size_t>(u)].push_back(v);
    }
    for (auto& xs : succ) std::sort(xs.begin(), xs.end());

    // 0 = unvisited, 1 = on current DFS stack, 2 = done.
    std::vector<char> state(static_cast<size_t>(p), 0);
    std::vector<NodeId> path;

    // Iterative DFS with explicit successor indices.
    std::vector<size_t> next_idx(static_cast<size_t>(p), 0);
    for (NodeId root = 0; root < p; ++root) {
        if (state[static_cast<size_t>(root)] != 0) continue;
        path.clear();
        path.push_back(root);
        state[static_cast<size_t>(root)] = 1;
        next_idx[static_cast<size_t>(root)] = 0;
        while (!path.empty()) {
            NodeId cur = path.back();
            auto& idx = next_idx[static_cast<size_t>(cur)];
            const auto& out = succ[static_cast<size_t>(cur)];
            if (idx == out.size()) {
                state[static_cast<size_t>(cur)] = 2;
                path.pop_back();
                continue;
            }
            NodeId nxt = out[idx++];
            if (state[static_cast<size_t>(nxt)] == 1) {
                // Found a cycle: nodes from nxt to the top of `path`.
                auto it = std::find(path.begin(), path.end(), nxt);
                std::vector<NodeId> cyc(it, path.end());
                auto mn = std::min_element(cyc.begin(), cyc.end());
                std::rotate(cyc.begin(), mn, cyc.end());
                std::vector<std::pair<NodeId, NodeId>> out_edges;
                for (size_t i = 0; i < cyc.size(); ++i)
                    out_edges.emplace_back(cyc[i], cyc[(i + 1) % cyc.size()]);
                return out_edges;
            }
            if (state[static_cast<size_t>(nxt)] == 0) {
                state[static_cast<size_t>(nxt)] = 1;
                next_idx[static_cast<size_t>(nxt)] = 0;
                path.push_back(nxt);
            }
        }
    }
    return std::nullopt;
}

// Cycle search over the directed view of a MixedGraph (undirected, circle
// and bidirected edges do not participate).
inline std::optional<std::vector<std::pair<NodeId, NodeId>>> find_directed_cycle(
    const MixedGraph& g) {
    std::vector<std::pair<NodeId, NodeId>> dir;
    for (const auto& e : g.edges()) {
        if (e.mark_u == Mark::Tail && e.mark_v == Mark::Arrow) dir.emplace_back(e.u, e.v);
        else if (e.mark_u == Mark::Arrow && e.mark_v == Mark::Tail) dir.emplace_back(e.v, e.u);
    }
    return find_directed_cycle(g.p(), dir);
}

// ---------------------------------------------------------------------------
// Unshielded colliders
// ---------------------------------------------------------------------------

// Triple u *-> v <-* w with u and w non-adjacent; stored with u < w.
struct UnshieldedCollider {
    NodeId u, v, w;

    auto operator<=>(const UnshieldedCollider&) const = default;
};

/**
 * All unshielded colliders of a mixed graph: triples (u, v, w), u < w, where
 * the edges {u,v} and {v,w} both carry an Arrow mark at v and u, w are not
 * adjacent.  Only the mark at v matters, so circle-marked and bidirected
 * edges can form colliders.  Output is sorted by (u, v, w).
 */
inline std::vector<UnshieldedCollider> unshielded_colliders(const MixedGraph& g) {
    std::vector<UnshieldedCollider> out;
    for (NodeId v = 0; v < g.p(); ++v) {
        std::vector<NodeId> into;  // neighbors whose edge has an Arrow at v
        for (NodeId u : g.neighbors(v))
            if (g.mark_at(v, u) == Mark::Arrow) into.push_back(u);
        for (size_t a = 0; a < into.size(); ++a)
            for (size_t b = a + 1; b < into.size(); ++b) {
                NodeId x = into[a], y = into[b];
                if (!g.adjacent(x, y)) out.push_back(UnshieldedCollider{x, v, y});
            }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<UnshieldedCollider> unshielded_colliders(const Dag& g) {
    std::vector<UnshieldedCollider> out;
    for (NodeId v = 0; v < g.p(); ++v) {
        const auto& pas = g.parents(v);
        for (size_t a = 0; a < pas.size(); ++a)
            for (size_t b = a + 1; b < pas.size(); ++b) {
                NodeId x = pas[a], y = pas[b];
                if (!g.adjacent(x, y)) out.push_back(UnshieldedCollider{x, v, y});
            }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace pcd
