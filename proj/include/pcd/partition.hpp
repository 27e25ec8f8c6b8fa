#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcd/edgelist_io.hpp"
#include "pcd/graph.hpp"
#include "pcd/latent.hpp"

namespace pcd {

enum class PartitionKind { Disjoint, EdgeCover, ExpansiveCausal };

inline std::string partition_kind_name(PartitionKind k) {
    switch (k) {
        case PartitionKind::Disjoint: return "disjoint";
        case PartitionKind::EdgeCover: return "edge-cover";
        case PartitionKind::ExpansiveCausal: return "expansive";
    }
    throw std::logic_error("partition_kind_name: bad kind");
}

inline PartitionKind partition_kind_from_name(const std::string& name) {
    if (name == "disjoint") return PartitionKind::Disjoint;
    if (name == "edge-cover") return PartitionKind::EdgeCover;
    if (name == "expansive") return PartitionKind::ExpansiveCausal;
    throw std::invalid_argument("unknown partition kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// Partition: an ordered list of subsets covering every node of the host
// graph.  Disjoint partitions additionally have pairwise-disjoint subsets.
// ---------------------------------------------------------------------------
class Partition {
  public:
    Partition(PartitionKind kind, int host_p, std::vector<Subset> subsets)
        : kind_(kind), host_p_(detail::checked_node_count(host_p, "Partition")),
          subsets_(std::move(subsets)) {
        std::vector<int> count(static_cast<size_t>(host_p_), 0);
        for (const Subset& s : subsets_) {
            if (s.host_p() != host_p_)
                throw std::invalid_argument("Partition: subset host node count mismatch");
            for (NodeId v : s.members()) ++count[static_cast<size_t>(v)];
        }
        for (NodeId v = 0; v < host_p_; ++v)
            if (count[static_cast<size_t>(v)] == 0)
                throw std::invalid_argument("Partition: node " + std::to_string(v) +
                                            " is not covered by any subset");
        if (kind_ == PartitionKind::Disjoint)
            for (NodeId v = 0; v < host_p_; ++v)
                if (count[static_cast<size_t>(v)] > 1)
                    throw std::invalid_argument("Partition: node " + std::to_string(v) +
                                                " appears in several subsets of a disjoint partition");
    }

    PartitionKind kind() const { return kind_; }
    int host_p() const { return host_p_; }
    int size() const { return static_cast<int>(subsets_.size()); }
    const std::vector<Subset>& subsets() const { return subsets_; }
    const Subset& subset(int i) const { return subsets_.at(static_cast<size_t>(i)); }

    // For each node, the indices of the subsets containing it (ascending).
    std::vector<std::vector<int>> memberships() const {
        std::vector<std::vector<int>> out(static_cast<size_t>(host_p_));
        for (int i = 0; i < size(); ++i)
            for (NodeId v : subsets_[static_cast<size_t>(i)].members())
                out[static_cast<size_t>(v)].push_back(i);
        return out;
    }

    // Nodes contained in at least two subsets, ascending.
    std::vector<NodeId> overlap_nodes() const {
        std::vector<int> count(static_cast<size_t>(host_p_), 0);
        for (const Subset& s : subsets_)
            for (NodeId v : s.members()) ++count[static_cast<size_t>(v)];
        std::vector<NodeId> out;
        for (NodeId v = 0; v < host_p_; ++v)
            if (count[static_cast<size_t>(v)] >= 2) out.push_back(v);
        return out;
    }

    bool operator==(const Partition&) const = default;

  private:
    PartitionKind kind_;
    int host_p_;
    std::vector<Subset> subsets_;
};

// The trivial single-subset partition {V}.
inline Partition whole_set_partition(int p) {
    std::vector<NodeId> all(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) all[static_cast<size_t>(i)] = i;
    return Partition(PartitionKind::Disjoint, p, {Subset(p, all)});
}

struct PartitionConfig {
    std::optional<int> num_communities;  // pin the community count if set
    double resolution = 1.0;             // modularity resolution parameter
    std::uint64_t seed = 0;              // reserved; the CNM sweep is deterministic
};

// ---------------------------------------------------------------------------
// Outer vertex boundary: nodes outside s with a superstructure neighbor in s.
// ---------------------------------------------------------------------------
inline std::vector<NodeId> outer_boundary(const Superstructure& g, const Subset& s) {
    if (s.host_p() != g.p()) throw std::invalid_argument("outer_boundary: subset host mismatch");
    std::vector<char> hit(static_cast<size_t>(g.p()), 0);
    for (NodeId u : s.members())
        for (NodeId v : g.neighbors(u))
            if (!s.contains(v)) hit[static_cast<size_t>(v)] = 1;
    std::vector<NodeId> out;
    for (NodeId v = 0; v < g.p(); ++v)
        if (hit[static_cast<size_t>(v)]) out.push_back(v);
    return out;
}

// Modularity of a disjoint partition at the given resolution.
inline double modularity(const Superstructure& g, const Partition& part, double resolution = 1.0) {
    if (part.kind() != PartitionKind::Disjoint)
        throw std::invalid_argument("modularity: defined for disjoint partitions only");
    if (part.host_p() != g.p()) throw std::invalid_argument("modularity: host mismatch");
    const double m = g.edge_count();
    if (m == 0) return 0.0;
    double q = 0.0;
    for (const Subset& s : part.subsets()) {
        double intra = 0.0, degsum = 0.0;
        for (NodeId u : s.members()) {
            degsum += static_cast<double>(g.neighbors(u).size());
            for (NodeId v : g.neighbors(u))
                if (v > u && s.contains(v)) intra += 1.0;
        }
        double frac = degsum / (2.0 * m);
        q += intra / m - resolution * frac * frac;
    }
    return q;
}

/**
 * Greedy modularity community detection (CNM-style agglomeration).
 * Start from singletons and repeatedly merge the community pair with the
 * largest modularity gain
 *     dQ(a,b) = E_ab/m - resolution * tot_a * tot_b / (2 m^2),
 * where E_ab counts edges between the communities and tot_* sums member
 * degrees.  Only pairs joined by at least one edge are candidates, so
 * isolated nodes stay singletons.  Merging stops when no gain is positive,
 * unless cfg.num_communities pins a target count, in which case merging
 * continues through non-positive gains until the target (or until no
 * candidate pair remains).  Ties break on (gain, smaller community-id pair);
 * community ids are the smallest member id, so the sweep is deterministic.
 */
inline Partition disjoint_partition(const Superstructure& g, const PartitionConfig& cfg = {}) {
    const int p = g.p();
    if (p == 0) throw std::invalid_argument("disjoint_partition: empty graph");
    const double m = g.edge_count();
    const double gamma = cfg.resolution;

    // Community id of each node; ids are representative node ids.
    std::vector<int> comm(static_cast<size_t>(p));
    for (int v = 0; v < p; ++v) comm[static_cast<size_t>(v)] = v;
    std::vector<char> alive(static_cast<size_t>(p), 1);
    std::vector<double> tot(static_cast<size_t>(p), 0.0);
    std::vector<std::map<int, double>> between(static_cast<size_t>(p));
    for (int v = 0; v < p; ++v) tot[static_cast<size_t>(v)] = static_cast<double>(g.neighbors(v).size());
    for (auto [u, v] : g.edges()) between[static_cast<size_t>(u)][v] += 1.0;
    // Symmetrize.
    for (int a = 0; a < p; ++a)
        for (const auto& [b, w] : std::map<int, double>(between[static_cast<size_t>(a)]))
            between[static_cast<size_t>(b)][a] = w;

    int n_comm = p;
    int target = cfg.num_communities.value_or(-1);
    if (target == 0 || (target > 0 && target > p))
        throw std::invalid_argument("disjoint_partition: bad community target");

    while (n_comm > 1) {
        if (target > 0 && n_comm <= target) break;
        double best_gain = 0.0;
        int best_a = -1, best_b = -1;
        bool have = false;
        for (int a = 0; a < p; ++a) {
            if (!alive[static_cast<size_t>(a)]) continue;
            for (const auto& [b, eab] : between[static_cast<size_t>(a)]) {
                if (b <= a) continue;
                double gain = (m > 0)
                                  ? eab / m - gamma * tot[static_cast<size_t>(a)] *
                                                  tot[static_cast<size_t>(b)] / (2.0 * m * m)
                                  : 0.0;
                if (!have || gain > best_gain) {
                    have = true;
                    best_gain = gain;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        if (!have) break;                            // no adjacent community pairs left
        if (target < 0 && best_gain <= 0.0) break;   // unpinned: stop at the modularity peak

        // Merge best_b into best_a (best_a is the smaller id).
        for (int v = 0; v < p; ++v)
            if (comm[static_cast<size_t>(v)] == best_b) comm[static_cast<size_t>(v)] = best_a;
        tot[static_cast<size_t>(best_a)] += tot[static_cast<size_t>(best_b)];
        for (const auto& [c, w] : between[static_cast<size_t>(best_b)]) {
            if (c == best_a) continue;
            between[static_cast<size_t>(c)].erase(best_b);
            between[static_cast<size_t>(best_a)][c] += w;
            between[static_cast<size_t>(c)][best_a] = between[static_cast<size_t>(best_a)][c];
        }
        between[static_cast<size_t>(best_a)].erase(best_b);
        between[static_cast<size_t>(best_b)].clear();
        alive[static_cast<size_t>(best_b)] = 0;
        --n_comm;
    }

    std::map<int, std::vector<NodeId>> groups;
    for (int v = 0; v < p; ++v) groups[comm[static_cast<size_t>(v)]].push_back(v);
    std::vector<Subset> subsets;
    subsets.reserve(groups.size());
    for (auto& [id, members] : groups) subsets.emplace_back(p, std::move(members));
    return Partition(PartitionKind::Disjoint, p, std::move(subsets));
}

// S'_i = S_i + outer_boundary(S_i); the result is edge-covering.
inline Partition causal_expansion(const Superstructure& g, const Partition& part) {
    if (part.host_p() != g.p()) throw std::invalid_argument("causal_expansion: host mismatch");
    std::vector<Subset> out;
    out.reserve(static_cast<size_t>(part.size()));
    for (const Subset& s : part.subsets()) {
        std::vector<NodeId> members = s.members();
        for (NodeId v : outer_boundary(g, s)) members.push_back(v);
        out.emplace_back(g.p(), std::move(members));
    }
    return Partition(PartitionKind::ExpansiveCausal, g.p(), std::move(out));
}

// Minimal deterministic edge cover: each cut edge is absorbed by the
// lower-indexed subset (the other endpoint joins it).
inline Partition edge_cover_expansion(const Superstructure& g, const Partition& part) {
    if (part.host_p() != g.p()) throw std::invalid_argument("edge_cover_expansion: host mismatch");
    if (part.kind() != PartitionKind::Disjoint)
        throw std::invalid_argument("edge_cover_expansion: input partition must be disjoint");
    std::vector<int> owner(static_cast<size_t>(g.p()), -1);
    for (int i = 0; i < part.size(); ++i)
        for (NodeId v : part.subset(i).members()) owner[static_cast<size_t>(v)] = i;
    std::vector<std::vector<NodeId>> extra(static_cast<size_t>(part.size()));
    for (auto [u, v] : g.edges()) {
        int i = owner[static_cast<size_t>(u)], j = owner[static_cast<size_t>(v)];
        if (i == j) continue;
        if (i < j)
            extra[static_cast<size_t>(i)].push_back(v);
        else
            extra[static_cast<size_t>(j)].push_back(u);
    }
    std::vector<Subset> out;
    out.reserve(static_cast<size_t>(part.size()));
    for (int i = 0; i < part.size(); ++i) {
        std::vector<NodeId> members = part.subset(i).members();
        for (NodeId v : extra[static_cast<size_t>(i)])
            if (!detail::sorted_contains(members, v)) {
                members.push_back(v);
                std::sort(members.begin(), members.end());
            }
        out.emplace_back(g.p(), std::move(members));
    }
    return Partition(PartitionKind::EdgeCover, g.p(), std::move(out));
}

// ---------------------------------------------------------------------------
// ExpansionReport: per-subset boundary accounting for a pre-expansion
// partition, with the vertex-expansion bound on the expanded sizes.
// ---------------------------------------------------------------------------
struct ExpansionReport {
    struct Row {
        int subset_index;
        int original_size;
        int boundary_size;
        double vertex_expansion;  // boundary size / original size
        int expanded_size;        // |S_i| + |boundary(S_i)|
    };
    std::vector<Row> rows;
    int max_expanded_size = 0;
    double size_bound = 0.0;  // max_j (1 + h(S_j)) |S_j|

    bool bound_holds() const { return static_cast<double>(max_expanded_size) <= size_bound + 1e-9; }
};

inline ExpansionReport expansion_report(const Superstructure& g, const Partition& part) {
    ExpansionReport rep;
    for (int i = 0; i < part.size(); ++i) {
        const Subset& s = part.subset(i);
        int b = static_cast<int>(outer_boundary(g, s).size());
        ExpansionReport::Row row;
        row.subset_index = i;
        row.original_size = s.size();
        row.boundary_size = b;
        row.vertex_expansion = static_cast<double>(b) / static_cast<double>(s.size());
        row.expanded_size = s.size() + b;
        rep.max_expanded_size = std::max(rep.max_expanded_size, row.expanded_size);
        rep.size_bound = std::max(rep.size_bound,
                                  (1.0 + row.vertex_expansion) * static_cast<double>(s.size()));
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Ground-truth check of the three causal-partition properties.
// ---------------------------------------------------------------------------
struct CausalPartitionReport {
    bool edge_coverage_ok = true;
    std::optional<std::pair<NodeId, NodeId>> uncovered_edge;

    bool projection_ok = true;
    std::optional<std::pair<NodeId, NodeId>> unrefuted_pair;

    bool collider_ok = true;
    std::optional<UnshieldedCollider> split_collider;

    bool pass() const { return edge_coverage_ok && projection_ok && collider_ok; }
};

/**
 * Checks, against a known truth DAG, that a partition is causal for the
 * superstructure g:
 *   (i)   every g-edge lies inside some subset;
 *   (ii)  every g-edge between truth-non-adjacent nodes is refutable: some
 *         subset contains both endpoints and projects no edge between them
 *         (no inducing path relative to that subset);
 *   (iii) every unshielded collider of the truth lies inside some subset.
 * The first offending edge / pair / triple is reported as a witness.
 */
inline CausalPartitionReport verify_causal_properties(const Superstructure& g, const Dag& gstar,
                                                      const Partition& part) {
    if (g.p() != gstar.p() || part.host_p() != g.p())
        throw std::invalid_argument("verify_causal_properties: node count mismatch");
    CausalPartitionReport rep;

    for (auto [u, v] : g.edges()) {
        bool covered = false;
        for (const Subset& s : part.subsets())
            if (s.contains(u) && s.contains(v)) {
                covered = true;
                break;
            }
        if (!covered) {
            rep.edge_coverage_ok = false;
            rep.uncovered_edge = {u, v};
            break;
        }
    }

    for (auto [u, v] : g.edges()) {
        if (gstar.adjacent(u, v)) continue;
        bool refuted = false;
        for (const Subset& s : part.subsets())
            if (s.contains(u) && s.contains(v) && !has_inducing_path(gstar, s, u, v)) {
                refuted = true;
                break;
            }
        if (!refuted) {
            rep.projection_ok = false;
            rep.unrefuted_pair = {u, v};
            break;
        }
    }

    for (const auto& c : unshielded_colliders(gstar)) {
        bool housed = false;
        for (const Subset& s : part.subsets())
            if (s.contains(c.u) && s.contains(c.v) && s.contains(c.w)) {
                housed = true;
                break;
            }
        if (!housed) {
            rep.collider_ok = false;
            rep.split_collider = c;
            break;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Partition file format:
//   # kind=<disjoint|edge-cover|expansive>
//   <id> <id> ...          (one line per subset, ascending ids)
// ---------------------------------------------------------------------------
inline std::string to_partition_file(const Partition& part) {
    std::string out = "# kind=" + partition_kind_name(part.kind()) + "\n";
    for (const Subset& s : part.subsets()) {
        std::string line;
        for (NodeId v : s.members()) {
            if (!line.empty()) line += ' ';
            line += std::to_string(v);
        }
        out += line + "\n";
    }
    return out;
}

inline Partition partition_from_file(const std::string& text, int host_p) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# kind=", 0) != 0)
        throw std::runtime_error("partition file: expected '# kind=<kind>' header");
    PartitionKind kind = partition_kind_from_name(line.substr(7));
    std::vector<Subset> subsets;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<NodeId> members;
        std::string tok;
        while (ls >> tok) members.push_back(detail::parse_node(tok, line_no));
        if (members.empty()) continue;
        subsets.emplace_back(host_p, std::move(members));
    }
    return Partition(kind, host_p, std::move(subsets));
}

}  // namespace pcd
