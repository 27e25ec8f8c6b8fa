#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pcd/dataset.hpp"
#include "pcd/graph.hpp"
#include "pcd/latent.hpp"
#include "pcd/learners.hpp"
#include "pcd/orientation.hpp"
#include "pcd/partition.hpp"
#include "pcd/scoring.hpp"
#include "pcd/warnings.hpp"

namespace pcd {

/**
 * Options governing how locally learned graphs are merged into one global
 * graph.
 *
 * use_superstructure_filter drops candidate edges absent from the
 * superstructure before the consensus step.  It defaults to on; prefer
 * default_merge_config, which turns it off for superstructures estimated from
 * data, where missing true edges are common enough that the filter costs more
 * recall than it buys precision.
 *
 * finite_sample selects the data-driven merge (conflict resolution and cycle
 * removal); it requires a Dataset at the merge call.  apply_meek closes the
 * merged graph under the four Meek orientation rules afterwards.
 * ric_penalty_scale multiplies the per-parameter penalty used when two
 * subsets orient the same edge in opposite directions.
 */
struct MergeConfig {
    bool use_superstructure_filter = true;
    bool finite_sample = false;
    bool apply_meek = false;
    double ric_penalty_scale = 1.0;

    void validate() const {
        if (!(ric_penalty_scale > 0.0))
            throw std::invalid_argument("MergeConfig: ric_penalty_scale must be positive");
    }
};

// Defaults appropriate for a given superstructure: the edge filter is trusted
// only when the superstructure is flagged perfect.
inline MergeConfig default_merge_config(const Superstructure& g, bool finite_sample = false) {
    MergeConfig cfg;
    cfg.use_superstructure_filter = g.perfect();
    cfg.finite_sample = finite_sample;
    return cfg;
}

// ---------------------------------------------------------------------------
// Cycle-resolution audit trail
// ---------------------------------------------------------------------------

// One cycle-resolution step: the cycle that was found, the candidate edges
// considered for removal, their scores (aligned with candidates), and the
// edge that was discarded.  fallback marks steps where no cycle edge touched
// the partition overlap and the whole cycle was used instead.
struct CycleResolutionStep {
    std::vector<std::pair<NodeId, NodeId>> cycle;
    std::vector<std::pair<NodeId, NodeId>> candidates;
    std::vector<double> scores;
    std::pair<NodeId, NodeId> discarded{-1, -1};
    bool fallback = false;

    bool operator==(const CycleResolutionStep&) const = default;
};

struct CycleResolutionTrace {
    std::vector<CycleResolutionStep> steps;

    bool operator==(const CycleResolutionTrace&) const = default;
};

namespace detail {

inline std::string edge_str(NodeId u, NodeId v) {
    return "{" + std::to_string(u) + "," + std::to_string(v) + "}";
}

inline void check_merge_inputs(const Superstructure& g, const std::vector<SubsetResult>& results,
                               const char* where) {
    if (results.empty()) throw std::invalid_argument(std::string(where) + ": no subset results");
    for (const auto& r : results) {
        if (r.subset.host_p() != g.p())
            throw std::invalid_argument(std::string(where) + ": subset host has " +
                                        std::to_string(r.subset.host_p()) +
                                        " nodes but the superstructure has " +
                                        std::to_string(g.p()));
        if (r.graph.p() != r.subset.size())
            throw std::invalid_argument(std::string(where) + ": result graph has " +
                                        std::to_string(r.graph.p()) + " nodes for a subset of size " +
                                        std::to_string(r.subset.size()));
    }
}

// The consensus rule is meaningful only if every superstructure edge lies
// inside at least one subset; otherwise that pair was never examined by any
// learner and its absence from the output is vacuous.
inline void check_edge_coverage(const Superstructure& g, const std::vector<SubsetResult>& results,
                                const char* where) {
    for (auto [u, v] : g.edges()) {
        bool covered = false;
        for (const auto& r : results)
            if (r.subset.contains(u) && r.subset.contains(v)) {
                covered = true;
                break;
            }
        if (!covered)
            throw std::invalid_argument(std::string(where) + ": superstructure edge " +
                                        edge_str(u, v) +
                                        " is contained in no subset; the partition is not "
                                        "edge-covering");
    }
}

// Union of learned edges as host-id pairs (u < v), deduplicated.
inline std::vector<std::pair<NodeId, NodeId>> candidate_pairs(
    const std::vector<SubsetResult>& results) {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (const auto& r : results)
        for (const auto& e : r.graph.edges()) {
            NodeId u = r.subset.global_of(e.u), v = r.subset.global_of(e.v);
            if (u > v) std::swap(u, v);
            out.emplace_back(u, v);
        }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Favor no edge: a candidate pair survives only if every subset containing
// both endpoints learned an edge between them.
inline std::vector<std::pair<NodeId, NodeId>> consensus_pairs(
    const std::vector<SubsetResult>& results,
    const std::vector<std::pair<NodeId, NodeId>>& candidates) {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (auto [u, v] : candidates) {
        bool everywhere = true;
        for (const auto& r : results) {
            if (!(r.subset.contains(u) && r.subset.contains(v))) continue;
            if (!r.graph.adjacent(r.subset.local_of(u), r.subset.local_of(v))) {
                everywhere = false;
                break;
            }
        }
        if (everywhere) out.emplace_back(u, v);
    }
    return out;
}

// Nodes belonging to two or more of the results' subsets.
inline std::vector<char> overlap_mask(int p, const std::vector<SubsetResult>& results) {
    std::vector<int> count(static_cast<size_t>(p), 0);
    for (const auto& r : results)
        for (NodeId v : r.subset.members()) ++count[static_cast<size_t>(v)];
    std::vector<char> mask(static_cast<size_t>(p), 0);
    for (int v = 0; v < p; ++v) mask[static_cast<size_t>(v)] = count[static_cast<size_t>(v)] >= 2;
    return mask;
}

// Directed parents of j, optionally excluding one node.
inline std::vector<NodeId> directed_parents(const MixedGraph& g, NodeId j, NodeId exclude = -1) {
    std::vector<NodeId> out;
    for (NodeId x : g.neighbors(j))
        if (x != exclude && g.has_directed(x, j)) out.push_back(x);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Consensus merge of idealized (projection-consistent) local results
// ---------------------------------------------------------------------------

/**
 * Merge locally learned graphs under the assumption that each is a correct
 * latent projection of the same generating DAG.
 *
 * Candidate edges are the union of learned edges restricted to the
 * superstructure.  A candidate {u,v} enters the output, undirected, only if
 * every subset containing both u and v learned an edge between them
 * ("favor no edge"): a projected edge cannot survive this vote, because some
 * subset exists in which the projection disappears, while a true edge is
 * learned everywhere its endpoints appear together.
 *
 * Collision marks are then restored: whenever some local result carries
 * arrowheads into v from u and from w, both pairs survive the vote, and u,w
 * are non-adjacent in the merged graph, the two edges are oriented u->v and
 * w->v.  Unshieldedness is judged in the merged graph rather than in the
 * local result: a local result may carry a projected u~w edge that shields
 * the triple locally even though u and w are non-adjacent in truth, and those
 * projected edges are exactly what the consensus vote has already removed.
 *
 * Output marks are Tail/Tail (undirected) and Tail/Arrow (directed).  With
 * conflicting local orientations (which consistent inputs never produce)
 * later results overwrite earlier ones; results are processed in index order,
 * so the outcome is deterministic.
 */
inline MixedGraph screen_infinite(const Superstructure& g,
                                  const std::vector<SubsetResult>& results) {
    detail::check_merge_inputs(g, results, "screen_infinite");
    detail::check_edge_coverage(g, results, "screen_infinite");

    auto candidates = detail::candidate_pairs(results);
    std::erase_if(candidates,
                  [&](const std::pair<NodeId, NodeId>& e) { return !g.has_edge(e.first, e.second); });

    MixedGraph out(g.p());
    for (auto [u, v] : detail::consensus_pairs(results, candidates))
        out.add_edge(u, v, Mark::Tail, Mark::Tail);

    for (const auto& r : results) {
        for (int lv = 0; lv < r.subset.size(); ++lv) {
            NodeId v = r.subset.global_of(lv);
            std::vector<NodeId> into;  // neighbors with an arrowhead at v, host ids
            for (NodeId lu : r.graph.neighbors(lv))
                if (r.graph.mark_at(lv, lu) == Mark::Arrow) into.push_back(r.subset.global_of(lu));
            std::sort(into.begin(), into.end());
            for (size_t a = 0; a < into.size(); ++a)
                for (size_t b = a + 1; b < into.size(); ++b) {
                    NodeId u = into[a], w = into[b];
                    if (!out.adjacent(u, v) || !out.adjacent(w, v)) continue;
                    if (out.adjacent(u, w)) continue;  // shielded in the merged graph
                    out.set_marks(u, v, Mark::Tail, Mark::Arrow);
                    out.set_marks(w, v, Mark::Tail, Mark::Arrow);
                }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Edge scoring
// ---------------------------------------------------------------------------

/**
 * Likelihood gain of keeping directed edge i->j: the Gaussian log-likelihood
 * of node j regressed on its directed parents in `graph` (which include i),
 * minus the same with i excluded.  Coefficients are the least-squares fit and
 * the variance its maximum-likelihood estimate, so the score is
 * -(n/2) log(rss_with / rss_without); independent i,j give a score near zero
 * while a real parent's score grows linearly in n.  A rank-deficient parent
 * block falls back to a small ridge with a warning.
 */
inline double loglikelihood_score(NodeId i, NodeId j, const MixedGraph& graph,
                                  const Dataset& data) {
    if (graph.p() != data.p())
        throw std::invalid_argument("loglikelihood_score: graph has " + std::to_string(graph.p()) +
                                    " nodes but the data has " + std::to_string(data.p()) +
                                    " columns");
    if (!graph.has_directed(i, j))
        throw std::invalid_argument("loglikelihood_score: no directed edge " + std::to_string(i) +
                                    "->" + std::to_string(j));
    const Eigen::MatrixXd& S = data.covariance();
    std::vector<NodeId> with = detail::directed_parents(graph, j);
    std::vector<NodeId> without = detail::directed_parents(graph, j, /*exclude=*/i);
    return family_loglik(S, data.n(), j, with) - family_loglik(S, data.n(), j, without);
}

// ---------------------------------------------------------------------------
// Two-cycle resolution
// ---------------------------------------------------------------------------

enum class RicVerdict { KeepIJ, KeepJI, DropBoth };

inline const char* ric_verdict_name(RicVerdict v) {
    switch (v) {
        case RicVerdict::KeepIJ: return "keep-ij";
        case RicVerdict::KeepJI: return "keep-ji";
        case RicVerdict::DropBoth: return "drop-both";
    }
    throw std::logic_error("ric_verdict_name: bad verdict");
}

/**
 * Decide between i->j, j->i, and no edge when local results orient the same
 * pair both ways.  The three models are compared by penalized fit,
 *     -2 * loglik + scale * 2 * log(p) * (#extra edge parameters),
 * a risk-inflation-style penalty of 2 log p per parameter.  Only the families
 * of i and j differ between the models, and any existing edge between the
 * pair is ignored when collecting parents, so all shared terms cancel and are
 * omitted.  No-edge wins only when strictly best; a tie between the two
 * directions keeps the first argument, so calling with i < j makes the
 * tie-break lexicographic.
 */
inline RicVerdict ric_two_cycle(NodeId i, NodeId j, const MixedGraph& graph, const Dataset& data,
                                double scale = 1.0) {
    if (graph.p() != data.p())
        throw std::invalid_argument("ric_two_cycle: graph has " + std::to_string(graph.p()) +
                                    " nodes but the data has " + std::to_string(data.p()) +
                                    " columns");
    detail::check_node(i, graph.p(), "ric_two_cycle");
    detail::check_node(j, graph.p(), "ric_two_cycle");
    if (i == j) throw std::invalid_argument("ric_two_cycle: i and j must differ");
    if (!(scale > 0.0)) throw std::invalid_argument("ric_two_cycle: scale must be positive");

    const Eigen::MatrixXd& S = data.covariance();
    const int n = data.n();
    std::vector<NodeId> pa_i = detail::directed_parents(graph, i, /*exclude=*/j);
    std::vector<NodeId> pa_j = detail::directed_parents(graph, j, /*exclude=*/i);

    const double l_i0 = family_loglik(S, n, i, pa_i);
    const double l_j0 = family_loglik(S, n, j, pa_j);
    std::vector<NodeId> pa_j_with = pa_j;
    detail::sorted_insert(pa_j_with, i);
    std::vector<NodeId> pa_i_with = pa_i;
    detail::sorted_insert(pa_i_with, j);

    const double penalty = scale * 2.0 * std::log(static_cast<double>(graph.p()));
    const double ric_none = -2.0 * (l_i0 + l_j0);
    const double ric_ij = -2.0 * (l_i0 + family_loglik(S, n, j, pa_j_with)) + penalty;
    const double ric_ji = -2.0 * (family_loglik(S, n, i, pa_i_with) + l_j0) + penalty;

    const double best_directed = std::min(ric_ij, ric_ji);
    if (ric_none < best_directed) return RicVerdict::DropBoth;
    return ric_ij <= ric_ji ? RicVerdict::KeepIJ : RicVerdict::KeepJI;
}

// ---------------------------------------------------------------------------
// Cycle resolution
// ---------------------------------------------------------------------------

namespace detail {

// Remove the weakest removable edge of one directed cycle and record the
// step.  Candidates are the cycle edges with an endpoint in the overlap mask,
// degrading to the whole cycle (with a warning) when none qualifies.  Ties on
// the score break toward the lexicographically smallest edge.
inline void resolve_one_cycle(MixedGraph& graph,
                              const std::vector<std::pair<NodeId, NodeId>>& cycle,
                              const std::vector<char>& overlap, const Dataset& data,
                              CycleResolutionTrace& trace) {
    CycleResolutionStep step;
    step.cycle = cycle;
    for (auto [u, v] : cycle)
        if (overlap[static_cast<size_t>(u)] || overlap[static_cast<size_t>(v)])
            step.candidates.emplace_back(u, v);
    if (step.candidates.empty()) {
        warn("cycle resolution: no cycle edge touches the partition overlap; "
             "considering every cycle edge for removal");
        step.candidates = cycle;
        step.fallback = true;
    }

    std::pair<NodeId, NodeId> best{-1, -1};
    double best_score = 0.0;
    for (auto [u, v] : step.candidates) {
        double s = loglikelihood_score(u, v, graph, data);
        step.scores.push_back(s);
        if (best.first < 0 || s < best_score || (s == best_score && std::pair(u, v) < best)) {
            best = {u, v};
            best_score = s;
        }
    }
    step.discarded = best;
    graph.remove_edge(best.first, best.second);
    trace.steps.push_back(std::move(step));
}

}  // namespace detail

/**
 * Remove the weakest edge of one directed cycle.  Removal candidates are the
 * cycle edges with at least one endpoint shared by two or more subsets of
 * `part` (cycles introduced by merging live in these overlap regions); when
 * no cycle edge qualifies the whole cycle is considered, with a warning.  The
 * candidate with the smallest loglikelihood_score is discarded, ties going to
 * the lexicographically smallest edge.  Each listed edge must be a directed
 * edge of `graph`; the list itself is taken as reported by the caller's cycle
 * search and is not re-verified as a closed walk.
 */
inline MixedGraph score_and_discard(const MixedGraph& graph,
                                    const std::vector<std::pair<NodeId, NodeId>>& cycle,
                                    const Partition& part, const Dataset& data) {
    if (cycle.empty()) throw std::invalid_argument("score_and_discard: empty cycle");
    if (part.host_p() != graph.p())
        throw std::invalid_argument("score_and_discard: partition host has " +
                                    std::to_string(part.host_p()) + " nodes but the graph has " +
                                    std::to_string(graph.p()));
    std::vector<std::pair<NodeId, NodeId>> seen = cycle;
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        throw std::invalid_argument("score_and_discard: duplicate cycle edge");
    for (auto [u, v] : cycle)
        if (!graph.has_directed(u, v))
            throw std::invalid_argument("score_and_discard: cycle edge " + detail::edge_str(u, v) +
                                        " is not a directed edge of the graph");

    std::vector<char> overlap(static_cast<size_t>(graph.p()), 0);
    for (NodeId v : part.overlap_nodes()) overlap[static_cast<size_t>(v)] = 1;

    MixedGraph out = graph;
    CycleResolutionTrace trace;
    detail::resolve_one_cycle(out, cycle, overlap, data, trace);
    return out;
}

// ---------------------------------------------------------------------------
// Finite-sample merge
// ---------------------------------------------------------------------------

struct FiniteMergeResult {
    MixedGraph graph;
    CycleResolutionTrace trace;
    // The merged graph before cycle resolution.  For screen_finite output,
    // replaying the trace's removals on it reproduces `graph` exactly; a
    // later Meek closure (merge with apply_meek) adds orientations the trace
    // does not record.
    MixedGraph pre_resolution;
};

/**
 * Merge locally learned graphs without assuming they are correct latent
 * projections.  Adjacencies follow the same favor-no-edge consensus as
 * screen_infinite (the superstructure filter applied only when
 * cfg.use_superstructure_filter is set).  A surviving pair is directed u->v
 * when some local result carries an arrowhead at v and none carries one at u;
 * pairs oriented both ways are settled by ric_two_cycle (keep one direction
 * or drop the pair); everything else stays undirected — circle marks are
 * normalized to tails.  Because conflicting orientations are settled up
 * front, the merged graph never holds a two-cycle; any remaining directed
 * cycles are dismantled one edge at a time by score_and_discard, and the
 * returned trace records every removal.  The final directed subgraph is
 * acyclic.
 */
inline FiniteMergeResult screen_finite(const Superstructure& g,
                                       const std::vector<SubsetResult>& results,
                                       const Dataset& data, const MergeConfig& cfg = {}) {
    cfg.validate();
    detail::check_merge_inputs(g, results, "screen_finite");
    if (data.p() != g.p())
        throw std::invalid_argument("screen_finite: data has " + std::to_string(data.p()) +
                                    " columns but the superstructure has " + std::to_string(g.p()) +
                                    " nodes");
    {
        std::vector<char> covered(static_cast<size_t>(g.p()), 0);
        for (const auto& r : results)
            for (NodeId v : r.subset.members()) covered[static_cast<size_t>(v)] = 1;
        for (NodeId v = 0; v < g.p(); ++v)
            if (!covered[static_cast<size_t>(v)])
                throw std::invalid_argument("screen_finite: column " + std::to_string(v) +
                                            " belongs to no subset");
    }
    // Unlike screen_infinite, edge coverage of the superstructure is not a
    // precondition here: the finite merge is also the path for baselines whose
    // partitions leave cross-subset edges untested (those pairs simply never
    // become candidates).

    auto candidates = detail::candidate_pairs(results);
    if (cfg.use_superstructure_filter)
        std::erase_if(candidates, [&](const std::pair<NodeId, NodeId>& e) {
            return !g.has_edge(e.first, e.second);
        });

    // Orientation vote per surviving pair: u->v needs an arrowhead at v in
    // some result and no arrowhead at u in any.
    MixedGraph merged(g.p());
    std::vector<std::pair<NodeId, NodeId>> conflicts;
    for (auto [u, v] : detail::consensus_pairs(results, candidates)) {
        bool arrow_at_v = false, arrow_at_u = false;
        for (const auto& r : results) {
            if (!(r.subset.contains(u) && r.subset.contains(v))) continue;
            int lu = r.subset.local_of(u), lv = r.subset.local_of(v);
            if (r.graph.mark_at(lv, lu) == Mark::Arrow) arrow_at_v = true;
            if (r.graph.mark_at(lu, lv) == Mark::Arrow) arrow_at_u = true;
        }
        if (arrow_at_v && arrow_at_u)
            conflicts.emplace_back(u, v);  // resolved below, against the built graph
        else if (arrow_at_v)
            merged.add_edge(u, v, Mark::Tail, Mark::Arrow);
        else if (arrow_at_u)
            merged.add_edge(u, v, Mark::Arrow, Mark::Tail);
        else
            merged.add_edge(u, v, Mark::Tail, Mark::Tail);
    }
    for (auto [u, v] : conflicts) {  // candidate order is sorted, so this is too
        switch (ric_two_cycle(u, v, merged, data, cfg.ric_penalty_scale)) {
            case RicVerdict::KeepIJ: merged.add_edge(u, v, Mark::Tail, Mark::Arrow); break;
            case RicVerdict::KeepJI: merged.add_edge(u, v, Mark::Arrow, Mark::Tail); break;
            case RicVerdict::DropBoth: break;
        }
    }

    FiniteMergeResult res{merged, {}, merged};
    std::vector<char> overlap = detail::overlap_mask(g.p(), results);
    while (auto cycle = find_directed_cycle(res.graph))
        detail::resolve_one_cycle(res.graph, *cycle, overlap, data, res.trace);
    return res;
}

/**
 * Re-apply a recorded sequence of cycle-resolution removals.  Starting from
 * the pre-resolution graph this reproduces the resolved graph exactly.
 */
inline MixedGraph replay_trace(MixedGraph graph, const CycleResolutionTrace& trace) {
    for (size_t k = 0; k < trace.steps.size(); ++k) {
        const auto& step = trace.steps[k];
        auto [u, v] = step.discarded;
        if (std::find(step.candidates.begin(), step.candidates.end(), step.discarded) ==
            step.candidates.end())
            throw std::invalid_argument("replay_trace: step " + std::to_string(k) +
                                        " discards an edge outside its candidate set");
        if (!graph.has_directed(u, v))
            throw std::invalid_argument("replay_trace: step " + std::to_string(k) + " removes " +
                                        detail::edge_str(u, v) +
                                        " which is not a directed edge of the graph");
        graph.remove_edge(u, v);
    }
    return graph;
}

// ---------------------------------------------------------------------------
// Trace serialization
// ---------------------------------------------------------------------------

inline std::string trace_to_json(const CycleResolutionTrace& trace) {
    nlohmann::json j;
    j["steps"] = nlohmann::json::array();
    for (const auto& step : trace.steps) {
        nlohmann::json s;
        s["cycle"] = nlohmann::json::array();
        for (auto [u, v] : step.cycle) s["cycle"].push_back({u, v});
        s["candidates"] = nlohmann::json::array();
        for (auto [u, v] : step.candidates) s["candidates"].push_back({u, v});
        s["scores"] = step.scores;
        s["discarded"] = {step.discarded.first, step.discarded.second};
        s["fallback"] = step.fallback;
        j["steps"].push_back(std::move(s));
    }
    return j.dump(2);
}

inline CycleResolutionTrace trace_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    auto parse_edge = [](const nlohmann::json& e) -> std::pair<NodeId, NodeId> {
        if (!e.is_array() || e.size() != 2)
            throw std::invalid_argument("trace_from_json: edge must be a pair of node ids");
        return {e[0].get<NodeId>(), e[1].get<NodeId>()};
    };
    CycleResolutionTrace trace;
    for (const auto& s : j.at("steps")) {
        CycleResolutionStep step;
        for (const auto& e : s.at("cycle")) step.cycle.push_back(parse_edge(e));
        for (const auto& e : s.at("candidates")) step.candidates.push_back(parse_edge(e));
        step.scores = s.at("scores").get<std::vector<double>>();
        step.discarded = parse_edge(s.at("discarded"));
        step.fallback = s.value("fallback", false);
        if (step.scores.size() != step.candidates.size())
            throw std::invalid_argument("trace_from_json: scores and candidates differ in length");
        if (std::find(step.candidates.begin(), step.candidates.end(), step.discarded) ==
            step.candidates.end())
            throw std::invalid_argument("trace_from_json: discarded edge is not a candidate");
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Dispatching merge
// ---------------------------------------------------------------------------

/**
 * Merge local results per cfg: the consensus merge when cfg.finite_sample is
 * off, the data-driven merge (which requires `data`) when it is on.  With
 * cfg.apply_meek the result is closed under the Meek rules afterwards; on the
 * finite-sample path the new orientations can complete a directed cycle, in
 * which case cycle resolution resumes and the extra removals are appended to
 * the trace.
 */
inline FiniteMergeResult merge(const Superstructure& g, const std::vector<SubsetResult>& results,
                               const MergeConfig& cfg, const Dataset* data = nullptr) {
    cfg.validate();
    if (!cfg.finite_sample) {
        MixedGraph out = screen_infinite(g, results);
        if (cfg.apply_meek) apply_meek_closure(out);
        return FiniteMergeResult{out, {}, out};
    }
    if (data == nullptr)
        throw std::invalid_argument("merge: finite_sample requires a Dataset");
    FiniteMergeResult res = screen_finite(g, results, *data, cfg);
    if (cfg.apply_meek) {
        apply_meek_closure(res.graph);
        std::vector<char> overlap = detail::overlap_mask(g.p(), results);
        while (auto cycle = find_directed_cycle(res.graph))
            detail::resolve_one_cycle(res.graph, *cycle, overlap, *data, res.trace);
    }
    return res;
}

}  // namespace pcd
