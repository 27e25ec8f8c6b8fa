#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pcd/dataset.hpp"
#include "pcd/graph.hpp"
#include "pcd/learners.hpp"
#include "pcd/warnings.hpp"

namespace pcd {

struct CommunitySpec {
    int size = 1;
    int attachment = 1;  // edges added per arriving node (preferential attachment)
};

struct GraphSpec {
    std::vector<CommunitySpec> communities;
    int inter_community = 0;          // edges wired between communities
    std::uint64_t seed = 0;
    bool delete_cycle_edges = false;  // drop order-violating edges instead of flipping
};

namespace detail {

// Draws an index in [0, weights.size()) with probability proportional to the
// (positive integer) weights, using one uniform draw over the total mass.
inline int weighted_pick(std::mt19937_64& rng, const std::vector<long long>& weights) {
    long long total = 0;
    for (long long w : weights) total += w;
    std::uniform_int_distribution<long long> dist(0, total - 1);
    long long ticket = dist(rng);
    for (size_t i = 0; i < weights.size(); ++i) {
        if (ticket < weights[i]) return static_cast<int>(i);
        ticket -= weights[i];
    }
    return static_cast<int>(weights.size()) - 1;
}

}  // namespace detail

/**
 * Ground-truth DAG generator: one Barabasi-Albert scale-free graph per
 * community (each arriving node attaches to `attachment` distinct existing
 * nodes, chosen preferentially by degree), plus `inter_community` edges whose
 * endpoints are degree-weighted draws from two distinct communities.  A
 * random node permutation then fixes the topological order; edges recorded
 * against the order are flipped to follow it (or deleted when
 * delete_cycle_edges is set), so the result is acyclic by construction.
 * Deterministic for a fixed spec.
 */
inline Dag generate_dag(const GraphSpec& spec) {
    if (spec.communities.empty())
        throw std::invalid_argument("generate_dag: need at least one community");
    for (const CommunitySpec& c : spec.communities) {
        if (c.size < 1) throw std::invalid_argument("generate_dag: community size must be >= 1");
        if (c.attachment < 1)
            throw std::invalid_argument("generate_dag: attachment must be >= 1");
        if (c.size > 1 && c.attachment >= c.size)
            throw std::invalid_argument("generate_dag: attachment must be below the community size");
    }
    if (spec.inter_community < 0)
        throw std::invalid_argument("generate_dag: inter_community must be >= 0");
    if (spec.inter_community > 0 && spec.communities.size() < 2)
        throw std::invalid_argument("generate_dag: inter-community edges need >= 2 communities");

    std::mt19937_64 rng(spec.seed);
    std::vector<std::pair<NodeId, NodeId>> raw;  // provisional direction
    std::set<std::pair<NodeId, NodeId>> seen;    // unordered-pair registry
    std::vector<std::pair<int, int>> ranges;     // [first, last) ids per community
    int p = 0;
    for (const CommunitySpec& c : spec.communities) {
        ranges.emplace_back(p, p + c.size);
        p += c.size;
    }
    std::vector<long long> degree(static_cast<size_t>(p), 0);
    auto place = [&](NodeId a, NodeId b) {
        raw.emplace_back(a, b);
        seen.insert(std::minmax(a, b));
        ++degree[static_cast<size_t>(a)];
        ++degree[static_cast<size_t>(b)];
    };

    for (size_t ci = 0; ci < spec.communities.size(); ++ci) {
        auto [first, last] = ranges[ci];
        const int m = spec.communities[ci].attachment;
        if (last - first < 2) continue;
        std::vector<NodeId> repeated;
        std::vector<NodeId> targets;
        for (int t = 0; t < m; ++t) targets.push_back(first + t);
        for (NodeId v = first + m; v < last; ++v) {
            for (NodeId t : targets) place(v, t);
            for (NodeId t : targets) repeated.push_back(t);
            for (int t = 0; t < m; ++t) repeated.push_back(v);
            if (v + 1 < last) {
                targets.clear();
                std::uniform_int_distribution<size_t> pick(0, repeated.size() - 1);
                while (static_cast<int>(targets.size()) < m) {
                    NodeId cand = repeated[pick(rng)];
                    if (std::find(targets.begin(), targets.end(), cand) == targets.end())
                        targets.push_back(cand);
                }
            }
        }
    }

    std::uniform_int_distribution<size_t> pick_comm(0, spec.communities.size() - 1);
    for (int e = 0; e < spec.inter_community; ++e) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            size_t ci = pick_comm(rng), cj = pick_comm(rng);
            if (ci == cj) continue;
            auto pick_node = [&](size_t c) {
                auto [first, last] = ranges[c];
                std::vector<long long> w;
                for (NodeId v = first; v < last; ++v)
                    w.push_back(degree[static_cast<size_t>(v)] + 1);
                return first + detail::weighted_pick(rng, w);
            };
            NodeId u = pick_node(ci), v = pick_node(cj);
            if (seen.count(std::minmax(u, v))) continue;
            place(u, v);
            placed = true;
        }
        if (!placed) {
            warn("generate_dag: could not place inter-community edge " + std::to_string(e));
            break;
        }
    }

    std::vector<NodeId> order(static_cast<size_t>(p));
    for (int v = 0; v < p; ++v) order[static_cast<size_t>(v)] = v;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> pos(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) pos[static_cast<size_t>(order[static_cast<size_t>(i)])] = i;

    std::vector<std::pair<NodeId, NodeId>> edges;
    for (auto [a, b] : raw) {
        if (pos[static_cast<size_t>(a)] < pos[static_cast<size_t>(b)])
            edges.emplace_back(a, b);
        else if (!spec.delete_cycle_edges)
            edges.emplace_back(b, a);
    }
    return Dag(p, edges);
}

// ---------------------------------------------------------------------------
// Linear-Gaussian structural model: X_j = sum_{i in Pa(j)} W_ij X_i + eps_j
// with eps_j ~ N(0, noise_vars[j]).
// ---------------------------------------------------------------------------
struct SemModel {
    Dag dag{1};
    std::map<std::pair<NodeId, NodeId>, double> weights;  // keyed by (i, j) for i -> j
    std::vector<double> noise_vars;
    std::uint64_t seed = 0;

    void validate() const {
        std::vector<std::pair<NodeId, NodeId>> edges = dag.edges();
        if (weights.size() != edges.size())
            throw std::invalid_argument("SemModel: weight count does not match edge count");
        for (auto [u, v] : edges) {
            auto it = weights.find({u, v});
            if (it == weights.end())
                throw std::invalid_argument("SemModel: missing weight for edge " +
                                            std::to_string(u) + "->" + std::to_string(v));
            if (it->second == 0.0)
                throw std::invalid_argument("SemModel: zero weight on edge " + std::to_string(u) +
                                            "->" + std::to_string(v));
        }
        if (static_cast<int>(noise_vars.size()) != dag.p())
            throw std::invalid_argument("SemModel: need one noise variance per node");
        for (double s2 : noise_vars)
            if (!(s2 > 0.0 && s2 <= 1.0))
                throw std::invalid_argument("SemModel: noise variances must lie in (0,1]");
    }
};

// Random parameters for a given structure: weights uniform on +-[0.5, 1.0]
// (bounded away from zero so near-unfaithful draws are rare), noise variances
// uniform on (0,1].
inline SemModel random_sem(const Dag& dag, std::uint64_t seed, double weight_low = 0.5,
                           double weight_high = 1.0) {
    if (!(weight_low > 0.0 && weight_high >= weight_low))
        throw std::invalid_argument("random_sem: need 0 < weight_low <= weight_high");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(weight_low, weight_high);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SemModel model;
    model.dag = dag;
    model.seed = seed;
    for (auto [u, v] : dag.edges()) {
        double w = mag(rng);
        if (unit(rng) < 0.5) w = -w;
        model.weights[{u, v}] = w;
    }
    for (int j = 0; j < dag.p(); ++j) model.noise_vars.push_back(1.0 - unit(rng));
    return model;
}

// Model-implied covariance (I - W)^-T D (I - W)^-1 for W the weighted
// adjacency and D the noise variances.
inline Eigen::MatrixXd implied_covariance(const SemModel& model) {
    model.validate();
    const int p = model.dag.p();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(p, p);
    for (const auto& [edge, wt] : model.weights) w(edge.first, edge.second) = wt;
    Eigen::MatrixXd binv = (Eigen::MatrixXd::Identity(p, p) - w).inverse();
    Eigen::VectorXd d(p);
    for (int j = 0; j < p; ++j) d(j) = model.noise_vars[static_cast<size_t>(j)];
    return binv.transpose() * d.asDiagonal() * binv;
}

// Ancestral sampling in topological order.
inline Dataset sample_sem(const SemModel& model, int n, std::uint64_t seed) {
    model.validate();
    if (n < 1) throw std::invalid_argument("sample_sem: need n >= 1");
    const int p = model.dag.p();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(n, p);
    for (NodeId j : model.dag.topological_order()) {
        const double sd = std::sqrt(model.noise_vars[static_cast<size_t>(j)]);
        for (int r = 0; r < n; ++r) x(r, j) = sd * gauss(rng);
        for (NodeId i : model.dag.parents(j)) x.col(j) += model.weights.at({i, j}) * x.col(i);
    }
    return Dataset(std::move(x), seed);
}

// ---------------------------------------------------------------------------
// Superstructures.
// ---------------------------------------------------------------------------

// Perfect superstructure: the true skeleton plus ceil(frac * |E*|) extra
// pairs drawn uniformly from the absent ones (clamped at the complete graph).
inline Superstructure superstructure_with_extras(const Dag& gstar, double frac,
                                                 std::uint64_t seed) {
    if (frac < 0.0) throw std::invalid_argument("superstructure_with_extras: frac must be >= 0");
    Superstructure ss = skeleton_superstructure(gstar);
    ss.set_perfect(true);
    const int p = gstar.p();
    std::vector<std::pair<NodeId, NodeId>> absent;
    for (NodeId u = 0; u < p; ++u)
        for (NodeId v = u + 1; v < p; ++v)
            if (!ss.has_edge(u, v)) absent.emplace_back(u, v);
    size_t extras = static_cast<size_t>(
        std::ceil(frac * static_cast<double>(gstar.edges().size()) - 1e-9));
    if (extras > absent.size()) {
        warn("superstructure_with_extras: clamped at the complete graph (" +
             std::to_string(absent.size()) + " of " + std::to_string(extras) +
             " extra edges available)");
        extras = absent.size();
    }
    std::mt19937_64 rng(seed);
    std::shuffle(absent.begin(), absent.end(), rng);
    for (size_t k = 0; k < extras; ++k) ss.add_edge(absent[k].first, absent[k].second);
    return ss;
}

// Estimated superstructure: the skeleton PC finds on the full variable set.
// The conditioning-set cap defaults to 1: a superstructure must keep recall
// high (missing true edges cannot be recovered downstream, extra edges can be
// pruned), and deep conditioning trades recall away for precision.
inline Superstructure superstructure_from_pc(const Dataset& data, double alpha,
                                             std::optional<int> max_cond_set = 1) {
    if (data.n() <= 3) throw std::invalid_argument("superstructure_from_pc: need n > 3");
    LearnerConfig cfg;
    cfg.algorithm = LearnerAlgorithm::PC;
    cfg.alpha = alpha;
    cfg.max_cond_set = max_cond_set;
    std::vector<NodeId> all(static_cast<size_t>(data.p()));
    for (int v = 0; v < data.p(); ++v) all[static_cast<size_t>(v)] = v;
    SubsetResult res = pc_learn(data, Subset(data.p(), all), cfg);
    Superstructure ss(data.p(), false);
    for (const EdgeRecord& e : res.graph.edges()) ss.add_edge(e.u, e.v);
    return ss;
}

// ---------------------------------------------------------------------------
// SemModel JSON (edges, weights, variances, seed).
// ---------------------------------------------------------------------------
inline std::string sem_model_to_json(const SemModel& model) {
    model.validate();
    nlohmann::json j;
    j["p"] = model.dag.p();
    j["seed"] = model.seed;
    j["edges"] = nlohmann::json::array();
    j["weights"] = nlohmann::json::array();
    for (auto [u, v] : model.dag.edges()) {
        j["edges"].push_back({u, v});
        j["weights"].push_back(model.weights.at({u, v}));
    }
    j["noise_vars"] = model.noise_vars;
    return j.dump(2) + "\n";
}

inline SemModel sem_model_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SemModel model;
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (const auto& e : j.at("edges"))
        edges.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
    model.dag = Dag(j.at("p").get<int>(), edges);
    const auto& ws = j.at("weights");
    if (ws.size() != edges.size())
        throw std::invalid_argument("SemModel JSON: weights and edges differ in length");
    for (size_t k = 0; k < edges.size(); ++k)
        model.weights[edges[k]] = ws.at(k).get<double>();
    model.noise_vars = j.at("noise_vars").get<std::vector<double>>();
    model.seed = j.value("seed", std::uint64_t{0});
    model.validate();
    return model;
}

}  // namespace pcd
