#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <boost/math/distributions/normal.hpp>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pcd/dataset.hpp"
#include "pcd/graph.hpp"
#include "pcd/latent.hpp"
#include "pcd/orientation.hpp"
#include "pcd/partition.hpp"
#include "pcd/scoring.hpp"

namespace pcd {

enum class LearnerAlgorithm { PC, ExactExhaustive, Oracle };

inline std::string learner_algorithm_name(LearnerAlgorithm a) {
    switch (a) {
        case LearnerAlgorithm::PC: return "pc";
        case LearnerAlgorithm::ExactExhaustive: return "exact";
        case LearnerAlgorithm::Oracle: return "oracle";
    }
    throw std::logic_error("learner_algorithm_name: bad algorithm");
}

inline LearnerAlgorithm learner_algorithm_from_name(const std::string& name) {
    if (name == "pc") return LearnerAlgorithm::PC;
    if (name == "exact") return LearnerAlgorithm::ExactExhaustive;
    if (name == "oracle") return LearnerAlgorithm::Oracle;
    throw std::invalid_argument("unknown learner '" + name + "'");
}

struct LearnerConfig {
    LearnerAlgorithm algorithm = LearnerAlgorithm::PC;
    double alpha = 0.05;
    std::optional<int> max_cond_set;            // cap on conditioning-set size
    std::optional<Superstructure> fixed_gaps;   // pairs outside it are never adjacent
    std::optional<Dag> oracle_truth;            // required by the oracle learner

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("LearnerConfig: alpha must lie in (0,1)");
        if (max_cond_set && *max_cond_set < 0)
            throw std::invalid_argument("LearnerConfig: max_cond_set must be non-negative");
    }
};

struct SubsetResult {
    Subset subset;
    MixedGraph graph;  // over subset-local ids
    double wall_time = 0.0;
    LearnerConfig learner;
};

// Conditioning covariance was numerically singular; carries the offending set.
class CiSingularError : public std::runtime_error {
  public:
    CiSingularError(std::vector<NodeId> cond, const std::string& msg)
        : std::runtime_error(msg), cond_(std::move(cond)) {}
    const std::vector<NodeId>& conditioning_set() const { return cond_; }

  private:
    std::vector<NodeId> cond_;
};

namespace detail {

inline std::string id_set_string(const std::vector<NodeId>& ids) {
    std::string out = "{";
    for (size_t k = 0; k < ids.size(); ++k) {
        if (k) out += ",";
        out += std::to_string(ids[k]);
    }
    return out + "}";
}

/**
 * Partial correlation r_{ab.K} from a correlation matrix via the Schur
 * complement of the conditioning block:
 *     r = (C_ab - C_aK C_KK^{-1} C_Kb) / sqrt(va * vb),
 *     vx = C_xx - C_xK C_KK^{-1} C_Kx.
 * `report_ids` are the caller-facing ids of K used in the singularity error.
 */
inline double partial_correlation(const Eigen::MatrixXd& C, int a, int b,
                                  const std::vector<int>& K,
                                  const std::vector<NodeId>& report_ids) {
    if (K.empty()) return C(a, b);
    const int k = static_cast<int>(K.size());
    Eigen::MatrixXd ckk(k, k);
    Eigen::VectorXd cka(k), ckb(k);
    for (int x = 0; x < k; ++x) {
        cka(x) = C(K[static_cast<size_t>(x)], a);
        ckb(x) = C(K[static_cast<size_t>(x)], b);
        for (int y = 0; y < k; ++y) ckk(x, y) = C(K[static_cast<size_t>(x)], K[static_cast<size_t>(y)]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(ckk);
    if (llt.info() != Eigen::Success)
        throw CiSingularError(report_ids, "singular conditioning covariance for set " +
                                              id_set_string(report_ids));
    Eigen::VectorXd sa = llt.solve(cka), sb = llt.solve(ckb);
    double va = C(a, a) - cka.dot(sa);
    double vb = C(b, b) - ckb.dot(sb);
    if (va <= 1e-14 || vb <= 1e-14)
        throw CiSingularError(report_ids,
                              "conditioning set " + id_set_string(report_ids) +
                                  " determines one of the tested nodes (zero residual variance)");
    return (C(a, b) - cka.dot(sb)) / std::sqrt(va * vb);
}

inline double fisher_z_threshold(double alpha) {
    boost::math::normal_distribution<double> normal;
    return boost::math::quantile(normal, 1.0 - alpha / 2.0);
}

// Fisher-z conditional-independence decision on a correlation matrix.
inline bool fisher_z_independent(const Eigen::MatrixXd& C, int n, int a, int b,
                                 const std::vector<int>& K, double threshold,
                                 const std::vector<NodeId>& report_ids) {
    if (n <= static_cast<int>(K.size()) + 3)
        throw std::invalid_argument("fisher_z: need n > |cond| + 3, got n = " + std::to_string(n) +
                                    " with |cond| = " + std::to_string(K.size()));
    double r = partial_correlation(C, a, b, K, report_ids);
    r = std::clamp(r, -1.0 + 1e-12, 1.0 - 1e-12);
    double z = std::sqrt(static_cast<double>(n) - static_cast<double>(K.size()) - 3.0) *
               std::atanh(r);
    return std::abs(z) <= threshold;
}

// Visits every k-subset of `items` in lexicographic order until the visitor
// returns true; reports whether a visit succeeded.
template <class F>
bool for_each_subset(const std::vector<int>& items, int k, F&& visit) {
    const int m = static_cast<int>(items.size());
    if (k > m) return false;
    std::vector<int> idx(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<size_t>(i)] = i;
    std::vector<int> pick(static_cast<size_t>(k));
    while (true) {
        for (int i = 0; i < k; ++i) pick[static_cast<size_t>(i)] = items[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        if (visit(pick)) return true;
        int i = k - 1;
        while (i >= 0 && idx[static_cast<size_t>(i)] == m - k + i) --i;
        if (i < 0) return false;
        ++idx[static_cast<size_t>(i)];
        for (int j = i + 1; j < k; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
    }
}

}  // namespace detail

/**
 * Fisher-z test of X_i independent of X_j given X_cond: independent iff
 *     |sqrt(n - |cond| - 3) * atanh(r_hat)| <= Phi^{-1}(1 - alpha/2),
 * with r_hat the sample partial correlation.
 */
inline bool fisher_z_ci_test(const Dataset& data, NodeId i, NodeId j,
                             const std::vector<NodeId>& cond, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("fisher_z_ci_test: alpha must lie in (0,1)");
    if (i == j) throw std::invalid_argument("fisher_z_ci_test: i == j");
    detail::check_node(i, data.p(), "fisher_z_ci_test");
    detail::check_node(j, data.p(), "fisher_z_ci_test");
    std::vector<int> K;
    for (NodeId c : cond) {
        detail::check_node(c, data.p(), "fisher_z_ci_test");
        if (c == i || c == j)
            throw std::invalid_argument("fisher_z_ci_test: conditioning set contains a tested node");
        K.push_back(c);
    }
    std::sort(K.begin(), K.end());
    if (std::adjacent_find(K.begin(), K.end()) != K.end())
        throw std::invalid_argument("fisher_z_ci_test: duplicate conditioning node");
    std::vector<NodeId> report(K.begin(), K.end());
    return detail::fisher_z_independent(data.correlation(), data.n(), i, j, K,
                                        detail::fisher_z_threshold(alpha), report);
}

namespace detail {

// Conditional-independence callback over subset-local ids.
using LocalCiTest = std::function<bool(int, int, const std::vector<int>&)>;

/**
 * PC with the order-independent (stable) skeleton phase, then v-structure
 * orientation and Meek closure.  At each level the neighbor sets are frozen
 * before any removal, so the output does not depend on the sweep order.
 * V-structures for pairs that were never tested (gapped a priori) fall back
 * to an explicit separating-set search; if none exists the triple is left
 * unoriented.  Conflicting v-structures resolve by letting the later triple
 * in the canonical (a, b, c) sweep overwrite earlier marks.
 */
inline MixedGraph pc_core(int ps, const std::vector<std::vector<char>>& allowed,
                          const LocalCiTest& indep, const std::optional<int>& max_cond) {
    std::vector<std::vector<char>> adj(static_cast<size_t>(ps),
                                       std::vector<char>(static_cast<size_t>(ps), 0));
    for (int a = 0; a < ps; ++a)
        for (int b = 0; b < ps; ++b)
            if (a != b && allowed[static_cast<size_t>(a)][static_cast<size_t>(b)])
                adj[static_cast<size_t>(a)][static_cast<size_t>(b)] = 1;

    std::map<std::pair<int, int>, std::vector<int>> sepsets;
    auto neighbors_of = [&](const std::vector<std::vector<char>>& g, int v, int excl) {
        std::vector<int> out;
        for (int u = 0; u < ps; ++u)
            if (u != v && u != excl && g[static_cast<size_t>(v)][static_cast<size_t>(u)]) out.push_back(u);
        return out;
    };

    for (int level = 0;; ++level) {
        if (max_cond && level > *max_cond) break;
        const std::vector<std::vector<char>> frozen = adj;
        bool testable = false;
        for (int a = 0; a < ps; ++a) {
            for (int b = a + 1; b < ps; ++b) {
                if (!adj[static_cast<size_t>(a)][static_cast<size_t>(b)]) continue;
                bool removed = false;
                for (int side = 0; side < 2 && !removed; ++side) {
                    if (level == 0 && side == 1) continue;  // the empty set was already tested
                    int x = side == 0 ? a : b, y = side == 0 ? b : a;
                    std::vector<int> nbrs = neighbors_of(frozen, x, y);
                    if (static_cast<int>(nbrs.size()) < level) continue;
                    testable = true;
                    removed = for_each_subset(nbrs, level, [&](const std::vector<int>& K) {
                        if (!indep(a, b, K)) return false;
                        sepsets[{a, b}] = K;
                        return true;
                    });
                }
                if (removed) {
                    adj[static_cast<size_t>(a)][static_cast<size_t>(b)] = 0;
                    adj[static_cast<size_t>(b)][static_cast<size_t>(a)] = 0;
                }
            }
        }
        if (!testable) break;
    }

    MixedGraph mg(ps);
    for (int a = 0; a < ps; ++a)
        for (int b = a + 1; b < ps; ++b)
            if (adj[static_cast<size_t>(a)][static_cast<size_t>(b)]) mg.add_undirected(a, b);

    // Separating set for an unshielded pair, searching on demand when the
    // pair was never tested during the skeleton phase.
    auto separating_set = [&](int a, int b) -> std::optional<std::vector<int>> {
        auto it = sepsets.find({a, b});
        if (it != sepsets.end()) return it->second;
        for (int side = 0; side < 2; ++side) {
            int x = side == 0 ? a : b, y = side == 0 ? b : a;
            std::vector<int> nbrs = neighbors_of(adj, x, y);
            int cap = static_cast<int>(nbrs.size());
            if (max_cond) cap = std::min(cap, *max_cond);
            for (int k = side == 0 ? 0 : 1; k <= cap; ++k) {  // the empty set needs one look only
                std::optional<std::vector<int>> found;
                for_each_subset(nbrs, k, [&](const std::vector<int>& K) {
                    if (!indep(a, b, K)) return false;
                    found = K;
                    return true;
                });
                if (found) return found;
            }
        }
        return std::nullopt;
    };

    for (int a = 0; a < ps; ++a) {
        for (int b = a + 1; b < ps; ++b) {
            if (mg.adjacent(a, b)) continue;
            for (int c = 0; c < ps; ++c) {
                if (c == a || c == b || !mg.adjacent(a, c) || !mg.adjacent(b, c)) continue;
                std::optional<std::vector<int>> sep = separating_set(a, b);
                if (!sep) continue;
                if (!std::binary_search(sep->begin(), sep->end(), c)) {
                    mg.orient(a, c);
                    mg.orient(b, c);
                }
            }
        }
    }
    apply_meek_closure(mg);
    return mg;
}

inline std::vector<std::vector<char>> allowed_pairs(const Subset& subset,
                                                    const std::optional<Superstructure>& gaps) {
    const int ps = subset.size();
    std::vector<std::vector<char>> allowed(static_cast<size_t>(ps),
                                           std::vector<char>(static_cast<size_t>(ps), 1));
    if (gaps) {
        if (gaps->p() != subset.host_p())
            throw std::invalid_argument("fixed_gaps node count does not match the data");
        for (int a = 0; a < ps; ++a)
            for (int b = 0; b < ps; ++b)
                if (a != b && !gaps->has_edge(subset.global_of(a), subset.global_of(b)))
                    allowed[static_cast<size_t>(a)][static_cast<size_t>(b)] = 0;
    }
    return allowed;
}

inline void reject_degenerate(const Dataset& data, const Subset& subset, const char* who) {
    for (NodeId v : data.degenerate_columns())
        if (subset.contains(v))
            throw std::runtime_error(std::string(who) + ": column " + std::to_string(v) +
                                     " has zero variance");
}

}  // namespace detail

/**
 * PC on the subset columns of the data with the Fisher-z test.  The output is
 * a CPDAG over subset-local ids; pairs absent from cfg.fixed_gaps are never
 * adjacent.  Deterministic given data and configuration.
 */
inline SubsetResult pc_learn(const Dataset& data, const Subset& subset, const LearnerConfig& cfg) {
    cfg.validate();
    if (subset.host_p() != data.p())
        throw std::invalid_argument("pc_learn: subset host does not match the data");
    detail::reject_degenerate(data, subset, "pc_learn");
    auto t0 = std::chrono::steady_clock::now();

    const int ps = subset.size();
    // Local correlation block: one gather, then every CI test stays local.
    Eigen::MatrixXd corr(ps, ps);
    {
        const Eigen::MatrixXd& full = data.correlation();
        for (int a = 0; a < ps; ++a)
            for (int b = 0; b < ps; ++b)
                corr(a, b) = full(subset.global_of(a), subset.global_of(b));
    }
    const double threshold = detail::fisher_z_threshold(cfg.alpha);
    const int n = data.n();
    detail::LocalCiTest indep = [&](int a, int b, const std::vector<int>& K) {
        std::vector<NodeId> report;
        report.reserve(K.size());
        for (int c : K) report.push_back(subset.global_of(c));
        return detail::fisher_z_independent(corr, n, a, b, K, threshold, report);
    };

    MixedGraph graph = detail::pc_core(ps, detail::allowed_pairs(subset, cfg.fixed_gaps), indep,
                                       cfg.max_cond_set);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return SubsetResult{subset, std::move(graph), secs, cfg};
}

// PC with a caller-supplied conditional-independence test over global ids
// (e.g. a d-separation oracle); data never enters.
using CiTestFn = std::function<bool(NodeId, NodeId, const std::vector<NodeId>&)>;

inline SubsetResult pc_learn_with_ci(const Subset& subset, const CiTestFn& indep,
                                     const LearnerConfig& cfg) {
    cfg.validate();
    auto t0 = std::chrono::steady_clock::now();
    detail::LocalCiTest local = [&](int a, int b, const std::vector<int>& K) {
        std::vector<NodeId> cond;
        cond.reserve(K.size());
        for (int c : K) cond.push_back(subset.global_of(c));
        return indep(subset.global_of(a), subset.global_of(b), cond);
    };
    MixedGraph graph = detail::pc_core(subset.size(), detail::allowed_pairs(subset, cfg.fixed_gaps),
                                       local, cfg.max_cond_set);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return SubsetResult{subset, std::move(graph), secs, cfg};
}

/**
 * Exhaustive BIC-optimal search for subsets of at most five nodes: every
 * topological order is scanned and each node picks its best predecessor
 * subset from a cached family-score table, which visits every DAG.  The
 * winner is reported as its CPDAG.  Ties keep the first order in
 * lexicographic sweep, which is immaterial inside an equivalence class.
 */
inline SubsetResult exact_learn(const Dataset& data, const Subset& subset,
                                const LearnerConfig& cfg) {
    cfg.validate();
    if (subset.host_p() != data.p())
        throw std::invalid_argument("exact_learn: subset host does not match the data");
    const int ps = subset.size();
    if (ps > 5)
        throw std::invalid_argument("exact_learn: subset has " + std::to_string(ps) +
                                    " nodes; the exhaustive search is capped at 5");
    detail::reject_degenerate(data, subset, "exact_learn");
    auto t0 = std::chrono::steady_clock::now();

    Eigen::MatrixXd S(ps, ps);
    {
        const Eigen::MatrixXd& full = data.covariance();
        for (int a = 0; a < ps; ++a)
            for (int b = 0; b < ps; ++b)
                S(a, b) = full(subset.global_of(a), subset.global_of(b));
    }
    const int n = data.n();

    // Parent sets allowed by fixed_gaps, as a bitmask per node.
    std::vector<std::vector<char>> allowed = detail::allowed_pairs(subset, cfg.fixed_gaps);
    std::vector<unsigned> allowed_mask(static_cast<size_t>(ps), 0);
    for (int j = 0; j < ps; ++j)
        for (int i = 0; i < ps; ++i)
            if (i != j && allowed[static_cast<size_t>(i)][static_cast<size_t>(j)])
                allowed_mask[static_cast<size_t>(j)] |= 1u << i;

    // Family-score cache over parent bitmasks.
    const unsigned masks = 1u << ps;
    std::vector<std::vector<double>> fam(static_cast<size_t>(ps),
                                         std::vector<double>(masks, 0.0));
    for (int j = 0; j < ps; ++j)
        for (unsigned mask = 0; mask < masks; ++mask) {
            if (mask & (1u << j)) continue;
            if ((mask & allowed_mask[static_cast<size_t>(j)]) != mask) continue;
            std::vector<NodeId> parents;
            for (int i = 0; i < ps; ++i)
                if (mask & (1u << i)) parents.push_back(i);
            fam[static_cast<size_t>(j)][mask] = family_bic(S, n, j, parents);
        }

    std::vector<int> order(static_cast<size_t>(ps));
    for (int i = 0; i < ps; ++i) order[static_cast<size_t>(i)] = i;
    double best_score = -std::numeric_limits<double>::infinity();
    std::vector<unsigned> best_parents(static_cast<size_t>(ps), 0);
    do {
        double total = 0.0;
        std::vector<unsigned> chosen(static_cast<size_t>(ps), 0);
        unsigned before = 0;
        for (int t = 0; t < ps; ++t) {
            int j = order[static_cast<size_t>(t)];
            unsigned pool = before & allowed_mask[static_cast<size_t>(j)];
            double best_fam = fam[static_cast<size_t>(j)][0];
            unsigned best_mask = 0;
            // Enumerate submasks of the allowed predecessor pool.
            for (unsigned sub = pool; sub != 0; sub = (sub - 1) & pool) {
                if (fam[static_cast<size_t>(j)][sub] > best_fam) {
                    best_fam = fam[static_cast<size_t>(j)][sub];
                    best_mask = sub;
                }
            }
            total += best_fam;
            chosen[static_cast<size_t>(j)] = best_mask;
            before |= 1u << j;
        }
        if (total > best_score) {
            best_score = total;
            best_parents = chosen;
        }
    } while (std::next_permutation(order.begin(), order.end()));

    std::vector<std::pair<NodeId, NodeId>> edges;
    for (int j = 0; j < ps; ++j)
        for (int i = 0; i < ps; ++i)
            if (best_parents[static_cast<size_t>(j)] & (1u << i)) edges.emplace_back(i, j);
    MixedGraph graph = cpdag_of_dag(Dag(ps, edges));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return SubsetResult{subset, std::move(graph), secs, cfg};
}

// Ground-truth projection learner for synthetic runs.
inline SubsetResult oracle_subset_learn(const Subset& subset, const LearnerConfig& cfg) {
    cfg.validate();
    if (!cfg.oracle_truth)
        throw std::invalid_argument("oracle learner needs a ground-truth graph in the config");
    auto t0 = std::chrono::steady_clock::now();
    MixedGraph graph = oracle_learn(*cfg.oracle_truth, subset);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return SubsetResult{subset, std::move(graph), secs, cfg};
}

inline SubsetResult learn_subset(const Dataset& data, const Subset& subset,
                                 const LearnerConfig& cfg) {
    switch (cfg.algorithm) {
        case LearnerAlgorithm::PC: return pc_learn(data, subset, cfg);
        case LearnerAlgorithm::ExactExhaustive: return exact_learn(data, subset, cfg);
        case LearnerAlgorithm::Oracle: return oracle_subset_learn(subset, cfg);
    }
    throw std::logic_error("learn_subset: bad algorithm");
}

/**
 * Runs the configured learner on every subset of the partition.  Subsets are
 * pure and independent, so they may run on up to `workers` threads; results
 * are keyed by subset index and identical to a sequential run.  The first
 * failing subset (by index) propagates with its index prefixed.
 */
inline std::vector<SubsetResult> learn_all(const Dataset& data, const Partition& part,
                                           const LearnerConfig& cfg, int workers) {
    cfg.validate();
    if (workers < 1) throw std::invalid_argument("learn_all: workers must be positive");
    if (part.host_p() != data.p())
        throw std::invalid_argument("learn_all: partition does not cover the data columns");
    // Materialize the shared moment cache before fanning out.
    data.covariance();
    data.correlation();

    const int k = part.size();
    std::vector<std::optional<SubsetResult>> results(static_cast<size_t>(k));
    std::vector<std::exception_ptr> errors(static_cast<size_t>(k));
    std::atomic<int> next{0};
    auto run = [&] {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= k) return;
            try {
                results[static_cast<size_t>(i)] = learn_subset(data, part.subset(i), cfg);
            } catch (...) {
                errors[static_cast<size_t>(i)] = std::current_exception();
            }
        }
    };
    const int spawn = std::min(workers, k);
    if (spawn <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(spawn));
        for (int t = 0; t < spawn; ++t) pool.emplace_back(run);
        for (std::thread& t : pool) t.join();
    }

    for (int i = 0; i < k; ++i)
        if (errors[static_cast<size_t>(i)]) {
            try {
                std::rethrow_exception(errors[static_cast<size_t>(i)]);
            } catch (const std::exception& e) {
                throw std::runtime_error("learn_all: subset " + std::to_string(i) + ": " + e.what());
            }
        }
    std::vector<SubsetResult> out;
    out.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) out.push_back(std::move(*results[static_cast<size_t>(i)]));
    return out;
}

}  // namespace pcd
