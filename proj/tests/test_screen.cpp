#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "pcd/graph.hpp"
#include "pcd/latent.hpp"
#include "pcd/learners.hpp"
#include "pcd/orientation.hpp"
#include "pcd/partition.hpp"
#include "pcd/screen.hpp"
#include "pcd/synth.hpp"
#include "pcd/warnings.hpp"
#include "support.hpp"

namespace ts = testsupport;

namespace {

pcd::SubsetResult oracle_result(const pcd::Dag& truth, std::vector<pcd::NodeId> members) {
    pcd::Subset s(truth.p(), std::move(members));
    pcd::LearnerConfig cfg;
    cfg.algorithm = pcd::LearnerAlgorithm::Oracle;
    cfg.oracle_truth = truth;
    return pcd::oracle_subset_learn(s, cfg);
}

pcd::SubsetResult manual_result(int host_p, std::vector<pcd::NodeId> members,
                                const pcd::MixedGraph& local) {
    pcd::Subset s(host_p, std::move(members));
    return pcd::SubsetResult{s, local, 0.0, pcd::LearnerConfig{}};
}

pcd::Superstructure complete_superstructure(int p) {
    pcd::Superstructure g(p, /*perfect=*/true);
    for (pcd::NodeId u = 0; u < p; ++u)
        for (pcd::NodeId v = u + 1; v < p; ++v) g.add_edge(u, v);
    return g;
}

std::vector<pcd::SubsetResult> oracle_results(const pcd::Dag& truth, const pcd::Partition& part) {
    std::vector<pcd::SubsetResult> out;
    for (const pcd::Subset& s : part.subsets()) out.push_back(oracle_result(truth, s.members()));
    return out;
}

}  // namespace

TEST_CASE("single subset merge keeps filtered adjacencies and local colliders", "[screen]") {
    // Learned graph: 0 *-> 2 <-* 1 collider plus 2 o-o 3 and a stray 0 o-o 3.
    pcd::MixedGraph h(4);
    h.add_edge(0, 2, pcd::Mark::Circle, pcd::Mark::Arrow);
    h.add_edge(1, 2, pcd::Mark::Circle, pcd::Mark::Arrow);
    h.add_edge(2, 3, pcd::Mark::Circle, pcd::Mark::Circle);
    h.add_edge(0, 3, pcd::Mark::Circle, pcd::Mark::Circle);

    // The superstructure lacks {0,3}, so that learned edge is screened out.
    pcd::Superstructure g(4, /*perfect=*/false);
    g.add_edge(0, 2);
    g.add_edge(1, 2);
    g.add_edge(2, 3);

    pcd::MixedGraph out = pcd::screen_infinite(g, {manual_result(4, {0, 1, 2, 3}, h)});
    CHECK(out.edge_count() == 3);
    CHECK(out.has_directed(0, 2));
    CHECK(out.has_directed(1, 2));
    CHECK(out.has_undirected(2, 3));
    CHECK_FALSE(out.adjacent(0, 3));

    SECTION("a shielding edge in the merged graph suppresses the orientation") {
        pcd::Superstructure g2 = g;
        g2.add_edge(0, 1);
        pcd::MixedGraph h2 = h;
        h2.add_edge(0, 1, pcd::Mark::Circle, pcd::Mark::Circle);
        pcd::MixedGraph out2 = pcd::screen_infinite(g2, {manual_result(4, {0, 1, 2, 3}, h2)});
        CHECK(out2.adjacent(0, 1));
        CHECK(out2.has_undirected(0, 2));
        CHECK(out2.has_undirected(1, 2));
    }
}

TEST_CASE("projected edge is voted out by the subset that refutes it", "[screen]") {
    // Truth 0 -> 1 -> 2.  On subset {0,2} the middle node is unobserved, so
    // the local result carries a projected 0 ~ 2 edge; the full-set result
    // does not, and the consensus keeps only the true chain.
    pcd::Dag truth(3, {{0, 1}, {1, 2}});
    auto full = oracle_result(truth, {0, 1, 2});
    auto pair = oracle_result(truth, {0, 2});
    REQUIRE(pair.graph.adjacent(0, 1));  // local ids of hosts 0 and 2

    pcd::MixedGraph out = pcd::screen_infinite(complete_superstructure(3), {full, pair});
    CHECK(out.edge_count() == 2);
    CHECK(out.has_undirected(0, 1));
    CHECK(out.has_undirected(1, 2));
    CHECK_FALSE(out.adjacent(0, 2));
}

TEST_CASE("collider is restored even when a projected edge shields it locally", "[screen]") {
    // Truth: 0 -> 1 <- 2 collider, plus 0 -> 3 -> 2.  On subset {0,1,2} the
    // path through the unobserved node 3 projects an extra 0 ~ 2 edge that
    // shields the collider locally; subset {0,2,3} refutes that edge, and
    // unshieldedness judged in the merged graph recovers the orientation.
    pcd::Dag truth(4, {{0, 1}, {2, 1}, {0, 3}, {3, 2}});
    auto r1 = oracle_result(truth, {0, 1, 2});
    auto r2 = oracle_result(truth, {0, 2, 3});
    REQUIRE(r1.graph.adjacent(0, 2));                             // projected, shields locally
    REQUIRE(r1.graph.mark_at(r1.subset.local_of(1), 0) == pcd::Mark::Arrow);

    pcd::Superstructure g = pcd::skeleton_superstructure(truth);
    g.add_edge(0, 2);  // keep the projected pair a live candidate

    pcd::MixedGraph out = pcd::screen_infinite(g, {r1, r2});
    CHECK(out == pcd::cpdag_of_dag(truth));
    CHECK(pcd::mec_equivalent(out, pcd::cpdag_of_dag(truth)));
}

TEST_CASE("oracle merge over a causal expansion recovers the exact equivalence class",
          "[screen]") {
    int mismatches = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed);
        pcd::Dag truth = ts::random_dag(rng, 12, 0.25);
        pcd::Superstructure ss = pcd::superstructure_with_extras(truth, 0.10, seed);
        pcd::PartitionConfig pcfg;
        pcfg.num_communities = 3;
        pcd::Partition part = pcd::causal_expansion(ss, pcd::disjoint_partition(ss, pcfg));

        pcd::MixedGraph out = pcd::screen_infinite(ss, oracle_results(truth, part));
        pcd::MixedGraph want = pcd::cpdag_of_dag(truth);
        if (!pcd::mec_equivalent(out, want)) ++mismatches;

        // Every oriented edge of the merged graph is a true edge, so every
        // merged collider is a collider of the generating DAG.
        for (const auto& e : out.edges()) {
            if (e.mark_u == pcd::Mark::Tail && e.mark_v == pcd::Mark::Arrow)
                REQUIRE(truth.has_edge(e.u, e.v));
            if (e.mark_u == pcd::Mark::Arrow && e.mark_v == pcd::Mark::Tail)
                REQUIRE(truth.has_edge(e.v, e.u));
        }
    }
    REQUIRE(mismatches == 0);
}

TEST_CASE("merged adjacencies obey the consensus vote", "[screen]") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        std::mt19937_64 rng(seed ^ 0x5eedf00dULL);
        pcd::Dag truth = ts::random_dag(rng, 10, 0.3);
        pcd::Superstructure ss = pcd::superstructure_with_extras(truth, 0.2, seed);
        pcd::PartitionConfig pcfg;
        pcfg.num_communities = 2 + static_cast<int>(seed % 3);
        pcd::Partition part = pcd::causal_expansion(ss, pcd::disjoint_partition(ss, pcfg));
        auto results = oracle_results(truth, part);
        pcd::MixedGraph out = pcd::screen_infinite(ss, results);

        for (pcd::NodeId u = 0; u < 10; ++u)
            for (pcd::NodeId v = u + 1; v < 10; ++v) {
                int containing = 0, learned = 0;
                for (const auto& r : results) {
                    if (!(r.subset.contains(u) && r.subset.contains(v))) continue;
                    ++containing;
                    if (r.graph.adjacent(r.subset.local_of(u), r.subset.local_of(v))) ++learned;
                }
                bool unanimous =
                    containing > 0 && learned == containing && ss.has_edge(u, v);
                REQUIRE(out.adjacent(u, v) == unanimous);
            }
    }
}

TEST_CASE("merge input validation", "[screen]") {
    pcd::Superstructure g(2, /*perfect=*/true);
    g.add_edge(0, 1);

    SECTION("no results") {
        CHECK_THROWS_WITH(pcd::screen_infinite(g, {}),
                          Catch::Matchers::ContainsSubstring("no subset results"));
    }
    SECTION("superstructure edge in no subset") {
        auto a = manual_result(2, {0}, pcd::MixedGraph(1));
        auto b = manual_result(2, {1}, pcd::MixedGraph(1));
        CHECK_THROWS_WITH(pcd::screen_infinite(g, {a, b}),
                          Catch::Matchers::ContainsSubstring("not edge-covering"));
    }
    SECTION("host size mismatch") {
        auto r = manual_result(3, {0, 1, 2}, pcd::MixedGraph(3));
        CHECK_THROWS_WITH(pcd::screen_infinite(g, {r}),
                          Catch::Matchers::ContainsSubstring("superstructure has 2"));
    }
    SECTION("result graph sized unlike its subset") {
        auto r = manual_result(2, {0, 1}, pcd::MixedGraph(3));
        CHECK_THROWS_WITH(pcd::screen_infinite(g, {r}),
                          Catch::Matchers::ContainsSubstring("subset of size 2"));
    }
}

TEST_CASE("finite merge accepts partitions that cover no cross edges", "[screen]") {
    // The finite path also serves baselines built on plain disjoint
    // partitions: a superstructure edge contained in no subset is simply
    // never a candidate, so the merge is the union of the local estimates.
    pcd::Dag truth(3, {{0, 1}, {1, 2}});
    pcd::Superstructure g = pcd::skeleton_superstructure(truth);
    pcd::MixedGraph left(2);
    left.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Arrow);  // 0 -> 1
    auto results =
        std::vector{manual_result(3, {0, 1}, left), manual_result(3, {2}, pcd::MixedGraph(1))};
    pcd::Dataset data = pcd::sample_sem(pcd::random_sem(truth, 3), 200, 4);

    auto fin = pcd::screen_finite(g, results, data);
    CHECK(fin.graph.edge_count() == 1);
    CHECK(fin.graph.has_directed(0, 1));
    CHECK_FALSE(fin.graph.adjacent(1, 2));

    // The idealized merge still insists on edge coverage.
    CHECK_THROWS_WITH(pcd::screen_infinite(g, results),
                      Catch::Matchers::ContainsSubstring("not edge-covering"));
}

TEST_CASE("acyclic finite merge equals the idealized merge", "[screen]") {
    SECTION("undirected chain") {
        pcd::Dag truth(3, {{0, 1}, {1, 2}});
        auto results = std::vector{oracle_result(truth, {0, 1, 2}), oracle_result(truth, {0, 2})};
        pcd::Superstructure g = complete_superstructure(3);
        pcd::Dataset data = pcd::sample_sem(pcd::random_sem(truth, 7), 200, 8);

        auto fin = pcd::screen_finite(g, results, data);
        CHECK(fin.graph == pcd::screen_infinite(g, results));
        CHECK(fin.trace.steps.empty());
        CHECK(fin.pre_resolution == fin.graph);
    }
    SECTION("collider") {
        pcd::Dag truth(3, {{0, 2}, {1, 2}});
        auto results = std::vector{oracle_result(truth, {0, 1, 2})};
        pcd::Superstructure g = pcd::skeleton_superstructure(truth);
        pcd::Dataset data = pcd::sample_sem(pcd::random_sem(truth, 9), 200, 10);

        auto fin = pcd::screen_finite(g, results, data);
        CHECK(fin.graph == pcd::screen_infinite(g, results));
        CHECK(fin.graph.has_directed(0, 2));
        CHECK(fin.graph.has_directed(1, 2));
        CHECK(fin.trace.steps.empty());
    }
}

TEST_CASE("opposed orientations resolve to the better-scoring direction", "[screen]") {
    // Truth 0 -> 1 <- 2 with strong weights.  One result orients the pair
    // correctly inside its collider; a second result over {0,1} alone insists
    // on the reverse.  The penalized comparison of 0->1, 1->0, and no edge
    // must recover the true direction in nearly every draw.
    pcd::Dag truth(3, {{0, 1}, {2, 1}});
    pcd::MixedGraph good(3);
    good.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
    good.add_edge(2, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
    pcd::MixedGraph bad(2);  // over {0,1}: claims 1 -> 0
    bad.add_edge(0, 1, pcd::Mark::Arrow, pcd::Mark::Tail);

    pcd::Superstructure g(3, /*perfect=*/true);
    g.add_edge(0, 1);
    g.add_edge(1, 2);

    int kept_true = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        pcd::SemModel model = pcd::random_sem(truth, seed, 0.8, 1.0);
        pcd::Dataset data = pcd::sample_sem(model, 100000, seed + 1);
        auto fin = pcd::screen_finite(
            g, {manual_result(3, {0, 1, 2}, good), manual_result(3, {0, 1}, bad)}, data);
        if (fin.graph.has_directed(0, 1)) ++kept_true;
        REQUIRE(fin.graph.has_directed(2, 1));
    }
    REQUIRE(kept_true >= 95);
}

TEST_CASE("two-cycle rule drops both directions for independent columns", "[screen]") {
    // 50 independent columns: the 2 log p penalty dominates the likelihood
    // wiggle of either direction.
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        pcd::Dataset data = pcd::sample_sem(pcd::random_sem(pcd::Dag(50), seed), 100000, seed);
        CHECK(pcd::ric_two_cycle(3, 17, pcd::MixedGraph(50), data) == pcd::RicVerdict::DropBoth);
    }
}

TEST_CASE("two-cycle rule tie-breaks toward the first argument", "[screen]") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(1000, 2);
    for (int r = 0; r < 1000; ++r) {
        x(r, 0) = normal(rng);
        x(r, 1) = x(r, 0);  // exact copy: the two directions fit identically
    }
    pcd::Dataset data(x);
    CHECK(pcd::ric_two_cycle(0, 1, pcd::MixedGraph(2), data) == pcd::RicVerdict::KeepIJ);
    CHECK(pcd::ric_two_cycle(1, 0, pcd::MixedGraph(2), data) == pcd::RicVerdict::KeepIJ);
    CHECK(std::string(pcd::ric_verdict_name(pcd::RicVerdict::DropBoth)) == "drop-both");

    SECTION("argument validation") {
        CHECK_THROWS_AS(pcd::ric_two_cycle(0, 0, pcd::MixedGraph(2), data),
                        std::invalid_argument);
        CHECK_THROWS_AS(pcd::ric_two_cycle(0, 1, pcd::MixedGraph(3), data),
                        std::invalid_argument);
        CHECK_THROWS_AS(pcd::ric_two_cycle(0, 1, pcd::MixedGraph(2), data, 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("edge score separates real parents from irrelevant ones", "[screen]") {
    SECTION("independent pair scores near zero") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            pcd::Dataset data = pcd::sample_sem(pcd::random_sem(pcd::Dag(2), seed), 100000, seed);
            pcd::MixedGraph g(2);
            g.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
            CHECK(std::abs(pcd::loglikelihood_score(0, 1, g, data)) < 5.0);
        }
    }
    SECTION("unit-weight edge scores (n/2) log 2") {
        pcd::SemModel model;
        model.dag = pcd::Dag(2, {{0, 1}});
        model.weights[{0, 1}] = 1.0;
        model.noise_vars = {1.0, 1.0};
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            pcd::Dataset data = pcd::sample_sem(model, 100000, seed);
            pcd::MixedGraph g(2);
            g.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
            double rate = pcd::loglikelihood_score(0, 1, g, data) / data.n();
            CHECK(rate == Catch::Approx(0.5 * std::log(2.0)).epsilon(0.10));
        }
    }
    SECTION("zero-weight parent scores near zero next to a real one") {
        pcd::SemModel model;
        model.dag = pcd::Dag(3, {{2, 1}});
        model.weights[{2, 1}] = 0.9;
        model.noise_vars = {1.0, 1.0, 1.0};
        pcd::Dataset data = pcd::sample_sem(model, 100000, 5);
        pcd::MixedGraph g(3);
        g.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
        g.add_edge(2, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
        CHECK(std::abs(pcd::loglikelihood_score(0, 1, g, data)) < 5.0);
        CHECK(pcd::loglikelihood_score(2, 1, g, data) > 1000.0);
    }
    SECTION("preconditions") {
        pcd::Dataset data(Eigen::MatrixXd::Identity(4, 2));
        pcd::MixedGraph g(2);
        g.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Tail);
        CHECK_THROWS_WITH(pcd::loglikelihood_score(0, 1, g, data),
                          Catch::Matchers::ContainsSubstring("no directed edge"));
        CHECK_THROWS_WITH(pcd::loglikelihood_score(0, 1, pcd::MixedGraph(3), data),
                          Catch::Matchers::ContainsSubstring("3 nodes"));
    }
    SECTION("duplicated parent column falls back to a ridge with a warning") {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> normal;
        Eigen::MatrixXd x(500, 4);
        for (int r = 0; r < 500; ++r) {
            x(r, 2) = normal(rng);
            x(r, 3) = x(r, 2);
            x(r, 1) = x(r, 2) + 0.1 * normal(rng);
            x(r, 0) = normal(rng);
        }
        pcd::Dataset data(x);
        pcd::MixedGraph g(4);
        g.add_edge(2, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
        g.add_edge(3, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
        std::ostringstream captured;
        std::ostream* prev = pcd::warning_stream();
        pcd::warning_stream() = &captured;
        double s = pcd::loglikelihood_score(2, 1, g, data);
        pcd::warning_stream() = prev;
        CHECK(std::isfinite(s));
        CHECK_THAT(captured.str(), Catch::Matchers::ContainsSubstring("ridge"));
    }
}

TEST_CASE("cycle edge with the weakest likelihood is discarded", "[screen]") {
    // Data follow the chain 0 -> 1 -> 2; the back edge 2 -> 0 closing the
    // cycle explains the least and is the one removed.
    pcd::SemModel model;
    model.dag = pcd::Dag(3, {{0, 1}, {1, 2}});
    model.weights[{0, 1}] = 0.9;
    model.weights[{1, 2}] = 0.9;
    model.noise_vars = {1.0, 1.0, 1.0};
    pcd::Dataset data = pcd::sample_sem(model, 5000, 3);

    pcd::MixedGraph g(3);
    g.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
    g.add_edge(1, 2, pcd::Mark::Tail, pcd::Mark::Arrow);
    g.add_edge(2, 0, pcd::Mark::Tail, pcd::Mark::Arrow);
    std::vector<std::pair<pcd::NodeId, pcd::NodeId>> cycle{{0, 1}, {1, 2}, {2, 0}};

    pcd::Partition part(pcd::PartitionKind::ExpansiveCausal, 3,
                        {pcd::Subset(3, {0, 1, 2}), pcd::Subset(3, {0, 2})});
    pcd::MixedGraph out = pcd::score_and_discard(g, cycle, part, data);
    CHECK_FALSE(out.adjacent(0, 2));
    CHECK(out.has_directed(0, 1));
    CHECK(out.has_directed(1, 2));
    CHECK(g.adjacent(0, 2));  // the input graph is untouched
}

TEST_CASE("single overlap-incident edge is discarded regardless of score", "[screen]") {
    // The listed edges are trusted as reported; only node 3 is shared between
    // subsets, so (2,3) is the lone candidate even though it scores highest.
    pcd::SemModel model;
    model.dag = pcd::Dag(4, {{2, 3}});
    model.weights[{2, 3}] = 0.9;
    model.noise_vars = {1.0, 1.0, 1.0, 1.0};
    pcd::Dataset data = pcd::sample_sem(model, 5000, 6);

    pcd::MixedGraph g(4);
    g.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
    g.add_edge(1, 2, pcd::Mark::Tail, pcd::Mark::Arrow);
    g.add_edge(2, 3, pcd::Mark::Tail, pcd::Mark::Arrow);
    std::vector<std::pair<pcd::NodeId, pcd::NodeId>> edges{{0, 1}, {1, 2}, {2, 3}};

    pcd::Partition part(pcd::PartitionKind::ExpansiveCausal, 4,
                        {pcd::Subset(4, {0, 1, 2, 3}), pcd::Subset(4, {3})});
    pcd::MixedGraph out = pcd::score_and_discard(g, edges, part, data);
    CHECK_FALSE(out.adjacent(2, 3));
    CHECK(out.adjacent(0, 1));
    CHECK(out.adjacent(1, 2));
}

TEST_CASE("empty candidate set falls back to the whole cycle with a warning", "[screen]") {
    pcd::SemModel model;
    model.dag = pcd::Dag(3, {{0, 1}, {1, 2}});
    model.weights[{0, 1}] = 0.9;
    model.weights[{1, 2}] = 0.9;
    model.noise_vars = {1.0, 1.0, 1.0};
    pcd::Dataset data = pcd::sample_sem(model, 5000, 3);

    pcd::MixedGraph g(3);
    g.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
    g.add_edge(1, 2, pcd::Mark::Tail, pcd::Mark::Arrow);
    g.add_edge(2, 0, pcd::Mark::Tail, pcd::Mark::Arrow);
    std::vector<std::pair<pcd::NodeId, pcd::NodeId>> cycle{{0, 1}, {1, 2}, {2, 0}};

    std::ostringstream captured;
    std::ostream* prev = pcd::warning_stream();
    pcd::warning_stream() = &captured;
    pcd::MixedGraph out = pcd::score_and_discard(g, cycle, pcd::whole_set_partition(3), data);
    pcd::warning_stream() = prev;

    CHECK_THAT(captured.str(), Catch::Matchers::ContainsSubstring("overlap"));
    CHECK_FALSE(out.adjacent(0, 2));
    CHECK(out.edge_count() == 2);
}

TEST_CASE("tied scores discard the lexicographically smallest edge", "[screen]") {
    // Three identical columns: every cycle edge scores exactly the same.
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(400, 3);
    for (int r = 0; r < 400; ++r) {
        double v = normal(rng);
        x(r, 0) = x(r, 1) = x(r, 2) = v;
    }
    pcd::Dataset data(x);

    pcd::MixedGraph g(3);
    g.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
    g.add_edge(1, 2, pcd::Mark::Tail, pcd::Mark::Arrow);
    g.add_edge(2, 0, pcd::Mark::Tail, pcd::Mark::Arrow);
    std::vector<std::pair<pcd::NodeId, pcd::NodeId>> cycle{{1, 2}, {2, 0}, {0, 1}};

    pcd::Partition part(pcd::PartitionKind::EdgeCover, 3,
                        {pcd::Subset(3, {0, 1, 2}), pcd::Subset(3, {0, 2}), pcd::Subset(3, {1})});
    std::ostringstream silenced;
    std::ostream* prev = pcd::warning_stream();
    pcd::warning_stream() = &silenced;
    pcd::MixedGraph out = pcd::score_and_discard(g, cycle, part, data);
    pcd::warning_stream() = prev;
    CHECK_FALSE(out.adjacent(0, 1));
}

TEST_CASE("cycle argument validation", "[screen]") {
    pcd::Dataset data(Eigen::MatrixXd::Identity(6, 3));
    pcd::MixedGraph g(3);
    g.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
    g.add_edge(1, 2, pcd::Mark::Tail, pcd::Mark::Tail);
    pcd::Partition part = pcd::whole_set_partition(3);

    CHECK_THROWS_WITH(pcd::score_and_discard(g, {}, part, data),
                      Catch::Matchers::ContainsSubstring("empty cycle"));
    CHECK_THROWS_WITH(pcd::score_and_discard(g, {{0, 1}, {0, 1}}, part, data),
                      Catch::Matchers::ContainsSubstring("duplicate"));
    CHECK_THROWS_WITH(pcd::score_and_discard(g, {{1, 2}}, part, data),
                      Catch::Matchers::ContainsSubstring("not a directed edge"));
    CHECK_THROWS_WITH(pcd::score_and_discard(g, {{0, 1}}, pcd::whole_set_partition(4), data),
                      Catch::Matchers::ContainsSubstring("partition host"));
}

TEST_CASE("merged cycle is dismantled one traced edge at a time", "[screen]") {
    // Subset {0,1,2} learns the chain 0 -> 1 -> 2 with an extra undirected
    // 0 ~ 2; subset {0,2} insists on 2 -> 0.  The merge closes the directed
    // cycle 0 -> 1 -> 2 -> 0, and resolution removes the data-poor back edge.
    pcd::MixedGraph h1(3);
    h1.add_edge(0, 1, pcd::Mark::Tail, pcd::Mark::Arrow);
    h1.add_edge(1, 2, pcd::Mark::Tail, pcd::Mark::Arrow);
    h1.add_edge(0, 2, pcd::Mark::Tail, pcd::Mark::Tail);
    pcd::MixedGraph h2(2);
    h2.add_edge(0, 1, pcd::Mark::Arrow, pcd::Mark::Tail);  // hosts {0,2}: 2 -> 0

    pcd::SemModel model;
    model.dag = pcd::Dag(3, {{0, 1}, {1, 2}});
    model.weights[{0, 1}] = 0.9;
    model.weights[{1, 2}] = 0.9;
    model.noise_vars = {1.0, 1.0, 1.0};
    pcd::Dataset data = pcd::sample_sem(model, 5000, 21);

    auto fin = pcd::screen_finite(
        complete_superstructure(3),
        {manual_result(3, {0, 1, 2}, h1), manual_result(3, {0, 2}, h2)}, data);

    REQUIRE(fin.pre_resolution.has_directed(2, 0));
    REQUIRE(fin.pre_resolution.has_directed(0, 1));
    REQUIRE(fin.pre_resolution.has_directed(1, 2));

    REQUIRE(fin.trace.steps.size() == 1);
    const auto& step = fin.trace.steps.front();
    CHECK(step.cycle.size() == 3);
    CHECK(step.candidates.size() == 3);  // overlap {0,2} touches every edge
    CHECK_FALSE(step.fallback);
    CHECK(step.discarded == std::pair<pcd::NodeId, pcd::NodeId>{2, 0});
    CHECK(step.scores.size() == 3);
    double discarded_score = step.scores[static_cast<size_t>(
        std::find(step.candidates.begin(), step.candidates.end(), step.discarded) -
        step.candidates.begin())];
    CHECK(discarded_score == *std::min_element(step.scores.begin(), step.scores.end()));

    CHECK_FALSE(fin.graph.adjacent(0, 2));
    CHECK_FALSE(pcd::find_directed_cycle(fin.graph).has_value());
    CHECK(pcd::replay_trace(fin.pre_resolution, fin.trace) == fin.graph);
}

TEST_CASE("fuzzed merges stay acyclic and replay exactly", "[screen]") {
    std::ostringstream silenced;
    std::ostream* prev = pcd::warning_stream();
    pcd::warning_stream() = &silenced;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        std::mt19937_64 rng(seed * 977 + 13);
        int p = 6 + static_cast<int>(rng() % 5);
        pcd::Dag truth = ts::random_dag(rng, p, 0.3);
        pcd::Superstructure ss = pcd::superstructure_with_extras(truth, 0.3, seed);
        pcd::PartitionConfig pcfg;
        pcfg.num_communities = 2 + static_cast<int>(seed % 2);
        pcd::Partition part = pcd::causal_expansion(ss, pcd::disjoint_partition(ss, pcfg));

        // Corrupt the oracle outputs: random mark flips and extra edges make
        // the inputs disagree in the ways finite-sample learners do.
        auto results = oracle_results(truth, part);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const pcd::Mark marks[3] = {pcd::Mark::Tail, pcd::Mark::Arrow, pcd::Mark::Circle};
        for (auto& r : results) {
            for (const auto& e : r.graph.edges())
                if (unif(rng) < 0.3)
                    r.graph.set_marks(e.u, e.v, marks[rng() % 3], marks[rng() % 3]);
            for (int t = 0; t < 2; ++t) {
                pcd::NodeId a = static_cast<pcd::NodeId>(rng() % static_cast<unsigned>(r.graph.p()));
                pcd::NodeId b = static_cast<pcd::NodeId>(rng() % static_cast<unsigned>(r.graph.p()));
                if (a != b && !r.graph.adjacent(a, b) && unif(rng) < 0.5)
                    r.graph.add_edge(a, b, marks[rng() % 3], marks[rng() % 3]);
            }
        }

        pcd::Dataset data = pcd::sample_sem(pcd::random_sem(truth, seed), 50, seed + 1);
        pcd::MergeConfig cfg;
        cfg.finite_sample = true;
        cfg.use_superstructure_filter = (seed % 2 == 0);

        auto fin = pcd::screen_finite(ss, results, data, cfg);
        REQUIRE_FALSE(pcd::find_directed_cycle(fin.graph).has_value());
        REQUIRE(pcd::replay_trace(fin.pre_resolution, fin.trace) == fin.graph);
        REQUIRE(fin.pre_resolution.edge_count() ==
                fin.graph.edge_count() + static_cast<int>(fin.trace.steps.size()));
        for (const auto& step : fin.trace.steps) {
            REQUIRE_FALSE(step.candidates.empty());
            REQUIRE(step.scores.size() == step.candidates.size());
            for (auto e : step.candidates)
                REQUIRE(std::find(step.cycle.begin(), step.cycle.end(), e) != step.cycle.end());
        }
    }
    pcd::warning_stream() = prev;
}

TEST_CASE("resolution trace round trips through JSON", "[screen]") {
    pcd::CycleResolutionTrace trace;
    pcd::CycleResolutionStep step;
    step.cycle = {{0, 1}, {1, 2}, {2, 0}};
    step.candidates = {{1, 2}, {2, 0}};
    step.scores = {3.25, -1.5};
    step.discarded = {2, 0};
    step.fallback = false;
    trace.steps.push_back(step);
    step.cycle = {{3, 4}, {4, 3}};
    step.candidates = step.cycle;
    step.scores = {0.125, 0.25};
    step.discarded = {3, 4};
    step.fallback = true;
    trace.steps.push_back(step);

    CHECK(pcd::trace_from_json(pcd::trace_to_json(trace)) == trace);
    CHECK(pcd::trace_from_json(pcd::trace_to_json({})) == pcd::CycleResolutionTrace{});

    SECTION("rejects inconsistent records") {
        CHECK_THROWS_WITH(
            pcd::trace_from_json(R"({"steps":[{"cycle":[[0,1]],"candidates":[[0,1]],)"
                                 R"("scores":[1.0,2.0],"discarded":[0,1]}]})"),
            Catch::Matchers::ContainsSubstring("differ in length"));
        CHECK_THROWS_WITH(
            pcd::trace_from_json(R"({"steps":[{"cycle":[[0,1]],"candidates":[[0,1]],)"
                                 R"("scores":[1.0],"discarded":[1,0]}]})"),
            Catch::Matchers::ContainsSubstring("not a candidate"));
        CHECK_THROWS_WITH(
            pcd::trace_from_json(R"({"steps":[{"cycle":[[0,1,2]],"candidates":[],)"
                                 R"("scores":[],"discarded":[0,1]}]})"),
            Catch::Matchers::ContainsSubstring("pair of node ids"));
    }
}

TEST_CASE("merge dispatcher honors the config", "[screen]") {
    pcd::Dag truth(4, {{0, 1}, {2, 1}, {1, 3}});
    pcd::Superstructure g = pcd::skeleton_superstructure(truth);
    auto results = std::vector{oracle_result(truth, {0, 1, 2, 3})};

    SECTION("finite merge requires data") {
        pcd::MergeConfig cfg;
        cfg.finite_sample = true;
        CHECK_THROWS_WITH(pcd::merge(g, results, cfg),
                          Catch::Matchers::ContainsSubstring("requires a Dataset"));
    }
    SECTION("idealized path with Meek closure completes the pattern") {
        pcd::MergeConfig cfg;
        cfg.apply_meek = true;
        auto res = pcd::merge(g, results, cfg);
        CHECK(res.graph == pcd::cpdag_of_dag(truth));  // 1 -> 3 forced by the collider
        CHECK(res.trace.steps.empty());
    }
    SECTION("finite path matches screen_finite") {
        pcd::Dataset data = pcd::sample_sem(pcd::random_sem(truth, 2), 300, 3);
        pcd::MergeConfig cfg;
        cfg.finite_sample = true;
        auto res = pcd::merge(g, results, cfg, &data);
        CHECK(res.graph == pcd::screen_finite(g, results, data, cfg).graph);
        CHECK_FALSE(pcd::find_directed_cycle(res.graph).has_value());
    }
    SECTION("invalid penalty scale") {
        pcd::MergeConfig cfg;
        cfg.ric_penalty_scale = 0.0;
        CHECK_THROWS_AS(pcd::merge(g, results, cfg), std::invalid_argument);
    }
    SECTION("defaults follow the superstructure's pedigree") {
        CHECK(pcd::default_merge_config(g).use_superstructure_filter);
        pcd::Superstructure learned(4, /*perfect=*/false);
        CHECK_FALSE(pcd::default_merge_config(learned).use_superstructure_filter);
        CHECK(pcd::default_merge_config(learned, true).finite_sample);
    }
}

TEST_CASE("uncovered data column is rejected by the finite merge", "[screen]") {
    pcd::Dag truth(3, {{0, 1}});
    pcd::Superstructure g(3, /*perfect=*/true);
    g.add_edge(0, 1);
    pcd::Dataset data = pcd::sample_sem(pcd::random_sem(truth, 1), 50, 2);
    auto results = std::vector{oracle_result(truth, {0, 1})};
    CHECK_THROWS_WITH(pcd::screen_finite(g, results, data),
                      Catch::Matchers::ContainsSubstring("column 2"));
}
