#pragma once

#include <json.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcd/dataset.hpp"
#include "pcd/edgelist_io.hpp"
#include "pcd/graph.hpp"
#include "pcd/learners.hpp"
#include "pcd/metrics.hpp"
#include "pcd/orientation.hpp"
#include "pcd/partition.hpp"
#include "pcd/screen.hpp"
#include "pcd/synth.hpp"
#include "pcd/warnings.hpp"

namespace pcd {

// ---------------------------------------------------------------------------
// Experiment configuration: one document describing the whole pipeline
// (generate -> superstructure -> partition -> learn -> screen -> evaluate).
// ---------------------------------------------------------------------------

enum class SuperstructureMode { Perfect, FromPc };

inline std::string superstructure_mode_name(SuperstructureMode m) {
    switch (m) {
        case SuperstructureMode::Perfect: return "perfect";
        case SuperstructureMode::FromPc: return "pc";
    }
    throw std::logic_error("superstructure_mode_name: bad mode");
}

inline SuperstructureMode superstructure_mode_from_name(const std::string& name) {
    if (name == "perfect") return SuperstructureMode::Perfect;
    if (name == "pc") return SuperstructureMode::FromPc;
    throw std::invalid_argument("unknown superstructure mode '" + name + "'");
}

// The partition axis of an experiment: the three partition kinds plus the
// no-partition baseline (the learner runs once on the whole variable set and
// the screen stage is skipped).
enum class PartitionChoice { Disjoint, EdgeCover, Expansive, None };

inline std::string partition_choice_name(PartitionChoice c) {
    switch (c) {
        case PartitionChoice::Disjoint: return "disjoint";
        case PartitionChoice::EdgeCover: return "edge-cover";
        case PartitionChoice::Expansive: return "expansive";
        case PartitionChoice::None: return "none";
    }
    throw std::logic_error("partition_choice_name: bad choice");
}

inline PartitionChoice partition_choice_from_name(const std::string& name) {
    if (name == "disjoint") return PartitionChoice::Disjoint;
    if (name == "edge-cover") return PartitionChoice::EdgeCover;
    if (name == "expansive") return PartitionChoice::Expansive;
    if (name == "none") return PartitionChoice::None;
    throw std::invalid_argument("unknown partition choice '" + name + "'");
}

/**
 * Full description of an experiment run.  The defaults are the desk-scale
 * benchmark: a 50-node graph of two preferential-attachment communities
 * (attachment 1 and 2, five cross edges), 100k Gaussian samples, a perfect
 * superstructure with 10% extra edges, the expansive causal partition on two
 * communities, and the PC learner at alpha 0.05, averaged over ten seeds.
 *
 * graph.seed is ignored: each run stamps its own seed from `seeds`, which
 * also drives the SEM weights, the sampling, and the superstructure extras
 * through decorrelated streams.
 *
 * finite_screen and superstructure_filter are tri-state: when unset, the
 * finite-sample screen is used for data-driven learners only, and candidate
 * filtering is enabled only when the superstructure is known perfect.
 */
struct ExperimentConfig {
    GraphSpec graph;
    int n = 100000;

    SuperstructureMode superstructure_mode = SuperstructureMode::Perfect;
    double extra_edge_frac = 0.1;       // Perfect mode
    double superstructure_alpha = 0.05; // FromPc mode

    PartitionChoice partition = PartitionChoice::Expansive;
    PartitionConfig partition_config;

    LearnerConfig learner;  // fixed_gaps / oracle_truth are filled per run
    bool use_superstructure_gaps = true;

    bool apply_meek = true;
    double ric_penalty_scale = 1.0;
    std::optional<bool> finite_screen;
    std::optional<bool> superstructure_filter;

    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    int workers = 1;
    std::string out_dir = "results";

    ExperimentConfig() {
        graph.communities = {{25, 1}, {25, 2}};
        graph.inter_community = 5;
        partition_config.num_communities = 2;
    }

    int p() const {
        int total = 0;
        for (const CommunitySpec& c : graph.communities) total += c.size;
        return total;
    }

    void validate() const {
        if (graph.communities.empty())
            throw std::invalid_argument("ExperimentConfig: graph has no communities");
        if (n < 1) throw std::invalid_argument("ExperimentConfig: n must be positive");
        if (extra_edge_frac < 0.0)
            throw std::invalid_argument("ExperimentConfig: extra_edge_frac must be non-negative");
        if (!(superstructure_alpha > 0.0 && superstructure_alpha < 1.0))
            throw std::invalid_argument("ExperimentConfig: superstructure_alpha must lie in (0,1)");
        if (ric_penalty_scale <= 0.0)
            throw std::invalid_argument("ExperimentConfig: ric_penalty_scale must be positive");
        if (seeds.empty()) throw std::invalid_argument("ExperimentConfig: seeds must be non-empty");
        if (workers < 1) throw std::invalid_argument("ExperimentConfig: workers must be positive");
        if (out_dir.empty()) throw std::invalid_argument("ExperimentConfig: out_dir must be set");
        learner.validate();
    }
};

// ---------------------------------------------------------------------------
// Config file form.  Parsing starts from the defaults and overlays the keys
// present, so a partial document is a valid config; unknown keys are
// rejected to catch typos.  serialize(parse(serialize(cfg))) is the
// identity byte for byte.
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                                const char* where) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || item.key() == k;
        if (!ok)
            throw std::invalid_argument(std::string(where) + ": unknown key \"" + item.key() +
                                        "\"");
    }
}

}  // namespace detail

inline std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["graph"]["communities"] = nlohmann::json::array();
    for (const CommunitySpec& c : cfg.graph.communities)
        j["graph"]["communities"].push_back({{"size", c.size}, {"attachment", c.attachment}});
    j["graph"]["inter_community"] = cfg.graph.inter_community;
    j["graph"]["delete_cycle_edges"] = cfg.graph.delete_cycle_edges;
    j["n"] = cfg.n;
    j["superstructure"]["mode"] = superstructure_mode_name(cfg.superstructure_mode);
    j["superstructure"]["extra_edge_frac"] = cfg.extra_edge_frac;
    j["superstructure"]["alpha"] = cfg.superstructure_alpha;
    j["partition"]["kind"] = partition_choice_name(cfg.partition);
    if (cfg.partition_config.num_communities)
        j["partition"]["num_communities"] = *cfg.partition_config.num_communities;
    j["partition"]["resolution"] = cfg.partition_config.resolution;
    j["learner"]["algorithm"] = learner_algorithm_name(cfg.learner.algorithm);
    j["learner"]["alpha"] = cfg.learner.alpha;
    if (cfg.learner.max_cond_set) j["learner"]["max_cond_set"] = *cfg.learner.max_cond_set;
    j["use_superstructure_gaps"] = cfg.use_superstructure_gaps;
    j["merge"]["apply_meek"] = cfg.apply_meek;
    j["merge"]["ric_penalty_scale"] = cfg.ric_penalty_scale;
    if (cfg.finite_screen) j["merge"]["finite_screen"] = *cfg.finite_screen;
    if (cfg.superstructure_filter) j["merge"]["superstructure_filter"] = *cfg.superstructure_filter;
    j["seeds"] = cfg.seeds;
    j["workers"] = cfg.workers;
    j["out_dir"] = cfg.out_dir;
    return j.dump(2);
}

inline ExperimentConfig experiment_config_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    detail::reject_unknown_keys(j,
                                {"graph", "n", "superstructure", "partition", "learner",
                                 "use_superstructure_gaps", "merge", "seeds", "workers", "out_dir"},
                                "experiment config");
    ExperimentConfig cfg;
    if (j.contains("graph")) {
        const nlohmann::json& g = j["graph"];
        detail::reject_unknown_keys(g, {"communities", "inter_community", "delete_cycle_edges"},
                                    "experiment config graph");
        if (g.contains("communities")) {
            cfg.graph.communities.clear();
            for (const auto& c : g["communities"]) {
                detail::reject_unknown_keys(c, {"size", "attachment"},
                                            "experiment config community");
                CommunitySpec spec;
                spec.size = c.at("size").get<int>();
                spec.attachment = c.at("attachment").get<int>();
                cfg.graph.communities.push_back(spec);
            }
        }
        if (g.contains("inter_community")) cfg.graph.inter_community = g["inter_community"].get<int>();
        if (g.contains("delete_cycle_edges"))
            cfg.graph.delete_cycle_edges = g["delete_cycle_edges"].get<bool>();
    }
    if (j.contains("n")) cfg.n = j["n"].get<int>();
    if (j.contains("superstructure")) {
        const nlohmann::json& s = j["superstructure"];
        detail::reject_unknown_keys(s, {"mode", "extra_edge_frac", "alpha"},
                                    "experiment config superstructure");
        if (s.contains("mode"))
            cfg.superstructure_mode = superstructure_mode_from_name(s["mode"].get<std::string>());
        if (s.contains("extra_edge_frac")) cfg.extra_edge_frac = s["extra_edge_frac"].get<double>();
        if (s.contains("alpha")) cfg.superstructure_alpha = s["alpha"].get<double>();
    }
    if (j.contains("partition")) {
        const nlohmann::json& p = j["partition"];
        detail::reject_unknown_keys(p, {"kind", "num_communities", "resolution"},
                                    "experiment config partition");
        if (p.contains("kind"))
            cfg.partition = partition_choice_from_name(p["kind"].get<std::string>());
        if (p.contains("num_communities"))
            cfg.partition_config.num_communities = p["num_communities"].get<int>();
        else
            cfg.partition_config.num_communities.reset();
        if (p.contains("resolution")) cfg.partition_config.resolution = p["resolution"].get<double>();
    }
    if (j.contains("learner")) {
        const nlohmann::json& l = j["learner"];
        detail::reject_unknown_keys(l, {"algorithm", "alpha", "max_cond_set"},
                                    "experiment config learner");
        if (l.contains("algorithm"))
            cfg.learner.algorithm = learner_algorithm_from_name(l["algorithm"].get<std::string>());
        if (l.contains("alpha")) cfg.learner.alpha = l["alpha"].get<double>();
        if (l.contains("max_cond_set")) cfg.learner.max_cond_set = l["max_cond_set"].get<int>();
    }
    if (j.contains("use_superstructure_gaps"))
        cfg.use_superstructure_gaps = j["use_superstructure_gaps"].get<bool>();
    if (j.contains("merge")) {
        const nlohmann::json& m = j["merge"];
        detail::reject_unknown_keys(
            m, {"apply_meek", "ric_penalty_scale", "finite_screen", "superstructure_filter"},
            "experiment config merge");
        if (m.contains("apply_meek")) cfg.apply_meek = m["apply_meek"].get<bool>();
        if (m.contains("ric_penalty_scale"))
            cfg.ric_penalty_scale = m["ric_penalty_scale"].get<double>();
        if (m.contains("finite_screen")) cfg.finite_screen = m["finite_screen"].get<bool>();
        if (m.contains("superstructure_filter"))
            cfg.superstructure_filter = m["superstructure_filter"].get<bool>();
    }
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Stage artifacts.  Graphs, partitions, SEM models, datasets, and traces all
// have file forms already; learned subset results get one here so every
// pipeline stage can be rerun from files.
// ---------------------------------------------------------------------------

// Learned subset results.  The learner echo keeps only the portable fields
// (algorithm, alpha, conditioning cap); superstructure gaps and oracle truth
// are run-scoped inputs, not part of the artifact.
inline std::string subset_results_to_json(const std::vector<SubsetResult>& results) {
    nlohmann::json j;
    j["results"] = nlohmann::json::array();
    for (const SubsetResult& r : results) {
        nlohmann::json item;
        item["host_p"] = r.subset.host_p();
        item["members"] = r.subset.members();
        item["graph"] = to_edge_list(r.graph);
        item["wall_time_s"] = r.wall_time;
        item["learner"]["algorithm"] = learner_algorithm_name(r.learner.algorithm);
        item["learner"]["alpha"] = r.learner.alpha;
        if (r.learner.max_cond_set) item["learner"]["max_cond_set"] = *r.learner.max_cond_set;
        j["results"].push_back(std::move(item));
    }
    return j.dump(2);
}

inline std::vector<SubsetResult> subset_results_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<SubsetResult> out;
    for (const auto& item : j.at("results")) {
        Subset subset(item.at("host_p").get<int>(),
                      item.at("members").get<std::vector<NodeId>>());
        MixedGraph graph = mixed_graph_from_edge_list(item.at("graph").get<std::string>());
        if (graph.p() != subset.size())
            throw std::invalid_argument("subset_results_from_json: graph size " +
                                        std::to_string(graph.p()) + " does not match subset size " +
                                        std::to_string(subset.size()));
        SubsetResult r{subset, graph, 0.0, {}};
        r.wall_time = item.at("wall_time_s").get<double>();
        const auto& l = item.at("learner");
        r.learner.algorithm = learner_algorithm_from_name(l.at("algorithm").get<std::string>());
        r.learner.alpha = l.at("alpha").get<double>();
        if (l.contains("max_cond_set")) r.learner.max_cond_set = l["max_cond_set"].get<int>();
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline.
// ---------------------------------------------------------------------------

/** Everything one seed produced; `ok` is false when a stage threw. */
struct RunOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    EvalReport report;  // Oriented mode: adjacency metrics plus orientation_shd
    MixedGraph graph{0};
    Dag truth{0};
    double learn_time_s = 0.0;
    double screen_time_s = 0.0;
    double total_time_s = 0.0;
};

namespace detail {

// Decorrelated per-stage seed streams (splitmix64 of seed + stage offset),
// so the SEM weights are not a function of the sampling noise.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage) {
    std::uint64_t z = seed + (stage + 1) * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline Partition build_partition(const Superstructure& ss, const ExperimentConfig& cfg) {
    if (cfg.partition == PartitionChoice::None) return whole_set_partition(ss.p());
    Partition base = disjoint_partition(ss, cfg.partition_config);
    switch (cfg.partition) {
        case PartitionChoice::Disjoint: return base;
        case PartitionChoice::EdgeCover: return edge_cover_expansion(ss, base);
        case PartitionChoice::Expansive: return causal_expansion(ss, base);
        case PartitionChoice::None: break;
    }
    throw std::logic_error("build_partition: bad choice");
}

inline std::map<std::string, std::string> config_echo(const ExperimentConfig& cfg,
                                                      std::uint64_t seed) {
    return {{"seed", std::to_string(seed)},
            {"p", std::to_string(cfg.p())},
            {"n", std::to_string(cfg.n)},
            {"partition", partition_choice_name(cfg.partition)},
            {"learner", learner_algorithm_name(cfg.learner.algorithm)},
            {"alpha", csv_number(cfg.learner.alpha)}};
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline RunOutcome run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    RunOutcome out;
    out.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        GraphSpec gs = cfg.graph;
        gs.seed = seed;
        Dag truth = generate_dag(gs);
        SemModel model = random_sem(truth, derive_seed(seed, 1));
        Dataset data = sample_sem(model, cfg.n, derive_seed(seed, 2));
        Superstructure ss =
            cfg.superstructure_mode == SuperstructureMode::Perfect
                ? superstructure_with_extras(truth, cfg.extra_edge_frac, derive_seed(seed, 3))
                : superstructure_from_pc(data, cfg.superstructure_alpha);

        Partition part = build_partition(ss, cfg);

        LearnerConfig lc = cfg.learner;
        if (lc.algorithm == LearnerAlgorithm::Oracle) lc.oracle_truth = truth;
        if (cfg.use_superstructure_gaps) lc.fixed_gaps = ss;

        const auto t_learn = std::chrono::steady_clock::now();
        std::vector<SubsetResult> results = learn_all(data, part, lc, cfg.workers);
        out.learn_time_s = seconds_since(t_learn);

        const auto t_screen = std::chrono::steady_clock::now();
        if (cfg.partition == PartitionChoice::None) {
            // No-partition baseline: the single whole-set result is the
            // estimate (local ids equal host ids); no consensus to screen.
            out.graph = results.at(0).graph;
            if (cfg.apply_meek) apply_meek_closure(out.graph);
        } else {
            MergeConfig mc;
            mc.finite_sample =
                cfg.finite_screen.value_or(lc.algorithm != LearnerAlgorithm::Oracle);
            mc.use_superstructure_filter = cfg.superstructure_filter.value_or(ss.perfect());
            mc.apply_meek = cfg.apply_meek;
            mc.ric_penalty_scale = cfg.ric_penalty_scale;
            out.graph = merge(ss, results, mc, &data).graph;
        }
        out.screen_time_s = seconds_since(t_screen);

        out.truth = truth;
        out.report = evaluate(out.graph, truth, EvalMode::Oriented);
        out.report.config = config_echo(cfg, seed);
        out.total_time_s = seconds_since(t0);
        out.report.wall_time_s = out.total_time_s;
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = e.what();
        out.total_time_s = seconds_since(t0);
    }
    return out;
}

// Failed seeds still land in the ledger: identifying columns filled, the
// mode column says "error", and every metric column is left blank so the row
// cannot be mistaken for a (terrible) real run.
inline void append_ledger_line(const std::string& path, const std::string& line) {
    bool need_header = true;
    {
        std::ifstream in(path);
        if (in.good() && in.peek() != std::ifstream::traits_type::eof()) need_header = false;
    }
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("append_ledger_line: cannot open " + path);
    if (need_header) out << report_csv_header() << '\n';
    out << line << '\n';
    if (!out) throw std::runtime_error("append_ledger_line: write failed for " + path);
}

inline std::string error_csv_row(const ExperimentConfig& cfg, std::uint64_t seed) {
    auto echo = config_echo(cfg, seed);
    std::string row;
    for (const char* key : {"seed", "p", "n", "partition", "learner", "alpha"})
        row += echo[key] + ",";
    row += "error,,,,,";
    return row;
}

}  // namespace detail

/**
 * Run the configured pipeline once per seed.  Each seed's report row is
 * appended to <out_dir>/ledger.csv as soon as that seed finishes (one writer,
 * one row per append); a stage error aborts only its own seed, producing an
 * "error" ledger row, a warning, and a line in <out_dir>/errors.log.
 */
inline std::vector<RunOutcome> run_pipeline(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    const std::string ledger = cfg.out_dir + "/ledger.csv";
    std::vector<RunOutcome> outcomes;
    for (std::uint64_t seed : cfg.seeds) {
        RunOutcome out = detail::run_one_seed(cfg, seed);
        if (out.ok) {
            append_report_csv(ledger, out.report);
        } else {
            detail::append_ledger_line(ledger, detail::error_csv_row(cfg, seed));
            std::ofstream log(cfg.out_dir + "/errors.log", std::ios::app);
            log << "seed " << seed << ": " << out.error << '\n';
            warn("seed " + std::to_string(seed) + " failed: " + out.error);
        }
        outcomes.push_back(std::move(out));
    }
    return outcomes;
}

// ---------------------------------------------------------------------------
// Sweeps: rerun the pipeline across one axis, summarizing each cell as
// mean +/- 95% confidence interval (Student's t over completed seeds).
// ---------------------------------------------------------------------------

enum class SweepAxis { Samples, ExtraEdgeFrac, Alpha, Partition };

inline std::string sweep_axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::Samples: return "samples";
        case SweepAxis::ExtraEdgeFrac: return "extra-edge-frac";
        case SweepAxis::Alpha: return "alpha";
        case SweepAxis::Partition: return "partition";
    }
    throw std::logic_error("sweep_axis_name: bad axis");
}

inline SweepAxis sweep_axis_from_name(const std::string& name) {
    if (name == "samples") return SweepAxis::Samples;
    if (name == "extra-edge-frac") return SweepAxis::ExtraEdgeFrac;
    if (name == "alpha") return SweepAxis::Alpha;
    if (name == "partition") return SweepAxis::Partition;
    throw std::invalid_argument("unknown sweep axis '" + name + "'");
}

struct SweepCell {
    std::string value;
    int completed = 0;
    int failed = 0;
    double mean_shd = 0, ci95_shd = 0;
    double mean_tpr = 0, ci95_tpr = 0;
    double mean_fpr = 0, ci95_fpr = 0;
    double mean_time_s = 0, ci95_time_s = 0;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::Samples;
    std::vector<SweepCell> cells;
    std::vector<RunOutcome> outcomes;  // cell-major, seeds within a cell in order
};

namespace detail {

inline std::pair<double, double> mean_ci95(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double k = static_cast<double>(xs.size());
    const double sd = std::sqrt(ss / (k - 1.0));
    boost::math::students_t_distribution<double> t_dist(k - 1.0);
    const double t = boost::math::quantile(t_dist, 0.975);
    return {mean, t * sd / std::sqrt(k)};
}

inline ExperimentConfig with_axis_value(const ExperimentConfig& base, SweepAxis axis,
                                        const std::string& value) {
    ExperimentConfig cfg = base;
    auto parse_double = [&](const char* what) {
        try {
            size_t used = 0;
            double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("sweep: bad " + std::string(what) + " value '" + value +
                                        "'");
        }
    };
    switch (axis) {
        case SweepAxis::Samples: {
            double v = parse_double("samples");
            if (v < 1.0 || v != std::floor(v))
                throw std::invalid_argument("sweep: samples value '" + value +
                                            "' is not a positive integer");
            cfg.n = static_cast<int>(v);
            break;
        }
        case SweepAxis::ExtraEdgeFrac:
            cfg.extra_edge_frac = parse_double("extra-edge-frac");
            break;
        case SweepAxis::Alpha:
            cfg.learner.alpha = parse_double("alpha");
            break;
        case SweepAxis::Partition:
            cfg.partition = partition_choice_from_name(value);
            break;
    }
    cfg.validate();
    return cfg;
}

}  // namespace detail

inline std::string sweep_summary_csv(const SweepResult& result) {
    std::string out =
        "axis,value,completed,failed,mean_shd,ci95_shd,mean_tpr,ci95_tpr,mean_fpr,ci95_fpr,"
        "mean_time_s,ci95_time_s\n";
    for (const SweepCell& c : result.cells) {
        out += sweep_axis_name(result.axis) + ',' + detail::csv_field(c.value) + ',' +
               std::to_string(c.completed) + ',' + std::to_string(c.failed) + ',' +
               detail::csv_number(c.mean_shd) + ',' + detail::csv_number(c.ci95_shd) + ',' +
               detail::csv_number(c.mean_tpr) + ',' + detail::csv_number(c.ci95_tpr) + ',' +
               detail::csv_number(c.mean_fpr) + ',' + detail::csv_number(c.ci95_fpr) + ',' +
               detail::csv_number(c.mean_time_s) + ',' + detail::csv_number(c.ci95_time_s) + '\n';
    }
    return out;
}

/**
 * Cross-product of cfg.seeds with the axis values.  Every run lands in the
 * shared ledger; the per-cell summary is also written to
 * <out_dir>/summary.csv.  The axis must actually drive the configured
 * pipeline: extra-edge-frac needs the perfect superstructure mode and alpha
 * needs the PC learner.
 */
inline SweepResult sweep(const ExperimentConfig& cfg, SweepAxis axis,
                         const std::vector<std::string>& values) {
    cfg.validate();
    if (values.empty()) throw std::invalid_argument("sweep: empty values list");
    if (axis == SweepAxis::ExtraEdgeFrac && cfg.superstructure_mode != SuperstructureMode::Perfect)
        throw std::invalid_argument(
            "sweep: the extra-edge-frac axis applies only to the perfect superstructure mode");
    if (axis == SweepAxis::Alpha && cfg.learner.algorithm != LearnerAlgorithm::PC)
        throw std::invalid_argument("sweep: the alpha axis applies only to the pc learner");

    SweepResult result;
    result.axis = axis;
    for (const std::string& value : values) {
        ExperimentConfig cell_cfg = detail::with_axis_value(cfg, axis, value);
        std::vector<RunOutcome> outcomes = run_pipeline(cell_cfg);

        SweepCell cell;
        cell.value = value;
        std::vector<double> shd, tpr, fpr, time_s;
        for (const RunOutcome& out : outcomes) {
            if (!out.ok) {
                ++cell.failed;
                continue;
            }
            ++cell.completed;
            shd.push_back(static_cast<double>(out.report.shd));
            tpr.push_back(out.report.tpr);
            fpr.push_back(out.report.fpr);
            time_s.push_back(out.total_time_s);
        }
        std::tie(cell.mean_shd, cell.ci95_shd) = detail::mean_ci95(shd);
        std::tie(cell.mean_tpr, cell.ci95_tpr) = detail::mean_ci95(tpr);
        std::tie(cell.mean_fpr, cell.ci95_fpr) = detail::mean_ci95(fpr);
        std::tie(cell.mean_time_s, cell.ci95_time_s) = detail::mean_ci95(time_s);
        result.cells.push_back(std::move(cell));
        for (RunOutcome& out : outcomes) result.outcomes.push_back(std::move(out));
    }
    write_text_file(cfg.out_dir + "/summary.csv", sweep_summary_csv(result));
    return result;
}

}  // namespace pcd
