// Command-line driver for the causal-discovery pipeline.  Every stage
// persists its artifact to plain files (edge lists, JSON, CSV), so the
// stages can be rerun and inspected independently:
//
//   pcd generate       graph + SEM + samples
//   pcd superstructure candidate adjacencies (perfect or PC-estimated)
//   pcd partition      subsets from the superstructure
//   pcd learn          per-subset causal discovery
//   pcd screen         merge subset results into one global graph
//   pcd evaluate       compare an estimate against the ground truth
//   pcd run            the whole pipeline, one row per seed
//   pcd sweep          `run` across one parameter axis, with a summary table
//
// `run` and `sweep` exit 0 only when every seed completed.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "pcd/experiment.hpp"

namespace {

using namespace pcd;

bool on_off(const std::string& value, const char* flag) {
    if (value == "on") return true;
    if (value == "off") return false;
    throw CLI::ValidationError(std::string(flag) + " must be 'on' or 'off'");
}

// Shared option block for `run` and `sweep`: a config file plus the flag
// overrides.  Each field is applied only when its flag was actually given.
struct RunOptions {
    std::string config_path;
    std::string out_dir;
    std::vector<std::uint64_t> seeds;
    std::uint64_t seed = 0;
    int n = 0;
    int nodes = 0;
    double extra_edge_frac = 0.0;
    std::string partition;
    int num_communities = 0;
    double resolution = 0.0;
    std::string learner;
    double alpha = 0.0;
    int workers = 0;
    std::string gaps;

    CLI::Option *config_opt = nullptr, *out_opt = nullptr, *seeds_opt = nullptr,
                *seed_opt = nullptr, *n_opt = nullptr, *nodes_opt = nullptr,
                *frac_opt = nullptr, *partition_opt = nullptr, *comms_opt = nullptr,
                *resolution_opt = nullptr, *learner_opt = nullptr, *alpha_opt = nullptr,
                *workers_opt = nullptr, *gaps_opt = nullptr;

    void attach(CLI::App* cmd) {
        config_opt = cmd->add_option("--config", config_path, "JSON experiment config file");
        out_opt = cmd->add_option("--out", out_dir, "Output directory");
        seeds_opt = cmd->add_option("--seeds", seeds, "Comma-separated seed list")
                        ->delimiter(',');
        seed_opt = cmd->add_option("--seed", seed, "Single seed (shorthand for --seeds S)");
        seed_opt->excludes(seeds_opt);
        seeds_opt->excludes(seed_opt);
        n_opt = cmd->add_option("--n", n, "Sample count");
        nodes_opt = cmd->add_option("--nodes", nodes,
                                    "Total node count (split into the two default communities)");
        frac_opt = cmd->add_option("--extra-edge-frac", extra_edge_frac,
                                   "Extra-edge fraction of the perfect superstructure");
        partition_opt = cmd->add_option("--partition", partition, "Partition scheme")
                            ->check(CLI::IsMember({"disjoint", "edge-cover", "expansive", "none"}));
        comms_opt = cmd->add_option("--num-communities", num_communities,
                                    "Pinned community count for the disjoint partition");
        resolution_opt = cmd->add_option("--resolution", resolution, "Modularity resolution");
        learner_opt = cmd->add_option("--learner", learner, "Subset learner")
                          ->check(CLI::IsMember({"pc", "exact", "oracle"}));
        alpha_opt = cmd->add_option("--alpha", alpha, "Significance level for CI tests");
        workers_opt = cmd->add_option("--workers", workers, "Subset-learning threads");
        gaps_opt = cmd->add_option("--use-superstructure-gaps", gaps,
                                   "Restrict learners to superstructure adjacencies")
                       ->check(CLI::IsMember({"on", "off"}));
    }

    ExperimentConfig build() const {
        ExperimentConfig cfg;
        if (config_opt->count()) cfg = experiment_config_from_json(read_text_file(config_path));
        if (out_opt->count()) cfg.out_dir = out_dir;
        if (seeds_opt->count()) cfg.seeds = seeds;
        if (seed_opt->count()) cfg.seeds = {seed};
        if (n_opt->count()) cfg.n = n;
        if (nodes_opt->count()) {
            if (nodes < 2) throw CLI::ValidationError("--nodes must be at least 2");
            cfg.graph.communities = {{nodes / 2, 1}, {nodes - nodes / 2, 2}};
        }
        if (frac_opt->count()) cfg.extra_edge_frac = extra_edge_frac;
        if (partition_opt->count()) cfg.partition = partition_choice_from_name(partition);
        if (comms_opt->count()) cfg.partition_config.num_communities = num_communities;
        if (resolution_opt->count()) cfg.partition_config.resolution = resolution;
        if (learner_opt->count()) cfg.learner.algorithm = learner_algorithm_from_name(learner);
        if (alpha_opt->count()) cfg.learner.alpha = alpha;
        if (workers_opt->count()) cfg.workers = workers;
        if (gaps_opt->count())
            cfg.use_superstructure_gaps = on_off(gaps, "--use-superstructure-gaps");
        cfg.validate();
        return cfg;
    }
};

int report_outcomes(const std::vector<RunOutcome>& outcomes, const std::string& out_dir) {
    int failed = 0;
    for (const RunOutcome& out : outcomes) {
        if (out.ok) {
            std::printf("seed %llu: shd %d  tpr %.3f  fpr %.4f  orientation_shd %d  %.2fs\n",
                        static_cast<unsigned long long>(out.seed), out.report.shd, out.report.tpr,
                        out.report.fpr, out.report.orientation_shd.value_or(-1),
                        out.total_time_s);
        } else {
            std::printf("seed %llu: error: %s\n", static_cast<unsigned long long>(out.seed),
                        out.error.c_str());
            ++failed;
        }
    }
    std::printf("ledger: %s/ledger.csv\n", out_dir.c_str());
    return failed == 0 ? 0 : 1;
}

int cmd_generate(const RunOptions& opts) {
    ExperimentConfig cfg = opts.build();
    const std::uint64_t seed = cfg.seeds.front();
    GraphSpec gs = cfg.graph;
    gs.seed = seed;
    Dag truth = generate_dag(gs);
    SemModel model = random_sem(truth, detail::derive_seed(seed, 1));
    Dataset data = sample_sem(model, cfg.n, detail::derive_seed(seed, 2));
    std::filesystem::create_directories(cfg.out_dir);
    write_text_file(cfg.out_dir + "/truth.edgelist", to_edge_list(truth));
    write_text_file(cfg.out_dir + "/model.json", sem_model_to_json(model));
    write_text_file(cfg.out_dir + "/data.csv", to_csv(data));
    std::printf("wrote %s/{truth.edgelist, model.json, data.csv}  (p=%d, n=%d, seed=%llu)\n",
                cfg.out_dir.c_str(), truth.p(), data.n(),
                static_cast<unsigned long long>(seed));
    return 0;
}

int main_impl(int argc, char** argv) {
    CLI::App app{"Divide-and-conquer causal discovery"};
    app.require_subcommand(1);

    // generate ---------------------------------------------------------------
    CLI::App* generate = app.add_subcommand("generate", "Sample a graph, SEM, and dataset");
    auto gen_opts = std::make_shared<RunOptions>();
    gen_opts->attach(generate);
    generate->callback([gen_opts] { std::exit(cmd_generate(*gen_opts)); });

    // superstructure ---------------------------------------------------------
    CLI::App* super = app.add_subcommand("superstructure", "Build the candidate-edge graph");
    auto s_truth = std::make_shared<std::string>();
    auto s_data = std::make_shared<std::string>();
    auto s_mode = std::make_shared<std::string>("perfect");
    auto s_frac = std::make_shared<double>(0.1);
    auto s_alpha = std::make_shared<double>(0.05);
    auto s_seed = std::make_shared<std::uint64_t>(0);
    auto s_out = std::make_shared<std::string>("superstructure.edgelist");
    super->add_option("--truth", *s_truth, "Ground-truth edge list (perfect mode)");
    super->add_option("--data", *s_data, "Dataset CSV (pc mode)");
    super->add_option("--mode", *s_mode, "perfect | pc")
        ->check(CLI::IsMember({"perfect", "pc"}));
    super->add_option("--extra-edge-frac", *s_frac, "Extra edges as a fraction of true edges");
    super->add_option("--alpha", *s_alpha, "Significance level for the PC skeleton");
    super->add_option("--seed", *s_seed, "Seed for the extra-edge draw");
    super->add_option("--out", *s_out, "Output edge-list file");
    super->callback([=] {
        Superstructure ss(0);
        if (*s_mode == "perfect") {
            if (s_truth->empty()) throw CLI::ValidationError("perfect mode needs --truth");
            Dag truth = dag_from_edge_list(read_text_file(*s_truth));
            ss = superstructure_with_extras(truth, *s_frac, *s_seed);
        } else {
            if (s_data->empty()) throw CLI::ValidationError("pc mode needs --data");
            Dataset data = dataset_from_csv(read_text_file(*s_data));
            ss = superstructure_from_pc(data, *s_alpha);
        }
        write_text_file(*s_out, to_edge_list(ss));
        std::printf("wrote %s  (%d nodes, %d candidate edges, %s)\n", s_out->c_str(), ss.p(),
                    ss.edge_count(), ss.perfect() ? "perfect" : "estimated");
        std::exit(0);
    });

    // partition --------------------------------------------------------------
    CLI::App* part_cmd = app.add_subcommand("partition", "Split the superstructure into subsets");
    auto p_super = std::make_shared<std::string>();
    auto p_kind = std::make_shared<std::string>("expansive");
    auto p_comms = std::make_shared<int>(0);
    auto p_resolution = std::make_shared<double>(1.0);
    auto p_out = std::make_shared<std::string>("partition.txt");
    part_cmd->add_option("--superstructure", *p_super, "Superstructure edge list")->required();
    part_cmd->add_option("--partition", *p_kind, "Partition scheme")
        ->check(CLI::IsMember({"disjoint", "edge-cover", "expansive", "none"}));
    CLI::Option* p_comms_opt =
        part_cmd->add_option("--num-communities", *p_comms, "Pinned community count");
    part_cmd->add_option("--resolution", *p_resolution, "Modularity resolution");
    part_cmd->add_option("--out", *p_out, "Output partition file");
    part_cmd->callback([=] {
        Superstructure ss = superstructure_from_edge_list(read_text_file(*p_super));
        PartitionChoice choice = partition_choice_from_name(*p_kind);
        Partition result = whole_set_partition(ss.p());
        if (choice != PartitionChoice::None) {
            PartitionConfig pc;
            if (p_comms_opt->count()) pc.num_communities = *p_comms;
            pc.resolution = *p_resolution;
            Partition base = disjoint_partition(ss, pc);
            result = choice == PartitionChoice::Disjoint ? base
                     : choice == PartitionChoice::EdgeCover ? edge_cover_expansion(ss, base)
                                                            : causal_expansion(ss, base);
        }
        write_text_file(*p_out, to_partition_file(result));
        std::printf("wrote %s  (%d subsets)\n", p_out->c_str(), result.size());
        std::exit(0);
    });

    // learn ------------------------------------------------------------------
    CLI::App* learn_cmd = app.add_subcommand("learn", "Run the learner on every subset");
    auto l_data = std::make_shared<std::string>();
    auto l_part = std::make_shared<std::string>();
    auto l_super = std::make_shared<std::string>();
    auto l_truth = std::make_shared<std::string>();
    auto l_learner = std::make_shared<std::string>("pc");
    auto l_alpha = std::make_shared<double>(0.05);
    auto l_cap = std::make_shared<int>(0);
    auto l_workers = std::make_shared<int>(1);
    auto l_gaps = std::make_shared<std::string>("on");
    auto l_out = std::make_shared<std::string>("results.json");
    learn_cmd->add_option("--data", *l_data, "Dataset CSV")->required();
    learn_cmd->add_option("--partition-file", *l_part, "Partition file")->required();
    learn_cmd->add_option("--superstructure", *l_super,
                          "Superstructure edge list (needed when gaps are on)");
    learn_cmd->add_option("--truth", *l_truth, "Ground-truth edge list (oracle learner)");
    learn_cmd->add_option("--learner", *l_learner, "pc | exact | oracle")
        ->check(CLI::IsMember({"pc", "exact", "oracle"}));
    learn_cmd->add_option("--alpha", *l_alpha, "Significance level for CI tests");
    CLI::Option* l_cap_opt =
        learn_cmd->add_option("--max-cond-set", *l_cap, "Conditioning-set size cap");
    learn_cmd->add_option("--workers", *l_workers, "Subset-learning threads");
    learn_cmd->add_option("--use-superstructure-gaps", *l_gaps,
                          "Restrict learners to superstructure adjacencies")
        ->check(CLI::IsMember({"on", "off"}));
    learn_cmd->add_option("--out", *l_out, "Output results JSON");
    learn_cmd->callback([=] {
        Dataset data = dataset_from_csv(read_text_file(*l_data));
        Partition part = partition_from_file(read_text_file(*l_part), data.p());
        LearnerConfig cfg;
        cfg.algorithm = learner_algorithm_from_name(*l_learner);
        cfg.alpha = *l_alpha;
        if (l_cap_opt->count()) cfg.max_cond_set = *l_cap;
        if (cfg.algorithm == LearnerAlgorithm::Oracle) {
            if (l_truth->empty()) throw CLI::ValidationError("the oracle learner needs --truth");
            cfg.oracle_truth = dag_from_edge_list(read_text_file(*l_truth));
        }
        if (on_off(*l_gaps, "--use-superstructure-gaps")) {
            if (l_super->empty())
                throw CLI::ValidationError("--use-superstructure-gaps on needs --superstructure");
            cfg.fixed_gaps = superstructure_from_edge_list(read_text_file(*l_super));
        }
        std::vector<SubsetResult> results = learn_all(data, part, cfg, *l_workers);
        write_text_file(*l_out, subset_results_to_json(results));
        std::printf("wrote %s  (%d subsets learned)\n", l_out->c_str(),
                    static_cast<int>(results.size()));
        std::exit(0);
    });

    // screen -----------------------------------------------------------------
    CLI::App* screen_cmd = app.add_subcommand("screen", "Merge subset results globally");
    auto c_super = std::make_shared<std::string>();
    auto c_results = std::make_shared<std::string>();
    auto c_data = std::make_shared<std::string>();
    auto c_finite = std::make_shared<std::string>();
    auto c_meek = std::make_shared<std::string>("on");
    auto c_filter = std::make_shared<std::string>("off");
    auto c_scale = std::make_shared<double>(1.0);
    auto c_out = std::make_shared<std::string>("merged.edgelist");
    auto c_trace = std::make_shared<std::string>();
    screen_cmd->add_option("--superstructure", *c_super, "Superstructure edge list")->required();
    screen_cmd->add_option("--results", *c_results, "Subset results JSON")->required();
    screen_cmd->add_option("--data", *c_data, "Dataset CSV (finite-sample screen)");
    screen_cmd
        ->add_option("--finite-sample", *c_finite,
                     "Finite-sample screen with cycle resolution (default: on when --data is given)")
        ->check(CLI::IsMember({"on", "off"}));
    screen_cmd->add_option("--apply-meek", *c_meek, "Close orientations under the Meek rules")
        ->check(CLI::IsMember({"on", "off"}));
    screen_cmd
        ->add_option("--superstructure-filter", *c_filter,
                     "Drop candidates outside the superstructure (edge-list files do not record "
                     "whether a superstructure is perfect, so this defaults to off)")
        ->check(CLI::IsMember({"on", "off"}));
    screen_cmd->add_option("--ric-penalty-scale", *c_scale, "Two-cycle penalty scale");
    screen_cmd->add_option("--out", *c_out, "Output merged edge list");
    screen_cmd->add_option("--trace", *c_trace, "Also write the cycle-resolution trace JSON");
    screen_cmd->callback([=] {
        Superstructure ss = superstructure_from_edge_list(read_text_file(*c_super));
        std::vector<SubsetResult> results = subset_results_from_json(read_text_file(*c_results));
        MergeConfig cfg;
        cfg.use_superstructure_filter = on_off(*c_filter, "--superstructure-filter");
        cfg.apply_meek = on_off(*c_meek, "--apply-meek");
        cfg.ric_penalty_scale = *c_scale;
        cfg.finite_sample =
            c_finite->empty() ? !c_data->empty() : on_off(*c_finite, "--finite-sample");
        std::optional<Dataset> data;
        if (!c_data->empty()) data = dataset_from_csv(read_text_file(*c_data));
        if (cfg.finite_sample && !data)
            throw CLI::ValidationError("--finite-sample on needs --data");
        FiniteMergeResult merged = merge(ss, results, cfg, data ? &*data : nullptr);
        write_text_file(*c_out, to_edge_list(merged.graph));
        if (!c_trace->empty()) write_text_file(*c_trace, trace_to_json(merged.trace));
        std::printf("wrote %s  (%d edges, %d cycle-resolution steps)\n", c_out->c_str(),
                    merged.graph.edge_count(), static_cast<int>(merged.trace.steps.size()));
        std::exit(0);
    });

    // evaluate ---------------------------------------------------------------
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "Score an estimate against the truth");
    auto e_est = std::make_shared<std::string>();
    auto e_truth = std::make_shared<std::string>();
    auto e_mode = std::make_shared<std::string>("oriented");
    auto e_out = std::make_shared<std::string>();
    auto e_ledger = std::make_shared<std::string>();
    eval_cmd->add_option("--estimate", *e_est, "Estimated-graph edge list")->required();
    eval_cmd->add_option("--truth", *e_truth, "Ground-truth edge list")->required();
    eval_cmd->add_option("--mode", *e_mode, "adjacency | oriented")
        ->check(CLI::IsMember({"adjacency", "oriented"}));
    eval_cmd->add_option("--out", *e_out, "Also write the report JSON here");
    eval_cmd->add_option("--ledger", *e_ledger, "Also append a row to this CSV ledger");
    eval_cmd->callback([=] {
        MixedGraph est = mixed_graph_from_edge_list(read_text_file(*e_est));
        Dag truth = dag_from_edge_list(read_text_file(*e_truth));
        EvalReport report = evaluate(est, truth, eval_mode_from_name(*e_mode));
        std::printf("shd %d  tpr %.4f  fpr %.4f", report.shd, report.tpr, report.fpr);
        if (report.orientation_shd) std::printf("  orientation_shd %d", *report.orientation_shd);
        std::printf("\n");
        if (!e_out->empty()) write_text_file(*e_out, report_to_json(report));
        if (!e_ledger->empty()) append_report_csv(*e_ledger, report);
        std::exit(0);
    });

    // run --------------------------------------------------------------------
    CLI::App* run_cmd = app.add_subcommand("run", "Run the whole pipeline per seed");
    auto run_opts = std::make_shared<RunOptions>();
    run_opts->attach(run_cmd);
    run_cmd->callback([run_opts] {
        ExperimentConfig cfg = run_opts->build();
        std::exit(report_outcomes(run_pipeline(cfg), cfg.out_dir));
    });

    // sweep ------------------------------------------------------------------
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run the pipeline across one axis");
    auto sweep_opts = std::make_shared<RunOptions>();
    sweep_opts->attach(sweep_cmd);
    auto w_axis = std::make_shared<std::string>();
    auto w_values = std::make_shared<std::vector<std::string>>();
    sweep_cmd->add_option("--axis", *w_axis, "samples | extra-edge-frac | alpha | partition")
        ->required()
        ->check(CLI::IsMember({"samples", "extra-edge-frac", "alpha", "partition"}));
    sweep_cmd->add_option("--values", *w_values, "Comma-separated axis values")
        ->required()
        ->delimiter(',');
    sweep_cmd->callback([=] {
        ExperimentConfig cfg = sweep_opts->build();
        SweepResult result = sweep(cfg, sweep_axis_from_name(*w_axis), *w_values);
        std::printf("%-16s %10s %18s %18s %18s %12s\n", sweep_axis_name(result.axis).c_str(),
                    "runs", "shd", "tpr", "fpr", "time_s");
        for (const SweepCell& cell : result.cells) {
            char runs[32];
            std::snprintf(runs, sizeof(runs), "%d/%d", cell.completed,
                          cell.completed + cell.failed);
            std::printf("%-16s %10s %9.2f +-%6.2f %9.3f +-%6.3f %9.4f +-%6.4f %12.2f\n",
                        cell.value.c_str(), runs, cell.mean_shd, cell.ci95_shd, cell.mean_tpr,
                        cell.ci95_tpr, cell.mean_fpr, cell.ci95_fpr, cell.mean_time_s);
        }
        std::printf("ledger: %s/ledger.csv\nsummary: %s/summary.csv\n", cfg.out_dir.c_str(),
                    cfg.out_dir.c_str());
        bool all_ok = true;
        for (const RunOutcome& out : result.outcomes) all_ok = all_ok && out.ok;
        std::exit(all_ok ? 0 : 1);
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return main_impl(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
