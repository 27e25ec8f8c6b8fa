#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "pcd/graph.hpp"
#include "pcd/orientation.hpp"

namespace pcd {

/**
 * How an estimate is compared against the ground-truth DAG.
 *
 * Adjacency scores the skeleton only: an edge is correct when the unordered
 * pair is adjacent in the truth, regardless of orientation.  Oriented
 * additionally compares end marks pair by pair against the truth's CPDAG,
 * since orientation is only identifiable up to the Markov equivalence class.
 */
enum class EvalMode { Adjacency, Oriented };

inline const char* eval_mode_name(EvalMode mode) {
    switch (mode) {
        case EvalMode::Adjacency: return "adjacency";
        case EvalMode::Oriented: return "oriented";
    }
    throw std::invalid_argument("eval_mode_name: unknown mode");
}

inline EvalMode eval_mode_from_name(const std::string& name) {
    if (name == "adjacency") return EvalMode::Adjacency;
    if (name == "oriented") return EvalMode::Oriented;
    throw std::invalid_argument("eval_mode_from_name: unknown mode \"" + name + "\"");
}

/**
 * Accuracy summary for one estimated graph.
 *
 * shd, tpr and fpr are always adjacency-level: with TP/FP/FN counted over
 * unordered pairs, shd = FP + FN, tpr = TP / |E*| and
 * fpr = FP / (C(p,2) - |E*|).  orientation_shd is filled only in Oriented
 * mode and counts the pairs whose edge state (presence plus both end marks)
 * differs from the truth CPDAG; a pair that is wrong in both adjacency and
 * orientation still counts once, so orientation_shd >= shd.
 *
 * wall_time_s is not measured here; the pipeline stamps it on the report it
 * captured the timing for.  config is a free-form echo of the producing
 * run's settings (seed, learner, partition kind, ...) carried into the
 * serialized forms so a ledger row is self-describing.
 */
struct EvalReport {
    EvalMode mode = EvalMode::Adjacency;
    int shd = 0;
    double tpr = 0.0;
    double fpr = 0.0;
    double wall_time_s = 0.0;
    std::optional<int> orientation_shd;
    std::map<std::string, std::string> config;

    bool operator==(const EvalReport&) const = default;
};

/**
 * Score an estimated graph against the ground-truth DAG.
 *
 * Degenerate denominators follow the vacuous conventions: an edgeless truth
 * gives tpr = 1 (every one of the zero true edges was recovered) and a
 * complete truth gives fpr = 0 (no absent pair to include falsely).
 */
inline EvalReport evaluate(const MixedGraph& est, const Dag& truth,
                           EvalMode mode = EvalMode::Adjacency) {
    if (est.p() != truth.p())
        throw std::invalid_argument("evaluate: node counts differ (" + std::to_string(est.p()) +
                                    " vs " + std::to_string(truth.p()) + ")");
    const int p = est.p();
    long tp = 0, fp = 0, fn = 0;
    for (NodeId u = 0; u < p; ++u) {
        for (NodeId v = u + 1; v < p; ++v) {
            const bool in_est = est.adjacent(u, v);
            const bool in_truth = truth.adjacent(u, v);
            tp += in_est && in_truth;
            fp += in_est && !in_truth;
            fn += !in_est && in_truth;
        }
    }
    EvalReport report;
    report.mode = mode;
    report.shd = static_cast<int>(fp + fn);
    const long true_edges = tp + fn;
    const long absent_pairs = static_cast<long>(p) * (p - 1) / 2 - true_edges;
    report.tpr = true_edges > 0 ? static_cast<double>(tp) / static_cast<double>(true_edges) : 1.0;
    report.fpr = absent_pairs > 0 ? static_cast<double>(fp) / static_cast<double>(absent_pairs) : 0.0;

    if (mode == EvalMode::Oriented) {
        const MixedGraph cpdag = cpdag_of_dag(truth);
        int mismatched = 0;
        for (NodeId u = 0; u < p; ++u) {
            for (NodeId v = u + 1; v < p; ++v) {
                const bool in_est = est.adjacent(u, v);
                if (in_est != cpdag.adjacent(u, v)) {
                    ++mismatched;
                } else if (in_est && (est.mark_at(u, v) != cpdag.mark_at(u, v) ||
                                      est.mark_at(v, u) != cpdag.mark_at(v, u))) {
                    ++mismatched;
                }
            }
        }
        report.orientation_shd = mismatched;
    }
    return report;
}

inline std::string report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["mode"] = eval_mode_name(report.mode);
    j["shd"] = report.shd;
    j["tpr"] = report.tpr;
    j["fpr"] = report.fpr;
    j["wall_time_s"] = report.wall_time_s;
    if (report.orientation_shd) j["orientation_shd"] = *report.orientation_shd;
    j["config"] = report.config;
    return j.dump(2);
}

inline EvalReport report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    EvalReport report;
    report.mode = eval_mode_from_name(j.at("mode").get<std::string>());
    report.shd = j.at("shd").get<int>();
    if (report.shd < 0) throw std::invalid_argument("report_from_json: negative shd");
    report.tpr = j.at("tpr").get<double>();
    report.fpr = j.at("fpr").get<double>();
    report.wall_time_s = j.at("wall_time_s").get<double>();
    if (j.contains("orientation_shd")) report.orientation_shd = j["orientation_shd"].get<int>();
    if (j.contains("config")) report.config = j["config"].get<std::map<std::string, std::string>>();
    return report;
}

namespace detail {

// RFC 4180 quoting, applied only when the field needs it so the common
// all-plain row stays byte-stable and easy to grep.
inline std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

}  // namespace detail

// One ledger row per run.  The identifying columns are pulled from the
// report's config echo (blank when the producer did not set them); the
// metric columns come from the report itself.
inline std::string report_csv_header() {
    return "seed,p,n,partition,learner,alpha,mode,shd,tpr,fpr,orientation_shd,wall_time_s";
}

inline std::string report_csv_row(const EvalReport& report) {
    auto cfg = [&](const char* key) {
        auto it = report.config.find(key);
        return it == report.config.end() ? std::string() : detail::csv_field(it->second);
    };
    std::string row;
    for (const char* key : {"seed", "p", "n", "partition", "learner", "alpha"}) {
        row += cfg(key);
        row += ',';
    }
    row += eval_mode_name(report.mode);
    row += ',' + std::to_string(report.shd);
    row += ',' + detail::csv_number(report.tpr);
    row += ',' + detail::csv_number(report.fpr);
    row += ',';
    if (report.orientation_shd) row += std::to_string(*report.orientation_shd);
    row += ',' + detail::csv_number(report.wall_time_s);
    return row;
}

// Append one row to the CSV ledger at `path`, writing the header first when
// the file is new or empty.  Callers running seeds concurrently must funnel
// appends through one writer; this function does not lock the file.
inline void append_report_csv(const std::string& path, const EvalReport& report) {
    bool need_header = true;
    {
        std::ifstream in(path);
        if (in.good() && in.peek() != std::ifstream::traits_type::eof()) need_header = false;
    }
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("append_report_csv: cannot open " + path);
    if (need_header) out << report_csv_header() << '\n';
    out << report_csv_row(report) << '\n';
    if (!out) throw std::runtime_error("append_report_csv: write failed for " + path);
}

}  // namespace pcd
