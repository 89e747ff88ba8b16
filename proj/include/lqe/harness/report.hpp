#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lqe/harness/evaluate.hpp"

namespace lqe::harness {

enum class ReportFormat { Json, Markdown };

struct Comparison {
    struct Row {
        std::string application;  // "overall" for the last row
        Scores before;
        Scores after;
    };
    std::vector<Row> rows;  // applications in name order, then overall
};

/// Throws std::invalid_argument when the runs cover different tuples or
/// different application buckets.
Comparison compare_runs(const EvalMetrics& before, const EvalMetrics& after);

/// after - before, absent when either side is.
std::optional<double> delta(const std::optional<double>& before, const std::optional<double>& after);
/// (after - before) / before, absent when either side is or before is 0.
std::optional<double> relative_delta(const std::optional<double>& before, const std::optional<double>& after);

/// Markdown: one row per application plus an overall row; MQ is metric
/// accuracy and LQ log F1. JSON: the metrics document. Values print with
/// round2, missing ones as "n/a".
std::string render_report(const EvalMetrics& metrics, ReportFormat format);

/// Markdown columns: MQ (B), MQ (A), MQ delta, MQ rel., then the same for LQ.
std::string render_report(const Comparison& comparison, ReportFormat format);

nlohmann::json to_json(const Comparison& comparison);

/// Writes records.jsonl, metrics.json and report.md, which depend only on
/// the run's inputs, and timings.jsonl with per-tuple latencies.
void write_run_artifacts(const std::filesystem::path& dir, const EvalRun& run);

}  // namespace lqe::harness
