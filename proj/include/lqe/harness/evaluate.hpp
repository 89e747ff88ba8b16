#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lqe/engine/result.hpp"
#include "lqe/gateway/generator.hpp"
#include "lqe/harness/dataset.hpp"
#include "lqe/harness/scoring.hpp"
#include "lqe/ingest/store.hpp"

namespace lqe::harness {

struct CandidateRecord {
    std::string tuple_id;
    std::string application;
    QueryType query_type = QueryType::Log;
    std::string generated_text;
    std::string extracted_query;
    bool generation_ok = true;
    bool parse_ok = false;
    bool validate_ok = false;
    bool exec_ok = false;  // implies parse_ok and validate_ok
    /// Generation failure, parse or validation diagnostics, or the reason a
    /// result does not count (wrong result type).
    std::vector<std::string> errors;
    std::optional<engine::QueryResult> result;
    double latency_ms = 0;
    std::optional<std::vector<double>> logprobs;
    bool exact_match = false;
    /// METRIC tuples: 1 or 0. LOG tuples: F1.
    double score = 0;
    LogScore log_score;  // LOG tuples only
    /// False when the live reference result differs from the stored
    /// expected_output. Absent when the tuple has none.
    std::optional<bool> expected_output_consistent;
};

/// Everything except latency, so records of a deterministic run compare
/// byte for byte.
nlohmann::json to_json(const CandidateRecord& record);

struct EvalOptions {
    /// Evaluation time; defaults to each corpus's anchor.
    std::optional<Timestamp> now;
    std::size_t limit = 5000;
    Nanos log_lookback = std::chrono::hours(24 * 7);
    /// Tuples evaluated at once.
    std::size_t parallelism = 4;
    std::size_t prompt_sample_lines = 20;
};

engine::EvalContext context_for(const ingest::LogStore& store, const EvalOptions& options);

/// Runs the reference and the candidate on `store`. The candidate goes
/// through extract_query, parse, validate and execute; a candidate that
/// fails any step, or returns the other result type, scores 0 with no exact
/// match. Exact match compares canonicalized ASTs. Throws DatasetError when
/// the reference itself fails.
CandidateRecord evaluate_tuple(const ingest::LogStore& store, const BenchmarkTuple& tuple,
                               std::string_view candidate_text, const engine::EvalContext& ctx);

struct Scores {
    std::size_t tuples = 0;
    std::size_t metric_tuples = 0;
    std::size_t log_tuples = 0;
    /// Absent when the bucket has no tuples of that type.
    std::optional<double> metric_accuracy;
    std::optional<double> log_precision;
    std::optional<double> log_recall;
    std::optional<double> log_f1;
    std::optional<double> exact_match_rate;
    std::optional<double> executability_rate;
    bool operator==(const Scores&) const = default;
};

struct EvalMetrics {
    Scores overall;
    std::map<std::string, Scores> per_application;
    /// exp(-mean token logprob) over records that reported logprobs.
    std::optional<double> perplexity;
    std::vector<std::string> tuple_ids;  // sorted
    bool operator==(const EvalMetrics&) const = default;
};

/// Sums run in tuple id order, so the result does not depend on the order
/// of `records`.
EvalMetrics aggregate(const std::vector<CandidateRecord>& records);

nlohmann::json to_json(const EvalMetrics& metrics);
EvalMetrics metrics_from_json(const nlohmann::json& j);

struct EvalRun {
    EvalMetrics metrics;
    std::vector<CandidateRecord> records;  // in tuple order
};

using StoreMap = std::map<std::string, const ingest::LogStore*, std::less<>>;

/// Generates a candidate for every tuple and scores it against the tuple's
/// corpus. Generator failures are recorded and score 0. Throws DatasetError
/// when a tuple names a corpus missing from `stores` or its reference fails.
EvalRun evaluate_run(const StoreMap& stores, const std::vector<BenchmarkTuple>& tuples, gateway::Generator& generator,
                     const EvalOptions& options);

}  // namespace lqe::harness
