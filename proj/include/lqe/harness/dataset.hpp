#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lqe/engine/result.hpp"
#include "lqe/logql/parser.hpp"

namespace lqe::harness {

enum class QueryType { Log, Metric };

std::string_view to_string(QueryType type);  // "LOG" / "METRIC"

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BenchmarkTuple {
    std::string id;
    std::string application;  // corpus key
    std::string use_case;
    QueryType query_type = QueryType::Log;
    std::string nl_question;
    std::string reference_query;
    /// Absent until annotated against a corpus.
    std::optional<engine::QueryResult> expected_output;
    logql::Variables vars;
};

nlohmann::json to_json(const BenchmarkTuple& tuple);

/// Checks one record: required fields, reference query parses and validates,
/// query_type matches the query, expected_output (when present) has the same
/// type. Errors name the tuple id and field.
BenchmarkTuple tuple_from_json(const nlohmann::json& j);

/// One JSON object per line; blank lines are skipped. Rejects duplicate ids
/// and empty files. Errors carry `source:line`.
std::vector<BenchmarkTuple> parse_dataset(std::string_view text, const std::string& source = "<dataset>");
std::vector<BenchmarkTuple> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const std::vector<BenchmarkTuple>& tuples);

struct SplitSpec {
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
    std::vector<double> train_fractions{0.2, 0.4, 0.6, 0.8};
};

struct Split {
    std::vector<BenchmarkTuple> test;
    /// train_subsets[i] holds round(train_fractions[i] * n) tuples of every
    /// application, drawn from the non-test tuples. Subsets are nested in the
    /// order of increasing fraction.
    std::vector<std::vector<BenchmarkTuple>> train_subsets;
};

/// Stratified by application: each application's tuples are ordered by id,
/// shuffled with a generator seeded from (seed, application), and the first
/// round(test_fraction * n) become test tuples. Needs at least 5 tuples per
/// application; throws DatasetError when a fraction leaves the test set or
/// the remaining pool empty, or asks for more training tuples than remain.
Split split_dataset(const std::vector<BenchmarkTuple>& tuples, const SplitSpec& spec);

}  // namespace lqe::harness
