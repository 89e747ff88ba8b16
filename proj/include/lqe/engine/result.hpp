#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lqe/common/labels.hpp"
#include "lqe/common/time.hpp"

namespace lqe::engine {

enum class Direction { Backward, Forward };

struct EvalContext {
    Timestamp now{};
    std::size_t limit = 5000;
    /// Backward keeps the newest `limit` rows, Forward the oldest. Output is
    /// ascending either way.
    Direction direction = Direction::Backward;
    Nanos default_log_lookback = std::chrono::hours(24 * 7);
};

struct LogRow {
    Timestamp ts;
    Labels labels;
    std::string line;

    bool operator==(const LogRow&) const = default;
};

struct LogResult {
    std::vector<LogRow> rows;  // ascending ts
    bool truncated = false;

    bool operator==(const LogResult&) const = default;
};

struct Sample {
    Labels labels;
    double value = 0;

    bool operator==(const Sample&) const = default;
};

struct MetricResult {
    std::vector<Sample> samples;  // ascending label_set_string
    Timestamp evaluated_at{};

    bool operator==(const MetricResult&) const = default;
};

using QueryResult = std::variant<LogResult, MetricResult>;

/// `{"type": "log", "rows": [{"ts", "labels", "line"}], "truncated"}` or
/// `{"type": "metric", "samples": [{"labels", "value"}], "evaluated_at"}`.
/// Timestamps are RFC 3339 strings with nanoseconds.
nlohmann::json to_json(const QueryResult& result);

/// Throws std::invalid_argument on schema violations. `evaluated_at` and
/// `truncated` are optional.
QueryResult result_from_json(const nlohmann::json& j);

}  // namespace lqe::engine
