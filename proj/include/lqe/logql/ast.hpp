#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lqe/common/box.hpp"

namespace lqe::logql {

/// Half-open byte range in the query text. Source-location metadata only:
/// spans never take part in node identity, so every Span compares equal.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    friend bool operator==(const Span&, const Span&) { return true; }
};

enum class MatchOp { Eq, Neq, Re, Nre };

struct LabelMatcher {
    std::string name;
    MatchOp op = MatchOp::Eq;
    std::string value;
    Span span;

    friend bool operator==(const LabelMatcher&, const LabelMatcher&) = default;
};

enum class LineFilterOp { Contains, NotContains, Matches, NotMatches };

struct LineFilter {
    LineFilterOp op = LineFilterOp::Contains;
    std::string pattern;
    Span span;

    friend bool operator==(const LineFilter&, const LineFilter&) = default;
};

enum class Comparator { Eq, Neq, Gt, Ge, Lt, Le, Re, Nre };

/// `| name <cmp> value`. A double value makes it a numeric comparison.
struct LabelFilter {
    std::string name;
    Comparator cmp = Comparator::Eq;
    std::variant<std::string, double> value;
    Span span;

    friend bool operator==(const LabelFilter&, const LabelFilter&) = default;
};

/// `| regexp "..."` with named capture groups.
struct RegexpStage {
    std::string pattern;
    Span span;

    friend bool operator==(const RegexpStage&, const RegexpStage&) = default;
};

/// `| line_format "..."` with `{{.label}}` and `{{__timestamp__}}` actions.
struct LineFormatStage {
    std::string tmpl;
    Span span;

    friend bool operator==(const LineFormatStage&, const LineFormatStage&) = default;
};

struct UnwrapStage {
    std::string label;
    Span span;

    friend bool operator==(const UnwrapStage&, const UnwrapStage&) = default;
};

using PipelineStage = std::variant<LineFilter, LabelFilter, RegexpStage, LineFormatStage, UnwrapStage>;

struct LogQuery {
    std::vector<LabelMatcher> selector;
    std::vector<PipelineStage> pipeline;
    Span span;

    friend bool operator==(const LogQuery&, const LogQuery&) = default;
};

enum class DurationUnit { Millisecond, Second, Minute, Hour, Day, Week };

struct Duration {
    std::int64_t magnitude = 1;
    DurationUnit unit = DurationUnit::Second;

    std::chrono::nanoseconds nanos() const;

    /// Same length expressed in the largest unit that divides it exactly.
    Duration normalized() const;

    friend bool operator==(const Duration&, const Duration&) = default;
};

enum class RangeFunc {
    CountOverTime,
    Rate,
    BytesOverTime,
    SumOverTime,
    AvgOverTime,
    MinOverTime,
    MaxOverTime,
};

/// True for the *_over_time functions that aggregate an unwrapped value.
bool requires_unwrap(RangeFunc func);

struct RangeAggregation {
    RangeFunc func = RangeFunc::CountOverTime;
    LogQuery inner;
    /// Absent only in malformed input; validate() reports MISSING_RANGE.
    std::optional<Duration> range;
    Span span;

    friend bool operator==(const RangeAggregation&, const RangeAggregation&) = default;
};

enum class VectorFunc { Sum, Avg, Min, Max, Count, Topk, Bottomk };

struct Grouping {
    bool without = false;
    std::vector<std::string> labels;

    friend bool operator==(const Grouping&, const Grouping&) = default;
};

struct VectorAggregation;

using MetricQuery = std::variant<RangeAggregation, Box<VectorAggregation>>;

struct VectorAggregation {
    VectorFunc func = VectorFunc::Sum;
    /// Present iff func is Topk or Bottomk.
    std::optional<std::int64_t> k;
    std::optional<Grouping> grouping;
    MetricQuery inner;
    Span span;

    friend bool operator==(const VectorAggregation&, const VectorAggregation&) = default;
};

using QueryAst = std::variant<LogQuery, MetricQuery>;

inline bool is_log_query(const QueryAst& ast) { return std::holds_alternative<LogQuery>(ast); }

std::string_view to_string(MatchOp op);
std::string_view to_string(LineFilterOp op);
std::string_view to_string(Comparator cmp);
std::string_view to_string(DurationUnit unit);
std::string_view to_string(RangeFunc func);
std::string_view to_string(VectorFunc func);

std::optional<RangeFunc> range_func_from_name(std::string_view name);
std::optional<VectorFunc> vector_func_from_name(std::string_view name);

}  // namespace lqe::logql
