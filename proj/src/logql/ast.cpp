#include "lqe/logql/ast.hpp"

#include <array>
#include <utility>

namespace lqe::logql {

namespace {

constexpr std::array<std::pair<DurationUnit, std::int64_t>, 6> kUnitNanos = {{
    {DurationUnit::Week, 7LL * 24 * 3600 * 1'000'000'000LL},
    {DurationUnit::Day, 24LL * 3600 * 1'000'000'000LL},
    {DurationUnit::Hour, 3600LL * 1'000'000'000LL},
    {DurationUnit::Minute, 60LL * 1'000'000'000LL},
    {DurationUnit::Second, 1'000'000'000LL},
    {DurationUnit::Millisecond, 1'000'000LL},
}};

std::int64_t unit_nanos(DurationUnit unit)
{
    for (const auto& [u, ns] : kUnitNanos) {
        if (u == unit) {
            return ns;
        }
    }
    return 0;
}

}  // namespace

std::chrono::nanoseconds Duration::nanos() const
{
    return std::chrono::nanoseconds{magnitude * unit_nanos(unit)};
}

Duration Duration::normalized() const
{
    const std::int64_t total = nanos().count();
    for (const auto& [u, ns] : kUnitNanos) {
        if (total % ns == 0) {
            return Duration{total / ns, u};
        }
    }
    return *this;
}

bool requires_unwrap(RangeFunc func)
{
    switch (func) {
    case RangeFunc::SumOverTime:
    case RangeFunc::AvgOverTime:
    case RangeFunc::MinOverTime:
    case RangeFunc::MaxOverTime:
        return true;
    default:
        return false;
    }
}

std::string_view to_string(MatchOp op)
{
    switch (op) {
    case MatchOp::Eq:
        return "=";
    case MatchOp::Neq:
        return "!=";
    case MatchOp::Re:
        return "=~";
    case MatchOp::Nre:
        return "!~";
    }
    return "?";
}

std::string_view to_string(LineFilterOp op)
{
    switch (op) {
    case LineFilterOp::Contains:
        return "|=";
    case LineFilterOp::NotContains:
        return "!=";
    case LineFilterOp::Matches:
        return "|~";
    case LineFilterOp::NotMatches:
        return "!~";
    }
    return "?";
}

std::string_view to_string(Comparator cmp)
{
    switch (cmp) {
    case Comparator::Eq:
        return "=";
    case Comparator::Neq:
        return "!=";
    case Comparator::Gt:
        return ">";
    case Comparator::Ge:
        return ">=";
    case Comparator::Lt:
        return "<";
    case Comparator::Le:
        return "<=";
    case Comparator::Re:
        return "=~";
    case Comparator::Nre:
        return "!~";
    }
    return "?";
}

std::string_view to_string(DurationUnit unit)
{
    switch (unit) {
    case DurationUnit::Millisecond:
        return "ms";
    case DurationUnit::Second:
        return "s";
    case DurationUnit::Minute:
        return "m";
    case DurationUnit::Hour:
        return "h";
    case DurationUnit::Day:
        return "d";
    case DurationUnit::Week:
        return "w";
    }
    return "?";
}

namespace {

constexpr std::array<std::pair<RangeFunc, std::string_view>, 7> kRangeNames = {{
    {RangeFunc::CountOverTime, "count_over_time"},
    {RangeFunc::Rate, "rate"},
    {RangeFunc::BytesOverTime, "bytes_over_time"},
    {RangeFunc::SumOverTime, "sum_over_time"},
    {RangeFunc::AvgOverTime, "avg_over_time"},
    {RangeFunc::MinOverTime, "min_over_time"},
    {RangeFunc::MaxOverTime, "max_over_time"},
}};

constexpr std::array<std::pair<VectorFunc, std::string_view>, 7> kVectorNames = {{
    {VectorFunc::Sum, "sum"},
    {VectorFunc::Avg, "avg"},
    {VectorFunc::Min, "min"},
    {VectorFunc::Max, "max"},
    {VectorFunc::Count, "count"},
    {VectorFunc::Topk, "topk"},
    {VectorFunc::Bottomk, "bottomk"},
}};

}  // namespace

std::string_view to_string(RangeFunc func)
{
    for (const auto& [f, name] : kRangeNames) {
        if (f == func) {
            return name;
        }
    }
    return "?";
}

std::string_view to_string(VectorFunc func)
{
    for (const auto& [f, name] : kVectorNames) {
        if (f == func) {
            return name;
        }
    }
    return "?";
}

std::optional<RangeFunc> range_func_from_name(std::string_view name)
{
    for (const auto& [f, n] : kRangeNames) {
        if (n == name) {
            return f;
        }
    }
    return std::nullopt;
}

std::optional<VectorFunc> vector_func_from_name(std::string_view name)
{
    for (const auto& [f, n] : kVectorNames) {
        if (n == name) {
            return f;
        }
    }
    return std::nullopt;
}

}  // namespace lqe::logql
