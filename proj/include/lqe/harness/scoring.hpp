#pragma once

#include <string>

#include "lqe/engine/result.hpp"

namespace lqe::harness {

/// Decimal text of `value` rounded half away from zero to two places, e.g.
/// 3.145 -> "3.15", -0.004 -> "0.00". Rounding works on the shortest decimal
/// that round-trips to `value`, so 3.145 rounds up even though its binary
/// value is slightly below 3.145.
std::string round2(double value);

/// Same label sets, and per label set equal round2 values.
bool compare_metric_result(const engine::MetricResult& expected, const engine::MetricResult& got);

struct LogScore {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

/// Rows are identified by (ts, line); labels and order are ignored and
/// duplicates count as a multiset. Both empty scores (1, 1, 1); either side
/// empty otherwise scores (0, 0, 0).
LogScore score_log_result(const engine::LogResult& expected, const engine::LogResult& got);

}  // namespace lqe::harness
