#pragma once

#include <string>

#include "lqe/logql/ast.hpp"

namespace lqe::logql {

/// Canonical text form: `{a="1", b="2"} |= "x" | regexp "..."`,
/// `sum by (a) (count_over_time({...} [5m]))`, durations in the largest exact
/// unit. Strings are always double-quoted.
std::string render(const QueryAst& ast);
std::string render(const LogQuery& query);
std::string render(const MetricQuery& query);
std::string render(const PipelineStage& stage);
std::string render(const Duration& duration);

}  // namespace lqe::logql
