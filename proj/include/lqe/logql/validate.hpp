#pragma once

#include <vector>

#include "lqe/logql/ast.hpp"
#include "lqe/logql/diagnostic.hpp"

namespace lqe::logql {

/// Errors that prevent execution. Empty iff the engine can run the query.
std::vector<Diagnostic> validate(const QueryAst& ast);

/// Warnings about queries that run but can never return a line, e.g.
/// `|= "abc" != "b"`. Never blocks execution.
std::vector<Diagnostic> lint(const QueryAst& ast);

/// The LogQuery a metric expression ultimately reads from.
const LogQuery& innermost_log_query(const MetricQuery& query);

}  // namespace lqe::logql
