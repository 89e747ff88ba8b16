#pragma once

#include "lqe/logql/ast.hpp"

namespace lqe::logql {

/// Sorts and dedupes selector matchers by (name, op, value), sorts and dedupes
/// grouping labels, normalizes durations. Pipeline order is kept. Idempotent.
QueryAst canonicalize(const QueryAst& ast);

/// Structural equality after canonicalization.
bool ast_equal(const QueryAst& a, const QueryAst& b);

}  // namespace lqe::logql
