#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lqe/logql/ast.hpp"

namespace lqe::logql {

enum class DiagCode {
    Syntax,
    EmptySelector,
    BadRegexp,
    UnknownFunc,
    MissingRange,
    MisplacedRange,
    MissingUnwrap,
    UnexpectedUnwrap,
    BadTemplate,
    InvalidArgument,
    EmptyPipelineResultRisk,
    VariableUnsubstituted,
};

/// Upper snake case name, e.g. "MISSING_RANGE".
std::string_view to_string(DiagCode code);

struct Diagnostic {
    DiagCode code = DiagCode::Syntax;
    Span span;
    std::string message;
};

/// "CODE at begin..end: message"
std::string format_diagnostic(const Diagnostic& diag);

/// Raised by parse() and by the engine façade when a query cannot run.
class QueryError : public std::runtime_error {
public:
    explicit QueryError(std::vector<Diagnostic> diagnostics);

    const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

}  // namespace lqe::logql
