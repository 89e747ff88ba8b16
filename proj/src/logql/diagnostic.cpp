#include "lqe/logql/diagnostic.hpp"

#include <fmt/format.h>

namespace lqe::logql {

std::string_view to_string(DiagCode code)
{
    switch (code) {
    case DiagCode::Syntax:
        return "SYNTAX";
    case DiagCode::EmptySelector:
        return "EMPTY_SELECTOR";
    case DiagCode::BadRegexp:
        return "BAD_REGEXP";
    case DiagCode::UnknownFunc:
        return "UNKNOWN_FUNC";
    case DiagCode::MissingRange:
        return "MISSING_RANGE";
    case DiagCode::MisplacedRange:
        return "MISPLACED_RANGE";
    case DiagCode::MissingUnwrap:
        return "MISSING_UNWRAP";
    case DiagCode::UnexpectedUnwrap:
        return "UNEXPECTED_UNWRAP";
    case DiagCode::BadTemplate:
        return "BAD_TEMPLATE";
    case DiagCode::InvalidArgument:
        return "INVALID_ARGUMENT";
    case DiagCode::EmptyPipelineResultRisk:
        return "EMPTY_PIPELINE_RESULT_RISK";
    case DiagCode::VariableUnsubstituted:
        return "VARIABLE_UNSUBSTITUTED";
    }
    return "UNKNOWN";
}

std::string format_diagnostic(const Diagnostic& diag)
{
    return fmt::format("{} at {}..{}: {}", to_string(diag.code), diag.span.begin, diag.span.end, diag.message);
}

namespace {

std::string summarize(const std::vector<Diagnostic>& diagnostics)
{
    if (diagnostics.empty()) {
        return "query error";
    }
    std::string out = format_diagnostic(diagnostics.front());
    if (diagnostics.size() > 1) {
        out += fmt::format(" (+{} more)", diagnostics.size() - 1);
    }
    return out;
}

}  // namespace

QueryError::QueryError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(summarize(diagnostics)), diagnostics_(std::move(diagnostics))
{}

}  // namespace lqe::logql
