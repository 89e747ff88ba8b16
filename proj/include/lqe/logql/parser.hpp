#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "lqe/logql/ast.hpp"
#include "lqe/logql/diagnostic.hpp"

namespace lqe::logql {

/// Dashboard variable bindings, keyed by name without the leading `$`.
using Variables = std::map<std::string, std::string, std::less<>>;

struct ParseOptions {
    /// Used for `$__interval` when the caller does not bind it.
    std::string default_interval = "1m";
};

/// Replaces `$name` and `${name}` references with their bindings. A `$`
/// directly preceded by an identifier character or a backslash is literal
/// text (`dfs.DataNode$DataTransfer`), as is a `$` not followed by an
/// identifier. `offsets[i]` maps each output byte back to the input.
struct Substitution {
    std::string text;
    std::vector<std::size_t> offsets;
};

/// Throws QueryError(VARIABLE_UNSUBSTITUTED) for unbound references.
Substitution substitute_variables(std::string_view text, const Variables& vars, const ParseOptions& options = {});

/// Parses a LogQL query. Spans in the result and in thrown diagnostics refer
/// to the original (pre-substitution) text. Throws QueryError.
QueryAst parse(std::string_view text, const Variables& vars = {}, const ParseOptions& options = {});

/// A standalone duration such as "90s" or "7d"; nullopt when malformed or
/// not positive.
std::optional<Duration> parse_duration(std::string_view text);

}  // namespace lqe::logql
