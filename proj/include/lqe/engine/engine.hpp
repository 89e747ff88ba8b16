#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lqe/engine/result.hpp"
#include "lqe/ingest/store.hpp"
#include "lqe/logql/ast.hpp"
#include "lqe/logql/parser.hpp"

namespace lqe::engine {

using ingest::LogStore;
using ingest::StreamId;

/// Ascending ids of the streams satisfying every matcher. Regex matchers are
/// anchored at both ends; `!=` and `!~` also match streams without the label.
std::vector<StreamId> select_streams(const LogStore& store, const std::vector<logql::LabelMatcher>& matchers);

/// An entry moving through a pipeline.
struct PipelineEntry {
    Timestamp ts;
    Labels labels;
    std::string line;
    std::optional<double> unwrapped;
};

/// Pipeline stages compiled once per query.
///
/// Semantics:
/// - Line filters test the current line; `|=`/`!=` are case-sensitive
///   substring tests, `|~`/`!~` unanchored regex searches.
/// - Label filters with a string operand compare the label value, a missing
///   label reads as "". Regex operands are anchored at both ends. With a
///   numeric operand the label must parse as a finite number, otherwise the
///   entry is dropped.
/// - `regexp` adds every non-empty named capture as a label. A name that
///   collides with a stream label is stored as `<name>_extracted`. Lines the
///   pattern does not match get `__error__="regexp"` and continue.
/// - `line_format` rewrites the line; missing labels render empty.
/// - `unwrap` reads the label as a number at that point; entries whose value
///   is missing or not a finite number are dropped.
class Pipeline {
public:
    /// The stages must have passed validation.
    explicit Pipeline(const std::vector<logql::PipelineStage>& stages);

    /// Returns false when the entry is filtered out.
    bool process(PipelineEntry& entry, const Labels& stream_labels) const;

    const std::optional<std::string>& unwrap_label() const noexcept { return unwrap_label_; }

    struct Stage;  // defined in engine.cpp

private:
    std::vector<std::shared_ptr<const Stage>> stages_;
    std::optional<std::string> unwrap_label_;
};

/// Shared numeric grammar for label filters and unwrap.
std::optional<double> parse_number(std::string_view text);

/// Rows within [now - default_log_lookback, now], ordered by
/// (ts, stream label set, position in stream).
LogResult execute_log_query(const LogStore& store, const logql::LogQuery& query, const EvalContext& ctx);

/// Instant evaluation at `ctx.now`; range windows are [now - range, now].
MetricResult execute_metric_query(const LogStore& store, const logql::MetricQuery& query, const EvalContext& ctx);

/// Validates, then dispatches. Throws logql::QueryError.
QueryResult execute(const LogStore& store, const logql::QueryAst& ast, const EvalContext& ctx);

/// Parses, validates and executes. Throws logql::QueryError.
QueryResult execute(const LogStore& store, std::string_view text, const logql::Variables& vars,
                    const EvalContext& ctx, const logql::ParseOptions& options = {});

}  // namespace lqe::engine
