#include "lqe/logql/validate.hpp"

#include <fmt/format.h>

#include "lqe/common/labels.hpp"
#include "lqe/common/regex.hpp"
#include "lqe/logql/template.hpp"

namespace lqe::logql {

namespace {

class Validator {
public:
    std::vector<Diagnostic> take() && { return std::move(diags_); }

    void query(const QueryAst& ast)
    {
        if (const auto* log = std::get_if<LogQuery>(&ast)) {
            log_query(*log, false);
        } else {
            metric(std::get<MetricQuery>(ast));
        }
    }

private:
    void add(DiagCode code, Span span, std::string message)
    {
        diags_.push_back(Diagnostic{code, span, std::move(message)});
    }

    std::optional<Regex> compile(std::string_view pattern, Span span)
    {
        try {
            return Regex::compile(pattern);
        } catch (const RegexError& e) {
            add(DiagCode::BadRegexp, span, fmt::format("invalid regular expression \"{}\": {}", pattern, e.what()));
            return std::nullopt;
        }
    }

    void label_name(std::string_view name, Span span)
    {
        if (!is_valid_label_name(name)) {
            add(DiagCode::InvalidArgument, span, fmt::format("invalid label name \"{}\"", name));
        }
    }

    void selector(const LogQuery& q)
    {
        if (q.selector.empty()) {
            add(DiagCode::EmptySelector, q.span, "label selector must contain at least one matcher");
            return;
        }
        bool has_constraint = false;
        for (const auto& m : q.selector) {
            label_name(m.name, m.span);
            switch (m.op) {
            case MatchOp::Eq:
                has_constraint = has_constraint || !m.value.empty();
                break;
            case MatchOp::Neq:
                has_constraint = has_constraint || m.value.empty();
                break;
            case MatchOp::Re:
            case MatchOp::Nre:
                if (auto re = compile(m.value, m.span)) {
                    const bool matches_empty = re->full_match("");
                    has_constraint = has_constraint || (m.op == MatchOp::Re ? !matches_empty : matches_empty);
                } else {
                    has_constraint = true;  // already reported
                }
                break;
            }
        }
        if (!has_constraint) {
            add(DiagCode::EmptySelector, q.span,
                "label selector needs at least one matcher that does not match the empty value");
        }
    }

    void log_query(const LogQuery& q, bool in_range)
    {
        selector(q);
        int unwraps = 0;
        for (const auto& stage : q.pipeline) {
            if (const auto* f = std::get_if<LineFilter>(&stage)) {
                if (f->op == LineFilterOp::Matches || f->op == LineFilterOp::NotMatches) {
                    compile(f->pattern, f->span);
                }
            } else if (const auto* f = std::get_if<LabelFilter>(&stage)) {
                label_name(f->name, f->span);
                const bool numeric = std::holds_alternative<double>(f->value);
                const bool ordering = f->cmp == Comparator::Gt || f->cmp == Comparator::Ge ||
                                      f->cmp == Comparator::Lt || f->cmp == Comparator::Le;
                if (ordering && !numeric) {
                    add(DiagCode::InvalidArgument, f->span, "ordering comparisons need a numeric value");
                }
                if (f->cmp == Comparator::Re || f->cmp == Comparator::Nre) {
                    if (numeric) {
                        add(DiagCode::InvalidArgument, f->span, "regex label filters need a string value");
                    } else {
                        compile(std::get<std::string>(f->value), f->span);
                    }
                }
            } else if (const auto* s = std::get_if<RegexpStage>(&stage)) {
                if (auto re = compile(s->pattern, s->span); re && re->group_names().empty()) {
                    add(DiagCode::BadRegexp, s->span, "regexp stage needs at least one named capture group (?P<name>...)");
                }
            } else if (const auto* s = std::get_if<LineFormatStage>(&stage)) {
                try {
                    LineTemplate::compile(s->tmpl);
                } catch (const std::invalid_argument& e) {
                    add(DiagCode::BadTemplate, s->span, e.what());
                }
            } else if (const auto* s = std::get_if<UnwrapStage>(&stage)) {
                label_name(s->label, s->span);
                ++unwraps;
                if (!in_range) {
                    add(DiagCode::UnexpectedUnwrap, s->span, "unwrap is only valid inside an unwrapped range aggregation");
                } else if (unwraps > 1) {
                    add(DiagCode::InvalidArgument, s->span, "only one unwrap stage is allowed");
                }
            }
        }
    }

    void metric(const MetricQuery& q)
    {
        if (const auto* range = std::get_if<RangeAggregation>(&q)) {
            log_query(range->inner, true);
            if (!range->range) {
                add(DiagCode::MissingRange, range->span,
                    fmt::format("{} needs a range such as [5m] after its log query", to_string(range->func)));
            } else if (range->range->magnitude <= 0) {
                add(DiagCode::InvalidArgument, range->span, "range must be positive");
            }
            bool has_unwrap = false;
            for (const auto& stage : range->inner.pipeline) {
                has_unwrap = has_unwrap || std::holds_alternative<UnwrapStage>(stage);
            }
            if (requires_unwrap(range->func) && !has_unwrap) {
                add(DiagCode::MissingUnwrap, range->span,
                    fmt::format("{} needs an unwrap stage naming the numeric label", to_string(range->func)));
            } else if (!requires_unwrap(range->func) && has_unwrap) {
                add(DiagCode::UnexpectedUnwrap, range->span,
                    fmt::format("{} counts lines and does not accept unwrap", to_string(range->func)));
            }
            return;
        }
        const auto& agg = *std::get<Box<VectorAggregation>>(q);
        const bool wants_k = agg.func == VectorFunc::Topk || agg.func == VectorFunc::Bottomk;
        if (wants_k && (!agg.k || *agg.k < 1)) {
            add(DiagCode::InvalidArgument, agg.span, fmt::format("{} needs k >= 1", to_string(agg.func)));
        } else if (!wants_k && agg.k) {
            add(DiagCode::InvalidArgument, agg.span, fmt::format("{} does not take a parameter", to_string(agg.func)));
        }
        if (agg.grouping) {
            for (const auto& label : agg.grouping->labels) {
                label_name(label, agg.span);
            }
        }
        metric(agg.inner);
    }

    std::vector<Diagnostic> diags_;
};

void lint_log(const LogQuery& q, std::vector<Diagnostic>& out)
{
    for (std::size_t i = 0; i < q.selector.size(); ++i) {
        for (std::size_t j = i + 1; j < q.selector.size(); ++j) {
            const auto& a = q.selector[i];
            const auto& b = q.selector[j];
            if (a.name == b.name && a.op == MatchOp::Eq && b.op == MatchOp::Eq && a.value != b.value) {
                out.push_back(Diagnostic{DiagCode::EmptyPipelineResultRisk, b.span,
                                         fmt::format("label \"{}\" cannot equal both \"{}\" and \"{}\"", a.name,
                                                     a.value, b.value)});
            }
        }
    }
    std::vector<const LineFilter*> contains;
    std::vector<const LineFilter*> excludes;
    for (const auto& stage : q.pipeline) {
        if (const auto* f = std::get_if<LineFilter>(&stage)) {
            if (f->op == LineFilterOp::Contains) {
                contains.push_back(f);
            } else if (f->op == LineFilterOp::NotContains) {
                excludes.push_back(f);
            }
        } else {
            // Later stages may rewrite the line; stop reasoning about it.
            if (std::holds_alternative<LineFormatStage>(stage)) {
                break;
            }
        }
    }
    for (const auto* ex : excludes) {
        for (const auto* in : contains) {
            if (in->pattern.find(ex->pattern) != std::string::npos) {
                out.push_back(Diagnostic{
                    DiagCode::EmptyPipelineResultRisk, ex->span,
                    fmt::format("every line containing \"{}\" also contains \"{}\"; no line can pass", in->pattern,
                                ex->pattern)});
                break;
            }
        }
    }
}

}  // namespace

const LogQuery& innermost_log_query(const MetricQuery& query)
{
    if (const auto* range = std::get_if<RangeAggregation>(&query)) {
        return range->inner;
    }
    return innermost_log_query(std::get<Box<VectorAggregation>>(query)->inner);
}

std::vector<Diagnostic> validate(const QueryAst& ast)
{
    Validator v;
    v.query(ast);
    return std::move(v).take();
}

std::vector<Diagnostic> lint(const QueryAst& ast)
{
    std::vector<Diagnostic> out;
    if (const auto* log = std::get_if<LogQuery>(&ast)) {
        lint_log(*log, out);
    } else {
        lint_log(innermost_log_query(std::get<MetricQuery>(ast)), out);
    }
    return out;
}

}  // namespace lqe::logql
