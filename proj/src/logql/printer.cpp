#include "lqe/logql/printer.hpp"

#include <cctype>

#include <fmt/format.h>

#include "lqe/common/strings.hpp"

namespace lqe::logql {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_ident_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Quoted literal that survives the variable-substitution pre-pass: a `$` that
// would read as a variable reference is written as the escape \x24.
std::string literal(std::string_view value)
{
    const std::string quoted = quote(value);
    std::string out;
    out.reserve(quoted.size());
    for (std::size_t i = 0; i < quoted.size(); ++i) {
        const char c = quoted[i];
        const bool variable_like = c == '$' && i > 0 && !is_ident_char(quoted[i - 1]) && quoted[i - 1] != '\\' &&
                                   i + 1 < quoted.size() &&
                                   (quoted[i + 1] == '{' || quoted[i + 1] == '_' || std::isalpha(static_cast<unsigned char>(quoted[i + 1])));
        if (variable_like) {
            out += "\\x24";
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string render_grouping(const Grouping& g)
{
    std::string out = g.without ? "without (" : "by (";
    for (std::size_t i = 0; i < g.labels.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += g.labels[i];
    }
    out += ')';
    return out;
}

}  // namespace

std::string render(const Duration& duration)
{
    const Duration d = duration.normalized();
    return fmt::format("{}{}", d.magnitude, to_string(d.unit));
}

std::string render(const PipelineStage& stage)
{
    return std::visit(
        Overloaded{
            [](const LineFilter& f) { return fmt::format("{} {}", to_string(f.op), literal(f.pattern)); },
            [](const LabelFilter& f) {
                const std::string value = std::holds_alternative<double>(f.value)
                                              ? fmt::format("{}", std::get<double>(f.value))
                                              : literal(std::get<std::string>(f.value));
                return fmt::format("| {}{}{}", f.name, to_string(f.cmp), value);
            },
            [](const RegexpStage& s) { return fmt::format("| regexp {}", literal(s.pattern)); },
            [](const LineFormatStage& s) { return fmt::format("| line_format {}", literal(s.tmpl)); },
            [](const UnwrapStage& s) { return fmt::format("| unwrap {}", s.label); },
        },
        stage);
}

std::string render(const LogQuery& query)
{
    std::string out = "{";
    for (std::size_t i = 0; i < query.selector.size(); ++i) {
        const auto& m = query.selector[i];
        if (i > 0) {
            out += ", ";
        }
        out += m.name;
        out += to_string(m.op);
        out += literal(m.value);
    }
    out += '}';
    for (const auto& stage : query.pipeline) {
        out += ' ';
        out += render(stage);
    }
    return out;
}

std::string render(const MetricQuery& query)
{
    return std::visit(
        Overloaded{
            [](const RangeAggregation& agg) {
                std::string out = fmt::format("{}({}", to_string(agg.func), render(agg.inner));
                if (agg.range) {
                    out += fmt::format(" [{}]", render(*agg.range));
                }
                out += ')';
                return out;
            },
            [](const Box<VectorAggregation>& boxed) {
                const VectorAggregation& agg = *boxed;
                std::string out(to_string(agg.func));
                if (agg.grouping) {
                    out += ' ';
                    out += render_grouping(*agg.grouping);
                    out += ' ';
                }
                out += '(';
                if (agg.k) {
                    out += fmt::format("{}, ", *agg.k);
                }
                out += render(agg.inner);
                out += ')';
                return out;
            },
        },
        query);
}

std::string render(const QueryAst& ast)
{
    return std::visit([](const auto& q) { return render(q); }, ast);
}

}  // namespace lqe::logql
