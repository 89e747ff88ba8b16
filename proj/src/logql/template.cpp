#include "lqe/logql/template.hpp"

#include <stdexcept>

#include <fmt/format.h>

#include "lqe/common/labels.hpp"
#include "lqe/common/strings.hpp"

namespace lqe::logql {

LineTemplate LineTemplate::compile(std::string_view text)
{
    LineTemplate t;
    std::size_t i = 0;
    std::string literal;
    while (i < text.size()) {
        const auto open = text.find("{{", i);
        if (open == std::string_view::npos) {
            literal.append(text.substr(i));
            break;
        }
        literal.append(text.substr(i, open - i));
        const auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) {
            throw std::invalid_argument(fmt::format("unterminated template action at offset {}", open));
        }
        const auto action = trim(text.substr(open + 2, close - open - 2));
        if (!literal.empty()) {
            t.pieces_.emplace_back(Literal{std::move(literal)});
            literal.clear();
        }
        if (action.starts_with("/*") && action.ends_with("*/") && action.size() >= 4) {
            // comment
        } else if (action == "__timestamp__") {
            t.pieces_.emplace_back(TimestampRef{});
        } else if (action.starts_with('.') && is_valid_label_name(action.substr(1))) {
            t.pieces_.emplace_back(LabelRef{std::string(action.substr(1))});
        } else {
            throw std::invalid_argument(
                fmt::format("unsupported template action \"{{{{{}}}}}\" at offset {}", action, open));
        }
        i = close + 2;
    }
    if (!literal.empty()) {
        t.pieces_.emplace_back(Literal{std::move(literal)});
    }
    return t;
}

std::string LineTemplate::render(const Labels& labels, Timestamp ts) const
{
    std::string out;
    for (const auto& piece : pieces_) {
        if (const auto* lit = std::get_if<Literal>(&piece)) {
            out += lit->text;
        } else if (const auto* ref = std::get_if<LabelRef>(&piece)) {
            if (auto it = labels.find(ref->name); it != labels.end()) {
                out += it->second;
            }
        } else {
            out += format_rfc3339(ts);
        }
    }
    return out;
}

}  // namespace lqe::logql
