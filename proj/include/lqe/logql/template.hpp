#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lqe/common/labels.hpp"
#include "lqe/common/time.hpp"

namespace lqe::logql {

/// Compiled `line_format` template.
class LineTemplate {
public:
    /// Throws std::invalid_argument with a byte offset in the message.
    static LineTemplate compile(std::string_view text);

    /// Missing labels render as empty strings.
    std::string render(const Labels& labels, Timestamp ts) const;

private:
    struct Literal {
        std::string text;
    };
    struct LabelRef {
        std::string name;
    };
    struct TimestampRef {};
    using Piece = std::variant<Literal, LabelRef, TimestampRef>;

    std::vector<Piece> pieces_;
};

}  // namespace lqe::logql
