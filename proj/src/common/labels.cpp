#include "lqe/common/labels.hpp"

#include "lqe/common/strings.hpp"

namespace lqe {

bool is_valid_label_name(std::string_view name)
{
    if (name.empty()) {
        return false;
    }
    const auto head = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    if (!head(name.front())) {
        return false;
    }
    for (char c : name.substr(1)) {
        if (!head(c) && !(c >= '0' && c <= '9')) {
            return false;
        }
    }
    return true;
}

std::string label_set_string(const Labels& labels)
{
    std::string out = "{";
    bool first = true;
    for (const auto& [name, value] : labels) {
        if (!first) {
            out += ", ";
        }
        first = false;
        out += name;
        out += '=';
        out += quote(value);
    }
    out += '}';
    return out;
}

}  // namespace lqe
