#pragma once

#include <map>
#include <string>
#include <string_view>

namespace lqe {

/// Label set with sorted keys.
using Labels = std::map<std::string, std::string, std::less<>>;

/// `[a-zA-Z_][a-zA-Z0-9_]*`
bool is_valid_label_name(std::string_view name);

/// Canonical text form, e.g. `{app="x", host="h1"}`. Ordering of label sets
/// anywhere in the project (sample output order, topk ties, row ties) is the
/// byte-wise order of this string.
std::string label_set_string(const Labels& labels);

}  // namespace lqe
