#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lqe {

/// Double-quoted literal with Go-style escapes (`\\`, `\"`, `\n`, `\t`, `\r`).
std::string quote(std::string_view text);

std::string_view trim(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

bool starts_with_ci(std::string_view text, std::string_view prefix);

/// Replaces each invalid UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace lqe
