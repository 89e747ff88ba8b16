#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lqe {

class RegexError : public std::runtime_error {
public:
    RegexError(const std::string& message, std::size_t offset)
        : std::runtime_error(message), offset_(offset)
    {}

    /// Byte offset into the pattern where the problem was detected.
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

using NamedCaptures = std::vector<std::pair<std::string, std::string>>;

/// Compiled pattern in the query dialect: RE2-style syntax with named groups
/// written `(?P<name>...)`, no backreferences, no lookaround, no atomic groups
/// or possessive quantifiers. Case-sensitive unless `(?i)` is used. `.` does
/// not match newline; `^`/`$` anchor to the whole text.
///
/// Instances are immutable and cheap to copy; safe to share across threads.
class Regex {
public:
    /// Throws RegexError.
    static Regex compile(std::string_view pattern);

    bool full_match(std::string_view text) const;
    bool search(std::string_view text) const;

    /// Unanchored search; on success fills `out` with every named group in
    /// declaration order (non-participating groups yield empty strings).
    bool search(std::string_view text, NamedCaptures& out) const;

    const std::string& pattern() const noexcept;
    const std::vector<std::string>& group_names() const noexcept;

private:
    struct Impl;
    explicit Regex(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

}  // namespace lqe
