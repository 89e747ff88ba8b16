#include <cctype>
#include <initializer_list>
#include <optional>

#include "lqe/common/strings.hpp"
#include "lqe/gateway/prompt.hpp"

namespace lqe::gateway {

namespace {

bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::optional<std::string_view> fenced_block(std::string_view text)
{
    const auto open = text.find("```");
    if (open == std::string_view::npos) {
        return std::nullopt;
    }
    auto body = text.find('\n', open + 3);
    if (body == std::string_view::npos) {
        // Single-line fence: ```query```
        const auto close = text.find("```", open + 3);
        return text.substr(open + 3, close == std::string_view::npos ? std::string_view::npos : close - open - 3);
    }
    ++body;
    const auto close = text.find("```", body);
    return text.substr(body, close == std::string_view::npos ? std::string_view::npos : close - body);
}

// Index of the last non-space character before `pos`, or npos.
std::size_t prev_non_space(std::string_view text, std::size_t pos)
{
    while (pos > 0) {
        --pos;
        if (!is_space(text[pos])) {
            return pos;
        }
    }
    return std::string_view::npos;
}

bool starts_with_keyword(std::string_view text, std::initializer_list<std::string_view> keywords)
{
    for (std::string_view kw : keywords) {
        if (text.starts_with(kw) && (text.size() == kw.size() || !is_ident(text[kw.size()]))) {
            return true;
        }
    }
    return false;
}

bool starts_with_grouping(std::string_view text) { return starts_with_keyword(text, {"by", "without"}); }

std::size_t extend_left(std::string_view text, std::size_t start)
{
    for (;;) {
        const std::size_t k = prev_non_space(text, start);
        if (k == std::string_view::npos) {
            return start;
        }
        const char c = text[k];
        if (c == '(') {
            start = k;
        } else if (c == ',') {
            // Numeric parameter, as in topk(3, ...
            std::size_t m = prev_non_space(text, k);
            std::size_t digits_end = m;
            while (m != std::string_view::npos && (std::isdigit(static_cast<unsigned char>(text[m])) || text[m] == '.')) {
                m = m == 0 ? std::string_view::npos : m - 1;
            }
            const std::size_t num_start = m == std::string_view::npos ? 0 : m + 1;
            if (digits_end == std::string_view::npos || num_start > digits_end) {
                return start;
            }
            const std::size_t before = prev_non_space(text, num_start);
            if (before == std::string_view::npos || text[before] != '(') {
                return start;
            }
            start = num_start;
        } else if (c == ')') {
            // Grouping clause: by (a, b)
            std::size_t m = k;
            while (m > 0 && text[m - 1] != '(') {
                const char g = text[m - 1];
                if (!is_ident(g) && g != ',' && !is_space(g)) {
                    return start;
                }
                --m;
            }
            if (m == 0) {
                return start;
            }
            const std::size_t kw_end = prev_non_space(text, m - 1);
            if (kw_end == std::string_view::npos || !is_ident(text[kw_end])) {
                return start;
            }
            std::size_t kw_start = kw_end;
            while (kw_start > 0 && is_ident(text[kw_start - 1])) {
                --kw_start;
            }
            const auto kw = text.substr(kw_start, kw_end - kw_start + 1);
            if (kw != "by" && kw != "without") {
                return start;
            }
            start = kw_start;
        } else if (is_ident(c)) {
            if (text[start] != '(' && !starts_with_grouping(text.substr(start))) {
                return start;
            }
            std::size_t w = k;
            while (w > 0 && is_ident(text[w - 1])) {
                --w;
            }
            start = w;
        } else {
            return start;
        }
    }
}

bool continues_on_next_line(std::string_view text, std::size_t newline)
{
    for (std::size_t i = newline + 1; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') {
            return false;
        }
        if (!is_space(c)) {
            return c == '|' || c == '!' || c == '[' || starts_with_grouping(text.substr(i));
        }
    }
    return false;
}

struct ScanEnd {
    std::size_t end;
    bool balanced;
};

ScanEnd scan_forward(std::string_view text, std::size_t start)
{
    const bool in_code_span = start > 0 && text[start - 1] == '`';
    // A span that opens with a function call is complete once its outermost
    // call closes, unless a grouping clause or its argument list follows.
    const bool starts_with_call = text[start] != '{';
    int depth = 0;
    char last = '\0';
    std::size_t i = start;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '"') {
            for (++i; i < text.size() && text[i] != '"'; ++i) {
                if (text[i] == '\\') {
                    ++i;
                }
            }
            i = std::min(i + 1, text.size());
            last = '"';
            continue;
        }
        if (c == '`') {
            if (depth == 0 && in_code_span) {
                return {i, true};
            }
            const auto close = text.find('`', i + 1);
            i = close == std::string_view::npos ? text.size() : close + 1;
            last = '`';
            continue;
        }
        // A bare word after a closed selector, call or string is prose.
        if (depth == 0 && is_ident(c) && i > start && is_space(text[i - 1]) &&
            std::string_view("})]\"`").find(last) != std::string_view::npos && !starts_with_keyword(text.substr(i), {"by", "without", "and", "or", "unless", "offset"})) {
            return {i, true};
        }
        if (!is_space(c)) {
            last = c;
        }
        if (c == '(' || c == '{' || c == '[') {
            ++depth;
        } else if (c == ')' || c == '}' || c == ']') {
            if (depth == 0) {
                return {i, true};
            }
            --depth;
            if (depth == 0 && c == ')' && starts_with_call) {
                std::size_t next = i + 1;
                while (next < text.size() && is_space(text[next])) {
                    ++next;
                }
                if (!starts_with_grouping(text.substr(next)) && (next == text.size() || text[next] != '(')) {
                    return {i + 1, true};
                }
            }
        } else if (depth == 0) {
            if (c == '\n' && !continues_on_next_line(text, i)) {
                return {i, true};
            }
            if (c == '.' && (i + 1 == text.size() || is_space(text[i + 1]))) {
                return {i, true};
            }
        }
        ++i;
    }
    return {i, depth == 0};
}

std::string find_span(std::string_view text)
{
    const auto brace = text.find('{');
    if (brace == std::string_view::npos) {
        return std::string(trim(text));
    }
    std::size_t start = extend_left(text, brace);
    auto scan = scan_forward(text, start);
    if (!scan.balanced && start != brace) {
        // Openers to the left never closed; they were prose, not calls.
        start = brace;
        scan = scan_forward(text, start);
    }
    const std::size_t end = scan.end;
    auto span = trim(text.substr(start, end - start));
    while (!span.empty() && (span.back() == ',' || span.back() == ';' || span.back() == ':')) {
        span.remove_suffix(1);
        span = trim(span);
    }
    return std::string(span);
}

}  // namespace

std::string extract_query(std::string_view raw_text)
{
    if (const auto block = fenced_block(raw_text)) {
        return find_span(*block);
    }
    return find_span(raw_text);
}

}  // namespace lqe::gateway
