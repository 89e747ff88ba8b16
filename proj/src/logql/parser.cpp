#include "lqe/logql/parser.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "lqe/common/labels.hpp"

namespace lqe::logql {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Stage and function keywords that exist in full LogQL but are outside the
// supported subset.
constexpr std::array<std::string_view, 12> kUnsupportedStages = {
    "json", "logfmt", "pattern", "label_format", "unpack", "drop",
    "keep", "decolorize", "distinct", "line_format_json", "ip", "template",
};

enum class Tok {
    End,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,     // =  or ==
    Neq,    // !=
    Re,     // =~
    Nre,    // !~
    PipeEq, // |=
    PipeRe, // |~
    Pipe,   // |
    Gt,
    Ge,
    Lt,
    Le,
    String,
    Ident,
    Number,
    DurationLit,
    Operator,  // arithmetic / set operators we recognise only to reject
};

struct Token {
    Tok kind = Tok::End;
    std::string text;  // decoded value for String, raw text otherwise
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::string_view describe(Tok kind)
{
    switch (kind) {
    case Tok::End:
        return "end of query";
    case Tok::LBrace:
        return "'{'";
    case Tok::RBrace:
        return "'}'";
    case Tok::LParen:
        return "'('";
    case Tok::RParen:
        return "')'";
    case Tok::LBracket:
        return "'['";
    case Tok::RBracket:
        return "']'";
    case Tok::Comma:
        return "','";
    case Tok::String:
        return "string";
    case Tok::Ident:
        return "identifier";
    case Tok::Number:
        return "number";
    case Tok::DurationLit:
        return "duration";
    default:
        return "operator";
    }
}

class SourceMap {
public:
    SourceMap(const std::vector<std::size_t>& offsets, std::size_t original_size)
        : offsets_(offsets), original_size_(original_size)
    {}

    Span map(std::size_t begin, std::size_t end) const
    {
        const std::size_t b = begin < offsets_.size() ? offsets_[begin] : original_size_;
        std::size_t e = b;
        if (end > begin && end - 1 < offsets_.size()) {
            e = offsets_[end - 1] + 1;
        }
        return Span{b, std::max(b, std::min(e, original_size_))};
    }

private:
    const std::vector<std::size_t>& offsets_;
    std::size_t original_size_;
};

class Lexer {
public:
    Lexer(std::string_view text, const SourceMap& map) : text_(text), map_(map) {}

    std::vector<Token> run()
    {
        std::vector<Token> tokens;
        while (true) {
            skip_space();
            if (pos_ >= text_.size()) {
                tokens.push_back(Token{Tok::End, "", pos_, pos_});
                return tokens;
            }
            tokens.push_back(next());
        }
    }

private:
    [[noreturn]] void fail(std::size_t begin, std::size_t end, const std::string& message) const
    {
        throw QueryError({Diagnostic{DiagCode::Syntax, map_.map(begin, end), message}});
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])) != 0) {
            ++pos_;
        }
    }

    char at(std::size_t i) const { return i < text_.size() ? text_[i] : '\0'; }

    Token simple(Tok kind, std::size_t len)
    {
        Token t{kind, std::string(text_.substr(pos_, len)), pos_, pos_ + len};
        pos_ += len;
        return t;
    }

    Token next()
    {
        const char c = text_[pos_];
        const char n = at(pos_ + 1);
        switch (c) {
        case '{':
            return simple(Tok::LBrace, 1);
        case '}':
            return simple(Tok::RBrace, 1);
        case '(':
            return simple(Tok::LParen, 1);
        case ')':
            return simple(Tok::RParen, 1);
        case '[':
            return simple(Tok::LBracket, 1);
        case ']':
            return simple(Tok::RBracket, 1);
        case ',':
            return simple(Tok::Comma, 1);
        case '=':
            if (n == '~') {
                return simple(Tok::Re, 2);
            }
            if (n == '=') {
                return simple(Tok::Eq, 2);
            }
            return simple(Tok::Eq, 1);
        case '!':
            if (n == '=') {
                return simple(Tok::Neq, 2);
            }
            if (n == '~') {
                return simple(Tok::Nre, 2);
            }
            break;
        case '|':
            if (n == '=') {
                return simple(Tok::PipeEq, 2);
            }
            if (n == '~') {
                return simple(Tok::PipeRe, 2);
            }
            return simple(Tok::Pipe, 1);
        case '>':
            return n == '=' ? simple(Tok::Ge, 2) : simple(Tok::Gt, 1);
        case '<':
            return n == '=' ? simple(Tok::Le, 2) : simple(Tok::Lt, 1);
        case '"':
            return quoted();
        case '`':
            return raw();
        case '+':
        case '*':
        case '/':
        case '%':
        case '^':
            if (c == '/' && n == '*') {
                fail(pos_, pos_ + 2, "comments are not part of LogQL");
            }
            return simple(Tok::Operator, 1);
        default:
            break;
        }
        if (is_digit(c) || (c == '-' && is_digit(n)) || (c == '.' && is_digit(n))) {
            return number_or_duration();
        }
        if (c == '-') {
            return simple(Tok::Operator, 1);
        }
        if (is_ident_start(c)) {
            std::size_t end = pos_ + 1;
            while (end < text_.size() && is_ident_char(text_[end])) {
                ++end;
            }
            return simple(Tok::Ident, end - pos_);
        }
        fail(pos_, pos_ + 1, fmt::format("unexpected character '{}'", c));
    }

    Token number_or_duration()
    {
        const std::size_t start = pos_;
        std::size_t i = pos_;
        if (text_[i] == '-') {
            ++i;
        }
        while (is_digit(at(i))) {
            ++i;
        }
        // Duration: integer immediately followed by a unit.
        if (text_[start] != '-' && i > start) {
            static constexpr std::array<std::string_view, 6> units = {"ms", "s", "m", "h", "d", "w"};
            for (auto unit : units) {
                if (text_.substr(i, unit.size()) == unit && !is_ident_char(at(i + unit.size()))) {
                    const std::size_t len = i + unit.size() - start;
                    return simple(Tok::DurationLit, len);
                }
            }
        }
        if (at(i) == '.') {
            ++i;
            while (is_digit(at(i))) {
                ++i;
            }
        }
        if (at(i) == 'e' || at(i) == 'E') {
            std::size_t j = i + 1;
            if (at(j) == '+' || at(j) == '-') {
                ++j;
            }
            if (is_digit(at(j))) {
                i = j;
                while (is_digit(at(i))) {
                    ++i;
                }
            }
        }
        if (is_ident_char(at(i))) {
            fail(start, i + 1, "malformed number or duration");
        }
        return simple(Tok::Number, i - start);
    }

    static void append_utf8(std::string& out, std::uint32_t cp)
    {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }

    std::uint32_t hex_digits(std::size_t at_pos, int count)
    {
        std::uint32_t value = 0;
        for (int k = 0; k < count; ++k) {
            const char h = at(at_pos + static_cast<std::size_t>(k));
            int digit = -1;
            if (h >= '0' && h <= '9') {
                digit = h - '0';
            } else if (h >= 'a' && h <= 'f') {
                digit = h - 'a' + 10;
            } else if (h >= 'A' && h <= 'F') {
                digit = h - 'A' + 10;
            }
            if (digit < 0) {
                fail(at_pos, at_pos + static_cast<std::size_t>(count), "invalid hex escape");
            }
            value = value * 16 + static_cast<std::uint32_t>(digit);
        }
        return value;
    }

    Token quoted()
    {
        const std::size_t start = pos_;
        std::string value;
        std::size_t i = pos_ + 1;
        while (true) {
            if (i >= text_.size()) {
                fail(start, text_.size(), "unterminated string");
            }
            const char c = text_[i];
            if (c == '"') {
                ++i;
                break;
            }
            if (c != '\\') {
                value.push_back(c);
                ++i;
                continue;
            }
            const char e = at(i + 1);
            switch (e) {
            case '\\':
                value.push_back('\\');
                break;
            case '"':
                value.push_back('"');
                break;
            case 'n':
                value.push_back('\n');
                break;
            case 't':
                value.push_back('\t');
                break;
            case 'r':
                value.push_back('\r');
                break;
            case 'a':
                value.push_back('\a');
                break;
            case 'b':
                value.push_back('\b');
                break;
            case 'f':
                value.push_back('\f');
                break;
            case 'v':
                value.push_back('\v');
                break;
            case 'x':
                value.push_back(static_cast<char>(hex_digits(i + 2, 2)));
                i += 2;
                break;
            case 'u':
                append_utf8(value, hex_digits(i + 2, 4));
                i += 4;
                break;
            case 'U':
                append_utf8(value, hex_digits(i + 2, 8));
                i += 8;
                break;
            default:
                if (e >= '0' && e <= '7' && at(i + 2) >= '0' && at(i + 2) <= '7' && at(i + 3) >= '0' &&
                    at(i + 3) <= '7') {
                    value.push_back(static_cast<char>((e - '0') * 64 + (at(i + 2) - '0') * 8 + (at(i + 3) - '0')));
                    i += 2;
                    break;
                }
                fail(i, i + 2, fmt::format("unknown escape sequence \\{} (use \\\\ for a literal backslash)", e));
            }
            i += 2;
        }
        Token t{Tok::String, std::move(value), start, i};
        pos_ = i;
        return t;
    }

    Token raw()
    {
        const std::size_t start = pos_;
        const auto close = text_.find('`', pos_ + 1);
        if (close == std::string_view::npos) {
            fail(start, text_.size(), "unterminated raw string");
        }
        Token t{Tok::String, std::string(text_.substr(pos_ + 1, close - pos_ - 1)), start, close + 1};
        pos_ = close + 1;
        return t;
    }

    std::string_view text_;
    const SourceMap& map_;
    std::size_t pos_ = 0;
};

class Parser {
public:
    Parser(std::vector<Token> tokens, const SourceMap& map) : toks_(std::move(tokens)), map_(map) {}

    QueryAst parse_query()
    {
        if (peek().kind == Tok::End) {
            fail(DiagCode::Syntax, peek(), "empty query");
        }
        QueryAst result = peek().kind == Tok::LBrace ? QueryAst{parse_log_query(false)} : QueryAst{parse_metric()};
        if (peek().kind == Tok::LBracket) {
            const Token& t = peek();
            fail(DiagCode::MisplacedRange, t,
                 is_log_query(result) ? "range selector on a log query; wrap it in a range aggregation such as "
                                        "count_over_time(...)"
                                      : "range selector after a metric expression is not supported");
        }
        if (peek().kind == Tok::Ident && peek().text == "offset") {
            fail(DiagCode::UnknownFunc, peek(), "offset modifier is not supported");
        }
        if (peek().kind != Tok::End) {
            if (peek().kind == Tok::Operator || is_binary_keyword(peek())) {
                fail(DiagCode::Syntax, peek(), "binary operators between expressions are not supported");
            }
            fail(DiagCode::Syntax, peek(), fmt::format("unexpected {} after query", describe(peek().kind)));
        }
        return result;
    }

private:
    const Token& peek(std::size_t ahead = 0) const
    {
        const std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[i];
    }

    const Token& advance()
    {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) {
            ++pos_;
        }
        return t;
    }

    Span span_of(const Token& t) const { return map_.map(t.begin, t.end); }
    Span span_between(const Token& first, const Token& last) const { return map_.map(first.begin, last.end); }

    [[noreturn]] void fail(DiagCode code, const Token& at, const std::string& message) const
    {
        throw QueryError({Diagnostic{code, span_of(at), message}});
    }

    const Token& expect(Tok kind, std::string_view context)
    {
        if (peek().kind != kind) {
            fail(DiagCode::Syntax, peek(),
                 fmt::format("expected {} {}, found {}", describe(kind), context, describe_found(peek())));
        }
        return advance();
    }

    static std::string describe_found(const Token& t)
    {
        if (t.kind == Tok::End) {
            return "end of query";
        }
        return fmt::format("\"{}\"", t.kind == Tok::String ? "string" : t.text);
    }

    static bool is_binary_keyword(const Token& t)
    {
        return t.kind == Tok::Ident && (t.text == "and" || t.text == "or" || t.text == "unless");
    }

    // ---- log queries -------------------------------------------------------

    LogQuery parse_log_query(bool inside_range)
    {
        const Token& first = peek();
        LogQuery query;
        query.selector = parse_selector();
        if (inside_range && peek().kind == Tok::LBracket) {
            // `{...}[5m] |= "x"` form: range before the pipeline.
            early_range_ = parse_range();
        }
        while (true) {
            const Tok k = peek().kind;
            if (k == Tok::PipeEq || k == Tok::Neq || k == Tok::PipeRe || k == Tok::Nre) {
                query.pipeline.emplace_back(parse_line_filter());
            } else if (k == Tok::Pipe) {
                query.pipeline.push_back(parse_pipe_stage());
            } else {
                break;
            }
        }
        query.span = map_.map(first.begin, toks_[pos_ > 0 ? pos_ - 1 : 0].end);
        return query;
    }

    std::vector<LabelMatcher> parse_selector()
    {
        const Token& open = expect(Tok::LBrace, "to open a label selector");
        std::vector<LabelMatcher> matchers;
        if (peek().kind == Tok::RBrace) {
            const Token& close = advance();
            throw QueryError({Diagnostic{DiagCode::EmptySelector, span_between(open, close),
                                         "label selector must contain at least one matcher"}});
        }
        while (true) {
            const Token& name = peek();
            if (name.kind != Tok::Ident) {
                fail(DiagCode::Syntax, name, fmt::format("expected label name, found {}", describe_found(name)));
            }
            advance();
            LabelMatcher m;
            m.name = name.text;
            switch (peek().kind) {
            case Tok::Eq:
                m.op = MatchOp::Eq;
                break;
            case Tok::Neq:
                m.op = MatchOp::Neq;
                break;
            case Tok::Re:
                m.op = MatchOp::Re;
                break;
            case Tok::Nre:
                m.op = MatchOp::Nre;
                break;
            default:
                fail(DiagCode::Syntax, peek(),
                     fmt::format("expected one of = != =~ !~ after label \"{}\"", name.text));
            }
            advance();
            const Token& value = expect(Tok::String, "as matcher value");
            m.value = value.text;
            m.span = span_between(name, value);
            matchers.push_back(std::move(m));
            if (peek().kind == Tok::Comma) {
                advance();
                continue;
            }
            expect(Tok::RBrace, "to close the label selector");
            break;
        }
        return matchers;
    }

    LineFilter parse_line_filter()
    {
        const Token& op = advance();
        LineFilter f;
        switch (op.kind) {
        case Tok::PipeEq:
            f.op = LineFilterOp::Contains;
            break;
        case Tok::Neq:
            f.op = LineFilterOp::NotContains;
            break;
        case Tok::PipeRe:
            f.op = LineFilterOp::Matches;
            break;
        default:
            f.op = LineFilterOp::NotMatches;
            break;
        }
        if (peek().kind == Tok::LBracket) {
            fail(DiagCode::MisplacedRange, peek(), "range selector inside a line filter");
        }
        const Token& pattern = expect(Tok::String, fmt::format("after line filter {}", op.text));
        f.pattern = pattern.text;
        f.span = span_between(op, pattern);
        return f;
    }

    PipelineStage parse_pipe_stage()
    {
        const Token& pipe = advance();
        const Token& head = peek();
        if (head.kind != Tok::Ident) {
            fail(DiagCode::Syntax, head, fmt::format("expected pipeline stage after '|', found {}", describe_found(head)));
        }
        if (head.text == "regexp") {
            advance();
            const Token& pattern = expect(Tok::String, "after regexp");
            return RegexpStage{pattern.text, span_between(pipe, pattern)};
        }
        if (head.text == "line_format") {
            advance();
            const Token& tmpl = expect(Tok::String, "after line_format");
            return LineFormatStage{tmpl.text, span_between(pipe, tmpl)};
        }
        if (head.text == "unwrap") {
            advance();
            const Token& label = expect(Tok::Ident, "after unwrap");
            if (peek().kind == Tok::LParen) {
                fail(DiagCode::UnknownFunc, label, "unwrap conversion functions are not supported");
            }
            return UnwrapStage{label.text, span_between(pipe, label)};
        }
        for (auto kw : kUnsupportedStages) {
            if (head.text == kw) {
                fail(DiagCode::UnknownFunc, head, fmt::format("pipeline stage \"{}\" is not supported", head.text));
            }
        }
        return parse_label_filter(pipe);
    }

    LabelFilter parse_label_filter(const Token& pipe)
    {
        const Token& name = advance();
        LabelFilter f;
        f.name = name.text;
        const Token& op = peek();
        bool numeric_only = false;
        switch (op.kind) {
        case Tok::Eq:
            f.cmp = Comparator::Eq;
            break;
        case Tok::Neq:
            f.cmp = Comparator::Neq;
            break;
        case Tok::Re:
            f.cmp = Comparator::Re;
            break;
        case Tok::Nre:
            f.cmp = Comparator::Nre;
            break;
        case Tok::Gt:
            f.cmp = Comparator::Gt;
            numeric_only = true;
            break;
        case Tok::Ge:
            f.cmp = Comparator::Ge;
            numeric_only = true;
            break;
        case Tok::Lt:
            f.cmp = Comparator::Lt;
            numeric_only = true;
            break;
        case Tok::Le:
            f.cmp = Comparator::Le;
            numeric_only = true;
            break;
        default:
            if (op.kind == Tok::LParen || op.kind == Tok::String) {
                fail(DiagCode::UnknownFunc, name, fmt::format("pipeline stage \"{}\" is not supported", name.text));
            }
            fail(DiagCode::Syntax, op, fmt::format("expected comparison after label \"{}\"", name.text));
        }
        advance();
        const Token& value = peek();
        if (value.kind == Tok::String) {
            if (numeric_only) {
                fail(DiagCode::Syntax, value, "ordering comparisons need a numeric value");
            }
            f.value = value.text;
        } else if (value.kind == Tok::Number) {
            if (f.cmp == Comparator::Re || f.cmp == Comparator::Nre) {
                fail(DiagCode::Syntax, value, "regex label filters need a string value");
            }
            f.value = parse_number(value);
        } else {
            fail(DiagCode::Syntax, value, "expected string or number in label filter");
        }
        advance();
        if (peek().kind == Tok::Comma || (peek().kind == Tok::Ident && (peek().text == "and" || peek().text == "or"))) {
            fail(DiagCode::Syntax, peek(), "chained label filter expressions are not supported; use separate stages");
        }
        f.span = span_between(pipe, value);
        return f;
    }

    double parse_number(const Token& t) const
    {
        double v = 0;
        const auto* begin = t.text.data();
        const auto* end = begin + t.text.size();
        const auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
            fail(DiagCode::Syntax, t, "invalid number");
        }
        return v;
    }

    Duration parse_duration_token(const Token& t) const
    {
        std::string_view s = t.text;
        std::size_t digits = 0;
        while (digits < s.size() && is_digit(s[digits])) {
            ++digits;
        }
        const auto unit_text = s.substr(digits);
        std::int64_t magnitude = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + digits, magnitude);
        if (ec != std::errc() || ptr != s.data() + digits || magnitude > 1'000'000'000LL) {
            fail(DiagCode::Syntax, t, "invalid duration");
        }
        if (magnitude <= 0) {
            fail(DiagCode::InvalidArgument, t, "duration must be positive");
        }
        DurationUnit unit = DurationUnit::Second;
        if (unit_text == "ms") {
            unit = DurationUnit::Millisecond;
        } else if (unit_text == "s") {
            unit = DurationUnit::Second;
        } else if (unit_text == "m") {
            unit = DurationUnit::Minute;
        } else if (unit_text == "h") {
            unit = DurationUnit::Hour;
        } else if (unit_text == "d") {
            unit = DurationUnit::Day;
        } else {
            unit = DurationUnit::Week;
        }
        return Duration{magnitude, unit};
    }

    Duration parse_range()
    {
        expect(Tok::LBracket, "to open a range");
        const Token& d = peek();
        if (d.kind != Tok::DurationLit) {
            fail(DiagCode::Syntax, d, fmt::format("expected duration such as 5m, found {}", describe_found(d)));
        }
        advance();
        if (peek().kind == Tok::DurationLit) {
            fail(DiagCode::Syntax, peek(), "compound durations are not supported");
        }
        if (peek().kind == Tok::Ident && peek().text == "offset") {
            fail(DiagCode::UnknownFunc, peek(), "offset modifier is not supported");
        }
        expect(Tok::RBracket, "to close the range");
        if (peek().kind == Tok::Ident && peek().text == "offset") {
            fail(DiagCode::UnknownFunc, peek(), "offset modifier is not supported");
        }
        return parse_duration_token(d);
    }

    // ---- metric queries ----------------------------------------------------

    MetricQuery parse_metric()
    {
        const Token& head = peek();
        if (head.kind == Tok::LParen) {
            advance();
            MetricQuery inner = parse_metric();
            expect(Tok::RParen, "to close parenthesised expression");
            return inner;
        }
        if (head.kind == Tok::Number) {
            fail(DiagCode::Syntax, head, "scalar literals and binary operators are not supported");
        }
        if (head.kind != Tok::Ident) {
            fail(DiagCode::Syntax, head, fmt::format("expected a label selector or function, found {}", describe_found(head)));
        }
        if (auto range = range_func_from_name(head.text)) {
            return parse_range_aggregation(*range);
        }
        if (auto vec = vector_func_from_name(head.text)) {
            return parse_vector_aggregation(*vec);
        }
        if (peek(1).kind == Tok::LParen || peek(1).kind == Tok::Ident) {
            fail(DiagCode::UnknownFunc, head, fmt::format("unknown function \"{}\"", head.text));
        }
        fail(DiagCode::Syntax, head, fmt::format("unexpected identifier \"{}\"", head.text));
    }

    RangeAggregation parse_range_aggregation(RangeFunc func)
    {
        const Token& name = advance();
        if (peek().kind == Tok::Ident && (peek().text == "by" || peek().text == "without")) {
            fail(DiagCode::Syntax, peek(),
                 fmt::format("{} does not take a grouping clause; group in an outer aggregation", name.text));
        }
        expect(Tok::LParen, fmt::format("after {}", name.text));
        RangeAggregation agg;
        agg.func = func;
        early_range_.reset();
        if (peek().kind != Tok::LBrace) {
            fail(DiagCode::Syntax, peek(), fmt::format("{} expects a log query", name.text));
        }
        agg.inner = parse_log_query(true);
        std::optional<Duration> range = std::move(early_range_);
        early_range_.reset();
        if (peek().kind == Tok::LBracket) {
            if (range) {
                fail(DiagCode::MisplacedRange, peek(), "range given twice");
            }
            range = parse_range();
        }
        agg.range = range;
        const Token& close = expect(Tok::RParen, fmt::format("to close {}", name.text));
        agg.span = span_between(name, close);
        return agg;
    }

    Grouping parse_grouping()
    {
        Grouping g;
        g.without = advance().text == "without";
        expect(Tok::LParen, "after by/without");
        if (peek().kind != Tok::RParen) {
            while (true) {
                const Token& label = expect(Tok::Ident, "in grouping list");
                g.labels.push_back(label.text);
                if (peek().kind == Tok::Comma) {
                    advance();
                    continue;
                }
                break;
            }
        }
        expect(Tok::RParen, "to close grouping list");
        return g;
    }

    bool at_grouping() const
    {
        return peek().kind == Tok::Ident && (peek().text == "by" || peek().text == "without");
    }

    VectorAggregation parse_vector_aggregation(VectorFunc func)
    {
        const Token& name = advance();
        std::optional<Grouping> grouping;
        if (at_grouping()) {
            grouping = parse_grouping();
        }
        if (peek().kind != Tok::LParen) {
            fail(DiagCode::Syntax, peek(),
                 fmt::format("expected '(' after {}{}, found {}", name.text, grouping ? " grouping" : "",
                             describe_found(peek())));
        }
        advance();
        std::optional<std::int64_t> k;
        if (func == VectorFunc::Topk || func == VectorFunc::Bottomk) {
            const Token& kt = peek();
            if (kt.kind != Tok::Number) {
                fail(DiagCode::Syntax, kt, fmt::format("{} expects an integer parameter first", name.text));
            }
            const double kv = parse_number(kt);
            if (kv != std::floor(kv) || std::abs(kv) > 1e9) {
                fail(DiagCode::Syntax, kt, "k must be an integer");
            }
            if (kv < 1) {
                fail(DiagCode::InvalidArgument, kt, "k must be at least 1");
            }
            k = static_cast<std::int64_t>(kv);
            advance();
            expect(Tok::Comma, "after k");
        }
        if (peek().kind == Tok::LBrace) {
            fail(DiagCode::Syntax, peek(),
                 fmt::format("{} aggregates a metric expression, not a log query; wrap it in count_over_time(...)",
                             name.text));
        }
        MetricQuery inner = parse_metric();
        const Token& close = expect(Tok::RParen, fmt::format("to close {}", name.text));
        Span span = span_between(name, close);
        if (at_grouping()) {
            if (grouping) {
                fail(DiagCode::Syntax, peek(), "grouping given twice");
            }
            grouping = parse_grouping();
            span = map_.map(name.begin, toks_[pos_ - 1].end);
        }
        VectorAggregation agg{func, k, std::move(grouping), std::move(inner), span};
        return agg;
    }

    std::vector<Token> toks_;
    const SourceMap& map_;
    std::size_t pos_ = 0;
    std::optional<Duration> early_range_;
};

}  // namespace

Substitution substitute_variables(std::string_view text, const Variables& vars, const ParseOptions& options)
{
    Substitution out;
    out.text.reserve(text.size());
    out.offsets.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        const bool literal_context = i > 0 && (is_ident_char(text[i - 1]) || text[i - 1] == '\\');
        if (c != '$' || literal_context || i + 1 >= text.size()) {
            out.text.push_back(c);
            out.offsets.push_back(i);
            ++i;
            continue;
        }
        std::size_t name_begin = i + 1;
        std::size_t name_end = name_begin;
        std::size_t ref_end = 0;
        if (text[name_begin] == '{') {
            const auto close = text.find('}', name_begin);
            if (close == std::string_view::npos) {
                out.text.push_back(c);
                out.offsets.push_back(i);
                ++i;
                continue;
            }
            name_end = close;
            ++name_begin;
            ref_end = close + 1;
        } else {
            if (!is_ident_start(text[name_begin])) {
                out.text.push_back(c);
                out.offsets.push_back(i);
                ++i;
                continue;
            }
            while (name_end < text.size() && is_ident_char(text[name_end])) {
                ++name_end;
            }
            ref_end = name_end;
        }
        const auto name = text.substr(name_begin, name_end - name_begin);
        std::string value;
        if (auto it = vars.find(name); it != vars.end()) {
            value = it->second;
        } else if (name == "__interval" || name == "__range" || name == "__auto") {
            value = options.default_interval;
        } else {
            throw QueryError({Diagnostic{DiagCode::VariableUnsubstituted, Span{i, ref_end},
                                         fmt::format("dashboard variable ${} has no binding", name)}});
        }
        out.text += value;
        out.offsets.insert(out.offsets.end(), value.size(), i);
        i = ref_end;
    }
    return out;
}

QueryAst parse(std::string_view text, const Variables& vars, const ParseOptions& options)
{
    const Substitution sub = substitute_variables(text, vars, options);
    const SourceMap map(sub.offsets, text.size());
    Lexer lexer(sub.text, map);
    Parser parser(lexer.run(), map);
    return parser.parse_query();
}

std::optional<Duration> parse_duration(std::string_view text)
{
    static const std::pair<std::string_view, DurationUnit> units[] = {
        {"ms", DurationUnit::Millisecond}, {"s", DurationUnit::Second}, {"m", DurationUnit::Minute},
        {"h", DurationUnit::Hour},         {"d", DurationUnit::Day},    {"w", DurationUnit::Week}};
    std::int64_t magnitude = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), magnitude);
    if (ec != std::errc() || magnitude <= 0 || magnitude > 1'000'000'000LL) {
        return std::nullopt;
    }
    const std::string_view unit(ptr, static_cast<std::size_t>(text.data() + text.size() - ptr));
    for (const auto& [name, u] : units) {
        if (unit == name) {
            return Duration{magnitude, u};
        }
    }
    return std::nullopt;
}

}  // namespace lqe::logql
