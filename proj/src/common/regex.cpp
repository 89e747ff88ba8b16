#include "lqe/common/regex.hpp"

#include <algorithm>

#include <boost/regex.hpp>
#include <fmt/format.h>

#include "lqe/common/labels.hpp"

namespace lqe {

struct Regex::Impl {
    std::string pattern;
    std::vector<std::string> names;
    boost::regex compiled;
};

namespace {

const auto kMatchFlags = boost::match_default | boost::match_not_dot_newline;

// Rewrites the dialect into Boost's Perl syntax and rejects every construct
// that needs backtracking to implement.
class DialectTranslator {
public:
    explicit DialectTranslator(std::string_view pattern) : p_(pattern) {}

    std::string run()
    {
        while (i_ < p_.size()) {
            const char c = p_[i_];
            if (c == '\\') {
                escape();
            } else if (c == '[') {
                char_class();
            } else if (c == '(') {
                group();
            } else if (c == '*' || c == '+' || c == '?') {
                out_.push_back(c);
                ++i_;
                if (i_ < p_.size() && p_[i_] == '+') {
                    fail("possessive quantifiers are not supported");
                }
                continue;
            } else {
                out_.push_back(c);
                ++i_;
            }
        }
        return out_;
    }

    std::vector<std::string> names() && { return std::move(names_); }

private:
    [[noreturn]] void fail(const std::string& what) const { throw RegexError(what, i_); }

    void escape()
    {
        if (i_ + 1 >= p_.size()) {
            fail("trailing backslash");
        }
        const char n = p_[i_ + 1];
        if (n >= '1' && n <= '9') {
            fail("backreferences are not supported");
        }
        switch (n) {
        case 'k':
        case 'g':
            fail("backreferences are not supported");
        case 'G':
        case 'K':
        case 'R':
        case 'X':
        case 'c':
            fail(fmt::format("unsupported escape \\{}", n));
        case 'Q': {
            // \Q...\E quotes a literal run.
            const auto end = p_.find("\\E", i_ + 2);
            const auto stop = end == std::string_view::npos ? p_.size() : end + 2;
            out_.append(p_.substr(i_, stop - i_));
            i_ = stop;
            return;
        }
        default:
            out_.push_back('\\');
            out_.push_back(n);
            i_ += 2;
        }
    }

    void char_class()
    {
        std::size_t j = i_ + 1;
        if (j < p_.size() && p_[j] == '^') {
            ++j;
        }
        if (j < p_.size() && p_[j] == ']') {
            ++j;
        }
        while (j < p_.size() && p_[j] != ']') {
            if (p_[j] == '\\') {
                j += 2;
            } else if (p_[j] == '[' && j + 1 < p_.size() && p_[j + 1] == ':') {
                const auto close = p_.find(":]", j + 2);
                if (close == std::string_view::npos) {
                    fail("unterminated character class");
                }
                j = close + 2;
            } else {
                ++j;
            }
        }
        if (j >= p_.size()) {
            fail("missing closing ]");
        }
        out_.append(p_.substr(i_, j + 1 - i_));
        i_ = j + 1;
    }

    void named_group(std::size_t name_start)
    {
        const auto close = p_.find('>', name_start);
        if (close == std::string_view::npos) {
            fail("unterminated group name");
        }
        const std::string name(p_.substr(name_start, close - name_start));
        if (!is_valid_label_name(name)) {
            fail(fmt::format("invalid capture group name \"{}\"", name));
        }
        if (std::find(names_.begin(), names_.end(), name) != names_.end()) {
            fail(fmt::format("duplicate capture group name \"{}\"", name));
        }
        names_.push_back(name);
        out_ += "(?<" + name + ">";
        i_ = close + 1;
    }

    void group()
    {
        if (i_ + 1 >= p_.size() || p_[i_ + 1] != '?') {
            out_.push_back('(');
            ++i_;
            return;
        }
        const auto rest = p_.substr(i_ + 2);
        if (rest.starts_with("P<")) {
            named_group(i_ + 4);
            return;
        }
        if (rest.starts_with("P=") || rest.starts_with("P>")) {
            fail("backreferences are not supported");
        }
        if (rest.starts_with("<=") || rest.starts_with("<!") || rest.starts_with("=") || rest.starts_with("!")) {
            fail("lookaround assertions are not supported");
        }
        if (rest.starts_with("<")) {
            named_group(i_ + 3);
            return;
        }
        if (rest.starts_with(":")) {
            out_ += "(?:";
            i_ += 3;
            return;
        }
        // Flag groups: (?i) (?s-m) (?i:...)
        std::size_t j = 0;
        while (j < rest.size() && (rest[j] == 'i' || rest[j] == 'm' || rest[j] == 's' || rest[j] == '-')) {
            ++j;
        }
        if (j > 0 && j < rest.size() && (rest[j] == ')' || rest[j] == ':')) {
            out_.append(p_.substr(i_, j + 3));
            i_ += j + 3;
            return;
        }
        fail("unsupported group syntax");
    }

    std::string_view p_;
    std::size_t i_ = 0;
    std::string out_;
    std::vector<std::string> names_;
};

}  // namespace

Regex Regex::compile(std::string_view pattern)
{
    DialectTranslator translator(pattern);
    const std::string translated = translator.run();
    auto impl = std::make_shared<Impl>();
    impl->pattern = std::string(pattern);
    impl->names = std::move(translator).names();
    try {
        impl->compiled.assign(translated, boost::regex::perl | boost::regex::no_mod_m);
    } catch (const boost::regex_error& e) {
        throw RegexError(e.what(), static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, e.position())));
    }
    return Regex(std::move(impl));
}

bool Regex::full_match(std::string_view text) const
{
    try {
        return boost::regex_match(text.begin(), text.end(), impl_->compiled, kMatchFlags);
    } catch (const std::runtime_error&) {
        // Match complexity limit exceeded.
        return false;
    }
}

bool Regex::search(std::string_view text) const
{
    try {
        return boost::regex_search(text.begin(), text.end(), impl_->compiled, kMatchFlags);
    } catch (const std::runtime_error&) {
        return false;
    }
}

bool Regex::search(std::string_view text, NamedCaptures& out) const
{
    out.clear();
    boost::match_results<std::string_view::const_iterator> m;
    try {
        if (!boost::regex_search(text.begin(), text.end(), m, impl_->compiled, kMatchFlags)) {
            return false;
        }
    } catch (const std::runtime_error&) {
        return false;
    }
    out.reserve(impl_->names.size());
    for (const auto& name : impl_->names) {
        const auto& sub = m[name];
        out.emplace_back(name, sub.matched ? std::string(sub.first, sub.second) : std::string());
    }
    return true;
}

const std::string& Regex::pattern() const noexcept { return impl_->pattern; }

const std::vector<std::string>& Regex::group_names() const noexcept { return impl_->names; }

}  // namespace lqe
