#include "lqe/common/time.hpp"

#include "lqe/common/strings.hpp"

#include <array>
#include <cctype>

#include <fmt/format.h>

namespace lqe {

namespace {

using namespace std::chrono;

class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    bool done() const { return pos_ >= text_.size(); }
    char peek() const { return done() ? '\0' : text_[pos_]; }
    std::size_t pos() const { return pos_; }

    [[noreturn]] void fail(std::string_view what) const
    {
        throw TimeFormatError(fmt::format("cannot parse time \"{}\": {} at offset {}", text_, what, pos_));
    }

    int digits(int min_count, int max_count, int* count_out = nullptr)
    {
        int value = 0;
        int n = 0;
        while (n < max_count && std::isdigit(static_cast<unsigned char>(peek()))) {
            value = value * 10 + (text_[pos_] - '0');
            ++pos_;
            ++n;
        }
        if (n < min_count) {
            fail("expected digits");
        }
        if (count_out != nullptr) {
            *count_out = n;
        }
        return value;
    }

    void expect(char c)
    {
        if (peek() != c) {
            fail(fmt::format("expected '{}'", c));
        }
        ++pos_;
    }

    void skip_spaces(bool at_least_one)
    {
        if (at_least_one && peek() != ' ') {
            fail("expected space");
        }
        while (peek() == ' ') {
            ++pos_;
        }
    }

    std::string_view take(std::size_t n)
    {
        if (pos_ + n > text_.size()) {
            fail("unexpected end");
        }
        auto out = text_.substr(pos_, n);
        pos_ += n;
        return out;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

Timestamp assemble(Cursor& cur, int y, int mo, int d, int h, int mi, int s, std::int64_t frac_ns)
{
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
        cur.fail("field out of range");
    }
    return Timestamp{sys_days{ymd}.time_since_epoch()} + hours{h} + minutes{mi} + seconds{s} + Nanos{frac_ns};
}

std::int64_t fraction_nanos(Cursor& cur)
{
    int count = 0;
    const int value = cur.digits(1, 9, &count);
    std::int64_t ns = value;
    for (int i = count; i < 9; ++i) {
        ns *= 10;
    }
    // Extra precision beyond nanoseconds is dropped.
    while (std::isdigit(static_cast<unsigned char>(cur.peek()))) {
        cur.take(1);
    }
    return ns;
}

constexpr std::array<std::string_view, 12> kMonths = {"jan", "feb", "mar", "apr", "may", "jun",
                                                       "jul", "aug", "sep", "oct", "nov", "dec"};

}  // namespace

Timestamp parse_rfc3339(std::string_view text)
{
    Cursor cur(text);
    const int y = cur.digits(4, 4);
    cur.expect('-');
    const int mo = cur.digits(2, 2);
    cur.expect('-');
    const int d = cur.digits(2, 2);
    if (cur.peek() == 'T' || cur.peek() == 't' || cur.peek() == ' ') {
        cur.take(1);
    } else {
        cur.fail("expected 'T'");
    }
    const int h = cur.digits(2, 2);
    cur.expect(':');
    const int mi = cur.digits(2, 2);
    cur.expect(':');
    const int s = cur.digits(2, 2);
    std::int64_t frac = 0;
    if (cur.peek() == '.') {
        cur.take(1);
        frac = fraction_nanos(cur);
    }
    Timestamp ts = assemble(cur, y, mo, d, h, mi, s, frac);
    const char zone = cur.peek();
    if (zone == 'Z' || zone == 'z') {
        cur.take(1);
    } else if (zone == '+' || zone == '-') {
        cur.take(1);
        const int oh = cur.digits(2, 2);
        cur.expect(':');
        const int om = cur.digits(2, 2);
        const auto offset = hours{oh} + minutes{om};
        ts = zone == '+' ? ts - offset : ts + offset;
    } else {
        cur.fail("expected zone designator");
    }
    if (!cur.done()) {
        cur.fail("trailing characters");
    }
    return ts;
}

std::string format_rfc3339(Timestamp ts)
{
    const auto day_point = floor<days>(ts);
    const year_month_day ymd{day_point};
    auto rest = ts - day_point;
    const auto h = duration_cast<hours>(rest);
    rest -= h;
    const auto mi = duration_cast<minutes>(rest);
    rest -= mi;
    const auto s = duration_cast<seconds>(rest);
    rest -= s;
    std::string out = fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}", static_cast<int>(ymd.year()),
                                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                                  h.count(), mi.count(), s.count());
    if (rest.count() != 0) {
        std::string frac = fmt::format("{:09}", rest.count());
        while (frac.back() == '0') {
            frac.pop_back();
        }
        out += '.';
        out += frac;
    }
    out += 'Z';
    return out;
}

Timestamp parse_timestamp(std::string_view text, std::string_view format, int default_year)
{
    Cursor cur(text);
    int y = default_year, mo = 1, d = 1, h = 0, mi = 0, s = 0;
    std::int64_t frac = 0;
    for (std::size_t i = 0; i < format.size(); ++i) {
        const char f = format[i];
        if (f == ' ') {
            cur.skip_spaces(true);
            continue;
        }
        if (f != '%') {
            cur.expect(f);
            continue;
        }
        if (++i >= format.size()) {
            throw TimeFormatError("dangling '%' in time format");
        }
        switch (format[i]) {
        case 'Y':
            y = cur.digits(4, 4);
            break;
        case 'y':
            y = 2000 + cur.digits(2, 2);
            break;
        case 'm':
            mo = cur.digits(1, 2);
            break;
        case 'd':
            d = cur.digits(1, 2);
            break;
        case 'e':
            cur.skip_spaces(false);
            d = cur.digits(1, 2);
            break;
        case 'b': {
            const auto name = cur.take(3);
            mo = 0;
            for (std::size_t m = 0; m < kMonths.size(); ++m) {
                if (starts_with_ci(name, kMonths[m])) {
                    mo = static_cast<int>(m) + 1;
                }
            }
            if (mo == 0) {
                cur.fail("unknown month");
            }
            break;
        }
        case 'H':
            h = cur.digits(1, 2);
            break;
        case 'M':
            mi = cur.digits(1, 2);
            break;
        case 'S':
            s = cur.digits(1, 2);
            break;
        case 'f':
            frac = fraction_nanos(cur);
            break;
        case '%':
            cur.expect('%');
            break;
        default:
            throw TimeFormatError(fmt::format("unsupported time directive %{}", format[i]));
        }
    }
    if (!cur.done()) {
        cur.fail("trailing characters");
    }
    return assemble(cur, y, mo, d, h, mi, s, frac);
}

}  // namespace lqe
