#include "lqe/harness/scoring.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <utility>

namespace lqe::harness {

std::string round2(double value)
{
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[400];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    std::string text(buf, res.ptr);
    const bool negative = !text.empty() && text.front() == '-';
    if (negative) {
        text.erase(0, 1);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) {
        text += ".";
        dot = text.size() - 1;
    }
    text.append(3, '0');
    const bool round_up = text[dot + 3] >= '5';
    std::string digits = text.substr(0, dot) + text.substr(dot + 1, 2);
    if (round_up) {
        int i = static_cast<int>(digits.size()) - 1;
        while (i >= 0 && digits[static_cast<std::size_t>(i)] == '9') {
            digits[static_cast<std::size_t>(i)] = '0';
            --i;
        }
        if (i < 0) {
            digits.insert(digits.begin(), '1');
        } else {
            ++digits[static_cast<std::size_t>(i)];
        }
    }
    std::string out = digits.substr(0, digits.size() - 2) + "." + digits.substr(digits.size() - 2);
    const bool zero = out.find_first_not_of("0.") == std::string::npos;
    return negative && !zero ? "-" + out : out;
}

bool compare_metric_result(const engine::MetricResult& expected, const engine::MetricResult& got)
{
    if (expected.samples.size() != got.samples.size()) {
        return false;
    }
    std::map<std::string, std::string> want;
    for (const auto& s : expected.samples) {
        want.emplace(label_set_string(s.labels), round2(s.value));
    }
    for (const auto& s : got.samples) {
        const auto it = want.find(label_set_string(s.labels));
        if (it == want.end() || it->second != round2(s.value)) {
            return false;
        }
    }
    return want.size() == got.samples.size();
}

LogScore score_log_result(const engine::LogResult& expected, const engine::LogResult& got)
{
    if (expected.rows.empty() && got.rows.empty()) {
        return {1, 1, 1};
    }
    if (expected.rows.empty() || got.rows.empty()) {
        return {0, 0, 0};
    }
    std::map<std::pair<std::int64_t, std::string>, std::size_t> remaining;
    for (const auto& r : expected.rows) {
        ++remaining[{to_unix_nanos(r.ts), r.line}];
    }
    std::size_t tp = 0;
    for (const auto& r : got.rows) {
        const auto it = remaining.find({to_unix_nanos(r.ts), r.line});
        if (it != remaining.end() && it->second > 0) {
            --it->second;
            ++tp;
        }
    }
    LogScore s;
    s.precision = static_cast<double>(tp) / static_cast<double>(got.rows.size());
    s.recall = static_cast<double>(tp) / static_cast<double>(expected.rows.size());
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0;
    return s;
}

}  // namespace lqe::harness
