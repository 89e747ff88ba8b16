#include "lqe/gateway/prompt.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "lqe/common/strings.hpp"

namespace lqe::gateway {

std::string_view default_cheat_sheet()
{
    return R"q(LogQL quick reference:
- Stream selector: {label="value", other=~"regex.*", name!="x"}
- Line filters: |= "text", != "text", |~ "regex", !~ "regex"
- Parsing: | regexp "(?P<name>pattern)" adds captured labels
- Label filters: | name="value", | latency > 250, | __error__=""
- Formatting: | line_format "{{.label}} {{__timestamp__}}"
- Range functions over a window: count_over_time, rate, bytes_over_time,
  and with | unwrap <label>: sum_over_time, avg_over_time, min_over_time, max_over_time
  e.g. count_over_time({app="api"} |= "error" [5m])
- Aggregations: sum, avg, min, max, count, topk(k, ...), bottomk(k, ...)
  with optional by (labels) or without (labels)
  e.g. sum by (host) (rate({app="api"}[1h])))q";
}

PromptContext prompt_context_from_store(const ingest::LogStore& store, std::size_t max_lines, std::size_t max_values)
{
    PromptContext ctx;
    ctx.application = store.application();
    ctx.cheat_sheet = std::string(default_cheat_sheet());
    ctx.max_sample_lines = max_lines;
    for (const auto& [name, values] : store.postings()) {
        std::vector<std::string> vals;
        for (const auto& [value, ids] : values) {
            if (vals.size() == max_values) {
                break;
            }
            vals.push_back(value);
        }
        ctx.labels.emplace_back(name, std::move(vals));
    }

    std::vector<std::pair<Timestamp, const std::string*>> all;
    for (const auto& stream : store.streams()) {
        for (const auto& e : stream.entries) {
            all.emplace_back(e.ts, &e.line);
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t n = std::min(max_lines, all.size());
    for (std::size_t i = 0; i < n; ++i) {
        ctx.sample_lines.push_back(*all[i * all.size() / n].second);
    }
    return ctx;
}

std::string build_prompt(std::string_view nl, const PromptContext& ctx)
{
    if (trim(nl).empty()) {
        throw std::invalid_argument("empty question");
    }
    std::string out;
    out += "You translate questions about application logs into LogQL queries for Grafana Loki.\n"
           "Answer with exactly one LogQL query in a ```logql code block and nothing else.\n"
           "Use only the labels listed below. Metric questions (how many, how often, top N) need a\n"
           "range function such as count_over_time with a [duration]; questions asking to show or\n"
           "list log lines need a log query.\n\n";
    if (!ctx.cheat_sheet.empty()) {
        out += ctx.cheat_sheet;
        out += "\n\n";
    }
    out += fmt::format("Application: {}\n", ctx.application);
    out += "Labels:\n";
    for (const auto& [name, values] : ctx.labels) {
        std::vector<std::string> quoted;
        for (const auto& v : values) {
            quoted.push_back(quote(v));
        }
        out += fmt::format("- {}: {}\n", name, fmt::join(quoted, ", "));
    }
    const std::size_t n = std::min(ctx.sample_lines.size(), ctx.max_sample_lines);
    if (n > 0) {
        out += "Sample log lines:\n";
        for (std::size_t i = 0; i < n; ++i) {
            out += ctx.sample_lines[i];
            out += '\n';
        }
    }
    out += fmt::format("\nQuestion: {}\nLogQL:\n", trim(nl));
    return out;
}

}  // namespace lqe::gateway
