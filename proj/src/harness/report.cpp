#include "lqe/harness/report.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace lqe::harness {

namespace {

std::string cell(const std::optional<double>& v) { return v ? round2(*v) : "n/a"; }

std::string signed_cell(const std::optional<double>& v, const char* suffix = "")
{
    if (!v) {
        return "n/a";
    }
    const std::string text = round2(*v);
    const bool zero = text.find_first_not_of("0.") == std::string::npos;
    return fmt::format("{}{}{}", !zero && text.front() != '-' ? "+" : "", text, suffix);
}

std::string score_row(const std::string& name, const Scores& s)
{
    return fmt::format("| {} | {} | {} | {} | {} | {} | {} |\n", name, cell(s.metric_accuracy), cell(s.log_f1),
                       cell(s.exact_match_rate), cell(s.executability_rate), s.metric_tuples, s.log_tuples);
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    }
    out << text;
}

std::optional<double> percent(const std::optional<double>& v)
{
    return v ? std::optional<double>(*v * 100) : std::nullopt;
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

}  // namespace

Comparison compare_runs(const EvalMetrics& before, const EvalMetrics& after)
{
    if (before.tuple_ids != after.tuple_ids) {
        throw std::invalid_argument("runs cover different tuple sets");
    }
    Comparison c;
    for (const auto& [app, b] : before.per_application) {
        const auto it = after.per_application.find(app);
        if (it == after.per_application.end()) {
            throw std::invalid_argument(fmt::format("second run has no bucket for application \"{}\"", app));
        }
        if (b.metric_tuples != it->second.metric_tuples || b.log_tuples != it->second.log_tuples) {
            throw std::invalid_argument(fmt::format("bucket sizes for application \"{}\" differ", app));
        }
        c.rows.push_back({app, b, it->second});
    }
    for (const auto& [app, a] : after.per_application) {
        if (!before.per_application.contains(app)) {
            throw std::invalid_argument(fmt::format("first run has no bucket for application \"{}\"", app));
        }
    }
    c.rows.push_back({"overall", before.overall, after.overall});
    return c;
}

std::optional<double> delta(const std::optional<double>& before, const std::optional<double>& after)
{
    if (!before || !after) {
        return std::nullopt;
    }
    return *after - *before;
}

std::optional<double> relative_delta(const std::optional<double>& before, const std::optional<double>& after)
{
    if (!before || !after || *before == 0) {
        return std::nullopt;
    }
    return (*after - *before) / *before;
}

std::string render_report(const EvalMetrics& metrics, ReportFormat format)
{
    if (format == ReportFormat::Json) {
        return to_json(metrics).dump(2) + "\n";
    }
    std::string out = "| Application | MQ | LQ | Exact match | Executable | Metric tuples | Log tuples |\n"
                      "|---|---|---|---|---|---|---|\n";
    if (metrics.overall.tuples == 0) {
        return out;
    }
    for (const auto& [app, s] : metrics.per_application) {
        out += score_row(app, s);
    }
    out += score_row("**overall**", metrics.overall);
    if (metrics.perplexity) {
        out += fmt::format("\nPerplexity: {}\n", round2(*metrics.perplexity));
    }
    return out;
}

nlohmann::json to_json(const Comparison& c)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : c.rows) {
        rows.push_back({{"application", r.application},
                        {"mq_before", optional_json(r.before.metric_accuracy)},
                        {"mq_after", optional_json(r.after.metric_accuracy)},
                        {"mq_delta", optional_json(delta(r.before.metric_accuracy, r.after.metric_accuracy))},
                        {"mq_relative", optional_json(relative_delta(r.before.metric_accuracy, r.after.metric_accuracy))},
                        {"lq_before", optional_json(r.before.log_f1)},
                        {"lq_after", optional_json(r.after.log_f1)},
                        {"lq_delta", optional_json(delta(r.before.log_f1, r.after.log_f1))},
                        {"lq_relative", optional_json(relative_delta(r.before.log_f1, r.after.log_f1))}});
    }
    return {{"rows", rows}};
}

std::string render_report(const Comparison& c, ReportFormat format)
{
    if (format == ReportFormat::Json) {
        return to_json(c).dump(2) + "\n";
    }
    std::string out = "| Application | MQ (B) | MQ (A) | MQ delta | MQ rel. | LQ (B) | LQ (A) | LQ delta | LQ rel. |\n"
                      "|---|---|---|---|---|---|---|---|---|\n";
    if (c.rows.empty() || c.rows.back().before.tuples == 0) {
        return out;
    }
    for (const auto& r : c.rows) {
        const auto& b = r.before;
        const auto& a = r.after;
        out += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                           r.application == "overall" ? "**overall**" : r.application, cell(b.metric_accuracy),
                           cell(a.metric_accuracy), signed_cell(delta(b.metric_accuracy, a.metric_accuracy)),
                           signed_cell(percent(relative_delta(b.metric_accuracy, a.metric_accuracy)), "%"),
                           cell(b.log_f1), cell(a.log_f1), signed_cell(delta(b.log_f1, a.log_f1)),
                           signed_cell(percent(relative_delta(b.log_f1, a.log_f1)), "%"));
    }
    return out;
}

void write_run_artifacts(const std::filesystem::path& dir, const EvalRun& run)
{
    std::filesystem::create_directories(dir);
    std::string records;
    std::string timings;
    for (const auto& r : run.records) {
        records += to_json(r).dump() + "\n";
        timings += nlohmann::json{{"tuple_id", r.tuple_id}, {"latency_ms", r.latency_ms}}.dump() + "\n";
    }
    write_file(dir / "records.jsonl", records);
    write_file(dir / "metrics.json", render_report(run.metrics, ReportFormat::Json));
    write_file(dir / "report.md", render_report(run.metrics, ReportFormat::Markdown));
    write_file(dir / "timings.jsonl", timings);
}

}  // namespace lqe::harness
