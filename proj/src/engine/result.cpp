#include "lqe/engine/result.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace lqe::engine {

namespace {

nlohmann::json labels_json(const Labels& labels)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : labels) {
        j[k] = v;
    }
    return j;
}

Labels labels_from(const nlohmann::json& j)
{
    Labels out;
    if (j.is_null()) {
        return out;
    }
    for (const auto& [k, v] : j.items()) {
        out.emplace(k, v.get<std::string>());
    }
    return out;
}

}  // namespace

nlohmann::json to_json(const QueryResult& result)
{
    if (const auto* log = std::get_if<LogResult>(&result)) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : log->rows) {
            rows.push_back({{"ts", format_rfc3339(r.ts)}, {"labels", labels_json(r.labels)}, {"line", r.line}});
        }
        return {{"type", "log"}, {"rows", std::move(rows)}, {"truncated", log->truncated}};
    }
    const auto& metric = std::get<MetricResult>(result);
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : metric.samples) {
        samples.push_back({{"labels", labels_json(s.labels)}, {"value", s.value}});
    }
    return {{"type", "metric"}, {"samples", std::move(samples)}, {"evaluated_at", format_rfc3339(metric.evaluated_at)}};
}

QueryResult result_from_json(const nlohmann::json& j)
{
    try {
        const std::string type = j.at("type").get<std::string>();
        if (type == "log") {
            LogResult out;
            for (const auto& r : j.at("rows")) {
                out.rows.push_back(LogRow{parse_rfc3339(r.at("ts").get<std::string>()), labels_from(r.value("labels", nlohmann::json())),
                                          r.at("line").get<std::string>()});
            }
            out.truncated = j.value("truncated", false);
            return out;
        }
        if (type == "metric") {
            MetricResult out;
            for (const auto& s : j.at("samples")) {
                out.samples.push_back(Sample{labels_from(s.value("labels", nlohmann::json())), s.at("value").get<double>()});
            }
            if (j.contains("evaluated_at")) {
                out.evaluated_at = parse_rfc3339(j.at("evaluated_at").get<std::string>());
            }
            return out;
        }
        throw std::invalid_argument(fmt::format("unknown result type \"{}\"", type));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(e.what());
    } catch (const TimeFormatError& e) {
        throw std::invalid_argument(e.what());
    }
}

}  // namespace lqe::engine
