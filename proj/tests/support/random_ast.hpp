#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lqe/logql/ast.hpp"

namespace lqe::testing {

// Random valid queries over the vocabulary used by RandomStoreBuilder, so
// generated queries select and filter real data.
class RandomAstGenerator {
public:
    explicit RandomAstGenerator(std::uint64_t seed, bool exotic_strings = false)
        : rng_(seed), exotic_(exotic_strings)
    {}

    logql::QueryAst query()
    {
        if (chance(0.4)) {
            return log_query(false);
        }
        return metric(0);
    }

    logql::LogQuery log_query(bool unwrap)
    {
        logql::LogQuery q;
        q.selector = selector();
        if (unwrap && chance(0.8)) {
            q.pipeline.push_back(logql::RegexpStage{R"(latency=(?P<latency>\d+))", {}});
        }
        // line_format replaces the line, so most queries only format at the end.
        const int stages = uniform(0, 3);
        for (int i = 0; i < stages; ++i) {
            auto st = stage(chance(0.1));
            // Numeric filters usually follow the stage that extracts their label.
            if (const auto* f = std::get_if<logql::LabelFilter>(&st);
                f != nullptr && std::holds_alternative<double>(f->value) && chance(0.8)) {
                q.pipeline.push_back(extract(f->name));
            }
            q.pipeline.push_back(std::move(st));
        }
        if (!unwrap && chance(0.25)) {
            q.pipeline.push_back(line_format());
        }
        if (unwrap) {
            const std::string label = chance(0.8) ? "latency" : "status";
            q.pipeline.push_back(extract(label));
            if (chance(0.3)) {
                q.pipeline.push_back(logql::LabelFilter{"__error__", logql::Comparator::Eq, std::string(), {}});
            }
            q.pipeline.push_back(logql::UnwrapStage{label, {}});
        }
        return q;
    }

    logql::MetricQuery metric(int depth)
    {
        if (depth >= 2 || chance(0.45)) {
            logql::RangeAggregation agg;
            agg.func = pick<logql::RangeFunc>({logql::RangeFunc::CountOverTime, logql::RangeFunc::Rate,
                                               logql::RangeFunc::BytesOverTime, logql::RangeFunc::SumOverTime,
                                               logql::RangeFunc::AvgOverTime, logql::RangeFunc::MinOverTime,
                                               logql::RangeFunc::MaxOverTime});
            agg.inner = log_query(logql::requires_unwrap(agg.func));
            agg.range = duration();
            return agg;
        }
        logql::VectorAggregation agg;
        agg.func = pick<logql::VectorFunc>({logql::VectorFunc::Sum, logql::VectorFunc::Avg, logql::VectorFunc::Min,
                                            logql::VectorFunc::Max, logql::VectorFunc::Count, logql::VectorFunc::Topk,
                                            logql::VectorFunc::Bottomk});
        if (agg.func == logql::VectorFunc::Topk || agg.func == logql::VectorFunc::Bottomk) {
            agg.k = uniform(1, 3);
        }
        if (chance(0.6)) {
            logql::Grouping g;
            g.without = chance(0.3);
            const int n = uniform(0, 2);
            for (int i = 0; i < n; ++i) {
                g.labels.push_back(pick<std::string>({"app", "host", "level", "status", "user", "region"}));
            }
            agg.grouping = g;
        }
        agg.inner = metric(depth + 1);
        return lqe::Box<logql::VectorAggregation>(std::move(agg));
    }

private:
    bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    template <class T>
    T pick(std::initializer_list<T> options)
    {
        const auto i = static_cast<std::size_t>(uniform(0, static_cast<int>(options.size()) - 1));
        return *(options.begin() + i);
    }

    std::string text(std::initializer_list<std::string> plain)
    {
        if (exotic_ && chance(0.3)) {
            return pick<std::string>({"quo\"te", "back\\slash", "tab\there", "new\nline", "caf\xC3\xA9", "{{x}}",
                                      "$dollar", "`tick`", "|= \"x\""});
        }
        return pick<std::string>(plain);
    }

    std::vector<logql::LabelMatcher> selector()
    {
        std::vector<logql::LabelMatcher> out;
        if (chance(0.7)) {
            out.push_back({"app", logql::MatchOp::Eq, pick<std::string>({"api", "db", "web"}), {}});
        } else {
            out.push_back({"app", logql::MatchOp::Re, pick<std::string>({"api|db", "w.*", "(api|web)", "d.+"}), {}});
        }
        const int extra = pick<int>({0, 0, 1, 1, 2});
        for (int i = 0; i < extra; ++i) {
            const auto op = pick<logql::MatchOp>(
                {logql::MatchOp::Eq, logql::MatchOp::Neq, logql::MatchOp::Re, logql::MatchOp::Nre});
            const int which = uniform(0, 3);
            const std::string name = which == 0 ? "host" : which == 1 ? "level" : which == 2 ? "region" : "zone";
            std::string value;
            if (op == logql::MatchOp::Re || op == logql::MatchOp::Nre) {
                value = which == 0   ? pick<std::string>({"h[12]", "h.*", ".*", ""})
                        : which == 1 ? pick<std::string>({"err.*|warn", "info", ".+", ""})
                        : which == 2 ? pick<std::string>({"eu|us", "e.", ".*"})
                                     : pick<std::string>({"a", "b|c", ""});
            } else {
                const auto plain = [&] {
                    return which == 0   ? pick<std::string>({"h1", "h2", "h3", ""})
                           : which == 1 ? pick<std::string>({"info", "error", "warn", ""})
                           : which == 2 ? pick<std::string>({"eu", "us", ""})
                                        : pick<std::string>({"a", "b", ""});
                };
                value = exotic_ && chance(0.3) ? text({"h1"}) : plain();
            }
            out.push_back({name, op, value, {}});
        }
        return out;
    }

    static logql::RegexpStage extract(const std::string& label)
    {
        return logql::RegexpStage{label + "=(?P<" + label + ">\\d+)", {}};
    }

    logql::LineFormatStage line_format()
    {
        return logql::LineFormatStage{
            pick<std::string>({"{{.app}} {{.status}}", "{{__timestamp__}} {{.user}}", "{{.host}}:{{.verb}}"}), {}};
    }

    logql::PipelineStage stage(bool allow_format)
    {
        switch (uniform(0, allow_format ? 5 : 4)) {
        case 0:
        case 1: {
            const auto op = pick<logql::LineFilterOp>({logql::LineFilterOp::Contains, logql::LineFilterOp::NotContains,
                                                       logql::LineFilterOp::Matches, logql::LineFilterOp::NotMatches});
            if (op == logql::LineFilterOp::Contains || op == logql::LineFilterOp::NotContains) {
                return logql::LineFilter{op, text({"status=5", "failed", "GET", "user", "db", "latency=1", "", "x"}), {}};
            }
            return logql::LineFilter{
                op, pick<std::string>({R"(status=5\d\d)", "fail(ed)?", R"(user=\w+)", "^GET", "(?i)get", R"(\d{3})"}),
                {}};
        }
        case 2: {
            const int which = uniform(0, 4);
            if (which == 0) {
                return logql::LabelFilter{"level", pick<logql::Comparator>({logql::Comparator::Eq, logql::Comparator::Neq}),
                                          text({"error", "info", ""}), {}};
            }
            if (which == 1) {
                return logql::LabelFilter{"__error__", logql::Comparator::Eq, std::string(), {}};
            }
            if (which == 2) {
                return logql::LabelFilter{"user", pick<logql::Comparator>({logql::Comparator::Re, logql::Comparator::Nre}),
                                          pick<std::string>({"a.*", "bob|carol", ""}), {}};
            }
            const auto cmp = pick<logql::Comparator>({logql::Comparator::Eq, logql::Comparator::Neq, logql::Comparator::Gt,
                                                      logql::Comparator::Ge, logql::Comparator::Lt, logql::Comparator::Le});
            const double value = exotic_ ? pick<double>({200, 404, 0.5, -3, 1e21, 2.25}) : pick<double>({200, 404, 500, 250});
            return logql::LabelFilter{pick<std::string>({"status", "latency"}), cmp, value, {}};
        }
        case 3:
            return logql::RegexpStage{pick<std::string>({R"(status=(?P<status>\d+))", R"(user=(?P<user>\w+))",
                                                         R"(from (?P<ip>[\d.]+))", R"((?P<verb>GET|POST) (?P<path>\S+))"}),
                                      {}};
        case 4:
            return logql::LineFilter{logql::LineFilterOp::Contains, text({"a", "e", "=", " "}), {}};
        default:
            return line_format();
        }
    }

    logql::Duration duration()
    {
        return pick<logql::Duration>({{30, logql::DurationUnit::Second},
                                      {1, logql::DurationUnit::Minute},
                                      {90, logql::DurationUnit::Second},
                                      {5, logql::DurationUnit::Minute},
                                      {60, logql::DurationUnit::Minute},
                                      {2, logql::DurationUnit::Hour},
                                      {1, logql::DurationUnit::Day},
                                      {1500, logql::DurationUnit::Millisecond}});
    }

    std::mt19937_64 rng_;
    bool exotic_;
};

}  // namespace lqe::testing
