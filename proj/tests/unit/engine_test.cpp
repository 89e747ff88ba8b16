#include <gtest/gtest.h>

#include <algorithm>
#include <iostream>

#include "lqe/engine/engine.hpp"
#include "lqe/logql/canonical.hpp"
#include "lqe/logql/parser.hpp"
#include "lqe/logql/printer.hpp"
#include "naive_engine.hpp"
#include "random_ast.hpp"
#include "random_store.hpp"

namespace lqe::engine {
namespace {

using ingest::LogEntry;
using ingest::LogStore;
using namespace std::chrono_literals;

const Timestamp kNow = parse_rfc3339("2024-06-01T12:00:00Z");

struct E {
    Labels labels;
    Nanos ago;
    std::string line;
};

LogStore make_store(const std::vector<E>& entries)
{
    std::vector<LogEntry> out;
    for (const auto& e : entries) {
        out.push_back(LogEntry{kNow - e.ago, e.labels, e.line});
    }
    return LogStore::build("test", kNow, std::move(out));
}

EvalContext ctx(std::size_t limit = 5000)
{
    EvalContext c;
    c.now = kNow;
    c.limit = limit;
    return c;
}

QueryResult run(const LogStore& store, std::string_view query, const EvalContext& c = ctx())
{
    return execute(store, query, {}, c);
}

std::vector<std::string> lines(const QueryResult& r)
{
    std::vector<std::string> out;
    for (const auto& row : std::get<LogResult>(r).rows) {
        out.push_back(row.line);
    }
    return out;
}

std::vector<std::pair<std::string, double>> samples(const QueryResult& r)
{
    std::vector<std::pair<std::string, double>> out;
    for (const auto& s : std::get<MetricResult>(r).samples) {
        out.emplace_back(label_set_string(s.labels), s.value);
    }
    return out;
}

std::vector<logql::LabelMatcher> selector(std::string_view text)
{
    return std::get<logql::LogQuery>(logql::parse(text)).selector;
}

TEST(SelectStreams, Matchers)
{
    const auto store = make_store({{{{"app", "x"}}, 1s, "1"},
                                   {{{"app", "y"}}, 1s, "2"},
                                   {{{"application", "openstack-eu-west"}}, 1s, "3"},
                                   {{{"app", "x"}, {"a", "1"}}, 1s, "4"}});
    const auto key = [&](StreamId id) { return store.stream(id).key; };
    const auto ids = select_streams(store, selector(R"q({app="x"})q"));
    ASSERT_EQ(ids.size(), 2u);
    EXPECT_EQ(key(ids[0]), R"q({a="1", app="x"})q");
    EXPECT_EQ(key(ids[1]), R"q({app="x"})q");

    const auto re = select_streams(store, selector(R"q({application=~"openstack.*"})q"));
    ASSERT_EQ(re.size(), 1u);
    EXPECT_EQ(key(re[0]), R"q({application="openstack-eu-west"})q");

    // != also matches streams that lack the label.
    EXPECT_EQ(select_streams(store, selector(R"q({app=~".+", a!="1"})q")).size(), 2u);
    EXPECT_EQ(select_streams(store, selector(R"q({application!~"open.*", app!=""})q")).size(), 3u);
    // Regex matchers are anchored.
    EXPECT_TRUE(select_streams(store, selector(R"q({application=~"stack"})q")).empty());
    EXPECT_TRUE(select_streams(store, selector(R"q({app="nope"})q")).empty());
}

TEST(Pipeline, LineFiltersAreCaseSensitive)
{
    const auto store = make_store({{{{"job", "openstack"}}, 1s, "GET 503 during token validation"},
                                   {{{"job", "openstack"}}, 2s, "GET 503 during Token Validation"},
                                   {{{"job", "openstack"}}, 3s, "GET 200 token validation"}});
    EXPECT_EQ(lines(run(store, R"q({job="openstack"} |= "503" |= "token validation")q")),
              std::vector<std::string>{"GET 503 during token validation"});
    EXPECT_EQ(lines(run(store, R"q({job="openstack"} |~ "(?i)token validation" != "503")q")),
              std::vector<std::string>{"GET 200 token validation"});
    EXPECT_EQ(lines(run(store, R"q({job="openstack"} !~ "\\d{3} during")q")).size(), 1u);
}

TEST(Pipeline, RegexpAddsLabelsAndFlagsMisses)
{
    const auto store = make_store(
        {{{{"app", "ssh"}}, 2s, "Accepted password for fztu from 119.4.203.64 port 38652 ssh2"},
         {{{"app", "ssh"}}, 1s, "Connection closed"}});
    const auto r = std::get<LogResult>(
        run(store, R"q({app="ssh"} | regexp "(?P<source_ip>\\d+\\.\\d+\\.\\d+\\.\\d+)")q"));
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.rows[0].labels, (Labels{{"app", "ssh"}, {"source_ip", "119.4.203.64"}}));
    EXPECT_EQ(r.rows[1].labels, (Labels{{"__error__", "regexp"}, {"app", "ssh"}}));

    const auto clean = std::get<LogResult>(
        run(store, R"q({app="ssh"} | regexp "(?P<source_ip>\\d+\\.\\d+\\.\\d+\\.\\d+)" | __error__="")q"));
    ASSERT_EQ(clean.rows.size(), 1u);
    EXPECT_EQ(clean.rows[0].labels.at("source_ip"), "119.4.203.64");
}

TEST(Pipeline, ExtractedNamesDoNotOverwriteStreamLabels)
{
    const auto store = make_store({{{{"app", "ssh"}}, 1s, "app=other"}});
    const auto r = std::get<LogResult>(run(store, R"q({app="ssh"} | regexp "app=(?P<app>\\w+)")q"));
    EXPECT_EQ(r.rows[0].labels, (Labels{{"app", "ssh"}, {"app_extracted", "other"}}));
}

TEST(Pipeline, LabelFilters)
{
    const auto store = make_store({{{{"app", "a"}}, 4s, "status=500 user=bob"},
                                   {{{"app", "a"}}, 3s, "status=200 user=alice"},
                                   {{{"app", "a"}}, 2s, "status=oops user=carol"},
                                   {{{"app", "a"}}, 1s, "no fields"}});
    const std::string base = R"q({app="a"} | regexp "status=(?P<status>\\S+)" | regexp "user=(?P<user>\\w+)")q";
    EXPECT_EQ(lines(run(store, base + " | status >= 300")), std::vector<std::string>{"status=500 user=bob"});
    EXPECT_EQ(lines(run(store, base + " | status != 500")), std::vector<std::string>{"status=200 user=alice"});
    EXPECT_EQ(lines(run(store, base + R"q( | status != "500")q")).size(), 3u);
    EXPECT_EQ(lines(run(store, base + R"q( | user=~"a.*|c.*")q")).size(), 2u);
    EXPECT_EQ(lines(run(store, base + R"q( | user="")q")), std::vector<std::string>{"no fields"});
}

TEST(Pipeline, LineFormat)
{
    const auto store = make_store({{{{"app", "a"}, {"host", "h1"}}, 0s, "x"}});
    const auto r = run(store, R"q({app="a"} | line_format "{{.host}}|{{.missing}}|{{__timestamp__}}")q");
    EXPECT_EQ(lines(r), std::vector<std::string>{"h1||2024-06-01T12:00:00Z"});
}

TEST(LogQuery, NothingSelected)
{
    const auto store = make_store({{{{"app", "a"}}, 1s, "x"}});
    const auto r = std::get<LogResult>(run(store, R"q({app="b"})q"));
    EXPECT_TRUE(r.rows.empty());
    EXPECT_FALSE(r.truncated);
}

TEST(LogQuery, LimitKeepsNewestRowsAscending)
{
    std::vector<E> entries;
    for (int i = 1; i <= 5; ++i) {
        entries.push_back({{{"app", "a"}}, std::chrono::seconds(i), "line " + std::to_string(i)});
    }
    const auto store = make_store(entries);
    const auto r = std::get<LogResult>(run(store, R"q({app="a"})q", ctx(2)));
    EXPECT_TRUE(r.truncated);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.rows[0].line, "line 2");
    EXPECT_EQ(r.rows[1].line, "line 1");

    auto forward = ctx(2);
    forward.direction = Direction::Forward;
    EXPECT_EQ(lines(run(store, R"q({app="a"})q", forward)), (std::vector<std::string>{"line 5", "line 4"}));
}

TEST(LogQuery, LookbackWindowIsClosed)
{
    const auto store = make_store({{{{"app", "a"}}, 7 * 24h, "edge"},
                                   {{{"app", "a"}}, 7 * 24h + 1ns, "too old"},
                                   {{{"app", "a"}}, 0s, "now"},
                                   {{{"app", "a"}}, -1s, "future"}});
    EXPECT_EQ(lines(run(store, R"q({app="a"})q")), (std::vector<std::string>{"edge", "now"}));
}

TEST(LogQuery, TiesOrderByStreamThenPosition)
{
    const auto store = make_store({{{{"app", "b"}}, 1s, "b1"},
                                   {{{"app", "a"}}, 1s, "a1"},
                                   {{{"app", "b"}}, 1s, "b2"},
                                   {{{"app", "a"}}, 2s, "a0"}});
    EXPECT_EQ(lines(run(store, R"q({app=~"a|b"})q")), (std::vector<std::string>{"a0", "a1", "b1", "b2"}));
}

TEST(LogQuery, IdentificationFailuresFormatted)
{
    std::vector<E> entries;
    for (int i = 0; i < 3; ++i) {
        entries.push_back({{{"application", "openssh"}, {"hostname", "LabSZ-tenant-5"}},
                           std::chrono::minutes(10 * (i + 1)),
                           "sshd[1]: Did not receive identification string from 10.0.0." + std::to_string(i)});
    }
    entries.push_back({{{"application", "openssh"}, {"hostname", "LabSZ"}}, 5min,
                       "sshd[2]: Did not receive identification string from 10.0.0.9"});
    entries.push_back(
        {{{"application", "openssh"}, {"hostname", "LabSZ-tenant-5"}}, 6min, "sshd[3]: Connection closed"});
    const auto store = make_store(entries);
    const auto r = std::get<LogResult>(run(
        store,
        R"q({application="openssh"} |= "Did not receive identification string from" | hostname="LabSZ-tenant-5" | line_format "`{{__timestamp__}}` - Failed to receive identification string from {{.content}}")q"));
    ASSERT_EQ(r.rows.size(), 3u);
    EXPECT_EQ(r.rows[0].line, "`2024-06-01T11:30:00Z` - Failed to receive identification string from ");
}

TEST(MetricQuery, SumOfCountsInLastMinute)
{
    std::vector<E> entries;
    for (int i = 0; i < 5; ++i) {
        entries.push_back({{{"app", "a"}, {"host", i % 2 == 0 ? "h1" : "h2"}}, std::chrono::seconds(10 * i), "hit"});
    }
    entries.push_back({{{"app", "a"}, {"host", "h1"}}, 61s, "hit"});
    entries.push_back({{{"app", "a"}, {"host", "h1"}}, 5s, "miss"});
    const auto store = make_store(entries);
    EXPECT_EQ(samples(run(store, R"q(sum(count_over_time({app="a"} |= "hit" [1m])))q")),
              (std::vector<std::pair<std::string, double>>{{"{}", 5.0}}));
    EXPECT_EQ(samples(run(store, R"q(count_over_time({app="a"} |= "hit" [1m]))q")),
              (std::vector<std::pair<std::string, double>>{{R"q({app="a", host="h1"})q", 3.0},
                                                           {R"q({app="a", host="h2"})q", 2.0}}));
    EXPECT_EQ(samples(run(store, R"q(rate({app="a"} |= "hit" [1m]))q"))[0].second, 3.0 / 60.0);
}

TEST(MetricQuery, TopkKeepsLargest)
{
    std::vector<E> entries;
    for (int i = 0; i < 3; ++i) {
        entries.push_back({{{"app", "t"}, {"a", "x"}}, 1s, "l"});
    }
    for (int i = 0; i < 7; ++i) {
        entries.push_back({{{"app", "t"}, {"b", "y"}}, 1s, "l"});
    }
    const auto store = make_store(entries);
    EXPECT_EQ(samples(run(store, R"q(topk(1, count_over_time({app="t"} [1m])))q")),
              (std::vector<std::pair<std::string, double>>{{R"q({app="t", b="y"})q", 7.0}}));
    EXPECT_EQ(samples(run(store, R"q(bottomk(1, count_over_time({app="t"} [1m])))q")),
              (std::vector<std::pair<std::string, double>>{{R"q({a="x", app="t"})q", 3.0}}));
}

TEST(MetricQuery, TopkTiesBreakByLabelSet)
{
    const auto store = make_store({{{{"app", "t"}, {"h", "2"}}, 1s, "l"},
                                   {{{"app", "t"}, {"h", "1"}}, 1s, "l"},
                                   {{{"app", "t"}, {"h", "3"}}, 1s, "l"},
                                   {{{"app", "t"}, {"h", "3"}}, 2s, "l"}});
    EXPECT_EQ(samples(run(store, R"q(topk(2, count_over_time({app="t"} [1m])))q")),
              (std::vector<std::pair<std::string, double>>{{R"q({app="t", h="1"})q", 1.0},
                                                           {R"q({app="t", h="3"})q", 2.0}}));
    EXPECT_EQ(samples(run(store, R"q(bottomk(1, count_over_time({app="t"} [1m])))q")),
              (std::vector<std::pair<std::string, double>>{{R"q({app="t", h="1"})q", 1.0}}));
}

TEST(MetricQuery, TopkPerGroup)
{
    const auto store = make_store({{{{"app", "t"}, {"g", "a"}, {"h", "1"}}, 1s, "l"},
                                   {{{"app", "t"}, {"g", "a"}, {"h", "2"}}, 1s, "l"},
                                   {{{"app", "t"}, {"g", "a"}, {"h", "2"}}, 2s, "l"},
                                   {{{"app", "t"}, {"g", "b"}, {"h", "3"}}, 1s, "l"}});
    EXPECT_EQ(samples(run(store, R"q(topk by (g) (1, count_over_time({app="t"} [1m])))q")),
              (std::vector<std::pair<std::string, double>>{{R"q({app="t", g="a", h="2"})q", 2.0},
                                                           {R"q({app="t", g="b", h="3"})q", 1.0}}));
}

TEST(MetricQuery, SumByComponent)
{
    std::vector<E> entries;
    for (int i = 0; i < 2; ++i) {
        entries.push_back({{{"application", "openstack-eu-west"}, {"component", "nova.compute"}, {"pid", std::to_string(i)}},
                           std::chrono::minutes(i + 1), "Active base files: /var/lib/nova/x"});
    }
    for (int i = 0; i < 3; ++i) {
        entries.push_back({{{"application", "openstack-eu-west"}, {"component", "nova.virt.libvirt.imagecache"}},
                           std::chrono::minutes(i + 1), "Active base files: /var/lib/nova/y"});
    }
    entries.push_back({{{"application", "openstack-eu-west"}, {"component", "nova.compute"}}, 2h,
                       "Active base files: /var/lib/nova/old"});
    const auto store = make_store(entries);
    EXPECT_EQ(samples(run(store,
                          R"q(sum by (component) (count_over_time({application="openstack-eu-west"} |~ "Active base files: (?P<file_path>/.*)" [1h])))q")),
              (std::vector<std::pair<std::string, double>>{{R"q({component="nova.compute"})q", 2.0},
                                                           {R"q({component="nova.virt.libvirt.imagecache"})q", 3.0}}));
    EXPECT_EQ(samples(run(store, R"q(count without (pid, application) (count_over_time({application="openstack-eu-west"} [1h])))q")),
              (std::vector<std::pair<std::string, double>>{{R"q({component="nova.compute"})q", 2.0},
                                                           {R"q({component="nova.virt.libvirt.imagecache"})q", 1.0}}));
}

TEST(MetricQuery, UnwrapAggregations)
{
    const auto store = make_store({{{{"app", "a"}}, 1s, "latency=10"},
                                   {{{"app", "a"}}, 2s, "latency=30"},
                                   {{{"app", "a"}}, 3s, "latency=abc"},
                                   {{{"app", "a"}}, 4s, "nothing"},
                                   {{{"app", "a"}}, 5s, "latency=2.5"}});
    const std::string inner = R"q({app="a"} | regexp "latency=(?P<latency>\\S+)" | unwrap latency [1m])q";
    const auto value = [&](const std::string& fn) { return samples(run(store, fn + "(" + inner + ")")); };
    using V = std::vector<std::pair<std::string, double>>;
    EXPECT_EQ(value("sum_over_time"), (V{{R"q({app="a"})q", 42.5}}));
    EXPECT_EQ(value("avg_over_time"), (V{{R"q({app="a"})q", 42.5 / 3}}));
    EXPECT_EQ(value("min_over_time"), (V{{R"q({app="a"})q", 2.5}}));
    EXPECT_EQ(value("max_over_time"), (V{{R"q({app="a"})q", 30.0}}));
}

TEST(MetricQuery, BytesOverTimeCountsFinalLine)
{
    const auto store = make_store({{{{"app", "a"}}, 1s, "hello"}, {{{"app", "a"}}, 2s, "caf\xC3\xA9"}});
    using V = std::vector<std::pair<std::string, double>>;
    EXPECT_EQ(samples(run(store, R"(bytes_over_time({app="a"} [1m]))")), (V{{R"({app="a"})", 10.0}}));
    EXPECT_EQ(samples(run(store, R"(bytes_over_time({app="a"} | line_format "ab" [1m]))")), (V{{R"({app="a"})", 4.0}}));
}

TEST(MetricQuery, EmptyWindowGivesEmptyVector)
{
    const auto store = make_store({{{{"app", "a"}}, 2h, "x"}});
    const auto r = std::get<MetricResult>(run(store, R"q(sum(count_over_time({app="a"} [1h])))q"));
    EXPECT_TRUE(r.samples.empty());
    EXPECT_EQ(r.evaluated_at, kNow);
}

TEST(Execute, ErrorsCarryDiagnostics)
{
    const auto store = make_store({{{{"app", "a"}}, 1s, "x"}});
    const auto code = [&](std::string_view q) {
        try {
            run(store, q);
        } catch (const logql::QueryError& e) {
            return e.diagnostics().front().code;
        }
        ADD_FAILURE() << q;
        return logql::DiagCode::Syntax;
    };
    EXPECT_EQ(code(R"q(calculate_over_time({job="openstack", region="asia-pacific"} |= "503" != "token" [30d]))q"),
              logql::DiagCode::UnknownFunc);
    EXPECT_EQ(code(""), logql::DiagCode::Syntax);
    EXPECT_EQ(code(R"q(count_over_time({app="a"}))q"), logql::DiagCode::MissingRange);
    EXPECT_TRUE(std::holds_alternative<MetricResult>(
        run(store, R"q(count_over_time({job="openstack", region="asia-pacific"} |= "503" |= "token validation" [30d]))q")));
}

TEST(ResultJson, RoundTrip)
{
    const QueryResult log = LogResult{{LogRow{kNow + 5ns, {{"a", "1"}}, "x\ty"}}, true};
    EXPECT_EQ(result_from_json(to_json(log)), log);
    const QueryResult metric = MetricResult{{Sample{{{"a", "1"}}, 0.1 + 0.2}, Sample{{}, 39700}}, kNow};
    EXPECT_EQ(result_from_json(to_json(metric)), metric);
    EXPECT_EQ(to_json(metric).dump(), result_from_json(nlohmann::json::parse(to_json(metric).dump())) == metric
                                          ? to_json(metric).dump()
                                          : std::string());
    EXPECT_THROW(result_from_json(nlohmann::json{{"type", "table"}}), std::invalid_argument);
}

// ---- properties ---------------------------------------------------------------

struct RandomCase {
    LogStore store;
    logql::QueryAst ast;
    EvalContext context;
};

RandomCase random_case(std::uint64_t seed)
{
    RandomCase c{testing::RandomStoreBuilder(seed).store(2000, kNow), testing::RandomAstGenerator(seed).query(), ctx()};
    if (seed % 5 == 0) {
        c.context.limit = 1 + seed % 50;
    }
    if (seed % 7 == 0) {
        c.context.direction = Direction::Forward;
    }
    return c;
}

TEST(Property, MatchesNaiveEvaluator)
{
    int non_empty = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto c = random_case(seed);
        const auto got = execute(c.store, c.ast, c.context);
        ASSERT_EQ(got, testing::naive_execute(c.store, c.ast, c.context))
            << "seed " << seed << ": " << logql::render(c.ast);
        const bool has_rows = std::visit(
            [](const auto& r) {
                if constexpr (std::is_same_v<std::decay_t<decltype(r)>, LogResult>) {
                    return !r.rows.empty();
                } else {
                    return !r.samples.empty();
                }
            },
            got);
        non_empty += has_rows ? 1 : 0;
    }
    std::cout << "non-empty results: " << non_empty << "/300\n";
    EXPECT_GE(non_empty, 150);
}

TEST(Property, CanonicalizationPreservesResults)
{
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto c = random_case(seed);
        ASSERT_EQ(execute(c.store, c.ast, c.context), execute(c.store, logql::canonicalize(c.ast), c.context))
            << "seed " << seed;
    }
}

TEST(Property, ContainsFilterNeverAddsRows)
{
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        testing::RandomAstGenerator gen(seed);
        auto query = gen.log_query(false);
        const auto store = testing::RandomStoreBuilder(seed).store(500, kNow);
        const auto before = execute_log_query(store, query, ctx());
        query.pipeline.push_back(logql::LineFilter{logql::LineFilterOp::Contains, seed % 2 ? "status" : "e", {}});
        const auto after = execute_log_query(store, query, ctx());
        std::size_t j = 0;
        for (const auto& row : after.rows) {
            while (j < before.rows.size() && !(before.rows[j] == row)) {
                ++j;
            }
            ASSERT_LT(j, before.rows.size()) << "seed " << seed;
            ++j;
        }
    }
}

TEST(Property, CountsAddAcrossDisjointStores)
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto a = testing::RandomStoreBuilder(seed).entries(400, kNow);
        auto b = testing::RandomStoreBuilder(seed + 1000).entries(400, kNow);
        const auto store_a = LogStore::build("a", kNow, a);
        const auto store_b = LogStore::build("b", kNow, b);
        a.insert(a.end(), b.begin(), b.end());
        const auto store_ab = LogStore::build("ab", kNow, a);
        const std::string q = seed % 2 ? R"q(sum(count_over_time({app=~"api|db"} |= "status" [1h])))q"
                                       : R"q(sum(count_over_time({app="web"} [1d])))q";
        const auto total = [&](const LogStore& s) {
            const auto r = std::get<MetricResult>(run(s, q));
            return r.samples.empty() ? 0.0 : r.samples[0].value;
        };
        ASSERT_EQ(total(store_ab), total(store_a) + total(store_b)) << "seed " << seed;
    }
}

TEST(Property, Deterministic)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto c = random_case(seed);
        const auto first = to_json(execute(c.store, c.ast, c.context)).dump();
        ASSERT_EQ(first, to_json(execute(c.store, c.ast, c.context)).dump());
    }
}

TEST(Naive, EmptyStore)
{
    const LogStore empty = LogStore::build("e", kNow, {});
    const auto ast = logql::parse(R"q(sum(count_over_time({app="a"} [1m])))q");
    EXPECT_TRUE(std::get<MetricResult>(testing::naive_execute(empty, ast, ctx())).samples.empty());
    EXPECT_TRUE(std::get<LogResult>(testing::naive_execute(empty, logql::parse(R"q({app="a"})q"), ctx())).rows.empty());
}

}  // namespace
}  // namespace lqe::engine
