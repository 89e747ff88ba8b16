#include <gtest/gtest.h>

#include <sstream>
#include <thread>

#include <httplib.h>

#include "fixtures.hpp"
#include "lqe/common/strings.hpp"
#include "lqe/harness/dataset.hpp"
#include "lqe/service/cli.hpp"
#include "lqe/service/server.hpp"
#include "stub_server.hpp"

namespace lqe::service {
namespace {

using nlohmann::json;

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(const std::vector<std::string>& args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string manifest(const std::string& app) { return (testing::data_dir() / app / "manifest.json").string(); }

/// A run config over the shipped corpora and dataset that writes into `dir`.
std::string write_config(testing::TempDir& dir, const json& endpoints = json::array())
{
    dir.write("endpoints.json", json{{"endpoints", endpoints}}.dump());
    json cfg{{"corpora", {{"openssh", manifest("openssh")}, {"openstack", manifest("openstack")},
                          {"hdfs", manifest("hdfs")}}},
             {"dataset", (testing::data_dir() / "dataset.jsonl").string()},
             {"endpoints", "endpoints.json"},
             {"eval", {{"parallelism", 3}}},
             {"split", {{"test_fraction", 0.34}, {"train_fractions", {0.2, 0.4, 0.6}}}},
             {"output_dir", "runs"},
             {"feedback_file", "feedback.jsonl"},
             {"seed", 7}};
    dir.write("config.json", cfg.dump(2));
    return (dir.path() / "config.json").string();
}

json stub_endpoint(const std::string& name, const stub::StubModelServer& server, bool logprobs = false)
{
    return json{{"name", name}, {"base_url", server.base_url()}, {"model", "stub"}, {"timeout_ms", 5000},
                {"logprobs", logprobs}};
}

std::filesystem::path run_dir(const CliResult& r)
{
    const auto pos = r.out.rfind("run directory: ");
    EXPECT_NE(pos, std::string::npos) << r.out;
    return std::string(trim(r.out.substr(pos + 15)));
}

// --- ingest ------------------------------------------------------------------

TEST(CliIngest, CountsAndByteIdenticalRerun)
{
    testing::TempDir dir;
    const auto store = (dir.path() / "openssh.store").string();
    const auto first = cli({"ingest", manifest("openssh"), store});
    ASSERT_EQ(first.code, kExitOk) << first.err;
    EXPECT_NE(first.out.find("492 lines read, 480 matched, 12 unmatched, 0 rejected; 7 streams, 492 entries"),
              std::string::npos)
        << first.out;
    const auto bytes = testing::read_file(store);
    const auto stats = json::parse(testing::read_file(store + ".stats.json"));
    EXPECT_EQ(stats.at("entries"), 492);

    ASSERT_EQ(cli({"ingest", manifest("openssh"), store}).code, kExitOk);
    EXPECT_EQ(testing::read_file(store), bytes);

    const auto as_json = cli({"ingest", manifest("hdfs"), (dir.path() / "hdfs.store").string(), "--format", "json"});
    ASSERT_EQ(as_json.code, kExitOk);
    EXPECT_EQ(json::parse(as_json.out).at("streams"), 6);
}

TEST(CliIngest, Failures)
{
    testing::TempDir dir;
    EXPECT_EQ(cli({"ingest", (dir.path() / "missing.json").string(), (dir.path() / "s").string()}).code,
              kExitOperational);
    EXPECT_EQ(cli({"ingest", manifest("openssh")}).code, kExitUsage);
    EXPECT_EQ(cli({"ingest", manifest("openssh"), "x", "--format", "yaml"}).code, kExitUsage);
    EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
}

// --- query -------------------------------------------------------------------

TEST(CliQuery, MetricJsonFromManifestAndStore)
{
    const std::string q = R"q(count_over_time({job="openstack", region="asia-pacific"} |= "503" |= "token validation" [30d]))q";
    const auto r = cli({"query", manifest("openstack"), q});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto result = json::parse(r.out);
    EXPECT_EQ(result.at("type"), "metric");

    const auto tuples = harness::load_dataset(testing::data_dir() / "dataset.jsonl");
    const auto it = std::find_if(tuples.begin(), tuples.end(), [](const auto& t) { return t.id == "openstack-01"; });
    EXPECT_EQ(result, engine::to_json(*it->expected_output));

    testing::TempDir dir;
    const auto store = (dir.path() / "os.store").string();
    ASSERT_EQ(cli({"ingest", manifest("openstack"), store}).code, kExitOk);
    EXPECT_EQ(json::parse(cli({"query", store, q}).out), result);
}

TEST(CliQuery, InvalidQueryExitsTwoWithDiagnostic)
{
    const auto r = cli({"query", manifest("openssh"), R"q(count_over_time({application="openssh"}))q"});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("MISSING_RANGE"), std::string::npos) << r.err;
    EXPECT_EQ(cli({"query", manifest("openssh"), "{}"}).code, kExitUsage);
}

TEST(CliQuery, TableIsAscendingAndLimited)
{
    const auto r = cli({"query", manifest("openssh"), R"q({application="openssh"} |= "Failed password")q", "--format",
                        "table", "--limit", "5"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    auto lines = split(r.out, '\n');
    std::erase_if(lines, [](const std::string& l) { return l.empty(); });
    ASSERT_EQ(lines.size(), 6u);
    EXPECT_EQ(lines.back(), "(truncated)");
    lines.pop_back();
    EXPECT_TRUE(std::is_sorted(lines.begin(), lines.end()));
}

TEST(CliQuery, VariableBindings)
{
    const auto bound = cli({"query", manifest("openssh"),
                            R"q(sum(count_over_time({application="openssh"} |= "$needle" [$range])))q", "--var",
                            "needle=Failed password", "--var", "range=24h"});
    ASSERT_EQ(bound.code, kExitOk) << bound.err;
    const auto direct =
        cli({"query", manifest("openssh"), R"q(sum(count_over_time({application="openssh"} |= "Failed password" [24h])))q"});
    EXPECT_EQ(bound.out, direct.out);
    EXPECT_EQ(cli({"query", manifest("openssh"), R"q({application="$app"})q"}).code, kExitUsage);
}

// --- eval, annotate, compare ---------------------------------------------------

TEST(CliEval, EchoRunWritesArtifacts)
{
    testing::TempDir dir;
    const auto cfg = write_config(dir);
    const auto r = cli({"eval", cfg, "--generator", "echo"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(r.err.empty()) << r.err;
    EXPECT_NE(r.out.find("| **overall** | 1.00 | 1.00 | 1.00 | 1.00 | 9 | 9 |"), std::string::npos) << r.out;
    const auto d = run_dir(r);
    EXPECT_EQ(d.parent_path(), dir.path() / "runs");
    EXPECT_EQ(d.filename().string().size(), std::string("20250115T120000Z-0123abcd").size());
    for (const char* f : {"records.jsonl", "metrics.json", "report.md", "timings.jsonl", "config.json"}) {
        EXPECT_TRUE(std::filesystem::exists(d / f)) << f;
    }
}

TEST(CliEval, SplitsSelectTuples)
{
    testing::TempDir dir;
    const auto cfg = write_config(dir);
    const auto test = cli({"eval", cfg, "--generator", "echo", "--split", "test", "--run-name", "t"});
    ASSERT_EQ(test.code, kExitOk) << test.err;
    // 6 tuples per application, 0.34 of them held out.
    EXPECT_NE(test.out.find("| **overall** | 1.00 | 1.00 | 1.00 | 1.00 |"), std::string::npos);
    const auto records = testing::read_file(dir.path() / "runs" / "t" / "records.jsonl");
    EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 6);
    EXPECT_EQ(cli({"eval", cfg, "--generator", "echo", "--split", "train:0.5"}).code, kExitUsage);
    EXPECT_EQ(cli({"eval", cfg, "--generator", "echo", "--split", "train:0.4", "--run-name", "tr"}).code, kExitOk);
    EXPECT_EQ(cli({"eval", cfg, "--generator", "oracle"}).code, kExitUsage);
    EXPECT_EQ(cli({"eval", cfg, "--generator", "endpoint:nope"}).code, kExitUsage);
}

TEST(CliEval, CannedWithABrokenQuery)
{
    testing::TempDir dir;
    const auto cfg = write_config(dir);
    json mapping;
    for (const auto& t : harness::load_dataset(testing::data_dir() / "dataset.jsonl")) {
        mapping[t.id] = t.reference_query;
    }
    mapping["hdfs-01"] = "sum(count_over_time({application=\"hdfs\"}))";
    dir.write("canned.json", json{{"mapping", mapping}}.dump());
    const auto r = cli({"eval", cfg, "--generator", "canned:" + (dir.path() / "canned.json").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("| hdfs | 0.67 | 1.00 | 0.83 | 0.83 | 3 | 3 |"), std::string::npos) << r.out;
    const auto metrics = json::parse(testing::read_file(run_dir(r) / "metrics.json"));
    EXPECT_DOUBLE_EQ(metrics.at("overall").at("executability_rate").get<double>(), 17.0 / 18.0);
}

TEST(CliEval, EndpointAgainstStubIsReproducible)
{
    stub::StubConfig sc;
    sc.answers = {};
    for (const auto& t : harness::load_dataset(testing::data_dir() / "dataset.jsonl")) {
        sc.answers[t.nl_question] = t.reference_query;
    }
    sc.style = "prose";
    stub::StubModelServer server(sc);
    server.start();
    testing::TempDir dir;
    const auto cfg = write_config(dir, json::array({stub_endpoint("stub", server, true)}));

    const auto a = cli({"eval", cfg, "--generator", "endpoint:stub", "--run-name", "a"});
    ASSERT_EQ(a.code, kExitOk) << a.err;
    const auto b = cli({"eval", cfg, "--generator", "endpoint:stub", "--run-name", "b"});
    ASSERT_EQ(b.code, kExitOk) << b.err;
    EXPECT_EQ(server.requests(), 36);
    EXPECT_NE(a.out.find("| **overall** | 1.00 | 1.00 | 1.00 | 1.00 | 9 | 9 |"), std::string::npos) << a.out;
    EXPECT_NE(a.out.find("Perplexity: "), std::string::npos);
    for (const char* f : {"records.jsonl", "metrics.json", "report.md"}) {
        EXPECT_EQ(testing::read_file(dir.path() / "runs" / "a" / f), testing::read_file(dir.path() / "runs" / "b" / f))
            << f;
    }
}

TEST(CliEval, UnreachableEndpointIsRecordedNotFatal)
{
    testing::TempDir dir;
    const auto cfg = write_config(
        dir, json::array({{{"name", "down"}, {"base_url", "http://127.0.0.1:1/v1"}, {"model", "m"}, {"retries", 0},
                           {"timeout_ms", 500}}}));
    const auto r = cli({"eval", cfg, "--generator", "endpoint:down", "--split", "test"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.err.find("warning: tuple"), std::string::npos);
    EXPECT_NE(r.out.find("| **overall** | 0.00 | 0.00 | 0.00 | 0.00 |"), std::string::npos) << r.out;
}

TEST(CliAnnotate, ReproducesShippedDataset)
{
    testing::TempDir dir;
    const auto cfg = write_config(dir);
    const auto out = (dir.path() / "annotated.jsonl").string();
    const auto r = cli({"annotate", cfg, "--out", out});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto shipped = harness::load_dataset(testing::data_dir() / "dataset.jsonl");
    const auto annotated = harness::load_dataset(out);
    ASSERT_EQ(annotated.size(), shipped.size());
    for (std::size_t i = 0; i < shipped.size(); ++i) {
        EXPECT_EQ(harness::to_json(annotated[i]), harness::to_json(shipped[i])) << shipped[i].id;
    }
}

TEST(CliCompare, EchoAgainstCanned)
{
    testing::TempDir dir;
    const auto cfg = write_config(dir);
    dir.write("empty.json", R"q({"mapping": {}, "fallback": "{}"})q");
    ASSERT_EQ(cli({"eval", cfg, "--generator", "canned:" + (dir.path() / "empty.json").string(), "--run-name", "before"})
                  .code,
              kExitOk);
    ASSERT_EQ(cli({"eval", cfg, "--generator", "echo", "--run-name", "after"}).code, kExitOk);
    const auto before = (dir.path() / "runs" / "before" / "metrics.json").string();
    const auto after = (dir.path() / "runs" / "after" / "metrics.json").string();
    const auto r = cli({"compare", before, after});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("| **overall** | 0.00 | 1.00 | +1.00 | n/a | 0.00 | 1.00 | +1.00 | n/a |"),
              std::string::npos)
        << r.out;
    EXPECT_EQ(json::parse(cli({"compare", before, after, "--format", "json"}).out).at("rows").size(), 4u);

    ASSERT_EQ(cli({"eval", cfg, "--generator", "echo", "--split", "test", "--run-name", "subset"}).code, kExitOk);
    const auto mismatch = cli({"compare", before, (dir.path() / "runs" / "subset" / "metrics.json").string()});
    EXPECT_EQ(mismatch.code, kExitUsage);
    EXPECT_EQ(cli({"compare", before, (dir.path() / "nope.json").string()}).code, kExitOperational);
}

// --- HTTP API --------------------------------------------------------------------

class Api : public ::testing::Test {
protected:
    void start(const json& endpoints = json::array())
    {
        cfg_ = write_config(dir_, endpoints);
        server_ = std::make_unique<ApiServer>(ServiceState::from_config(RunConfig::load(cfg_)));
        port_ = server_->bind("127.0.0.1", 0);
        thread_ = std::thread([this] { server_->serve(); });
        server_->wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }

    void TearDown() override
    {
        if (server_) {
            server_->stop();
            thread_.join();
        }
    }

    std::pair<int, json> post(const std::string& path, const json& body)
    {
        const auto res = client_->Post(path, body.dump(), "application/json");
        EXPECT_TRUE(res);
        return {res->status, json::parse(res->body)};
    }

    std::pair<int, json> get(const std::string& path)
    {
        const auto res = client_->Get(path);
        EXPECT_TRUE(res);
        return {res->status, json::parse(res->body)};
    }

    testing::TempDir dir_;
    std::string cfg_;
    std::unique_ptr<ApiServer> server_;
    std::thread thread_;
    int port_ = 0;
    std::unique_ptr<httplib::Client> client_;
};

TEST_F(Api, HealthAndCorpora)
{
    start();
    const auto [status, health] = get("/api/health");
    EXPECT_EQ(status, 200);
    EXPECT_EQ(health.at("status"), "ok");
    EXPECT_TRUE(health.contains("now"));

    const auto [cs, corpora] = get("/api/corpora");
    EXPECT_EQ(cs, 200);
    ASSERT_EQ(corpora.at("corpora").size(), 3u);
    for (const auto& c : corpora.at("corpora")) {
        if (c.at("name") == "openssh") {
            EXPECT_EQ(c.at("entries"), 492);
            EXPECT_EQ(c.at("streams"), 7);
            EXPECT_EQ(c.at("anchor"), "2025-01-15T12:00:00Z");
        }
    }
    ASSERT_EQ(corpora.at("tuples").size(), 18u);
    EXPECT_EQ(corpora.at("tuples")[0].at("id"), "hdfs-01");
}

TEST_F(Api, QueryAndDiagnostics)
{
    start();
    const auto [ok, body] = post("/api/query", {{"corpus", "hdfs"}, {"query", R"q({application="hdfs", level="WARN"})q"}});
    EXPECT_EQ(ok, 200);
    EXPECT_EQ(body.at("result").at("type"), "log");
    EXPECT_EQ(body.at("now"), "2025-01-15T12:00:00Z");

    const auto [bad, err] =
        post("/api/query", {{"corpus", "hdfs"}, {"query", R"q(rate({application="hdfs"} |= "x"))q"}});
    EXPECT_EQ(bad, 400);
    ASSERT_FALSE(err.at("diagnostics").empty());
    EXPECT_EQ(err.at("diagnostics")[0].at("code"), "MISSING_RANGE");
    EXPECT_TRUE(err.at("diagnostics")[0].at("span").contains("begin"));

    EXPECT_EQ(post("/api/query", {{"corpus", "nope"}, {"query", "{a=\"1\"}"}}).first, 404);
    EXPECT_EQ(post("/api/query", {{"query", "{a=\"1\"}"}}).first, 400);
    const auto res = client_->Post("/api/query", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
}

TEST_F(Api, GenerateFansOutToModels)
{
    stub::StubModelServer first(stub::StubConfig{{{"Show all HDFS warnings.", R"q({application="hdfs", level="WARN"})q"}}});
    stub::StubConfig failing;
    failing.status = 500;
    stub::StubModelServer second(failing);
    first.start();
    second.start();
    auto down = stub_endpoint("down", second);
    down["retries"] = 0;
    start(json::array({stub_endpoint("good", first), down}));

    const auto [status, body] =
        post("/api/generate", {{"corpus", "hdfs"}, {"nl", "Show all HDFS warnings."}, {"models", {"good", "down"}}});
    ASSERT_EQ(status, 200) << body.dump();
    ASSERT_EQ(body.at("results").size(), 2u);
    EXPECT_EQ(body.at("results")[0].at("model"), "good");
    EXPECT_EQ(body.at("results")[0].at("query"), R"q({application="hdfs", level="WARN"})q");
    EXPECT_TRUE(body.at("results")[0].at("error").is_null());
    EXPECT_EQ(body.at("results")[1].at("model"), "down");
    EXPECT_FALSE(body.at("results")[1].at("error").is_null());

    EXPECT_EQ(post("/api/generate", {{"corpus", "hdfs"}, {"nl", "q"}, {"models", {"missing"}}}).first, 404);
    EXPECT_EQ(post("/api/generate", {{"corpus", "hdfs"}, {"nl", ""}, {"models", {"good"}}}).first, 400);
}

TEST_F(Api, ExecuteCandidateScoresAgainstTuple)
{
    start();
    const auto [status, rec] = post("/api/execute_candidate", {{"corpus", "openssh"},
                                                                {"tuple_id", "openssh-06"},
                                                                {"query", R"q({application="openssh"} |= "Invalid user")q"}});
    ASSERT_EQ(status, 200) << rec.dump();
    EXPECT_TRUE(rec.at("exec_ok").get<bool>());
    EXPECT_EQ(rec.at("recall"), 1.0);
    EXPECT_LT(rec.at("score").get<double>(), 1.0);
    EXPECT_GT(rec.at("score").get<double>(), 0.0);

    const auto [plain, result] = post("/api/execute_candidate", {{"corpus", "openssh"}, {"query", "{hostname=\"LabSZ-tenant-2\"}"}});
    EXPECT_EQ(plain, 200);
    EXPECT_EQ(result.at("result").at("type"), "log");
    EXPECT_EQ(post("/api/execute_candidate", {{"corpus", "openssh"}, {"tuple_id", "x"}, {"query", "{a=\"1\"}"}}).first,
              404);
}

TEST_F(Api, FeedbackAppendsOneLine)
{
    start();
    const json fb{{"nl", "Show all HDFS warnings."},
                  {"chosen_query", R"q({application="hdfs"})q"},
                  {"verdict", "down"},
                  {"corrected_query", R"q({application="hdfs", level="WARN"})q"},
                  {"model", "good"}};
    EXPECT_EQ(post("/api/feedback", fb).first, 200);
    EXPECT_EQ(post("/api/feedback", {{"nl", "q"}, {"chosen_query", "{}"}, {"verdict", "meh"}}).first, 400);
    const auto text = testing::read_file(dir_.path() / "feedback.jsonl");
    ASSERT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
    const auto line = json::parse(text);
    EXPECT_EQ(line.at("verdict"), "down");
    EXPECT_EQ(line.at("corrected_query"), fb.at("corrected_query"));
    EXPECT_TRUE(line.contains("received_at"));
    EXPECT_EQ(get("/api/nope").first, 404);
}

TEST(ApiBind, PortInUse)
{
    testing::TempDir dir;
    const auto cfg = write_config(dir);
    ApiServer a(ServiceState::from_config(RunConfig::load(cfg)));
    const int port = a.bind("127.0.0.1", 0);
    ApiServer b(ServiceState::from_config(RunConfig::load(cfg)));
    EXPECT_THROW(b.bind("127.0.0.1", port), std::runtime_error);
    const auto r = cli({"serve", cfg, "--host", "127.0.0.1", "--port", std::to_string(port)});
    EXPECT_EQ(r.code, kExitOperational);
    EXPECT_NE(r.err.find(std::to_string(port)), std::string::npos) << r.err;
}

}  // namespace
}  // namespace lqe::service
