#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lqe/gateway/endpoint.hpp"
#include "lqe/gateway/prompt.hpp"
#include "lqe/harness/dataset.hpp"
#include "lqe/harness/evaluate.hpp"
#include "lqe/ingest/store.hpp"
#include "lqe/service/config.hpp"

namespace lqe::service {

/// Everything the API serves, loaded once at startup.
struct ServiceState {
    std::map<std::string, std::unique_ptr<ingest::LogStore>, std::less<>> corpora;
    std::map<std::string, gateway::PromptContext, std::less<>> prompts;
    std::map<std::string, harness::BenchmarkTuple, std::less<>> tuples;
    std::map<std::string, std::unique_ptr<gateway::EndpointGenerator>, std::less<>> models;
    harness::EvalOptions eval;
    std::optional<std::filesystem::path> feedback_file;
    std::optional<std::filesystem::path> ui_dir;

    static ServiceState from_config(const RunConfig& config);
    void add_corpus(const std::string& name, std::unique_ptr<ingest::LogStore> store);
};

/// JSON API:
///   GET  /api/health
///   GET  /api/corpora
///   POST /api/query             {corpus, query, vars?, now?, limit?, direction?}
///   POST /api/generate          {corpus, nl, models[]}
///   POST /api/execute_candidate {corpus, query, tuple_id?, vars?}
///   POST /api/feedback          {nl, chosen_query, verdict, corrected_query?, model?, corpus?}
/// Every response carries `now`, the evaluation time used (or the server
/// clock where no query runs). Errors are `{error, diagnostics?, now}` with
/// 400 for bad requests and queries, 404 for unknown corpora, tuples or
/// models.
class ApiServer {
public:
    explicit ApiServer(ServiceState state);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Port 0 binds any free port. Returns the bound port; throws
    /// std::runtime_error when the port cannot be bound.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void serve();
    void stop();
    /// Waits until serve() accepts connections.
    void wait_until_ready();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace lqe::service
