#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

namespace lqe::stub {

/// Behavior of a fake chat-completion endpoint.
struct StubConfig {
    /// Question text -> query. The question is read from the prompt's
    /// "Question: ..." line, or the whole prompt when there is none.
    std::map<std::string, std::string> answers;
    std::string fallback = "{}";
    /// "fence" wraps the answer in a ```logql block with a sentence before
    /// it, "prose" puts it inside a sentence, "plain" sends it bare.
    std::string style = "fence";
    /// The first `fail_first` requests get HTTP 500.
    int fail_first = 0;
    /// When nonzero every request gets this status with an error body.
    int status = 0;
    std::chrono::milliseconds delay{0};
};

/// `{"answers": {...}, "fallback", "style", "fail_first", "status",
/// "delay_ms"}`, or `{"dataset": "<path>"}` to answer every question of a
/// dataset file with its reference query.
StubConfig load_stub_config(const std::filesystem::path& path);

/// Serves POST /v1/chat/completions on a background thread. Replies and
/// token logprobs are pure functions of the request, so runs against the
/// stub are reproducible.
class StubModelServer {
public:
    explicit StubModelServer(StubConfig config);
    ~StubModelServer();
    StubModelServer(const StubModelServer&) = delete;
    StubModelServer& operator=(const StubModelServer&) = delete;

    /// Binds (port 0 picks a free port) and starts serving. Returns the port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop().
    bool run(const std::string& host, int port);
    void stop();

    std::string base_url() const;
    int requests() const noexcept { return requests_.load(); }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    std::atomic<int> requests_{0};
    int port_ = 0;
    std::string host_;
};

/// Deterministic pseudo logprobs, one per whitespace-separated token.
std::vector<double> stub_logprobs(const std::string& text);

}  // namespace lqe::stub
