#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lqe/gateway/generator.hpp"

namespace lqe::gateway {

/// One chat-completion endpoint. `base_url` is the API root, e.g.
/// `http://localhost:8000/v1`; requests go to `<base_url>/chat/completions`.
struct ModelEndpoint {
    std::string name;
    std::string base_url;
    std::string model;
    /// Environment variable holding a bearer token; empty for none.
    std::string auth_env;
    /// "default" (instructions, schema and samples) or "question_only".
    std::string prompt_template = "default";
    std::chrono::milliseconds timeout{60000};
    std::size_t max_parallel = 4;
    int retries = 2;
    bool logprobs = false;
    double temperature = 0;
};

/// `{"endpoints": [{name, base_url, model, auth_env?, prompt_template?,
/// timeout_ms?, max_parallel?, retries?, logprobs?, temperature?}]}`.
/// Throws std::invalid_argument on schema errors, duplicate names,
/// non-positive timeouts or unknown prompt templates.
std::vector<ModelEndpoint> parse_endpoints(const nlohmann::json& j);
std::vector<ModelEndpoint> load_endpoints(const std::filesystem::path& path);

/// One request with retries on connection errors, timeouts, 429 and 5xx.
/// Auth failures (401/403), other 4xx and malformed bodies fail at once.
/// Throws GenerationError.
GenerationResponse generate(const ModelEndpoint& endpoint, std::string_view prompt);

/// Generator over one endpoint, with at most `max_parallel` requests in
/// flight.
class EndpointGenerator final : public Generator {
public:
    explicit EndpointGenerator(ModelEndpoint endpoint);

    std::string name() const override { return endpoint_.name; }
    const ModelEndpoint& endpoint() const noexcept { return endpoint_; }
    GenerationResponse generate(const GenerationRequest& request) override;

private:
    ModelEndpoint endpoint_;
    std::mutex mutex_;
    std::condition_variable slot_freed_;
    std::size_t in_flight_ = 0;
};

}  // namespace lqe::gateway
