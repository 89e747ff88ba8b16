#include "lqe/gateway/endpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "lqe/gateway/prompt.hpp"

namespace lqe::gateway {

namespace {

using Clock = std::chrono::steady_clock;

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;    // no trailing slash
};

Url split_url(const std::string& base)
{
    const auto scheme = base.find("://");
    if (scheme == std::string::npos) {
        throw std::invalid_argument(fmt::format("base_url \"{}\" has no scheme", base));
    }
    const auto slash = base.find('/', scheme + 3);
    Url u{base.substr(0, slash), slash == std::string::npos ? "" : base.substr(slash)};
    while (!u.path.empty() && u.path.back() == '/') {
        u.path.pop_back();
    }
    return u;
}

struct Attempt {
    bool retryable = false;
    std::string error;
    GenerationResponse response;
};

Attempt attempt(const ModelEndpoint& ep, const Url& url, const std::string& body,
                const httplib::Headers& headers)
{
    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    Attempt a;
    const auto res = client.Post(url.path + "/chat/completions", headers, body, "application/json");
    if (!res) {
        a.retryable = true;
        a.error = fmt::format("transport error: {}", httplib::to_string(res.error()));
        return a;
    }
    if (res->status == 401 || res->status == 403) {
        a.error = fmt::format("authentication failed (HTTP {})", res->status);
        return a;
    }
    if (res->status == 429 || res->status >= 500) {
        a.retryable = true;
        a.error = fmt::format("HTTP {}", res->status);
        return a;
    }
    if (res->status != 200) {
        a.error = fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200));
        return a;
    }
    try {
        const auto j = nlohmann::json::parse(res->body);
        const auto& choice = j.at("choices").at(0);
        a.response.raw_text = choice.at("message").at("content").get<std::string>();
        if (const auto lp = choice.find("logprobs"); lp != choice.end() && lp->is_object()) {
            std::vector<double> values;
            for (const auto& tok : lp->at("content")) {
                values.push_back(tok.at("logprob").get<double>());
            }
            a.response.token_logprobs = std::move(values);
        }
    } catch (const nlohmann::json::exception& e) {
        a.error = fmt::format("malformed response: {}", e.what());
    }
    return a;
}

}  // namespace

std::vector<ModelEndpoint> parse_endpoints(const nlohmann::json& j)
{
    std::vector<ModelEndpoint> out;
    std::set<std::string> names;
    try {
        for (const auto& e : j.at("endpoints")) {
            ModelEndpoint ep;
            ep.name = e.at("name").get<std::string>();
            ep.base_url = e.at("base_url").get<std::string>();
            ep.model = e.value("model", ep.name);
            ep.auth_env = e.value("auth_env", std::string());
            ep.prompt_template = e.value("prompt_template", ep.prompt_template);
            ep.timeout = std::chrono::milliseconds(e.value("timeout_ms", ep.timeout.count()));
            ep.max_parallel = e.value("max_parallel", ep.max_parallel);
            ep.retries = e.value("retries", ep.retries);
            ep.logprobs = e.value("logprobs", ep.logprobs);
            ep.temperature = e.value("temperature", ep.temperature);
            if (ep.name.empty() || !names.insert(ep.name).second) {
                throw std::invalid_argument(fmt::format("endpoint name \"{}\" is empty or not unique", ep.name));
            }
            if (ep.timeout.count() <= 0) {
                throw std::invalid_argument(fmt::format("endpoint \"{}\": timeout must be positive", ep.name));
            }
            if (ep.max_parallel == 0 || ep.retries < 0) {
                throw std::invalid_argument(
                    fmt::format("endpoint \"{}\": max_parallel must be >= 1 and retries >= 0", ep.name));
            }
            if (ep.prompt_template != "default" && ep.prompt_template != "question_only") {
                throw std::invalid_argument(
                    fmt::format("endpoint \"{}\": unknown prompt template \"{}\"", ep.name, ep.prompt_template));
            }
            split_url(ep.base_url);
            out.push_back(std::move(ep));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(fmt::format("endpoints config: {}", e.what()));
    }
    return out;
}

std::vector<ModelEndpoint> load_endpoints(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument(fmt::format("cannot read endpoints config {}", path.string()));
    }
    try {
        return parse_endpoints(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(fmt::format("{}: {}", path.string(), e.what()));
    }
}

GenerationResponse generate(const ModelEndpoint& endpoint, std::string_view prompt)
{
    const Url url = split_url(endpoint.base_url);
    httplib::Headers headers;
    if (!endpoint.auth_env.empty()) {
        const char* token = std::getenv(endpoint.auth_env.c_str());
        if (token == nullptr || *token == '\0') {
            throw GenerationError(fmt::format("endpoint \"{}\": authentication failed: environment variable {} is not set",
                                              endpoint.name, endpoint.auth_env));
        }
        headers.emplace("Authorization", fmt::format("Bearer {}", token));
    }
    nlohmann::json body{{"model", endpoint.model},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                        {"temperature", endpoint.temperature}};
    if (endpoint.logprobs) {
        body["logprobs"] = true;
    }
    const std::string payload = body.dump();

    const auto started = Clock::now();
    std::string last_error;
    for (int i = 0; i <= endpoint.retries; ++i) {
        if (i > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50 * i));
        }
        Attempt a = attempt(endpoint, url, payload, headers);
        if (a.error.empty()) {
            a.response.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
            return std::move(a.response);
        }
        last_error = std::move(a.error);
        if (!a.retryable) {
            break;
        }
    }
    throw GenerationError(fmt::format("endpoint \"{}\": {}", endpoint.name, last_error));
}

EndpointGenerator::EndpointGenerator(ModelEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

GenerationResponse EndpointGenerator::generate(const GenerationRequest& request)
{
    {
        std::unique_lock lock(mutex_);
        slot_freed_.wait(lock, [&] { return in_flight_ < endpoint_.max_parallel; });
        ++in_flight_;
    }
    struct Release {
        EndpointGenerator& g;
        ~Release()
        {
            {
                std::lock_guard lock(g.mutex_);
                --g.in_flight_;
            }
            g.slot_freed_.notify_one();
        }
    } release{*this};

    const std::string prompt =
        endpoint_.prompt_template == "question_only" ? request.nl_question : request.prompt;
    GenerationResponse r = gateway::generate(endpoint_, prompt);
    r.extracted_query = extract_query(r.raw_text);
    return r;
}

}  // namespace lqe::gateway
