#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lqe::gateway {

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GenerationRequest {
    std::string tuple_id;
    std::string application;
    std::string nl_question;
    std::string reference_query;
    std::string prompt;
};

struct GenerationResponse {
    std::string raw_text;
    std::optional<std::string> extracted_query;
    double latency_ms = 0;
    std::optional<std::vector<double>> token_logprobs;
};

/// Implementations must be safe to call from several threads at once.
class Generator {
public:
    virtual ~Generator() = default;
    virtual std::string name() const = 0;
    /// Throws GenerationError.
    virtual GenerationResponse generate(const GenerationRequest& request) = 0;
};

/// Returns the reference query.
class EchoGenerator final : public Generator {
public:
    std::string name() const override { return "echo"; }
    GenerationResponse generate(const GenerationRequest& request) override;
};

/// Looks the tuple id up in a fixed mapping.
class CannedGenerator final : public Generator {
public:
    explicit CannedGenerator(std::map<std::string, std::string> mapping,
                             std::optional<std::string> fallback = std::nullopt);

    /// `{"mapping": {id: query}, "fallback": "..."}`; a bare `{id: query}`
    /// object is accepted too.
    static CannedGenerator load(const std::filesystem::path& path);

    std::string name() const override { return "canned"; }
    /// Unknown ids get the fallback, or GenerationError without one.
    GenerationResponse generate(const GenerationRequest& request) override;

private:
    std::map<std::string, std::string> mapping_;
    std::optional<std::string> fallback_;
};

}  // namespace lqe::gateway
