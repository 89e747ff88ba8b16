#include "lqe/gateway/generator.hpp"

#include <fstream>

#include <fmt/format.h>

#include "json.hpp"

namespace lqe::gateway {

GenerationResponse EchoGenerator::generate(const GenerationRequest& request)
{
    GenerationResponse r;
    r.raw_text = request.reference_query;
    return r;
}

CannedGenerator::CannedGenerator(std::map<std::string, std::string> mapping, std::optional<std::string> fallback)
    : mapping_(std::move(mapping)), fallback_(std::move(fallback))
{}

CannedGenerator CannedGenerator::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw GenerationError(fmt::format("cannot read canned responses {}", path.string()));
    }
    try {
        const auto j = nlohmann::json::parse(in);
        const auto& table = j.contains("mapping") ? j.at("mapping") : j;
        std::optional<std::string> fallback;
        if (j.contains("mapping") && j.contains("fallback") && !j.at("fallback").is_null()) {
            fallback = j.at("fallback").get<std::string>();
        }
        return CannedGenerator(table.get<std::map<std::string, std::string>>(), std::move(fallback));
    } catch (const nlohmann::json::exception& e) {
        throw GenerationError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

GenerationResponse CannedGenerator::generate(const GenerationRequest& request)
{
    GenerationResponse r;
    if (const auto it = mapping_.find(request.tuple_id); it != mapping_.end()) {
        r.raw_text = it->second;
    } else if (fallback_) {
        r.raw_text = *fallback_;
    } else {
        throw GenerationError(fmt::format("no canned response for tuple \"{}\"", request.tuple_id));
    }
    return r;
}

}  // namespace lqe::gateway
