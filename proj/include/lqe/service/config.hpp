#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "lqe/harness/dataset.hpp"
#include "lqe/harness/evaluate.hpp"
#include "lqe/ingest/store.hpp"

namespace lqe::service {

/// Bad configuration or arguments; the CLI exits with 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CorpusSource {
    enum class Kind { Manifest, Store };
    Kind kind = Kind::Manifest;
    std::filesystem::path path;
};

/// Relative paths resolve against the config file's directory.
struct RunConfig {
    std::map<std::string, CorpusSource> corpora;
    std::optional<std::filesystem::path> dataset;
    std::optional<std::filesystem::path> endpoints;
    harness::EvalOptions eval;
    std::filesystem::path output_dir = "runs";
    std::uint64_t seed = 0;
    harness::SplitSpec split;
    std::optional<std::filesystem::path> feedback_file;
    std::optional<std::filesystem::path> ui_dir;
    /// The file as read, used for the run directory hash.
    nlohmann::json source;

    /// Throws UsageError for schema errors and missing referenced files.
    static RunConfig load(const std::filesystem::path& path);
};

/// Store files start with the store header line; anything else is read as
/// an ingest manifest.
std::unique_ptr<ingest::LogStore> load_corpus(const std::filesystem::path& path);
std::unique_ptr<ingest::LogStore> load_corpus(const CorpusSource& source);

}  // namespace lqe::service
