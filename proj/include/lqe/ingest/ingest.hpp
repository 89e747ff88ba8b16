#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lqe/common/labels.hpp"
#include "lqe/common/time.hpp"
#include "lqe/ingest/store.hpp"

namespace lqe::ingest {

struct CorpusManifest {
    std::string application;
    std::vector<std::filesystem::path> files;
    std::filesystem::path templates;
    Labels default_labels;
    std::optional<Timestamp> anchor;  // empty means the wall clock at ingest time
    int default_year = 2000;

    /// JSON file; relative paths resolve against the manifest's directory.
    static CorpusManifest load(const std::filesystem::path& path);
};

struct IngestReport {
    std::size_t lines_read = 0;  // non-blank lines
    std::size_t matched = 0;     // matched a template
    std::size_t unmatched = 0;   // kept with template="none"
    std::size_t rejected = 0;    // dropped, see warnings
    std::size_t streams = 0;
    std::size_t entries = 0;
    std::vector<std::string> warnings;
};

struct IngestResult {
    LogStore store;
    IngestReport report;
};

/// Shifts every timestamp by one constant so the latest lands on `anchor`.
std::vector<LogEntry> rebase_timestamps(std::vector<LogEntry> entries, Timestamp anchor);

/// Entries sharing a source timestamp are spread 1ns apart in file order.
/// Lines without a template match take the timestamp of the closest earlier
/// matched line in the same file, or the next one when none precedes.
IngestResult ingest(const CorpusManifest& manifest);

}  // namespace lqe::ingest
