#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lqe/common/labels.hpp"
#include "lqe/common/time.hpp"

namespace lqe::ingest {

struct LogEntry {
    Timestamp ts;
    Labels labels;
    std::string line;

    bool operator==(const LogEntry&) const = default;
};

struct StreamEntry {
    Timestamp ts;
    std::string line;

    bool operator==(const StreamEntry&) const = default;
};

struct Stream {
    Labels labels;
    std::string key;  // label_set_string(labels)
    std::vector<StreamEntry> entries;  // ascending ts, ties in ingest order
};

using StreamId = std::size_t;

/// Immutable label-indexed store. Streams are ordered by `key`, so a StreamId
/// is also the stream's rank in canonical label-set order.
class LogStore {
public:
    using Postings = std::map<std::string, std::map<std::string, std::vector<StreamId>, std::less<>>, std::less<>>;

    LogStore() = default;

    /// Groups entries by label set. Entry order for equal timestamps follows
    /// the input order.
    static LogStore build(std::string application, Timestamp anchor, std::vector<LogEntry> entries);

    const std::string& application() const noexcept { return application_; }
    Timestamp anchor() const noexcept { return anchor_; }
    const std::vector<Stream>& streams() const noexcept { return streams_; }
    const Stream& stream(StreamId id) const { return streams_.at(id); }
    std::size_t entry_count() const noexcept { return entry_count_; }
    std::optional<Timestamp> min_ts() const noexcept { return min_ts_; }
    std::optional<Timestamp> max_ts() const noexcept { return max_ts_; }

    /// label name -> value -> ascending stream ids.
    const Postings& postings() const noexcept { return postings_; }

    /// Line-delimited JSON; see docs/formats.md. Output is a pure function of
    /// the store contents.
    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static LogStore load(std::istream& in);
    static LogStore load(const std::filesystem::path& path);

private:
    std::string application_;
    Timestamp anchor_{};
    std::vector<Stream> streams_;
    Postings postings_;
    std::size_t entry_count_ = 0;
    std::optional<Timestamp> min_ts_;
    std::optional<Timestamp> max_ts_;
};

}  // namespace lqe::ingest
