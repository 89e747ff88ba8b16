#include "lqe/ingest/store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "json.hpp"
#include "lqe/ingest/log_template.hpp"

namespace lqe::ingest {

namespace {

constexpr const char* kFormat = "lqe-store";
constexpr int kVersion = 1;

std::string dump(const nlohmann::json& j) { return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

}  // namespace

LogStore LogStore::build(std::string application, Timestamp anchor, std::vector<LogEntry> entries)
{
    LogStore store;
    store.application_ = std::move(application);
    store.anchor_ = anchor;

    std::map<std::string, Stream> by_key;
    for (auto& e : entries) {
        std::string key = label_set_string(e.labels);
        auto it = by_key.find(key);
        if (it == by_key.end()) {
            it = by_key.emplace(key, Stream{std::move(e.labels), key, {}}).first;
        }
        it->second.entries.push_back(StreamEntry{e.ts, std::move(e.line)});
    }

    store.streams_.reserve(by_key.size());
    for (auto& [key, stream] : by_key) {
        std::stable_sort(stream.entries.begin(), stream.entries.end(),
                         [](const StreamEntry& a, const StreamEntry& b) { return a.ts < b.ts; });
        const StreamId id = store.streams_.size();
        for (const auto& [name, value] : stream.labels) {
            store.postings_[name][value].push_back(id);
        }
        store.entry_count_ += stream.entries.size();
        if (!stream.entries.empty()) {
            const Timestamp lo = stream.entries.front().ts;
            const Timestamp hi = stream.entries.back().ts;
            store.min_ts_ = store.min_ts_ ? std::min(*store.min_ts_, lo) : lo;
            store.max_ts_ = store.max_ts_ ? std::max(*store.max_ts_, hi) : hi;
        }
        store.streams_.push_back(std::move(stream));
    }
    return store;
}

void LogStore::save(std::ostream& out) const
{
    out << dump({{"format", kFormat},
                 {"version", kVersion},
                 {"application", application_},
                 {"anchor", format_rfc3339(anchor_)}})
        << '\n';
    for (StreamId id = 0; id < streams_.size(); ++id) {
        const auto& s = streams_[id];
        out << dump({{"stream", id}, {"labels", s.labels}}) << '\n';
        for (const auto& e : s.entries) {
            out << dump({{"ts", to_unix_nanos(e.ts)}, {"line", e.line}}) << '\n';
        }
    }
}

void LogStore::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IngestError(fmt::format("cannot write store file {}", path.string()));
    }
    save(out);
    if (!out) {
        throw IngestError(fmt::format("error writing store file {}", path.string()));
    }
}

LogStore LogStore::load(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    const auto fail = [&](const std::string& what) {
        throw IngestError(fmt::format("store line {}: {}", line_no, what));
    };

    std::string application;
    Timestamp anchor{};
    std::vector<LogEntry> entries;
    std::optional<Labels> current;
    std::size_t expected_stream = 0;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) {
                continue;
            }
            const auto j = nlohmann::json::parse(line);
            if (line_no == 1) {
                if (j.value("format", "") != kFormat) {
                    fail("not a store file");
                }
                if (j.value("version", 0) != kVersion) {
                    fail(fmt::format("unsupported version {}", j.value("version", 0)));
                }
                application = j.at("application").get<std::string>();
                anchor = parse_rfc3339(j.at("anchor").get<std::string>());
                continue;
            }
            if (j.contains("stream")) {
                if (j.at("stream").get<std::size_t>() != expected_stream++) {
                    fail("stream ids must be consecutive");
                }
                current = j.at("labels").get<Labels>();
            } else {
                if (!current) {
                    fail("entry before any stream record");
                }
                entries.push_back(LogEntry{from_unix_nanos(j.at("ts").get<std::int64_t>()), *current,
                                           j.at("line").get<std::string>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(e.what());
    } catch (const TimeFormatError& e) {
        fail(e.what());
    }
    if (line_no == 0) {
        throw IngestError("empty store file");
    }
    return build(std::move(application), anchor, std::move(entries));
}

LogStore LogStore::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError(fmt::format("cannot read store file {}", path.string()));
    }
    return load(in);
}

}  // namespace lqe::ingest
