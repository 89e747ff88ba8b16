#include "lqe/ingest/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "lqe/common/strings.hpp"
#include "lqe/ingest/log_template.hpp"

namespace lqe::ingest {

namespace {

constexpr std::size_t kMaxWarnings = 50;

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError(fmt::format("cannot read {}", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct Pending {
    std::optional<Timestamp> ts;
    Labels labels;
    std::string line;
    std::size_t line_no;
};

class Ingestor {
public:
    explicit Ingestor(const CorpusManifest& manifest)
        : manifest_(manifest), templates_(parse_templates(manifest.templates))
    {}

    IngestResult run()
    {
        std::vector<LogEntry> entries;
        for (const auto& file : manifest_.files) {
            auto pending = read(file);
            fill_missing_timestamps(file, pending);
            for (auto& p : pending) {
                if (p.ts) {
                    entries.push_back(LogEntry{*p.ts, std::move(p.labels), std::move(p.line)});
                }
            }
        }
        if (entries.empty()) {
            throw IngestError(fmt::format("corpus \"{}\" has no usable log lines", manifest_.application));
        }

        std::map<Timestamp, std::int64_t> seen;
        for (auto& e : entries) {
            e.ts += Nanos{seen[e.ts]++};
        }

        const Timestamp anchor =
            manifest_.anchor ? *manifest_.anchor : std::chrono::time_point_cast<Nanos>(std::chrono::system_clock::now());
        entries = rebase_timestamps(std::move(entries), anchor);

        IngestResult result{LogStore::build(manifest_.application, anchor, std::move(entries)), std::move(report_)};
        result.report.streams = result.store.streams().size();
        result.report.entries = result.store.entry_count();
        if (result.report.warnings.size() > kMaxWarnings) {
            const std::size_t extra = result.report.warnings.size() - kMaxWarnings;
            result.report.warnings.resize(kMaxWarnings);
            result.report.warnings.push_back(fmt::format("... {} more warnings", extra));
        }
        return result;
    }

private:
    void warn(const std::filesystem::path& file, std::size_t line_no, const std::string& what)
    {
        report_.warnings.push_back(fmt::format("{}:{}: {}", file.filename().string(), line_no, what));
    }

    std::vector<Pending> read(const std::filesystem::path& file)
    {
        std::vector<Pending> out;
        const std::string text = read_file(file);
        std::size_t line_no = 0;
        for (std::string raw : split(text, '\n')) {
            ++line_no;
            if (!raw.empty() && raw.back() == '\r') {
                raw.pop_back();
            }
            if (trim(raw).empty()) {
                continue;
            }
            ++report_.lines_read;
            try {
                Extraction x = extract_entry(raw, templates_, manifest_.default_labels, manifest_.default_year);
                if (x.ts) {
                    ++report_.matched;
                } else {
                    ++report_.unmatched;
                }
                out.push_back(Pending{x.ts, std::move(x.labels), std::move(x.line), line_no});
            } catch (const TimestampRejected& e) {
                ++report_.rejected;
                warn(file, line_no, e.what());
            }
        }
        return out;
    }

    void fill_missing_timestamps(const std::filesystem::path& file, std::vector<Pending>& pending)
    {
        std::optional<Timestamp> last;
        for (auto& p : pending) {
            if (p.ts) {
                last = p.ts;
            } else if (last) {
                p.ts = last;
            }
        }
        std::optional<Timestamp> next;
        for (auto it = pending.rbegin(); it != pending.rend(); ++it) {
            if (it->ts) {
                next = it->ts;
            } else if (next) {
                it->ts = next;
            }
        }
        for (const auto& p : pending) {
            if (!p.ts) {
                --report_.unmatched;
                ++report_.rejected;
                warn(file, p.line_no, "no template matched and the file has no timestamped line to borrow from");
            }
        }
    }

    const CorpusManifest& manifest_;
    std::vector<LogTemplate> templates_;
    IngestReport report_;
};

}  // namespace

CorpusManifest CorpusManifest::load(const std::filesystem::path& path)
{
    const auto base = path.parent_path();
    const auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    CorpusManifest m;
    try {
        const auto j = nlohmann::json::parse(read_file(path));
        m.application = j.at("application").get<std::string>();
        for (const auto& f : j.at("files")) {
            m.files.push_back(resolve(f.get<std::string>()));
        }
        m.templates = resolve(j.at("templates").get<std::string>());
        m.default_labels = j.value("default_labels", Labels{});
        m.default_year = j.value("default_year", 2000);
        const std::string anchor = j.value("anchor", std::string("now"));
        if (anchor != "now") {
            m.anchor = parse_rfc3339(anchor);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(fmt::format("{}: {}", path.string(), e.what()));
    } catch (const TimeFormatError& e) {
        throw IngestError(fmt::format("{}: anchor: {}", path.string(), e.what()));
    }
    if (m.files.empty()) {
        throw IngestError(fmt::format("{}: manifest lists no files", path.string()));
    }
    if (!m.default_labels.contains("application")) {
        throw IngestError(fmt::format("{}: default_labels must include \"application\"", path.string()));
    }
    for (const auto& [name, value] : m.default_labels) {
        if (!is_valid_label_name(name)) {
            throw IngestError(fmt::format("{}: invalid label name \"{}\"", path.string(), name));
        }
    }
    return m;
}

std::vector<LogEntry> rebase_timestamps(std::vector<LogEntry> entries, Timestamp anchor)
{
    if (entries.empty()) {
        return entries;
    }
    const auto latest = std::max_element(entries.begin(), entries.end(),
                                         [](const LogEntry& a, const LogEntry& b) { return a.ts < b.ts; })
                            ->ts;
    const Nanos shift = anchor - latest;
    for (auto& e : entries) {
        e.ts += shift;
    }
    return entries;
}

IngestResult ingest(const CorpusManifest& manifest) { return Ingestor(manifest).run(); }

}  // namespace lqe::ingest
