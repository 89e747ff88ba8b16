#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lqe/common/labels.hpp"
#include "lqe/common/regex.hpp"
#include "lqe/common/time.hpp"

namespace lqe::ingest {

class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by parse_templates; `line()` is 1-based.
class TemplateError : public IngestError {
public:
    TemplateError(const std::string& message, std::size_t line);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct LogTemplate {
    std::string id;
    Regex pattern;
    std::string timestamp_group;
    std::string timestamp_format;
    std::optional<std::string> level_group;      // -> label `level`
    std::optional<std::string> component_group;  // -> label `component`
    std::optional<std::string> content_group;    // becomes the entry line; whole raw line if unset
    std::vector<std::pair<std::string, std::string>> label_groups;  // label name, group name
    Labels static_labels;
};

/// Template file: blocks of `key: value` lines separated by blank lines,
/// `#` starts a comment line. Keys: id, pattern, ts_group, ts_format,
/// level_group, component_group, content_group, label.<name>, static.<name>.
std::vector<LogTemplate> parse_templates(const std::filesystem::path& path);
std::vector<LogTemplate> parse_templates_text(std::string_view text);

struct Extraction {
    /// Empty for lines that matched no template; ingest assigns one.
    std::optional<Timestamp> ts;
    Labels labels;
    std::string line;
    std::string template_id;  // "none" when unmatched
};

class TimestampRejected : public IngestError {
public:
    using IngestError::IngestError;
};

/// First template (in file order) whose pattern is found in the line wins;
/// template patterns anchor themselves with `^...$` where needed.
/// Labels are `defaults` plus extracted values; captures that are empty are
/// not turned into labels. Unmatched lines keep the raw text and get
/// `template="none"`. Throws TimestampRejected if the matched timestamp does
/// not parse, IngestError if the result has no `application` label.
Extraction extract_entry(std::string_view raw, const std::vector<LogTemplate>& templates, const Labels& defaults,
                         int default_year = 2000);

}  // namespace lqe::ingest
