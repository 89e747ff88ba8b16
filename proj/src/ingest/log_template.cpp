#include "lqe/ingest/log_template.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "lqe/common/strings.hpp"

namespace lqe::ingest {

TemplateError::TemplateError(const std::string& message, std::size_t line)
    : IngestError(fmt::format("line {}: {}", line, message)), line_(line)
{}

namespace {

struct Field {
    std::string key;
    std::string value;
    std::size_t line;
};

class BlockReader {
public:
    explicit BlockReader(std::vector<Field> fields, std::size_t first_line)
        : fields_(std::move(fields)), first_line_(first_line)
    {}

    LogTemplate build() const
    {
        const std::string id = required("id");
        const Field& pattern_field = field("pattern");
        std::optional<Regex> pattern;
        try {
            pattern = Regex::compile(pattern_field.value);
        } catch (const RegexError& e) {
            throw TemplateError(fmt::format("template \"{}\": bad pattern: {}", id, e.what()), pattern_field.line);
        }
        LogTemplate t{id, *pattern, required("ts_group"), required("ts_format"), {}, {}, {}, {}, {}};
        t.level_group = optional("level_group");
        t.component_group = optional("component_group");
        t.content_group = optional("content_group");

        std::set<std::string> seen_keys;
        for (const auto& f : fields_) {
            if (!seen_keys.insert(f.key).second) {
                throw TemplateError(fmt::format("duplicate key \"{}\"", f.key), f.line);
            }
            if (f.key.starts_with("label.")) {
                const std::string name = f.key.substr(6);
                check_label_name(name, f.line);
                t.label_groups.emplace_back(name, f.value);
            } else if (f.key.starts_with("static.")) {
                const std::string name = f.key.substr(7);
                check_label_name(name, f.line);
                t.static_labels[name] = f.value;
            } else if (!is_known(f.key)) {
                throw TemplateError(fmt::format("unknown key \"{}\"", f.key), f.line);
            }
        }

        const auto& names = t.pattern.group_names();
        const auto check_group = [&](const std::string& group, const char* key) {
            if (std::find(names.begin(), names.end(), group) == names.end()) {
                throw TemplateError(
                    fmt::format("template \"{}\": {} names unknown capture group \"{}\"", id, key, group),
                    line_of(key));
            }
        };
        check_group(t.timestamp_group, "ts_group");
        if (t.level_group) {
            check_group(*t.level_group, "level_group");
        }
        if (t.component_group) {
            check_group(*t.component_group, "component_group");
        }
        if (t.content_group) {
            check_group(*t.content_group, "content_group");
        }
        for (const auto& [label, group] : t.label_groups) {
            check_group(group, "label mapping");
        }
        return t;
    }

private:
    static bool is_known(const std::string& key)
    {
        static const std::set<std::string> known{"id",          "pattern",         "ts_group",     "ts_format",
                                                  "level_group", "component_group", "content_group"};
        return known.contains(key);
    }

    static void check_label_name(const std::string& name, std::size_t line)
    {
        if (!is_valid_label_name(name)) {
            throw TemplateError(fmt::format("invalid label name \"{}\"", name), line);
        }
    }

    const Field* find(const std::string& key) const
    {
        for (const auto& f : fields_) {
            if (f.key == key) {
                return &f;
            }
        }
        return nullptr;
    }

    std::size_t line_of(const std::string& key) const
    {
        const Field* f = find(key);
        return f != nullptr ? f->line : first_line_;
    }

    const Field& field(const std::string& key) const
    {
        const Field* f = find(key);
        if (f == nullptr || f->value.empty()) {
            throw TemplateError(fmt::format("template block is missing \"{}\"", key), first_line_);
        }
        return *f;
    }

    std::string required(const std::string& key) const { return field(key).value; }

    std::optional<std::string> optional(const std::string& key) const
    {
        const Field* f = find(key);
        if (f == nullptr) {
            return std::nullopt;
        }
        return f->value;
    }

    std::vector<Field> fields_;
    std::size_t first_line_;
};

}  // namespace

std::vector<LogTemplate> parse_templates_text(std::string_view text)
{
    std::vector<LogTemplate> out;
    std::set<std::string> ids;
    std::vector<Field> block;
    std::size_t block_start = 0;

    const auto flush = [&] {
        if (block.empty()) {
            return;
        }
        LogTemplate t = BlockReader(std::move(block), block_start).build();
        if (!ids.insert(t.id).second) {
            throw TemplateError(fmt::format("duplicate template id \"{}\"", t.id), block_start);
        }
        out.push_back(std::move(t));
        block.clear();
    };

    std::size_t line_no = 0;
    for (std::string raw : split(text, '\n')) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') {
            raw.pop_back();
        }
        const auto line = trim(raw);
        if (line.empty()) {
            flush();
            continue;
        }
        if (line.front() == '#') {
            continue;
        }
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) {
            throw TemplateError(fmt::format("expected \"key: value\", got \"{}\"", line), line_no);
        }
        if (block.empty()) {
            block_start = line_no;
        }
        block.push_back(Field{std::string(trim(line.substr(0, colon))), std::string(trim(line.substr(colon + 1))),
                              line_no});
    }
    flush();
    if (out.empty()) {
        throw TemplateError("no templates defined", line_no);
    }
    return out;
}

std::vector<LogTemplate> parse_templates(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError(fmt::format("cannot read template file {}", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_templates_text(buf.str());
    } catch (const TemplateError& e) {
        throw TemplateError(fmt::format("{}: {}", path.string(), e.what()), e.line());
    }
}

Extraction extract_entry(std::string_view raw, const std::vector<LogTemplate>& templates, const Labels& defaults,
                         int default_year)
{
    Extraction out;
    out.labels = defaults;
    NamedCaptures captures;
    const LogTemplate* hit = nullptr;
    for (const auto& t : templates) {
        if (t.pattern.search(raw, captures)) {
            hit = &t;
            break;
        }
    }

    if (hit == nullptr) {
        out.labels["template"] = "none";
        out.line = sanitize_utf8(raw);
        out.template_id = "none";
    } else {
        const auto group = [&](const std::string& name) -> const std::string& {
            for (const auto& [n, v] : captures) {
                if (n == name) {
                    return v;
                }
            }
            throw IngestError(fmt::format("capture group \"{}\" missing", name));
        };
        const auto set_label = [&](const std::string& label, const std::string& value) {
            if (!value.empty()) {
                out.labels[label] = sanitize_utf8(value);
            }
        };
        const std::string& ts_text = group(hit->timestamp_group);
        try {
            out.ts = parse_timestamp(ts_text, hit->timestamp_format, default_year);
        } catch (const TimeFormatError& e) {
            throw TimestampRejected(
                fmt::format("template \"{}\": timestamp \"{}\" does not parse: {}", hit->id, ts_text, e.what()));
        }
        for (const auto& [label, value] : hit->static_labels) {
            set_label(label, value);
        }
        for (const auto& [label, name] : hit->label_groups) {
            set_label(label, group(name));
        }
        if (hit->level_group) {
            set_label("level", group(*hit->level_group));
        }
        if (hit->component_group) {
            set_label("component", group(*hit->component_group));
        }
        out.line = sanitize_utf8(hit->content_group ? std::string_view(group(*hit->content_group)) : raw);
        out.template_id = hit->id;
    }

    if (!out.labels.contains("application")) {
        throw IngestError("entry has no \"application\" label; set it in the manifest defaults");
    }
    return out;
}

}  // namespace lqe::ingest
