#include "lqe/service/config.hpp"

#include <fstream>

#include <fmt/format.h>

#include "lqe/ingest/ingest.hpp"
#include "lqe/ingest/log_template.hpp"
#include "lqe/logql/parser.hpp"

namespace lqe::service {

namespace {

std::filesystem::path existing(const std::filesystem::path& base, const std::string& p, const char* what)
{
    std::filesystem::path fp(p);
    if (fp.is_relative()) {
        fp = base / fp;
    }
    if (!std::filesystem::exists(fp)) {
        throw UsageError(fmt::format("{} {} does not exist", what, fp.string()));
    }
    return fp;
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw UsageError(fmt::format("cannot read config {}", path.string()));
    }
    RunConfig c;
    const auto base = path.parent_path();
    try {
        c.source = nlohmann::json::parse(in);
        const auto& j = c.source;
        for (const auto& [name, v] : j.at("corpora").items()) {
            CorpusSource src;
            if (v.is_string()) {
                src.path = existing(base, v.get<std::string>(), "corpus manifest");
            } else if (v.contains("store")) {
                src.kind = CorpusSource::Kind::Store;
                src.path = existing(base, v.at("store").get<std::string>(), "corpus store");
            } else {
                src.path = existing(base, v.at("manifest").get<std::string>(), "corpus manifest");
            }
            c.corpora.emplace(name, std::move(src));
        }
        if (j.contains("dataset")) {
            c.dataset = existing(base, j.at("dataset").get<std::string>(), "dataset");
        }
        if (j.contains("endpoints")) {
            c.endpoints = existing(base, j.at("endpoints").get<std::string>(), "endpoints config");
        }
        if (j.contains("ui_dir")) {
            c.ui_dir = existing(base, j.at("ui_dir").get<std::string>(), "ui directory");
        }
        if (j.contains("feedback_file")) {
            std::filesystem::path fb = j.at("feedback_file").get<std::string>();
            c.feedback_file = fb.is_relative() ? base / fb : fb;
        }
        std::filesystem::path out = j.value("output_dir", std::string("runs"));
        c.output_dir = out.is_relative() ? base / out : out;
        c.seed = j.value("seed", std::uint64_t{0});
        if (const auto it = j.find("eval"); it != j.end()) {
            const auto& e = *it;
            if (e.contains("now") && !e.at("now").is_null()) {
                c.eval.now = parse_rfc3339(e.at("now").get<std::string>());
            }
            c.eval.limit = e.value("limit", c.eval.limit);
            c.eval.parallelism = e.value("parallelism", c.eval.parallelism);
            c.eval.prompt_sample_lines = e.value("prompt_sample_lines", c.eval.prompt_sample_lines);
            if (e.contains("lookback")) {
                const auto d = logql::parse_duration(e.at("lookback").get<std::string>());
                if (!d) {
                    throw UsageError(fmt::format("{}: eval.lookback is not a duration", path.string()));
                }
                c.eval.log_lookback = d->nanos();
            }
            if (c.eval.limit == 0 || c.eval.parallelism == 0) {
                throw UsageError(fmt::format("{}: eval.limit and eval.parallelism must be positive", path.string()));
            }
        }
        if (const auto it = j.find("split"); it != j.end()) {
            c.split.test_fraction = it->value("test_fraction", c.split.test_fraction);
            c.split.train_fractions = it->value("train_fractions", c.split.train_fractions);
        }
        c.split.seed = c.seed;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(fmt::format("{}: {}", path.string(), e.what()));
    } catch (const TimeFormatError& e) {
        throw UsageError(fmt::format("{}: eval.now: {}", path.string(), e.what()));
    }
    if (c.corpora.empty()) {
        throw UsageError(fmt::format("{}: no corpora configured", path.string()));
    }
    return c;
}

std::unique_ptr<ingest::LogStore> load_corpus(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ingest::IngestError(fmt::format("cannot read {}", path.string()));
    }
    std::string first;
    std::getline(in, first);
    bool is_store = false;
    try {
        const auto j = nlohmann::json::parse(first);
        is_store = j.is_object() && j.value("format", std::string()) == "lqe-store";
    } catch (const nlohmann::json::exception&) {
    }
    if (is_store) {
        return std::make_unique<ingest::LogStore>(ingest::LogStore::load(path));
    }
    return std::make_unique<ingest::LogStore>(ingest::ingest(ingest::CorpusManifest::load(path)).store);
}

std::unique_ptr<ingest::LogStore> load_corpus(const CorpusSource& source)
{
    if (source.kind == CorpusSource::Kind::Store) {
        return std::make_unique<ingest::LogStore>(ingest::LogStore::load(source.path));
    }
    return std::make_unique<ingest::LogStore>(ingest::ingest(ingest::CorpusManifest::load(source.path)).store);
}

}  // namespace lqe::service
