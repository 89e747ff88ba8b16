#include "lqe/service/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lqe/common/strings.hpp"
#include "lqe/engine/engine.hpp"
#include "lqe/gateway/endpoint.hpp"
#include "lqe/gateway/generator.hpp"
#include "lqe/harness/report.hpp"
#include "lqe/ingest/ingest.hpp"
#include "lqe/logql/diagnostic.hpp"
#include "lqe/service/config.hpp"
#include "lqe/service/server.hpp"

namespace lqe::service {

namespace {

struct QueryOptions {
    std::string corpus;
    std::string query;
    std::string now;
    std::size_t limit = 0;
    std::vector<std::string> vars;
    std::string direction = "backward";
    std::string format = "json";
};

struct EvalArgs {
    std::string config;
    std::string generator = "echo";
    std::string split = "all";
    std::string run_name;
};

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot read {}", path.string()));
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void print_table(const engine::QueryResult& result, std::ostream& out)
{
    if (const auto* log = std::get_if<engine::LogResult>(&result)) {
        for (const auto& row : log->rows) {
            out << format_rfc3339(row.ts) << "  " << label_set_string(row.labels) << "  " << row.line << '\n';
        }
        if (log->truncated) {
            out << "(truncated)\n";
        }
        return;
    }
    for (const auto& s : std::get<engine::MetricResult>(result).samples) {
        out << label_set_string(s.labels) << "  " << fmt::format("{}", s.value) << '\n';
    }
}

int cmd_ingest(const std::string& manifest_path, const std::string& store_path, const std::string& format,
               std::ostream& out)
{
    const auto manifest = ingest::CorpusManifest::load(manifest_path);
    const auto result = ingest::ingest(manifest);
    result.store.save(std::filesystem::path(store_path));
    const auto& r = result.report;
    nlohmann::json stats{{"application", manifest.application},
                         {"lines_read", r.lines_read},
                         {"matched", r.matched},
                         {"unmatched", r.unmatched},
                         {"rejected", r.rejected},
                         {"streams", r.streams},
                         {"entries", r.entries},
                         {"warnings", r.warnings}};
    std::ofstream(store_path + ".stats.json", std::ios::binary | std::ios::trunc) << stats.dump(2) << '\n';
    if (format == "json") {
        out << stats.dump(2) << '\n';
        return kExitOk;
    }
    out << fmt::format("{}: {} lines read, {} matched, {} unmatched, {} rejected; {} streams, {} entries\n",
                       manifest.application, r.lines_read, r.matched, r.unmatched, r.rejected, r.streams, r.entries);
    for (const auto& w : r.warnings) {
        out << "warning: " << w << '\n';
    }
    out << "wrote " << store_path << '\n';
    return kExitOk;
}

int cmd_query(const QueryOptions& o, std::ostream& out)
{
    const auto store = load_corpus(o.corpus);
    engine::EvalContext ctx;
    ctx.now = store->anchor();
    if (!o.now.empty()) {
        try {
            ctx.now = parse_rfc3339(o.now);
        } catch (const TimeFormatError& e) {
            throw UsageError(fmt::format("--now: {}", e.what()));
        }
    }
    if (o.limit > 0) {
        ctx.limit = o.limit;
    }
    ctx.direction = o.direction == "forward" ? engine::Direction::Forward : engine::Direction::Backward;
    logql::Variables vars;
    for (const auto& kv : o.vars) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError(fmt::format("--var expects name=value, got \"{}\"", kv));
        }
        vars.insert_or_assign(kv.substr(0, eq), kv.substr(eq + 1));
    }
    const auto result = engine::execute(*store, o.query, vars, ctx);
    if (o.format == "table") {
        print_table(result, out);
    } else {
        out << engine::to_json(result).dump(2) << '\n';
    }
    return kExitOk;
}

std::unique_ptr<gateway::Generator> make_generator(const std::string& spec, const RunConfig& cfg)
{
    if (spec == "echo") {
        return std::make_unique<gateway::EchoGenerator>();
    }
    if (spec.starts_with("canned:")) {
        try {
            return std::make_unique<gateway::CannedGenerator>(gateway::CannedGenerator::load(spec.substr(7)));
        } catch (const gateway::GenerationError& e) {
            throw UsageError(e.what());
        }
    }
    if (spec.starts_with("endpoint:")) {
        if (!cfg.endpoints) {
            throw UsageError("config has no \"endpoints\" file");
        }
        const std::string name = spec.substr(9);
        for (auto& ep : gateway::load_endpoints(*cfg.endpoints)) {
            if (ep.name == name) {
                return std::make_unique<gateway::EndpointGenerator>(std::move(ep));
            }
        }
        throw UsageError(fmt::format("no endpoint named \"{}\"", name));
    }
    throw UsageError(fmt::format("unknown generator \"{}\"; use echo, canned:<file> or endpoint:<name>", spec));
}

std::vector<harness::BenchmarkTuple> select_split(std::vector<harness::BenchmarkTuple> tuples,
                                                  const std::string& which, const RunConfig& cfg)
{
    if (which == "all") {
        return tuples;
    }
    auto split = harness::split_dataset(tuples, cfg.split);
    if (which == "test") {
        return split.test;
    }
    if (which.starts_with("train:")) {
        double f = 0;
        try {
            f = std::stod(which.substr(6));
        } catch (const std::exception&) {
            throw UsageError(fmt::format("bad split \"{}\"", which));
        }
        for (std::size_t i = 0; i < cfg.split.train_fractions.size(); ++i) {
            if (cfg.split.train_fractions[i] == f) {
                return split.train_subsets[i];
            }
        }
        throw UsageError(fmt::format("train fraction {} is not configured", f));
    }
    throw UsageError(fmt::format("bad split \"{}\"; use all, test or train:<fraction>", which));
}

std::string utc_stamp()
{
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    std::string s = format_rfc3339(std::chrono::time_point_cast<Nanos>(now));
    std::erase(s, '-');
    std::erase(s, ':');
    return s;
}

int cmd_eval(const EvalArgs& a, std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err)
{
    RunConfig cfg = RunConfig::load(a.config);
    if (seed) {
        cfg.seed = cfg.split.seed = *seed;
    }
    if (!cfg.dataset) {
        throw UsageError("config has no \"dataset\"");
    }
    const auto tuples = select_split(harness::load_dataset(*cfg.dataset), a.split, cfg);
    auto generator = make_generator(a.generator, cfg);

    std::map<std::string, std::unique_ptr<ingest::LogStore>> owned;
    harness::StoreMap stores;
    for (const auto& t : tuples) {
        if (owned.contains(t.application)) {
            continue;
        }
        const auto it = cfg.corpora.find(t.application);
        if (it == cfg.corpora.end()) {
            throw UsageError(fmt::format("tuple \"{}\" needs corpus \"{}\", which the config does not list", t.id,
                                         t.application));
        }
        owned[t.application] = load_corpus(it->second);
        stores[t.application] = owned[t.application].get();
    }

    const auto run = harness::evaluate_run(stores, tuples, *generator, cfg.eval);

    const nlohmann::json run_config{
        {"config", cfg.source}, {"generator", a.generator}, {"split", a.split}, {"seed", cfg.seed}};
    const std::string hash = fmt::format("{:08x}", fnv1a64(run_config.dump()) & 0xffffffffULL);
    std::filesystem::path dir =
        cfg.output_dir / (a.run_name.empty() ? fmt::format("{}-{}", utc_stamp(), hash) : a.run_name);
    if (a.run_name.empty()) {
        for (int i = 2; std::filesystem::exists(dir); ++i) {
            dir = cfg.output_dir / fmt::format("{}-{}-{}", utc_stamp(), hash, i);
        }
    }
    harness::write_run_artifacts(dir, run);
    std::ofstream(dir / "config.json", std::ios::binary | std::ios::trunc) << run_config.dump(2) << '\n';

    for (const auto& r : run.records) {
        if (r.expected_output_consistent == false) {
            err << fmt::format("warning: tuple \"{}\": stored expected_output differs from the reference result\n",
                               r.tuple_id);
        }
        if (!r.generation_ok) {
            err << fmt::format("warning: tuple \"{}\": {}\n", r.tuple_id, r.errors.front());
        }
    }
    out << harness::render_report(run.metrics, harness::ReportFormat::Markdown);
    out << "run directory: " << dir.string() << '\n';
    return kExitOk;
}

int cmd_annotate(const std::string& config_path, const std::string& out_path, std::ostream& out)
{
    const RunConfig cfg = RunConfig::load(config_path);
    if (!cfg.dataset) {
        throw UsageError("config has no \"dataset\"");
    }
    auto tuples = harness::load_dataset(*cfg.dataset);
    std::map<std::string, std::unique_ptr<ingest::LogStore>> stores;
    for (auto& t : tuples) {
        auto& store = stores[t.application];
        if (!store) {
            const auto it = cfg.corpora.find(t.application);
            if (it == cfg.corpora.end()) {
                throw UsageError(fmt::format("tuple \"{}\" needs corpus \"{}\"", t.id, t.application));
            }
            store = load_corpus(it->second);
        }
        try {
            t.expected_output = engine::execute(*store, t.reference_query, t.vars, harness::context_for(*store, cfg.eval));
        } catch (const logql::QueryError& e) {
            throw harness::DatasetError(fmt::format("tuple \"{}\": {}", t.id, e.what()));
        }
    }
    harness::save_dataset(out_path, tuples);
    out << fmt::format("annotated {} tuples into {}\n", tuples.size(), out_path);
    return kExitOk;
}

int cmd_compare(const std::string& before, const std::string& after, const std::string& format, std::ostream& out)
{
    const auto load = [](const std::string& p) {
        try {
            return harness::metrics_from_json(nlohmann::json::parse(read_text(p)));
        } catch (const nlohmann::json::exception& e) {
            throw UsageError(fmt::format("{}: {}", p, e.what()));
        }
    };
    const auto c = harness::compare_runs(load(before), load(after));
    out << harness::render_report(c, format == "json" ? harness::ReportFormat::Json : harness::ReportFormat::Markdown);
    return kExitOk;
}

int cmd_serve(const std::string& config_path, const std::string& host, int port, std::ostream& out)
{
    const RunConfig cfg = RunConfig::load(config_path);
    ApiServer server(ServiceState::from_config(cfg));
    const int bound = server.bind(host, port);
    out << fmt::format("listening on http://{}:{}\n", host, bound) << std::flush;
    server.serve();
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Log query engine, benchmark harness and API server"};
    app.name("lqe");
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "Seed for every randomized step (dataset splits)");

    std::string manifest, store_path, ingest_format = "text";
    auto* ingest_cmd = app.add_subcommand("ingest", "Parse a corpus manifest into a store file");
    ingest_cmd->add_option("manifest", manifest, "Corpus manifest (JSON)")->required();
    ingest_cmd->add_option("store", store_path, "Output store file")->required();
    ingest_cmd->add_option("--format", ingest_format)->check(CLI::IsMember({"text", "json"}));

    QueryOptions q;
    auto* query_cmd = app.add_subcommand("query", "Run one LogQL query against a store or manifest");
    query_cmd->add_option("corpus", q.corpus, "Store file or corpus manifest")->required();
    query_cmd->add_option("query", q.query, "LogQL query")->required();
    query_cmd->add_option("--now", q.now, "Evaluation time (RFC 3339); defaults to the corpus anchor");
    query_cmd->add_option("--limit", q.limit, "Maximum log rows")->check(CLI::PositiveNumber);
    query_cmd->add_option("--var", q.vars, "Dashboard variable binding name=value");
    query_cmd->add_option("--direction", q.direction)->check(CLI::IsMember({"backward", "forward"}));
    query_cmd->add_option("--format", q.format)->check(CLI::IsMember({"json", "table"}));

    EvalArgs e;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a generator on the benchmark dataset");
    eval_cmd->add_option("config", e.config, "Run config (JSON)")->required();
    eval_cmd->add_option("--generator", e.generator, "echo, canned:<file> or endpoint:<name>");
    eval_cmd->add_option("--split", e.split, "all, test or train:<fraction>");
    eval_cmd->add_option("--run-name", e.run_name, "Run directory name instead of <time>-<config hash>");

    std::string annotate_config, annotate_out;
    auto* annotate_cmd = app.add_subcommand("annotate", "Fill expected outputs by running the reference queries");
    annotate_cmd->add_option("config", annotate_config)->required();
    annotate_cmd->add_option("--out", annotate_out, "Output dataset file")->required();

    std::string before, after, compare_format = "markdown";
    auto* compare_cmd = app.add_subcommand("compare", "Compare two runs' metrics.json files");
    compare_cmd->add_option("before", before)->required();
    compare_cmd->add_option("after", after)->required();
    compare_cmd->add_option("--format", compare_format)->check(CLI::IsMember({"markdown", "json"}));

    std::string serve_config, host = "127.0.0.1";
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    serve_cmd->add_option("config", serve_config)->required();
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest_cmd) {
            return cmd_ingest(manifest, store_path, ingest_format, out);
        }
        if (*query_cmd) {
            return cmd_query(q, out);
        }
        if (*eval_cmd) {
            return cmd_eval(e, seed, out, err);
        }
        if (*annotate_cmd) {
            return cmd_annotate(annotate_config, annotate_out, out);
        }
        if (*compare_cmd) {
            return cmd_compare(before, after, compare_format, out);
        }
        if (*serve_cmd) {
            return cmd_serve(serve_config, host, port, out);
        }
    } catch (const logql::QueryError& ex) {
        for (const auto& d : ex.diagnostics()) {
            err << "error: " << logql::format_diagnostic(d) << '\n';
        }
        return kExitUsage;
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const harness::DatasetError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitOperational;
    }
    return kExitUsage;
}

}  // namespace lqe::service
