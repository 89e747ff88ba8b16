#include "lqe/service/server.hpp"

#include <chrono>
#include <fstream>
#include <future>

#include <fmt/format.h>
#include <httplib.h>

#include "lqe/common/strings.hpp"
#include "lqe/common/time.hpp"
#include "lqe/engine/engine.hpp"
#include "lqe/logql/diagnostic.hpp"

namespace lqe::service {

namespace {

using nlohmann::json;

/// An error that maps to an HTTP status.
struct ApiError {
    int status;
    std::string message;
    json diagnostics = nullptr;
};

Timestamp wall_clock() { return std::chrono::time_point_cast<Nanos>(std::chrono::system_clock::now()); }

json diagnostics_json(const std::vector<logql::Diagnostic>& diags)
{
    json out = json::array();
    for (const auto& d : diags) {
        out.push_back({{"code", logql::to_string(d.code)},
                       {"message", d.message},
                       {"span", {{"begin", d.span.begin}, {"end", d.span.end}}}});
    }
    return out;
}

json parse_body(const httplib::Request& req)
{
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) {
            throw ApiError{400, "request body must be a JSON object"};
        }
        return j;
    } catch (const json::parse_error& e) {
        throw ApiError{400, fmt::format("invalid JSON: {}", e.what())};
    }
}

std::string required_string(const json& body, const char* field)
{
    const auto it = body.find(field);
    if (it == body.end() || !it->is_string()) {
        throw ApiError{400, fmt::format("field \"{}\" must be a string", field)};
    }
    return it->get<std::string>();
}

logql::Variables vars_of(const json& body)
{
    logql::Variables vars;
    if (const auto it = body.find("vars"); it != body.end() && !it->is_null()) {
        if (!it->is_object()) {
            throw ApiError{400, "field \"vars\" must be an object"};
        }
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) {
                throw ApiError{400, fmt::format("variable \"{}\" must be a string", k)};
            }
            vars.emplace(k, v.get<std::string>());
        }
    }
    return vars;
}

}  // namespace

void ServiceState::add_corpus(const std::string& name, std::unique_ptr<ingest::LogStore> store)
{
    prompts.insert_or_assign(name, gateway::prompt_context_from_store(*store, eval.prompt_sample_lines));
    corpora.insert_or_assign(name, std::move(store));
}

ServiceState ServiceState::from_config(const RunConfig& config)
{
    ServiceState s;
    s.eval = config.eval;
    s.feedback_file = config.feedback_file;
    s.ui_dir = config.ui_dir;
    for (const auto& [name, src] : config.corpora) {
        s.add_corpus(name, load_corpus(src));
    }
    if (config.dataset) {
        for (auto& t : harness::load_dataset(*config.dataset)) {
            s.tuples.emplace(t.id, std::move(t));
        }
    }
    if (config.endpoints) {
        for (auto& ep : gateway::load_endpoints(*config.endpoints)) {
            auto name = ep.name;
            s.models.emplace(std::move(name), std::make_unique<gateway::EndpointGenerator>(std::move(ep)));
        }
    }
    return s;
}

struct ApiServer::Impl {
    ServiceState state;
    httplib::Server server;
    std::mutex feedback_mutex;

    const ingest::LogStore& corpus(const json& body) const
    {
        const std::string name = required_string(body, "corpus");
        const auto it = state.corpora.find(name);
        if (it == state.corpora.end()) {
            throw ApiError{404, fmt::format("unknown corpus \"{}\"", name)};
        }
        return *it->second;
    }

    engine::EvalContext context(const ingest::LogStore& store, const json& body) const
    {
        engine::EvalContext ctx = harness::context_for(store, state.eval);
        try {
            if (body.contains("now") && !body.at("now").is_null()) {
                ctx.now = parse_rfc3339(body.at("now").get<std::string>());
            }
            if (body.contains("limit") && !body.at("limit").is_null()) {
                const auto limit = body.at("limit").get<long long>();
                if (limit <= 0) {
                    throw ApiError{400, "field \"limit\" must be positive"};
                }
                ctx.limit = static_cast<std::size_t>(limit);
            }
            if (body.contains("direction")) {
                const auto d = body.at("direction").get<std::string>();
                if (d != "backward" && d != "forward") {
                    throw ApiError{400, "field \"direction\" must be \"backward\" or \"forward\""};
                }
                ctx.direction = d == "forward" ? engine::Direction::Forward : engine::Direction::Backward;
            }
        } catch (const json::exception& e) {
            throw ApiError{400, e.what()};
        } catch (const TimeFormatError& e) {
            throw ApiError{400, fmt::format("field \"now\": {}", e.what())};
        }
        return ctx;
    }

    json health(const httplib::Request&) const
    {
        return {{"status", "ok"}, {"corpora", state.corpora.size()}, {"now", format_rfc3339(wall_clock())}};
    }

    json corpora(const httplib::Request&) const
    {
        json list = json::array();
        for (const auto& [name, store] : state.corpora) {
            json labels = json::object();
            for (const auto& [label, values] : state.prompts.at(name).labels) {
                labels[label] = values;
            }
            list.push_back({{"name", name},
                            {"application", store->application()},
                            {"streams", store->streams().size()},
                            {"entries", store->entry_count()},
                            {"anchor", format_rfc3339(store->anchor())},
                            {"from", store->min_ts() ? json(format_rfc3339(*store->min_ts())) : json()},
                            {"to", store->max_ts() ? json(format_rfc3339(*store->max_ts())) : json()},
                            {"now", format_rfc3339(harness::context_for(*store, state.eval).now)},
                            {"labels", labels}});
        }
        json models = json::array();
        for (const auto& [name, gen] : state.models) {
            models.push_back(name);
        }
        json tuples = json::array();
        for (const auto& [id, t] : state.tuples) {
            tuples.push_back({{"id", id},
                              {"application", t.application},
                              {"query_type", harness::to_string(t.query_type)},
                              {"nl_question", t.nl_question}});
        }
        return {{"corpora", list}, {"models", models}, {"tuples", tuples}, {"now", format_rfc3339(wall_clock())}};
    }

    json query(const httplib::Request& req) const
    {
        const json body = parse_body(req);
        const auto& store = corpus(body);
        const auto ctx = context(store, body);
        const std::string text = required_string(body, "query");
        try {
            const auto result = engine::execute(store, text, vars_of(body), ctx);
            return {{"result", engine::to_json(result)}, {"now", format_rfc3339(ctx.now)}};
        } catch (const logql::QueryError& e) {
            throw ApiError{400, e.what(), diagnostics_json(e.diagnostics())};
        }
    }

    json generate(const httplib::Request& req)
    {
        const json body = parse_body(req);
        const std::string name = required_string(body, "corpus");
        const auto& store = corpus(body);
        const std::string nl = required_string(body, "nl");
        if (trim(nl).empty()) {
            throw ApiError{400, "field \"nl\" is empty"};
        }
        const auto models = body.value("models", json::array());
        if (!models.is_array() || models.empty()) {
            throw ApiError{400, "field \"models\" must be a non-empty array"};
        }
        std::vector<gateway::EndpointGenerator*> targets;
        for (const auto& m : models) {
            if (!m.is_string()) {
                throw ApiError{400, "model names must be strings"};
            }
            const auto it = state.models.find(m.get<std::string>());
            if (it == state.models.end()) {
                throw ApiError{404, fmt::format("unknown model \"{}\"", m.get<std::string>())};
            }
            targets.push_back(it->second.get());
        }

        const gateway::GenerationRequest request{"", store.application(), nl, "",
                                                 gateway::build_prompt(nl, state.prompts.at(name))};
        std::vector<std::future<json>> pending;
        for (auto* gen : targets) {
            pending.push_back(std::async(std::launch::async, [gen, &request] {
                json r{{"model", gen->name()}};
                try {
                    const auto resp = gen->generate(request);
                    r["query"] = resp.extracted_query.value_or(resp.raw_text);
                    r["raw_text"] = resp.raw_text;
                    r["latency_ms"] = resp.latency_ms;
                    r["error"] = nullptr;
                } catch (const std::exception& e) {
                    r["query"] = nullptr;
                    r["raw_text"] = nullptr;
                    r["latency_ms"] = nullptr;
                    r["error"] = e.what();
                }
                return r;
            }));
        }
        json results = json::array();
        for (auto& f : pending) {
            results.push_back(f.get());
        }
        return {{"results", results}, {"now", format_rfc3339(harness::context_for(store, state.eval).now)}};
    }

    json execute_candidate(const httplib::Request& req) const
    {
        const json body = parse_body(req);
        const auto& store = corpus(body);
        const auto ctx = context(store, body);
        const std::string text = required_string(body, "query");
        if (!body.contains("tuple_id") || body.at("tuple_id").is_null()) {
            try {
                const auto result = engine::execute(store, text, vars_of(body), ctx);
                return {{"result", engine::to_json(result)}, {"now", format_rfc3339(ctx.now)}};
            } catch (const logql::QueryError& e) {
                throw ApiError{400, e.what(), diagnostics_json(e.diagnostics())};
            }
        }
        const std::string id = required_string(body, "tuple_id");
        const auto it = state.tuples.find(id);
        if (it == state.tuples.end()) {
            throw ApiError{404, fmt::format("unknown tuple \"{}\"", id)};
        }
        try {
            const auto rec = harness::evaluate_tuple(store, it->second, text, ctx);
            json out = harness::to_json(rec);
            out["now"] = format_rfc3339(ctx.now);
            return out;
        } catch (const harness::DatasetError& e) {
            throw ApiError{400, e.what()};
        }
    }

    json feedback(const httplib::Request& req)
    {
        const json body = parse_body(req);
        if (!state.feedback_file) {
            throw ApiError{404, "feedback collection is not configured"};
        }
        json record{{"nl", required_string(body, "nl")},
                    {"chosen_query", required_string(body, "chosen_query")},
                    {"verdict", required_string(body, "verdict")}};
        if (record["verdict"] != "up" && record["verdict"] != "down") {
            throw ApiError{400, "field \"verdict\" must be \"up\" or \"down\""};
        }
        for (const char* optional : {"corrected_query", "model", "corpus"}) {
            if (body.contains(optional) && !body.at(optional).is_null()) {
                record[optional] = required_string(body, optional);
            }
        }
        const auto now = format_rfc3339(wall_clock());
        record["received_at"] = now;
        {
            std::lock_guard lock(feedback_mutex);
            std::ofstream out(*state.feedback_file, std::ios::app);
            if (!out) {
                throw ApiError{500, fmt::format("cannot append to {}", state.feedback_file->string())};
            }
            out << record.dump() << '\n';
        }
        return {{"status", "ok"}, {"now", now}};
    }

    template <typename Handler>
    void route(const char* method, const char* path, Handler handler)
    {
        auto wrapped = [this, handler](const httplib::Request& req, httplib::Response& res) {
            json out;
            try {
                out = (this->*handler)(req);
            } catch (const ApiError& e) {
                res.status = e.status;
                out = {{"error", e.message}, {"now", format_rfc3339(wall_clock())}};
                if (!e.diagnostics.is_null()) {
                    out["diagnostics"] = e.diagnostics;
                }
            } catch (const std::exception& e) {
                res.status = 500;
                out = {{"error", e.what()}, {"now", format_rfc3339(wall_clock())}};
            }
            res.set_content(out.dump(), "application/json");
        };
        if (std::string_view(method) == "GET") {
            server.Get(path, wrapped);
        } else {
            server.Post(path, wrapped);
        }
    }
};

namespace {

void exclusive_port(socket_t sock)
{
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
}

}  // namespace

ApiServer::ApiServer(ServiceState state) : impl_(std::make_unique<Impl>())
{
    impl_->state = std::move(state);
    impl_->route("GET", "/api/health", &Impl::health);
    impl_->route("GET", "/api/corpora", &Impl::corpora);
    impl_->route("POST", "/api/query", &Impl::query);
    impl_->route("POST", "/api/generate", &Impl::generate);
    impl_->route("POST", "/api/execute_candidate", &Impl::execute_candidate);
    impl_->route("POST", "/api/feedback", &Impl::feedback);
    impl_->server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            res.set_content(json{{"error", httplib::status_message(res.status)}, {"now", format_rfc3339(wall_clock())}}
                                .dump(),
                            "application/json");
        }
    });
    // httplib defaults to SO_REUSEPORT, which lets a second server share a
    // port that is already serving.
    impl_->server.set_socket_options(exclusive_port);
    if (impl_->state.ui_dir) {
        impl_->server.set_mount_point("/", impl_->state.ui_dir->string());
    }
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port)
{
    int bound = -1;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (impl_->server.bind_to_port(host, port)) {
        bound = port;
    }
    if (bound <= 0) {
        throw std::runtime_error(fmt::format("cannot bind {}:{} (port in use?)", host, port));
    }
    return bound;
}

void ApiServer::serve() { impl_->server.listen_after_bind(); }

void ApiServer::stop() { impl_->server.stop(); }

void ApiServer::wait_until_ready() { impl_->server.wait_until_ready(); }

}  // namespace lqe::service
