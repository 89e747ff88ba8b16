#include "stub_server.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <httplib.h>

#include "json.hpp"
#include "lqe/common/strings.hpp"
#include "lqe/harness/dataset.hpp"

namespace lqe::stub {

namespace {

std::string question_of(const std::string& prompt)
{
    const auto pos = prompt.rfind("Question: ");
    if (pos == std::string::npos) {
        return std::string(trim(prompt));
    }
    const auto start = pos + 10;
    const auto end = prompt.find('\n', start);
    return std::string(trim(std::string_view(prompt).substr(start, end == std::string::npos ? end : end - start)));
}

std::string styled(const std::string& query, const std::string& style)
{
    if (style == "plain") {
        return query;
    }
    if (style == "prose") {
        return fmt::format("You can use {} to answer this.", query);
    }
    return fmt::format("Here is the query:\n```logql\n{}\n```\nIt filters the relevant lines.", query);
}

}  // namespace

std::vector<double> stub_logprobs(const std::string& text)
{
    std::vector<double> out;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
        out.push_back(-0.01 - static_cast<double>(fnv1a64(tok) % 1000) / 1000.0);
    }
    return out;
}

StubConfig load_stub_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot read stub config {}", path.string()));
    }
    const auto j = nlohmann::json::parse(in);
    StubConfig c;
    if (j.contains("dataset")) {
        std::filesystem::path ds = j.at("dataset").get<std::string>();
        if (ds.is_relative()) {
            ds = path.parent_path() / ds;
        }
        for (const auto& t : harness::load_dataset(ds)) {
            c.answers[t.nl_question] = t.reference_query;
        }
    }
    if (j.contains("answers")) {
        for (const auto& [q, a] : j.at("answers").items()) {
            c.answers[q] = a.get<std::string>();
        }
    }
    c.fallback = j.value("fallback", c.fallback);
    c.style = j.value("style", c.style);
    c.fail_first = j.value("fail_first", c.fail_first);
    c.status = j.value("status", c.status);
    c.delay = std::chrono::milliseconds(j.value("delay_ms", 0));
    return c;
}

struct StubModelServer::Impl {
    StubConfig config;
    httplib::Server server;
};

StubModelServer::StubModelServer(StubConfig config) : impl_(std::make_unique<Impl>())
{
    impl_->config = std::move(config);
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    impl_->server.Post(R"(/v1/chat/completions)", [this](const httplib::Request& req, httplib::Response& res) {
        const int n = ++requests_;
        const StubConfig& c = impl_->config;
        if (c.delay.count() > 0) {
            std::this_thread::sleep_for(c.delay);
        }
        if (c.status != 0) {
            res.status = c.status;
            res.set_content(R"({"error": {"message": "stub configured to fail"}})", "application/json");
            return;
        }
        if (n <= c.fail_first) {
            res.status = 500;
            res.set_content(R"({"error": {"message": "transient stub failure"}})", "application/json");
            return;
        }
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception&) {
            res.status = 400;
            return;
        }
        std::string prompt;
        for (const auto& m : body.value("messages", nlohmann::json::array())) {
            prompt = m.value("content", std::string());
        }
        const auto q = question_of(prompt);
        const auto it = c.answers.find(q);
        const std::string text = styled(it != c.answers.end() ? it->second : c.fallback, c.style);
        nlohmann::json choice{{"index", 0},
                              {"message", {{"role", "assistant"}, {"content", text}}},
                              {"finish_reason", "stop"}};
        if (body.value("logprobs", false)) {
            nlohmann::json content = nlohmann::json::array();
            std::istringstream in(text);
            std::string tok;
            for (const double lp : stub_logprobs(text)) {
                in >> tok;
                content.push_back({{"token", tok}, {"logprob", lp}});
            }
            choice["logprobs"] = {{"content", content}};
        }
        nlohmann::json reply{{"id", "stub"}, {"object", "chat.completion"}, {"model", body.value("model", "stub")},
                             {"choices", nlohmann::json::array({choice})}};
        res.set_content(reply.dump(), "application/json");
    });
}

StubModelServer::~StubModelServer() { stop(); }

int StubModelServer::start(const std::string& host, int port)
{
    host_ = host;
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
    } else if (impl_->server.bind_to_port(host, port)) {
        port_ = port;
    } else {
        port_ = -1;
    }
    if (port_ <= 0) {
        throw std::runtime_error(fmt::format("stub model server cannot bind {}:{}", host, port));
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

bool StubModelServer::run(const std::string& host, int port)
{
    host_ = host;
    port_ = port;
    return impl_->server.listen(host, port);
}

void StubModelServer::stop()
{
    impl_->server.stop();
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::string StubModelServer::base_url() const { return fmt::format("http://{}:{}/v1", host_, port_); }

}  // namespace lqe::stub
