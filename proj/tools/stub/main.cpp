// Fake chat-completion endpoint for offline runs and tests.
#include <iostream>

#include <CLI11.hpp>

#include "stub_server.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Stub chat-completion server"};
    std::string config;
    std::string host = "127.0.0.1";
    int port = 8900;
    app.add_option("--config", config, "Stub config (JSON)")->required();
    app.add_option("--host", host);
    app.add_option("--port", port)->check(CLI::Range(0, 65535));
    CLI11_PARSE(app, argc, argv);

    try {
        lqe::stub::StubModelServer server(lqe::stub::load_stub_config(config));
        std::cout << "stub model on http://" << host << ":" << port << "/v1" << std::endl;
        return server.run(host, port) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
