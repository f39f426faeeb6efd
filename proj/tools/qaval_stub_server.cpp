// Uniform-distribution scorer service for trying the remote scorer path
// without a trained model.

#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "qaval/testing/stub_server.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
}

int main(int argc, char** argv) {
    CLI::App app{"Stub QA scorer service (uniform distributions)", "qaval_stub_server"};
    std::string listen = "tcp://127.0.0.1:0";
    double p_ans = 0.5;
    app.add_option("--listen", listen, "tcp://host:port or unix:/path")->capture_default_str();
    app.add_option("--p-ans", p_ans, "Answerable probability returned")->check(CLI::Range(0.0, 1.0));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        qaval::testing::StubOptions options;
        options.p_ans = p_ans;
        qaval::testing::StubServer server(qaval::protocol::Endpoint::parse(listen), options);
        std::cout << "listening on " << server.endpoint().to_string() << std::endl;
        std::signal(SIGINT, [](int) { g_stop = 1; });
        std::signal(SIGTERM, [](int) { g_stop = 1; });
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
