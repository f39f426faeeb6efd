#pragma once

// In-process scorer service speaking the wire protocol, for tests and demos.
// It returns uniform distributions, or deliberately broken responses.

#include <atomic>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qaval/protocol.hpp"

namespace qaval::testing {

enum class StubMode {
    Uniform,      // p_start = p_end = 1/n everywhere
    Malformed,    // p_ans is not a number
    WrongLength,  // vectors one entry longer than the context
    ErrorReply,   // protocol error record
    Silent,       // never answers score requests
};

struct StubOptions {
    StubMode mode = StubMode::Uniform;
    double p_ans = 0.5;
    // Responses are held back until this many requests are pending (or the
    // connection goes idle) and then sent in reverse order.
    std::size_t reorder_batch = 1;
    std::string version = "v1";
};

class StubServer {
public:
    // Listens on `endpoint`; tcp port 0 picks a free port.
    StubServer(protocol::Endpoint endpoint, StubOptions options);
    ~StubServer();

    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    const protocol::Endpoint& endpoint() const noexcept { return endpoint_; }
    std::size_t requests_served() const noexcept { return served_.load(); }

    void stop();

private:
    void accept_loop();
    void serve(int fd);

    protocol::Endpoint endpoint_;
    StubOptions options_;
    protocol::Socket listener_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::size_t> served_{0};
    std::thread acceptor_;
    std::mutex connections_mutex_;
    std::vector<std::shared_ptr<protocol::Socket>> connections_;
    std::vector<std::thread> handlers_;
};

}  // namespace qaval::testing
