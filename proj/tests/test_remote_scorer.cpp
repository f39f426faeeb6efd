#include <doctest.h>

#include <unistd.h>

#include <future>
#include <thread>

#include "qaval/protocol.hpp"
#include "qaval/scorer.hpp"
#include "qaval/testing/stub_server.hpp"

using namespace qaval;
using qaval::testing::StubMode;
using qaval::testing::StubOptions;
using qaval::testing::StubServer;

namespace {

protocol::Endpoint any_port() { return protocol::Endpoint::parse("tcp://127.0.0.1:0"); }

Context context_of(std::size_t n) {
    Context ctx;
    ctx.tokens.push_back("null");
    for (std::size_t i = 1; i < n; ++i) ctx.tokens.push_back("w" + std::to_string(i));
    return ctx;
}

}  // namespace

TEST_CASE("endpoint parsing") {
    auto tcp = protocol::Endpoint::parse("tcp://localhost:5555");
    CHECK(tcp.kind == protocol::Endpoint::Kind::Tcp);
    CHECK(tcp.host == "localhost");
    CHECK(tcp.port == 5555);
    CHECK(tcp.to_string() == "tcp://localhost:5555");
    auto unix_ep = protocol::Endpoint::parse("unix:/tmp/x.sock");
    CHECK(unix_ep.path == "/tmp/x.sock");
    CHECK_THROWS_AS(protocol::Endpoint::parse("http://x"), protocol::ProtocolError);
    CHECK_THROWS_AS(protocol::Endpoint::parse("tcp://x:99999"), protocol::ProtocolError);
    CHECK_THROWS_AS(protocol::Endpoint::parse("tcp://x"), protocol::ProtocolError);
    CHECK_THROWS_AS(protocol::Endpoint::parse("unix:"), protocol::ProtocolError);
}

TEST_CASE("frames are length-prefixed") {
    CHECK(protocol::encode_frame("{}") == "2\n{}");
    CHECK(protocol::encode_frame("") == "0\n");
}

TEST_CASE("echo stub: uniform vectors give confidence 1/n^2") {
    StubServer server(any_port(), StubOptions{});
    RemoteScorer scorer(server.endpoint());
    for (std::size_t n : {2u, 3u, 7u, 12u}) {
        auto score = scorer.score("H | r", context_of(n));
        CHECK(score.p_ans == 0.5);
        REQUIRE(score.p_start.size() == n);
        const double expected = 1.0 / static_cast<double>(n * n);
        CHECK(confidence_score(score.p_start, score.p_end) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(scorer.healthy());
    CHECK_FALSE(scorer.deterministic());
}

TEST_CASE("unix socket transport") {
    auto path = "/tmp/qaval-test-" + std::to_string(::getpid()) + ".sock";
    StubServer server(protocol::Endpoint::parse("unix:" + path), StubOptions{});
    RemoteScorer scorer(server.endpoint());
    CHECK(scorer.score("H | r", context_of(4)).p_start.size() == 4);
}

TEST_CASE("concurrent requests are matched by id despite reordering") {
    StubOptions opts;
    opts.reorder_batch = 8;
    StubServer server(any_port(), opts);
    RemoteScorer scorer(server.endpoint());

    std::vector<std::future<std::size_t>> results;
    for (std::size_t t = 0; t < 16; ++t) {
        results.push_back(std::async(std::launch::async, [&scorer, t] {
            std::size_t ok = 0;
            for (std::size_t i = 0; i < 10; ++i) {
                const std::size_t n = 2 + (t * 10 + i) % 20;
                auto s = scorer.score("H | r" + std::to_string(i), context_of(n));
                ok += s.p_start.size() == n ? 1 : 0;
            }
            return ok;
        }));
    }
    std::size_t total = 0;
    for (auto& r : results) total += r.get();
    CHECK(total == 160);
    CHECK(server.requests_served() == 160);
}

TEST_CASE("bad responses surface with the request id") {
    SUBCASE("wrong length") {
        StubServer server(any_port(), StubOptions{StubMode::WrongLength});
        RemoteScorer scorer(server.endpoint());
        try {
            scorer.score("H | r", context_of(3));
            FAIL("expected ScorerError");
        } catch (const ScorerError& e) {
            CHECK(!e.request_id().empty());
            CHECK(std::string(e.what()).find("p_start") != std::string::npos);
        }
    }
    SUBCASE("malformed") {
        StubServer server(any_port(), StubOptions{StubMode::Malformed});
        RemoteScorer scorer(server.endpoint());
        CHECK_THROWS_WITH_AS(scorer.score("H | r", context_of(3)), doctest::Contains("malformed"), ScorerError);
    }
    SUBCASE("service error record") {
        StubServer server(any_port(), StubOptions{StubMode::ErrorReply});
        RemoteScorer scorer(server.endpoint());
        CHECK_THROWS_WITH_AS(scorer.score("H | r", context_of(3)), doctest::Contains("stub refuses"), ScorerError);
    }
    SUBCASE("timeout") {
        StubServer server(any_port(), StubOptions{StubMode::Silent});
        RemoteScorer scorer(server.endpoint(), RemoteOptions{std::chrono::milliseconds(100)});
        CHECK_THROWS_WITH_AS(scorer.score("H | r", context_of(3)), doctest::Contains("timed out"), ScorerError);
    }
}

TEST_CASE("handshake version mismatch is rejected") {
    StubOptions opts;
    opts.version = "v0";
    StubServer server(any_port(), opts);
    CHECK_THROWS_WITH_AS(RemoteScorer{server.endpoint()}, doctest::Contains("handshake"), ScorerError);
}

TEST_CASE("unreachable endpoint names the endpoint") {
    protocol::Endpoint ep;
    {
        StubServer server(any_port(), StubOptions{});
        ep = server.endpoint();
    }
    CHECK_THROWS_WITH_AS(RemoteScorer{ep}, doctest::Contains(ep.to_string().c_str()), ScorerError);
}

TEST_CASE("in-flight requests fail when the service goes away") {
    auto server = std::make_unique<StubServer>(any_port(), StubOptions{StubMode::Silent});
    RemoteScorer scorer(server->endpoint(), RemoteOptions{std::chrono::milliseconds(5000)});
    auto pending = std::async(std::launch::async, [&] { return scorer.score("H | r", context_of(3)); });
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.reset();
    CHECK_THROWS_AS(pending.get(), ScorerError);
    CHECK_THROWS_AS(scorer.score("H | r", context_of(3)), ScorerError);
}
