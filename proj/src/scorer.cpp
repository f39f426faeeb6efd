#include "qaval/scorer.hpp"

#include <atomic>
#include <future>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "qaval/qa_samples.hpp"
#include "qaval/random.hpp"

namespace qaval {

using json = nlohmann::json;

FactTable facts_from_bags(const std::vector<Bag>& bags, const RelationSchema& schema) {
    FactTable facts;
    for (const auto& bag : bags) {
        for (auto r : bag.true_relations) {
            if (!schema.is_na(r)) facts.insert(Fact{bag.head, r, bag.tail});
        }
    }
    return facts;
}

// ---------------------------------------------------------------------------
// SyntheticScorer

SyntheticScorer::SyntheticScorer(RelationSchema schema, FactTable facts, double noise, std::uint64_t seed)
    : schema_(std::move(schema)), facts_(std::move(facts)), noise_(noise), seed_(seed) {
    if (!(noise_ >= 0.0 && noise_ < 1.0)) throw ConfigError("synthetic scorer noise must lie in [0, 1)");
}

QaScore SyntheticScorer::score(const std::string& question, const Context& context) const {
    const std::size_t n = context.size();
    if (n == 0) throw ScorerError("", "empty context");

    bool is_fact = false;
    if (auto sep = question.rfind(kQuestionSeparator); sep != std::string::npos && context.tail_span) {
        auto relation = schema_.find(std::string_view(question).substr(sep + kQuestionSeparator.size()));
        if (relation) {
            std::string tail;
            for (auto i = context.tail_span->start; i < context.tail_span->end; ++i) {
                if (i > context.tail_span->start) tail += ' ';
                tail += context.tokens[i];
            }
            is_fact = facts_.contains(Fact{question.substr(0, sep), *relation, std::move(tail)});
        }
    }

    std::string key = question;
    for (const auto& tok : context.tokens) {
        key += '\x1f';
        key += tok;
    }
    auto rng = derived_rng(seed_, key);
    const double u = uniform01(rng);
    const double u_peak = uniform01(rng);

    const double peak = n == 1 ? 1.0 : 1.0 - noise_ * u_peak;
    const double rest = n == 1 ? 0.0 : (1.0 - peak) / static_cast<double>(n - 1);
    QaScore out;
    out.p_start.assign(n, rest);
    out.p_end.assign(n, rest);
    if (is_fact) {
        out.p_ans = 1.0 - noise_ * u;
        out.p_start[context.tail_span->start] = peak;
        out.p_end[context.tail_span->end - 1] = peak;
    } else {
        out.p_ans = noise_ * u;
        out.p_start[0] = peak;
        out.p_end[0] = peak;
    }
    return out;
}

// ---------------------------------------------------------------------------
// RemoteScorer

struct RemoteScorer::Impl {
    protocol::Endpoint endpoint;
    RemoteOptions options;
    protocol::Socket socket;
    protocol::FrameReader reader{-1};

    std::mutex write_mutex;
    std::mutex pending_mutex;
    std::unordered_map<std::string, std::promise<json>> pending;
    std::string failure;  // set once the connection is unusable
    std::atomic<std::uint64_t> next_id{0};
    std::thread reader_thread;

    ScorerError error(std::string id, const std::string& message) const {
        return ScorerError(std::move(id), message + " [" + endpoint.to_string() + "]");
    }

    void fail_all(const std::string& message) {
        std::lock_guard lock(pending_mutex);
        if (failure.empty()) failure = message;
        for (auto& [id, promise] : pending) promise.set_exception(std::make_exception_ptr(error(id, message)));
        pending.clear();
    }

    void read_loop() {
        try {
            while (auto frame = reader.next()) {
                json msg = json::parse(*frame, nullptr, false);
                if (msg.is_discarded() || !msg.is_object()) continue;
                auto id = msg.find("id");
                if (id == msg.end() || !id->is_string()) continue;
                std::lock_guard lock(pending_mutex);
                auto it = pending.find(id->get<std::string>());
                if (it == pending.end()) continue;
                it->second.set_value(std::move(msg));
                pending.erase(it);
            }
            fail_all("connection closed by the scorer service");
        } catch (const std::exception& e) {
            fail_all(e.what());
        }
    }

    json roundtrip(json request) {
        const std::string id = "r" + std::to_string(next_id.fetch_add(1));
        request["id"] = id;
        std::future<json> reply;
        {
            std::lock_guard lock(pending_mutex);
            if (!failure.empty()) throw error(id, failure);
            reply = pending[id].get_future();
        }
        try {
            std::lock_guard lock(write_mutex);
            socket.write_frame(request.dump());
        } catch (const std::exception& e) {
            std::lock_guard lock(pending_mutex);
            pending.erase(id);
            throw error(id, e.what());
        }
        if (reply.wait_for(options.timeout) != std::future_status::ready) {
            std::lock_guard lock(pending_mutex);
            pending.erase(id);
            throw error(id, "timed out after " + std::to_string(options.timeout.count()) + " ms");
        }
        json response = reply.get();
        if (response.value("type", "") == "error") {
            throw error(id, "service error: " + response.value("message", std::string("(no message)")));
        }
        return response;
    }
};

RemoteScorer::RemoteScorer(protocol::Endpoint endpoint, RemoteOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->endpoint = std::move(endpoint);
    impl_->options = options;
    try {
        impl_->socket = protocol::connect_to(impl_->endpoint);
        impl_->reader = protocol::FrameReader(impl_->socket.fd());
        impl_->socket.write_frame(json{{"type", "hello"}, {"v", protocol::kVersion}}.dump());
        auto frame = impl_->reader.next();
        if (!frame) throw protocol::ProtocolError("connection closed during handshake");
        json hello = json::parse(*frame, nullptr, false);
        if (!hello.is_object() || hello.value("type", "") != "hello" || hello.value("v", "") != protocol::kVersion) {
            throw protocol::ProtocolError("handshake failed: expected protocol version " +
                                          std::string(protocol::kVersion));
        }
    } catch (const ScorerError&) {
        throw;
    } catch (const std::exception& e) {
        throw ScorerError("", std::string(e.what()) + " [" + impl_->endpoint.to_string() + "]");
    }
    impl_->reader_thread = std::thread([impl = impl_.get()] { impl->read_loop(); });
}

RemoteScorer::~RemoteScorer() {
    impl_->socket.shutdown();
    if (impl_->reader_thread.joinable()) impl_->reader_thread.join();
}

const protocol::Endpoint& RemoteScorer::endpoint() const noexcept { return impl_->endpoint; }

QaScore RemoteScorer::score(const std::string& question, const Context& context) const {
    json response =
        impl_->roundtrip(json{{"type", "score"}, {"question", question}, {"context_tokens", context.tokens}});
    const std::string id = response.at("id").get<std::string>();
    QaScore out;
    try {
        out.p_ans = response.at("p_ans").get<double>();
        out.p_start = response.at("p_start").get<std::vector<double>>();
        out.p_end = response.at("p_end").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw impl_->error(id, std::string("malformed response: ") + e.what());
    }
    try {
        check_qa_score(out, context.size());
    } catch (const Error& e) {
        throw impl_->error(id, std::string("invalid response: ") + e.what());
    }
    return out;
}

bool RemoteScorer::healthy() const {
    try {
        return impl_->roundtrip(json{{"type", "health"}}).value("status", "") == "ok";
    } catch (const ScorerError&) {
        return false;
    }
}

std::unique_ptr<QaScorer> make_scorer(const ScorerSpec& spec, const RelationSchema& schema) {
    if (const auto* synthetic = std::get_if<SyntheticScorerSpec>(&spec)) {
        return std::make_unique<SyntheticScorer>(schema, synthetic->facts, synthetic->noise, synthetic->seed);
    }
    const auto& remote = std::get<RemoteScorerSpec>(spec);
    return std::make_unique<RemoteScorer>(remote.endpoint, remote.options);
}

}  // namespace qaval
