#pragma once

// QA scorers. A scorer maps (question, context) to a QaScore; implementations
// must be safe to call concurrently from several workers.

#include <chrono>
#include <compare>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "qaval/ingestion.hpp"
#include "qaval/protocol.hpp"
#include "qaval/qa_math.hpp"
#include "qaval/types.hpp"

namespace qaval {

// Scoring failure for one request; carries the request id when one exists.
class ScorerError : public Error {
public:
    ScorerError(std::string request_id, const std::string& message)
        : Error(request_id.empty() ? message : "request " + request_id + ": " + message),
          request_id_(std::move(request_id)) {}

    const std::string& request_id() const noexcept { return request_id_; }

private:
    std::string request_id_;
};

class QaScorer {
public:
    virtual ~QaScorer() = default;

    virtual QaScore score(const std::string& question, const Context& context) const = 0;

    // False when repeated calls may return different scores.
    virtual bool deterministic() const noexcept { return true; }
};

struct Fact {
    std::string head;
    RelationIndex relation = 0;
    std::string tail;

    friend auto operator<=>(const Fact&, const Fact&) = default;
};

using FactTable = std::set<Fact>;

// Every gold non-NA (head, relation, tail) triple of the given bags.
FactTable facts_from_bags(const std::vector<Bag>& bags, const RelationSchema& schema);

// Oracle scorer over a known fact table. For a fact it returns
// p_ans = 1 - noise*u with (1 - noise*u') of the start/end mass on the tail
// span endpoints; otherwise p_ans = noise*u with (1 - noise*u') of the mass
// on the "null" position. Leftover mass is spread evenly over the remaining
// positions. u and u' are drawn from a stream keyed by the seed, the question
// and the context, so a given request always gets the same score.
class SyntheticScorer final : public QaScorer {
public:
    SyntheticScorer(RelationSchema schema, FactTable facts, double noise, std::uint64_t seed);

    QaScore score(const std::string& question, const Context& context) const override;

    double noise() const noexcept { return noise_; }

private:
    RelationSchema schema_;
    FactTable facts_;
    double noise_;
    std::uint64_t seed_;
};

struct RemoteOptions {
    std::chrono::milliseconds timeout{30000};
};

// Client for the scorer wire protocol. One connection is shared by all
// callers; a background reader routes responses to waiting callers by id.
class RemoteScorer final : public QaScorer {
public:
    // Connects and performs the version handshake. Throws ScorerError naming
    // the endpoint on failure.
    explicit RemoteScorer(protocol::Endpoint endpoint, RemoteOptions options = {});
    ~RemoteScorer() override;

    RemoteScorer(const RemoteScorer&) = delete;
    RemoteScorer& operator=(const RemoteScorer&) = delete;

    // Sends one request and validates the response against the context.
    QaScore score(const std::string& question, const Context& context) const override;
    bool deterministic() const noexcept override { return false; }

    // Sends a health-check record; true when the server answers "ok".
    bool healthy() const;

    const protocol::Endpoint& endpoint() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct SyntheticScorerSpec {
    FactTable facts;
    double noise = 0.0;
    std::uint64_t seed = 0;
};

struct RemoteScorerSpec {
    protocol::Endpoint endpoint;
    RemoteOptions options;
};

using ScorerSpec = std::variant<SyntheticScorerSpec, RemoteScorerSpec>;

std::unique_ptr<QaScorer> make_scorer(const ScorerSpec& spec, const RelationSchema& schema);

}  // namespace qaval
