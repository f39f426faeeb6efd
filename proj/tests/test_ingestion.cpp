#include <doctest.h>

#include <optional>
#include <random>
#include <sstream>

#include "qaval/ingestion.hpp"
#include "qaval/synthetic_data.hpp"

using namespace qaval;

namespace {

RelationSchema small_schema() { return RelationSchema::from_labels({"NA", "contains", "founder"}, "NA"); }

const char* kGoodBag =
    R"({"bag_id":"b1","head":"Cook county","tail":"Chicago","relations":["contains"],)"
    R"("sentences":[["In","Cook","county",",","Chicago","grew"]],)"
    R"("head_mentions":[[0,1,3]],"tail_mentions":[[0,4,5]]})";

Sentence numbered(std::size_t n) {
    Sentence s;
    for (std::size_t i = 0; i < n; ++i) s.push_back("t" + std::to_string(i));
    return s;
}

Mention first_in_sentence(const std::vector<Mention>& mentions, std::size_t sentence) {
    std::optional<Mention> best;
    for (const auto& m : mentions) {
        if (m.sentence_index == sentence && (!best || m.token_start < best->token_start)) best = m;
    }
    REQUIRE(best);
    return *best;
}

}  // namespace

TEST_CASE("parse_bags reads one well-formed line") {
    std::istringstream in(kGoodBag);
    auto bags = parse_bags(in, small_schema());
    REQUIRE(bags.size() == 1);
    CHECK(bags[0].bag_id == "b1");
    CHECK(bags[0].head == "Cook county");
    CHECK(bags[0].true_relations == std::vector<RelationIndex>{1});
    CHECK(bags[0].head_mentions[0] == Mention{0, 1, 3});
}

TEST_CASE("parse_bags on an empty stream") {
    std::istringstream in("");
    CHECK(parse_bags(in, small_schema()).empty());
}

TEST_CASE("parse_bags reports unknown labels with the line number") {
    std::string text = std::string(kGoodBag) + "\n" + kGoodBag;
    text.replace(text.rfind("\"contains\""), 10, "\"xyz\"");
    std::istringstream in(text);
    try {
        parse_bags(in, small_schema());
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("xyz") != std::string::npos);
    }
}

TEST_CASE("parse_bags rejects malformed records") {
    auto schema = small_schema();
    auto reject = [&](std::string text, const char* needle) {
        std::istringstream in(text);
        CHECK_THROWS_WITH_AS(parse_bags(in, schema), doctest::Contains(needle), ParseError);
    };
    reject("{not json", "malformed");
    reject("[1,2]", "not a JSON object");
    std::string bag = kGoodBag;
    auto out_of_range = bag;
    out_of_range.replace(out_of_range.find("[[0,4,5]]"), 9, "[[0,4,9]]");
    reject(out_of_range, "out of range");
    auto bad_sentence = bag;
    bad_sentence.replace(bad_sentence.find("[[0,4,5]]"), 9, "[[1,4,5]]");
    reject(bad_sentence, "sentence index");
    auto mismatched = bag;
    mismatched.replace(mismatched.find("[[0,4,5]]"), 9, "[[0,3,4]]");
    reject(mismatched, "does not match");
    auto missing = bag;
    missing.replace(missing.find("\"tail_mentions\":[[0,4,5]]"), 25, "\"tail_mentions\":[]");
    reject(missing, "lacks a tail mention");
    reject(bag + "\n" + bag, "duplicate bag_id");
    auto na_mix = bag;
    na_mix.replace(na_mix.find("[\"contains\"]"), 12, "[\"contains\",\"NA\"]");
    reject(na_mix, "NA cannot be combined");
}

TEST_CASE("parse_rc_predictions") {
    std::vector<std::string> labels{"NA"};
    for (int i = 1; i < 53; ++i) labels.push_back("r" + std::to_string(i));
    auto schema = RelationSchema::from_labels(labels, "NA");
    auto record = [](const std::string& id, std::size_t n, double v) {
        std::string s = R"({"bag_id":")" + id + R"(","scores":[)";
        for (std::size_t i = 0; i < n; ++i) s += (i ? "," : "") + std::to_string(v);
        return s + "]}\n";
    };

    SUBCASE("53 scores against a 53-label schema") {
        std::istringstream in(record("a", 53, 0.5));
        auto preds = parse_rc_predictions(in, schema);
        REQUIRE(preds.size() == 1);
        CHECK(preds.at("a").scores.size() == 53);
    }
    SUBCASE("52 scores is a length mismatch") {
        std::istringstream in(record("a", 52, 0.5));
        CHECK_THROWS_WITH_AS(parse_rc_predictions(in, schema), doctest::Contains("52 entries"), ParseError);
    }
    SUBCASE("duplicate bag ids") {
        std::istringstream in(record("a", 53, 0.5) + record("a", 53, 0.5));
        CHECK_THROWS_WITH_AS(parse_rc_predictions(in, schema), doctest::Contains("duplicate"), ParseError);
    }
    SUBCASE("scores outside [0, 1]") {
        std::istringstream in(record("a", 53, 1.5));
        CHECK_THROWS_AS(parse_rc_predictions(in, schema), ParseError);
    }
    SUBCASE("tolerance band is clamped") {
        std::string text = R"({"bag_id":"a","scores":[1.0000000001,-0.0000000001)";
        for (int i = 2; i < 53; ++i) text += ",0";
        std::istringstream in(text + "]}");
        auto preds = parse_rc_predictions(in, schema);
        CHECK(preds.at("a").scores[0] == 1.0);
        CHECK(preds.at("a").scores[1] == 0.0);
    }
}

TEST_CASE("truncate_sentence keeps a window around both entities") {
    const auto s = numbered(10);
    // [max(0, 2-2), min(10, 7+2)) = [0, 9)
    auto cut = truncate_sentence(s, Mention{0, 2, 3}, Mention{0, 6, 7}, 2);
    CHECK(cut == Sentence(s.begin(), s.begin() + 9));

    CHECK(truncate_sentence(s, Mention{0, 2, 3}, Mention{0, 6, 7}, 40) == s);

    // Tail before head, no window: tail start (1) to head end (5).
    auto reversed = truncate_sentence(s, Mention{0, 4, 5}, Mention{0, 1, 2}, 0);
    CHECK(reversed == Sentence(s.begin() + 1, s.begin() + 5));

    auto middle = truncation_range(100, Mention{0, 50, 52}, Mention{0, 60, 61}, 40);
    CHECK(middle == Span{10, 100});
}

TEST_CASE("truncation properties on random sentences") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t len = 2 + rng() % 120;
        const auto s = numbered(len);
        auto pick = [&] {
            std::size_t a = rng() % len;
            std::size_t b = a + 1 + rng() % std::min<std::size_t>(3, len - a);
            return Mention{0, a, b};
        };
        const Mention head = pick(), tail = pick();
        const std::size_t window = rng() % 50;

        const auto range = truncation_range(len, head, tail, window);
        const auto cut = truncate_sentence(s, head, tail, window);
        REQUIRE(cut.size() == range.end - range.start);
        // Both mentions survive.
        CHECK(range.start <= std::min(head.token_start, tail.token_start));
        CHECK(range.end >= std::max(head.token_end, tail.token_end));
        // Length bound.
        const std::size_t region = std::max(head.token_end, tail.token_end) - std::min(head.token_start, tail.token_start);
        CHECK(cut.size() <= 2 * window + region);
        // Idempotent once mentions are re-based into the cut.
        auto shift = [&](Mention m) { return Mention{0, m.token_start - range.start, m.token_end - range.start}; };
        CHECK(truncate_sentence(cut, shift(head), shift(tail), window) == cut);
    }
}

TEST_CASE("build_context on a single sentence") {
    Bag bag;
    bag.bag_id = "b";
    bag.head = "J";
    bag.tail = "A";
    bag.sentences = {{"a", "J", "b", "A", "c"}};
    bag.head_mentions = {{0, 1, 2}};
    bag.tail_mentions = {{0, 3, 4}};
    auto ctx = build_context(bag, 1);
    CHECK(ctx.tokens == std::vector<std::string>{"null", "a", "J", "b", "A", "c"});
    REQUIRE(ctx.tail_span);
    CHECK(*ctx.tail_span == Span{4, 5});
}

TEST_CASE("build_context concatenates sentences with offsets") {
    Bag bag;
    bag.head = "H";
    bag.tail = "T";
    // Sentence 0 cut to [1, 5) with window 1; sentence 1 cut to [0, 3).
    bag.sentences = {{"x", "y", "H", "z", "T", "w", "v"}, {"T", "H", "q", "r"}};
    bag.head_mentions = {{0, 2, 3}, {1, 1, 2}};
    bag.tail_mentions = {{0, 4, 5}, {1, 0, 1}};
    auto ctx = build_context(bag, 1);
    CHECK(ctx.tokens == std::vector<std::string>{"null", "y", "H", "z", "T", "w", "T", "H", "q"});
    REQUIRE(ctx.tail_span);
    CHECK(*ctx.tail_span == Span{4, 5});

    // A later tail mention outside the window is not chosen; the first
    // surviving one in concatenation order is.
    bag.sentences[0] = {"H", "z", "T", "a", "b", "c", "T"};
    bag.head_mentions[0] = {0, 0, 1};
    bag.tail_mentions = {{0, 6, 7}, {0, 2, 3}, {1, 0, 1}};
    ctx = build_context(bag, 0);
    CHECK(ctx.tokens == std::vector<std::string>{"null", "H", "z", "T", "T", "H"});
    CHECK(*ctx.tail_span == Span{3, 4});
}

TEST_CASE("context invariants over synthetic bags") {
    SyntheticDataOptions opts;
    opts.n_bags = 200;
    opts.seed = 3;
    auto data = generate_synthetic_data(opts);
    for (std::size_t window : {0u, 5u, 40u}) {
        for (const auto& bag : data.bags) {
            auto ctx = build_context(bag, window);
            REQUIRE(!ctx.tokens.empty());
            CHECK(ctx.tokens[0] == "null");
            REQUIRE(ctx.tail_span);
            CHECK(ctx.tail_span->start >= 1);
            CHECK(ctx.tail_span->end <= ctx.size());
            std::string tail;
            for (auto i = ctx.tail_span->start; i < ctx.tail_span->end; ++i) tail += (tail.empty() ? "" : " ") + ctx.tokens[i];
            CHECK(tail == bag.tail);

            std::size_t bound = 1;
            for (std::size_t s = 0; s < bag.sentences.size(); ++s) {
                const Mention h = first_in_sentence(bag.head_mentions, s);
                const Mention t = first_in_sentence(bag.tail_mentions, s);
                bound += 2 * window + std::max(h.token_end, t.token_end) - std::min(h.token_start, t.token_start);
            }
            CHECK(ctx.size() <= bound);
        }
    }
}

TEST_CASE("bag and prediction files round-trip") {
    SyntheticDataOptions opts;
    opts.n_bags = 50;
    opts.seed = 11;
    auto data = generate_synthetic_data(opts);

    std::ostringstream schema_out, bags_out, rc_out;
    write_schema(schema_out, data.schema);
    for (const auto& b : data.bags) write_bag(bags_out, b, data.schema);
    for (const auto& p : data.predictions) write_rc_prediction(rc_out, p);

    std::istringstream schema_in(schema_out.str()), bags_in(bags_out.str()), rc_in(rc_out.str());
    auto schema = parse_schema(schema_in);
    CHECK(schema.labels() == data.schema.labels());
    CHECK(schema.na_index() == data.schema.na_index());
    CHECK(parse_bags(bags_in, schema) == data.bags);
    auto preds = parse_rc_predictions(rc_in, schema);
    REQUIRE(preds.size() == data.predictions.size());
    for (const auto& p : data.predictions) CHECK(preds.at(p.bag_id) == p);
}
