#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "qaval/qa_samples.hpp"
#include "qaval/synthetic_data.hpp"

using namespace qaval;

namespace {

Bag single_bag(std::vector<RelationIndex> relations) {
    Bag bag;
    bag.bag_id = "b0";
    bag.head = "Cook county";
    bag.tail = "Chicago";
    bag.sentences = {{"Cook", "county", "contains", "Chicago", "."}};
    bag.head_mentions = {{0, 0, 2}};
    bag.tail_mentions = {{0, 3, 4}};
    bag.true_relations = std::move(relations);
    return bag;
}

std::string dump(const QaDataset& dataset) {
    std::ostringstream out;
    for (const auto& s : dataset.samples) write_qa_sample(out, s);
    return out.str();
}

}  // namespace

TEST_CASE("make_question joins head and relation with a bar") {
    CHECK(make_question("Jobs", "co-founded") == "Jobs | co-founded");
    CHECK(make_question("Jobs", "located in") == "Jobs | located in");
    CHECK(make_question("Cook county", "contains") == "Cook county | contains");
    CHECK_THROWS_AS(make_question("", "contains"), Error);
    CHECK_THROWS_AS(make_question("Jobs", ""), Error);
}

TEST_CASE("one positive and two negatives per true relation") {
    auto schema = RelationSchema::from_labels({"NA", "contains", "founder", "lives_in", "born_in"}, "NA");
    auto ds = generate_qa_dataset({single_bag({1})}, schema, {2, 40, 5});
    REQUIRE(ds.samples.size() == 3);
    CHECK(ds.samples[0].answerable);
    CHECK(ds.samples[0].question == "Cook county | contains");
    CHECK(ds.samples[0].answer_span == Span{4, 5});
    CHECK(ds.samples[0].context.tokens[4] == "Chicago");
    for (std::size_t i = 1; i < 3; ++i) {
        CHECK_FALSE(ds.samples[i].answerable);
        CHECK(ds.samples[i].answer_span == Span{0, 1});
        CHECK(ds.samples[i].question != "Cook county | contains");
        CHECK(ds.samples[i].question.find("| NA") == std::string::npos);
    }
}

TEST_CASE("NA bags produce nothing") {
    auto schema = RelationSchema::from_labels({"NA", "contains", "founder"}, "NA");
    auto ds = generate_qa_dataset({single_bag({0})}, schema, {});
    CHECK(ds.samples.empty());
    CHECK(ds.skipped_bags == 0);
}

TEST_CASE("neg_per_pos of zero gives positives only") {
    auto schema = RelationSchema::from_labels({"NA", "contains", "founder", "x"}, "NA");
    auto ds = generate_qa_dataset({single_bag({1, 2})}, schema, {0, 40, 1});
    REQUIRE(ds.samples.size() == 2);
    CHECK(std::all_of(ds.samples.begin(), ds.samples.end(), [](const QaSample& s) { return s.answerable; }));
}

TEST_CASE("negatives clamp to the available wrong relations") {
    auto schema = RelationSchema::from_labels({"NA", "contains", "founder"}, "NA");
    auto ds = generate_qa_dataset({single_bag({1})}, schema, {5, 40, 1});
    REQUIRE(ds.samples.size() == 2);
    CHECK(ds.samples[1].question == "Cook county | founder");
}

TEST_CASE("multi-label bags exclude the whole true set from negatives") {
    auto schema = RelationSchema::from_labels({"NA", "a", "b", "c", "d", "e", "f", "g"}, "NA");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto ds = generate_qa_dataset({single_bag({1, 2})}, schema, {2, 40, seed});
        REQUIRE(ds.samples.size() == 6);
        std::set<std::string> questions;
        for (const auto& s : ds.samples) {
            questions.insert(s.question);
            if (!s.answerable) {
                CHECK(s.question != "Cook county | a");
                CHECK(s.question != "Cook county | b");
            }
        }
        CHECK(questions.size() == 6);
    }
}

TEST_CASE("bags whose context has no tail mention are skipped and counted") {
    auto schema = RelationSchema::from_labels({"NA", "contains"}, "NA");
    Bag empty = single_bag({1});
    empty.sentences.clear();
    empty.head_mentions.clear();
    empty.tail_mentions.clear();
    auto ds = generate_qa_dataset({empty, single_bag({1})}, schema, {});
    CHECK(ds.skipped_bags == 1);
    CHECK(ds.samples.size() == 1);
}

TEST_CASE("dataset invariants on synthetic bags") {
    SyntheticDataOptions opts;
    opts.n_bags = 300;
    opts.seed = 21;
    auto data = generate_synthetic_data(opts);
    QaDatasetOptions qa{2, 40, 99};
    auto ds = generate_qa_dataset(data.bags, data.schema, qa);

    std::size_t answerable = 0, unanswerable = 0;
    for (const auto& s : ds.samples) {
        CHECK(s.context.tokens[0] == "null");
        CHECK(s.question.find(" | NA") == std::string::npos);
        CHECK(s.answerable == (s.answer_span != Span{0, 1}));
        if (s.answerable) {
            ++answerable;
            std::string text;
            for (auto i = s.answer_span.start; i < s.answer_span.end; ++i) {
                text += (text.empty() ? "" : " ") + s.context.tokens[i];
            }
            const auto head = s.question.substr(0, s.question.find(" | "));
            auto bag = std::find_if(data.bags.begin(), data.bags.end(), [&](const Bag& b) { return b.head == head; });
            REQUIRE(bag != data.bags.end());
            CHECK(text == bag->tail);
        } else {
            ++unanswerable;
        }
    }
    CHECK(answerable > 0);
    CHECK(unanswerable == 2 * answerable);

    // Same seed, same bytes; another seed draws different negatives.
    CHECK(dump(generate_qa_dataset(data.bags, data.schema, qa)) == dump(ds));
    qa.seed = 100;
    CHECK(dump(generate_qa_dataset(data.bags, data.schema, qa)) != dump(ds));
}

TEST_CASE("QA sample record layout") {
    QaSample s{"H | r", Context{{"null", "H", "T"}, Span{2, 3}}, Span{2, 3}, true};
    std::ostringstream out;
    write_qa_sample(out, s);
    CHECK(out.str() ==
          R"({"question":"H | r","context_tokens":["null","H","T"],"answer_start":2,"answer_end":3,"answerable":true})"
          "\n");
}
