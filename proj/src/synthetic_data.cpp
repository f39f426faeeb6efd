#include "qaval/synthetic_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <sstream>

#include "qaval/random.hpp"

namespace qaval {

namespace {

constexpr std::size_t kVocabulary = 100;

std::vector<std::string> split_words(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

void append_filler(Sentence& sentence, std::size_t count, std::mt19937_64& rng) {
    for (std::size_t i = 0; i < count; ++i) sentence.push_back("w" + std::to_string(uniform_below(rng, kVocabulary)));
}

Mention append_entity(Sentence& sentence, const std::vector<std::string>& words, std::size_t sentence_index) {
    Mention m{sentence_index, sentence.size(), sentence.size() + words.size()};
    sentence.insert(sentence.end(), words.begin(), words.end());
    return m;
}

void add_sentence(Bag& bag, std::mt19937_64& rng) {
    const auto head_words = split_words(bag.head);
    const auto tail_words = split_words(bag.tail);
    const std::size_t index = bag.sentences.size();
    Sentence s;
    const bool head_first = uniform01(rng) < 0.75;

    append_filler(s, uniform_below(rng, 60), rng);
    Mention first = append_entity(s, head_first ? head_words : tail_words, index);
    append_filler(s, 1 + uniform_below(rng, 10), rng);
    Mention second = append_entity(s, head_first ? tail_words : head_words, index);
    bag.head_mentions.push_back(head_first ? first : second);
    bag.tail_mentions.push_back(head_first ? second : first);
    append_filler(s, uniform_below(rng, 60), rng);
    if (uniform01(rng) < 0.2) {
        // A second tail mention, sometimes beyond the truncation window.
        append_filler(s, 1 + uniform_below(rng, 5), rng);
        bag.tail_mentions.push_back(append_entity(s, tail_words, index));
    }
    bag.sentences.push_back(std::move(s));
}

}  // namespace

SyntheticData generate_synthetic_data(const SyntheticDataOptions& options) {
    if (options.n_relations < 2) throw ConfigError("synthetic data needs at least two relations");
    if (options.max_sentences < 1) throw ConfigError("max_sentences must be at least 1");
    if (!(options.na_fraction >= 0.0 && options.na_fraction <= 1.0) ||
        !(options.flip_fraction >= 0.0 && options.flip_fraction <= 1.0)) {
        throw ConfigError("fractions must lie in [0, 1]");
    }

    std::vector<std::string> labels{"NA"};
    for (std::size_t r = 1; r < options.n_relations; ++r) labels.push_back("rel_" + std::to_string(r));
    SyntheticData data{RelationSchema::from_labels(labels, "NA"), {}, {}, 0};
    const std::size_t l = options.n_relations;

    for (std::size_t i = 0; i < options.n_bags; ++i) {
        const std::string id = "bag-" + std::to_string(i);
        auto rng = derived_rng(options.seed, id);
        Bag bag;
        bag.bag_id = id;
        bag.head = "Head" + std::to_string(i);
        bag.tail = i % 2 == 0 ? "Tail" + std::to_string(i) : "Tail" + std::to_string(i) + " City";
        const std::size_t n_sentences = 1 + uniform_below(rng, options.max_sentences);
        for (std::size_t s = 0; s < n_sentences; ++s) add_sentence(bag, rng);

        const RelationIndex gold = uniform01(rng) < options.na_fraction ? 0 : 1 + uniform_below(rng, l - 1);
        bag.true_relations = {gold};

        RcPrediction pred{id, std::vector<double>(l)};
        for (auto& s : pred.scores) s = 0.05 * uniform01(rng);
        pred.scores[gold] = 0.4 + 0.5 * uniform01(rng);
        data.bags.push_back(std::move(bag));
        data.predictions.push_back(std::move(pred));
    }

    std::vector<std::size_t> order(options.n_bags);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = derived_rng(options.seed, "flip");
    const auto n_flip = static_cast<std::size_t>(std::llround(options.flip_fraction * static_cast<double>(options.n_bags)));
    partial_shuffle(std::span(order), n_flip, rng);
    for (std::size_t f = 0; f < n_flip; ++f) {
        auto& pred = data.predictions[order[f]];
        const RelationIndex gold = data.bags[order[f]].true_relations.front();
        RelationIndex wrong = uniform_below(rng, l - 1);
        if (wrong >= gold) ++wrong;
        const double g = pred.scores[gold];
        pred.scores[wrong] = g + (1.0 - g) * (0.1 + 0.9 * uniform01(rng));
    }
    data.flipped = n_flip;
    return data;
}

}  // namespace qaval
