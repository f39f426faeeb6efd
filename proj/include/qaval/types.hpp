#pragma once

// Domain types shared across the validation pipeline.
//
// Relations are referenced by their index into a RelationSchema everywhere
// inside the library; label strings only appear at file boundaries.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace qaval {

using RelationIndex = std::size_t;

// Base for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class RelationSchema {
public:
    // Throws SchemaError on duplicate/empty labels, fewer than two labels,
    // or when na_label is not one of the labels.
    static RelationSchema from_labels(std::vector<std::string> labels, std::string_view na_label);

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }
    RelationIndex na_index() const noexcept { return na_index_; }
    bool is_na(RelationIndex r) const noexcept { return r == na_index_; }

    const std::string& label(RelationIndex r) const;
    std::optional<RelationIndex> find(std::string_view label) const;
    // Like find() but throws SchemaError naming the label.
    RelationIndex index_of(std::string_view label) const;

    // All indices except NA, ascending.
    std::vector<RelationIndex> non_na_indices() const;

private:
    RelationSchema() = default;

    std::vector<std::string> labels_;
    std::unordered_map<std::string, RelationIndex> index_;
    RelationIndex na_index_ = 0;
};

// Token range [token_start, token_end) inside one sentence of a bag.
struct Mention {
    std::size_t sentence_index = 0;
    std::size_t token_start = 0;
    std::size_t token_end = 0;

    std::size_t length() const noexcept { return token_end - token_start; }
    friend bool operator==(const Mention&, const Mention&) = default;
};

using Sentence = std::vector<std::string>;

// One entity pair with every sentence that mentions it.
struct Bag {
    std::string bag_id;
    std::string head;
    std::string tail;
    std::vector<Sentence> sentences;
    std::vector<Mention> head_mentions;
    std::vector<Mention> tail_mentions;
    // Sorted ascending, no duplicates. Empty at inference time.
    std::vector<RelationIndex> true_relations;

    bool has_relation(RelationIndex r) const;
    friend bool operator==(const Bag&, const Bag&) = default;
};

// Score vector from an external relation classifier, one entry per relation.
// Entries lie in [0, 1] but need not sum to one.
struct RcPrediction {
    std::string bag_id;
    std::vector<double> scores;

    friend bool operator==(const RcPrediction&, const RcPrediction&) = default;
};

// Validate the relations with the most extreme QA scores: the top alpha
// percent and the bottom beta percent of the non-NA relations of a bag.
struct QaExtremesSelection {
    double alpha_percent = 10.0;
    double beta_percent = 20.0;
};

// Validate the k relations the relation classifier scored highest.
struct RcTopKSelection {
    std::size_t k = 3;
};

using SelectionStrategy = std::variant<QaExtremesSelection, RcTopKSelection>;

struct ValidationConfig {
    SelectionStrategy strategy = QaExtremesSelection{};
    // Weight of the QA score against the RC score in the fused score.
    double lambda = 10.0;
    // Stand-in QA score for relations that are not validated.
    double c = 0.9;

    // Throws ConfigError when any parameter is out of its domain or, for
    // top-k selection, k exceeds the schema size.
    void check(const RelationSchema& schema) const;
};

}  // namespace qaval
