#include "qaval/types.hpp"

#include <algorithm>
#include <cmath>

namespace qaval {

RelationSchema RelationSchema::from_labels(std::vector<std::string> labels, std::string_view na_label) {
    if (labels.size() < 2) {
        throw SchemaError("relation schema needs at least two labels, got " + std::to_string(labels.size()));
    }
    RelationSchema schema;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].empty()) {
            throw SchemaError("relation label at position " + std::to_string(i) + " is empty");
        }
        if (!schema.index_.emplace(labels[i], i).second) {
            throw SchemaError("duplicate relation label '" + labels[i] + "'");
        }
    }
    auto na = schema.index_.find(std::string(na_label));
    if (na == schema.index_.end()) {
        throw SchemaError("NA label '" + std::string(na_label) + "' is not in the relation schema");
    }
    schema.na_index_ = na->second;
    schema.labels_ = std::move(labels);
    return schema;
}

const std::string& RelationSchema::label(RelationIndex r) const {
    if (r >= labels_.size()) {
        throw SchemaError("relation index " + std::to_string(r) + " out of range for schema of size " +
                          std::to_string(labels_.size()));
    }
    return labels_[r];
}

std::optional<RelationIndex> RelationSchema::find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

RelationIndex RelationSchema::index_of(std::string_view label) const {
    if (auto r = find(label)) return *r;
    throw SchemaError("unknown relation label '" + std::string(label) + "'");
}

std::vector<RelationIndex> RelationSchema::non_na_indices() const {
    std::vector<RelationIndex> out;
    out.reserve(labels_.size() - 1);
    for (RelationIndex r = 0; r < labels_.size(); ++r) {
        if (r != na_index_) out.push_back(r);
    }
    return out;
}

bool Bag::has_relation(RelationIndex r) const {
    return std::binary_search(true_relations.begin(), true_relations.end(), r);
}

namespace {

struct StrategyChecker {
    const RelationSchema& schema;

    void operator()(const QaExtremesSelection& s) const {
        if (!std::isfinite(s.alpha_percent) || !std::isfinite(s.beta_percent) || s.alpha_percent < 0.0 ||
            s.beta_percent < 0.0) {
            throw ConfigError("alpha and beta must be non-negative percentages");
        }
        if (s.alpha_percent + s.beta_percent > 100.0) {
            throw ConfigError("alpha + beta must not exceed 100 (got " +
                              std::to_string(s.alpha_percent + s.beta_percent) + ")");
        }
    }

    void operator()(const RcTopKSelection& s) const {
        if (s.k < 1) throw ConfigError("k must be at least 1");
        if (s.k > schema.size()) {
            throw ConfigError("k = " + std::to_string(s.k) + " exceeds the number of relations (" +
                              std::to_string(schema.size()) + ")");
        }
    }
};

}  // namespace

void ValidationConfig::check(const RelationSchema& schema) const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("lambda must be a finite positive number");
    }
    if (!(c > 0.0 && c < 1.0)) {
        throw ConfigError("c must lie strictly between 0 and 1");
    }
    std::visit(StrategyChecker{schema}, strategy);
}

}  // namespace qaval
