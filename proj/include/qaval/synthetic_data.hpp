#pragma once

// Seeded synthetic bags with corrupted RC scores, for end-to-end runs
// without a real corpus or classifier.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qaval/types.hpp"

namespace qaval {

struct SyntheticDataOptions {
    std::size_t n_bags = 500;
    // Including NA, which is label 0.
    std::size_t n_relations = 12;
    // Share of bags whose only gold label is NA.
    double na_fraction = 0.2;
    // Share of bags whose RC argmax is moved to a wrong relation.
    double flip_fraction = 0.3;
    std::size_t max_sentences = 3;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    RelationSchema schema;
    std::vector<Bag> bags;
    std::vector<RcPrediction> predictions;  // in bag order
    // Bags whose RC argmax is not a gold relation by construction.
    std::size_t flipped = 0;
};

// RC scores start from the gold one-hot vector softened by seeded noise: the
// gold relation gets a score in [0.4, 0.9) and every other relation a score
// below 0.05. Exactly round(flip_fraction * n_bags) bags then get one random
// wrong relation lifted above the gold score.
SyntheticData generate_synthetic_data(const SyntheticDataOptions& options);

}  // namespace qaval
