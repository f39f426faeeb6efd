#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "qaval/ingestion.hpp"
#include "qaval/types.hpp"

namespace qaval {

inline constexpr std::string_view kQuestionSeparator = " | ";
inline constexpr std::size_t kDefaultNegativesPerPositive = 2;

// A question about (head, relation) posed against a bag context. Unanswerable
// samples point at the "null" sentinel with span (0, 1).
struct QaSample {
    std::string question;
    Context context;
    Span answer_span{0, 1};
    bool answerable = false;

    friend bool operator==(const QaSample&, const QaSample&) = default;
};

// "head | relation". Throws Error if either part is empty.
std::string make_question(std::string_view head, std::string_view relation_label);

struct QaDatasetOptions {
    std::size_t negatives_per_positive = kDefaultNegativesPerPositive;
    std::size_t window = kDefaultWindow;
    std::uint64_t seed = 0;
};

struct QaDataset {
    std::vector<QaSample> samples;
    // Bags with a non-NA relation but no tail mention left in their context.
    std::size_t skipped_bags = 0;
};

// One answerable sample per true non-NA relation of each bag, followed by
// negatives_per_positive unanswerable samples per positive over relations
// drawn without replacement from the bag's wrong non-NA relations. NA never
// appears in either role. Each bag uses its own RNG stream derived from the
// seed and the bag id, so output depends only on (bags, schema, options).
QaDataset generate_qa_dataset(const std::vector<Bag>& bags, const RelationSchema& schema,
                              const QaDatasetOptions& options);

// {"question", "context_tokens", "answer_start", "answer_end", "answerable"};
// answer_end is exclusive.
void write_qa_sample(std::ostream& out, const QaSample& sample);

}  // namespace qaval
