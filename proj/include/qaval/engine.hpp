#pragma once

// Candidate selection and score update. Selected relations fuse their QA
// validation score with the RC score; every other relation (NA included)
// fuses with the constant c instead.

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qaval/ingestion.hpp"
#include "qaval/scorer.hpp"
#include "qaval/types.hpp"

namespace qaval {

struct UpdatedPrediction {
    std::string bag_id;
    std::vector<double> scores;
    // True where the QA-fused update was applied. Never true for NA.
    std::vector<bool> validated;

    friend bool operator==(const UpdatedPrediction&, const UpdatedPrediction&) = default;
};

// ((p_qa)^lambda * p)^(1 / (lambda + 1))
double update_validated(double p_qa, double p, double lambda);

// (c^lambda * p)^(1 / (lambda + 1))
double update_unvalidated(double p, double c, double lambda);

// Top ceil(alpha*m/100) plus bottom ceil(beta*m/100) non-NA relations by QA
// score, m being the non-NA count. `qa_scores` is indexed by relation; the NA
// entry is ignored. Ties rank by ascending relation index. Result is sorted.
std::vector<RelationIndex> select_by_qa_extremes(std::span<const double> qa_scores, const RelationSchema& schema,
                                                 double alpha_percent, double beta_percent);

// Top-k relations by RC score over all relations (ties by ascending index),
// with NA dropped afterwards. Result is sorted.
std::vector<RelationIndex> select_by_rc_top_k(std::span<const double> rc_scores, const RelationSchema& schema,
                                              std::size_t k);

class BagValidationError : public Error {
public:
    BagValidationError(std::string bag_id, const std::string& message)
        : Error("bag " + bag_id + ": " + message), bag_id_(std::move(bag_id)) {}

    const std::string& bag_id() const noexcept { return bag_id_; }

private:
    std::string bag_id_;
};

struct EngineOptions {
    std::size_t window = kDefaultWindow;
};

// Throws BagValidationError when the prediction does not belong to the bag or
// the scorer fails on any required question; no partial update is returned.
UpdatedPrediction validate_bag(const Bag& bag, const RcPrediction& prediction, const QaScorer& scorer,
                               const ValidationConfig& config, const RelationSchema& schema,
                               const EngineOptions& options = {});

// Validates every bag on `parallelism` workers (0 = hardware concurrency).
// Output follows input order and does not depend on the worker count.
std::vector<UpdatedPrediction> validate_dataset(const std::vector<Bag>& bags, const RcPredictionMap& predictions,
                                                const QaScorer& scorer, const ValidationConfig& config,
                                                const RelationSchema& schema, std::size_t parallelism,
                                                const EngineOptions& options = {});

// {"bag_id", "scores", "validated"}
void write_updated_prediction(std::ostream& out, const UpdatedPrediction& prediction);
std::vector<UpdatedPrediction> parse_updated_predictions(std::istream& in, const RelationSchema& schema);

}  // namespace qaval
