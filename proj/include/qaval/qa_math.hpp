#pragma once

// Scoring math on the QA side: span confidence, the validation score that
// fuses it with the answerable probability, and the fine-tuning losses
// (kept as pure functions for checking a scorer's fit).

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qaval/qa_samples.hpp"
#include "qaval/types.hpp"

namespace qaval {

// Output of a QA model for one (question, context) pair. p_start and p_end are
// distributions over context positions; position 0 is the "null" sentinel.
struct QaScore {
    double p_ans = 0.0;
    std::vector<double> p_start;
    std::vector<double> p_end;
};

inline constexpr double kDistributionTolerance = 1e-6;

// Throws Error unless p_ans is in [0, 1] and both vectors have
// `context_length` non-negative entries summing to 1 within 1e-6.
void check_qa_score(const QaScore& score, std::size_t context_length);

// Best non-null span probability: max of p_start[i] * p_end[j] over
// 0 < i <= j, optionally with j - i < max_span_length. Zero when there are
// fewer than two positions. Throws Error on a length mismatch.
double confidence_score(std::span<const double> p_start, std::span<const double> p_end,
                        std::optional<std::size_t> max_span_length = std::nullopt);

// Geometric mean of the answerable probability and the span confidence.
// Throws Error if either input lies outside [0, 1].
double validation_score(double p_ans, double p_confidence);

inline double validation_score(const QaScore& score) {
    return validation_score(score.p_ans, confidence_score(score.p_start, score.p_end));
}

// Probabilities are clamped to at least this before taking logs.
inline constexpr double kLogFloor = 1e-12;

struct SampleLoss {
    double position = 0.0;
    double answerable = 0.0;
};

// Negative log-likelihood of the gold span endpoints plus binary
// cross-entropy of the answerable flag. Unanswerable samples use position 0
// for both endpoints.
SampleLoss qa_losses(const QaSample& sample, const QaScore& score);

// Sum of both loss terms over all samples, divided by 2N. Throws Error on an
// empty input.
double dataset_loss(std::span<const SampleLoss> losses);
double dataset_loss(std::span<const QaSample> samples, std::span<const QaScore> scores);

}  // namespace qaval
