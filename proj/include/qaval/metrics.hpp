#pragma once

// Held-out evaluation over ranked (bag, relation) fact predictions.

#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qaval/engine.hpp"
#include "qaval/types.hpp"

namespace qaval {

struct FactPrediction {
    std::string bag_id;
    RelationIndex relation = 0;  // never NA
    double score = 0.0;
    bool is_correct = false;
};

// Any per-bag score vector: RC output or validated output.
struct ScoredBag {
    std::string bag_id;
    std::vector<double> scores;
};

std::vector<ScoredBag> scored_bags(const std::vector<RcPrediction>& predictions);
std::vector<ScoredBag> scored_bags(const std::vector<UpdatedPrediction>& predictions);

// One fact per (bag, non-NA relation), sorted by score descending with ties
// broken by (bag_id, relation). Throws Error if a prediction has no bag, a
// bag has no prediction or no gold labels, or vector sizes are off.
std::vector<FactPrediction> collect_fact_predictions(std::span<const ScoredBag> predictions,
                                                     const std::vector<Bag>& bags, const RelationSchema& schema);

// Number of distinct (bag, non-NA relation) gold facts.
std::size_t count_gold_facts(const std::vector<Bag>& bags, const RelationSchema& schema);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

struct PrCurve {
    // One point per ranked prediction.
    std::vector<PrPoint> points;
    // Trapezoidal area over (0, precision@1) followed by `points`.
    double auc = 0.0;
};

PrCurve pr_curve(std::span<const FactPrediction> ranked, std::size_t total_gold);

// Fraction correct among the first min(n, size) predictions.
double precision_at_n(std::span<const FactPrediction> ranked, std::size_t n);

struct MetricsReport {
    double auc = 0.0;
    std::map<std::size_t, double> precision_at;
    std::size_t n_predictions = 0;
    std::size_t n_gold = 0;
};

MetricsReport evaluate(std::span<const FactPrediction> ranked, std::size_t total_gold,
                       std::span<const std::size_t> cutoffs);

struct MetricDelta {
    double before = 0.0;
    double after = 0.0;
    double delta = 0.0;
    bool improved = false;
};

struct ComparisonReport {
    MetricDelta auc;
    std::map<std::size_t, MetricDelta> precision_at;
};

// Throws Error when the reports were computed on different test sets
// (gold count, prediction count or cutoffs differ).
ComparisonReport compare_reports(const MetricsReport& before, const MetricsReport& after);

// {"auc", "p_at": {"100": ...}, "n_predictions", "n_gold"}
std::string to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& text);
std::string to_json(const ComparisonReport& report);

// "recall precision" per line.
void write_pr_curve(std::ostream& out, const PrCurve& curve);

}  // namespace qaval
