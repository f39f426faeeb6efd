#include "qaval/qa_math.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace qaval {

namespace {

void check_distribution(std::span<const double> p, std::size_t expected_length, const char* name) {
    if (p.size() != expected_length) {
        throw Error(std::string(name) + " has " + std::to_string(p.size()) + " entries, context has " +
                    std::to_string(expected_length) + " tokens");
    }
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0) throw Error(std::string(name) + " contains a negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kDistributionTolerance) {
        throw Error(std::string(name) + " sums to " + std::to_string(sum) + ", expected 1");
    }
}

double neg_log(double p) { return -std::log(std::max(p, kLogFloor)); }

}  // namespace

void check_qa_score(const QaScore& score, std::size_t context_length) {
    if (!(score.p_ans >= 0.0 && score.p_ans <= 1.0)) {
        throw Error("p_ans " + std::to_string(score.p_ans) + " outside [0, 1]");
    }
    check_distribution(score.p_start, context_length, "p_start");
    check_distribution(score.p_end, context_length, "p_end");
}

double confidence_score(std::span<const double> p_start, std::span<const double> p_end,
                        std::optional<std::size_t> max_span_length) {
    if (p_start.size() != p_end.size()) {
        throw Error("p_start and p_end lengths differ (" + std::to_string(p_start.size()) + " vs " +
                    std::to_string(p_end.size()) + ")");
    }
    const std::size_t n = p_start.size();
    if (n < 2) return 0.0;
    double best = 0.0;

    if (!max_span_length) {
        // Running max of the admissible start prefix.
        double best_start = 0.0;
        for (std::size_t j = 1; j < n; ++j) {
            best_start = std::max(best_start, p_start[j]);
            best = std::max(best, best_start * p_end[j]);
        }
        return best;
    }

    const std::size_t width = *max_span_length;
    if (width == 0) return 0.0;
    // Monotone deque of start candidates in (j - width, j].
    std::deque<std::size_t> window;
    for (std::size_t j = 1; j < n; ++j) {
        while (!window.empty() && p_start[window.back()] <= p_start[j]) window.pop_back();
        window.push_back(j);
        while (window.front() + width <= j) window.pop_front();
        best = std::max(best, p_start[window.front()] * p_end[j]);
    }
    return best;
}

double validation_score(double p_ans, double p_confidence) {
    if (!(p_ans >= 0.0 && p_ans <= 1.0)) throw Error("p_ans " + std::to_string(p_ans) + " outside [0, 1]");
    if (!(p_confidence >= 0.0 && p_confidence <= 1.0)) {
        throw Error("p_confidence " + std::to_string(p_confidence) + " outside [0, 1]");
    }
    return std::sqrt(p_ans * p_confidence);
}

SampleLoss qa_losses(const QaSample& sample, const QaScore& score) {
    const std::size_t n = sample.context.size();
    if (score.p_start.size() != n || score.p_end.size() != n) {
        throw Error("score vectors do not match the sample context length " + std::to_string(n));
    }
    std::size_t start = 0, end = 0;
    if (sample.answerable) {
        if (sample.answer_span.end == 0 || sample.answer_span.end > n || sample.answer_span.start >= sample.answer_span.end) {
            throw Error("answer span out of range for the sample context");
        }
        start = sample.answer_span.start;
        end = sample.answer_span.end - 1;
    }
    const double f = sample.answerable ? 1.0 : 0.0;
    SampleLoss loss;
    loss.position = neg_log(score.p_start[start]) + neg_log(score.p_end[end]);
    loss.answerable = f * neg_log(score.p_ans) + (1.0 - f) * neg_log(1.0 - score.p_ans);
    return loss;
}

double dataset_loss(std::span<const SampleLoss> losses) {
    if (losses.empty()) throw Error("dataset loss is undefined for an empty dataset");
    double total = 0.0;
    for (const auto& l : losses) total += l.position + l.answerable;
    return total / (2.0 * static_cast<double>(losses.size()));
}

double dataset_loss(std::span<const QaSample> samples, std::span<const QaScore> scores) {
    if (samples.size() != scores.size()) throw Error("sample and score counts differ");
    std::vector<SampleLoss> losses;
    losses.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) losses.push_back(qa_losses(samples[i], scores[i]));
    return dataset_loss(losses);
}

}  // namespace qaval
