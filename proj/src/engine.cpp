#include "qaval/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>
#include <set>
#include <thread>

#include <json.hpp>

#include "qaval/qa_samples.hpp"

namespace qaval {

namespace {

// exp of the weighted mean of logs; total on [0, 1] since log(0) = -inf.
double weighted_geometric_mean(double a, double weight_a, double b) {
    const double log_mean = (weight_a * std::log(a) + std::log(b)) / (weight_a + 1.0);
    return std::clamp(std::exp(log_mean), 0.0, 1.0);
}

std::size_t percent_count(double percent, std::size_t m) {
    const double x = percent * static_cast<double>(m) / 100.0;
    // Guard against 10.000000000000002-style products rounding up a bucket.
    auto n = static_cast<std::size_t>(std::ceil(x - 1e-9));
    return std::min(n, m);
}

// Indices sorted by score descending, ties by ascending index.
void rank_descending(std::vector<RelationIndex>& indices, std::span<const double> scores) {
    std::stable_sort(indices.begin(), indices.end(),
                     [&](RelationIndex a, RelationIndex b) { return scores[a] > scores[b]; });
}

}  // namespace

double update_validated(double p_qa, double p, double lambda) { return weighted_geometric_mean(p_qa, lambda, p); }

double update_unvalidated(double p, double c, double lambda) { return weighted_geometric_mean(c, lambda, p); }

std::vector<RelationIndex> select_by_qa_extremes(std::span<const double> qa_scores, const RelationSchema& schema,
                                                 double alpha_percent, double beta_percent) {
    if (qa_scores.size() != schema.size()) throw Error("QA score vector does not match the schema size");
    auto order = schema.non_na_indices();
    rank_descending(order, qa_scores);
    const std::size_t m = order.size();
    const std::size_t top = percent_count(alpha_percent, m);
    const std::size_t bottom = percent_count(beta_percent, m);

    std::set<RelationIndex> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top));
    picked.insert(order.end() - static_cast<std::ptrdiff_t>(bottom), order.end());
    return {picked.begin(), picked.end()};
}

std::vector<RelationIndex> select_by_rc_top_k(std::span<const double> rc_scores, const RelationSchema& schema,
                                              std::size_t k) {
    if (rc_scores.size() != schema.size()) throw Error("RC score vector does not match the schema size");
    std::vector<RelationIndex> order(schema.size());
    std::iota(order.begin(), order.end(), RelationIndex{0});
    rank_descending(order, rc_scores);
    order.resize(std::min(k, order.size()));
    std::erase(order, schema.na_index());
    std::sort(order.begin(), order.end());
    return order;
}

UpdatedPrediction validate_bag(const Bag& bag, const RcPrediction& prediction, const QaScorer& scorer,
                               const ValidationConfig& config, const RelationSchema& schema,
                               const EngineOptions& options) {
    if (prediction.bag_id != bag.bag_id) {
        throw BagValidationError(bag.bag_id, "prediction belongs to bag " + prediction.bag_id);
    }
    if (prediction.scores.size() != schema.size()) {
        throw BagValidationError(bag.bag_id, "RC score vector does not match the schema size");
    }
    const auto& p = prediction.scores;
    const Context context = build_context(bag, options.window);

    std::vector<double> qa(schema.size(), 0.0);
    auto score_relation = [&](RelationIndex r) {
        try {
            qa[r] = validation_score(scorer.score(make_question(bag.head, schema.label(r)), context));
        } catch (const std::exception& e) {
            throw BagValidationError(bag.bag_id, "scoring relation '" + schema.label(r) + "' failed: " + e.what());
        }
    };

    std::vector<RelationIndex> selected;
    if (const auto* extremes = std::get_if<QaExtremesSelection>(&config.strategy)) {
        for (auto r : schema.non_na_indices()) score_relation(r);
        selected = select_by_qa_extremes(qa, schema, extremes->alpha_percent, extremes->beta_percent);
    } else {
        selected = select_by_rc_top_k(p, schema, std::get<RcTopKSelection>(config.strategy).k);
        for (auto r : selected) score_relation(r);
    }

    UpdatedPrediction out{bag.bag_id, std::vector<double>(schema.size()), std::vector<bool>(schema.size(), false)};
    for (auto r : selected) out.validated[r] = true;
    for (RelationIndex r = 0; r < schema.size(); ++r) {
        out.scores[r] = out.validated[r] ? update_validated(qa[r], p[r], config.lambda)
                                         : update_unvalidated(p[r], config.c, config.lambda);
    }
    return out;
}

std::vector<UpdatedPrediction> validate_dataset(const std::vector<Bag>& bags, const RcPredictionMap& predictions,
                                                const QaScorer& scorer, const ValidationConfig& config,
                                                const RelationSchema& schema, std::size_t parallelism,
                                                const EngineOptions& options) {
    config.check(schema);
    std::vector<const RcPrediction*> matched;
    matched.reserve(bags.size());
    for (const auto& bag : bags) {
        auto it = predictions.find(bag.bag_id);
        if (it == predictions.end()) throw BagValidationError(bag.bag_id, "no RC prediction for this bag");
        matched.push_back(&it->second);
    }

    const std::size_t n = bags.size();
    std::vector<std::optional<UpdatedPrediction>> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};

    // Indices are claimed in increasing order, so the lowest failing index is
    // the same for any worker count.
    auto work = [&] {
        while (!stop.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                results[i] = validate_bag(bags[i], *matched[i], scorer, config, schema, options);
            } catch (...) {
                errors[i] = std::current_exception();
                stop = true;
            }
        }
    };

    if (parallelism == 0) parallelism = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(parallelism, n);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<UpdatedPrediction> out;
    out.reserve(n);
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

void write_updated_prediction(std::ostream& out, const UpdatedPrediction& prediction) {
    nlohmann::ordered_json doc;
    doc["bag_id"] = prediction.bag_id;
    doc["scores"] = prediction.scores;
    doc["validated"] = prediction.validated;
    out << doc.dump() << '\n';
}

std::vector<UpdatedPrediction> parse_updated_predictions(std::istream& in, const RelationSchema& schema) {
    std::vector<UpdatedPrediction> out;
    std::set<std::string, std::less<>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) throw ParseError(line_no, "malformed JSON record");
        UpdatedPrediction pred;
        try {
            pred.bag_id = doc.at("bag_id").get<std::string>();
            pred.scores = doc.at("scores").get<std::vector<double>>();
            pred.validated = doc.at("validated").get<std::vector<bool>>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, e.what());
        }
        if (pred.scores.size() != schema.size() || pred.validated.size() != schema.size()) {
            throw ParseError(line_no, "vector length does not match the schema size " + std::to_string(schema.size()));
        }
        for (double s : pred.scores) {
            if (!(s >= 0.0 && s <= 1.0)) throw ParseError(line_no, "score outside [0, 1]");
        }
        if (pred.validated[schema.na_index()]) throw ParseError(line_no, "NA cannot be marked validated");
        if (!seen.insert(pred.bag_id).second) throw ParseError(line_no, "duplicate bag_id '" + pred.bag_id + "'");
        out.push_back(std::move(pred));
    }
    return out;
}

}  // namespace qaval
