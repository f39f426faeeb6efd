#include "qaval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include <json.hpp>

namespace qaval {

std::vector<ScoredBag> scored_bags(const std::vector<RcPrediction>& predictions) {
    std::vector<ScoredBag> out;
    out.reserve(predictions.size());
    for (const auto& p : predictions) out.push_back({p.bag_id, p.scores});
    return out;
}

std::vector<ScoredBag> scored_bags(const std::vector<UpdatedPrediction>& predictions) {
    std::vector<ScoredBag> out;
    out.reserve(predictions.size());
    for (const auto& p : predictions) out.push_back({p.bag_id, p.scores});
    return out;
}

std::vector<FactPrediction> collect_fact_predictions(std::span<const ScoredBag> predictions,
                                                     const std::vector<Bag>& bags, const RelationSchema& schema) {
    std::unordered_map<std::string_view, const Bag*> by_id;
    for (const auto& bag : bags) by_id.emplace(bag.bag_id, &bag);
    if (predictions.size() != bags.size()) {
        throw Error("prediction/bag mismatch: " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(bags.size()) + " bags");
    }

    std::vector<FactPrediction> facts;
    facts.reserve(predictions.size() * (schema.size() - 1));
    std::unordered_map<std::string_view, bool> covered;
    for (const auto& pred : predictions) {
        auto it = by_id.find(pred.bag_id);
        if (it == by_id.end()) throw Error("prediction/bag mismatch: no bag with id '" + pred.bag_id + "'");
        if (!covered.emplace(pred.bag_id, true).second) throw Error("duplicate prediction for bag '" + pred.bag_id + "'");
        const Bag& bag = *it->second;
        if (bag.true_relations.empty()) throw Error("bag '" + bag.bag_id + "' has no gold labels");
        if (pred.scores.size() != schema.size()) {
            throw Error("prediction for bag '" + pred.bag_id + "' does not match the schema size");
        }
        for (auto r : schema.non_na_indices()) {
            facts.push_back({pred.bag_id, r, pred.scores[r], bag.has_relation(r)});
        }
    }
    std::sort(facts.begin(), facts.end(), [](const FactPrediction& a, const FactPrediction& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.bag_id != b.bag_id) return a.bag_id < b.bag_id;
        return a.relation < b.relation;
    });
    return facts;
}

std::size_t count_gold_facts(const std::vector<Bag>& bags, const RelationSchema& schema) {
    std::size_t n = 0;
    for (const auto& bag : bags) {
        for (auto r : bag.true_relations) n += schema.is_na(r) ? 0 : 1;
    }
    return n;
}

PrCurve pr_curve(std::span<const FactPrediction> ranked, std::size_t total_gold) {
    if (ranked.empty()) throw Error("cannot build a PR curve from an empty prediction list");
    if (total_gold == 0) throw Error("total gold count must be positive");
    PrCurve curve;
    curve.points.reserve(ranked.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        tp += ranked[i].is_correct ? 1 : 0;
        curve.points.push_back({static_cast<double>(tp) / static_cast<double>(total_gold),
                                static_cast<double>(tp) / static_cast<double>(i + 1)});
    }
    PrPoint prev{0.0, curve.points.front().precision};
    for (const auto& pt : curve.points) {
        curve.auc += (pt.recall - prev.recall) * (pt.precision + prev.precision) / 2.0;
        prev = pt;
    }
    return curve;
}

double precision_at_n(std::span<const FactPrediction> ranked, std::size_t n) {
    if (ranked.empty()) throw Error("precision@N is undefined for an empty prediction list");
    if (n == 0) throw Error("N must be at least 1");
    const std::size_t top = std::min(n, ranked.size());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < top; ++i) correct += ranked[i].is_correct ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(top);
}

MetricsReport evaluate(std::span<const FactPrediction> ranked, std::size_t total_gold,
                       std::span<const std::size_t> cutoffs) {
    MetricsReport report;
    report.auc = pr_curve(ranked, total_gold).auc;
    for (auto n : cutoffs) report.precision_at[n] = precision_at_n(ranked, n);
    report.n_predictions = ranked.size();
    report.n_gold = total_gold;
    return report;
}

namespace {

MetricDelta delta_of(double before, double after) { return {before, after, after - before, after > before}; }

}  // namespace

ComparisonReport compare_reports(const MetricsReport& before, const MetricsReport& after) {
    if (before.n_gold != after.n_gold || before.n_predictions != after.n_predictions) {
        throw Error("reports come from different test sets (gold " + std::to_string(before.n_gold) + " vs " +
                    std::to_string(after.n_gold) + ", predictions " + std::to_string(before.n_predictions) + " vs " +
                    std::to_string(after.n_predictions) + ")");
    }
    ComparisonReport out;
    out.auc = delta_of(before.auc, after.auc);
    for (const auto& [n, p] : before.precision_at) {
        auto it = after.precision_at.find(n);
        if (it == after.precision_at.end()) throw Error("P@" + std::to_string(n) + " missing from the second report");
        out.precision_at[n] = delta_of(p, it->second);
    }
    if (after.precision_at.size() != before.precision_at.size()) {
        throw Error("reports use different precision@N cutoffs");
    }
    return out;
}

std::string to_json(const MetricsReport& report) {
    nlohmann::ordered_json doc;
    doc["auc"] = report.auc;
    auto& p_at = doc["p_at"] = nlohmann::ordered_json::object();
    for (const auto& [n, p] : report.precision_at) p_at[std::to_string(n)] = p;
    doc["n_predictions"] = report.n_predictions;
    doc["n_gold"] = report.n_gold;
    return doc.dump();
}

MetricsReport metrics_from_json(const std::string& text) {
    auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error("malformed metrics report");
    MetricsReport report;
    try {
        report.auc = doc.at("auc").get<double>();
        for (const auto& [key, value] : doc.at("p_at").items()) {
            report.precision_at[std::stoul(key)] = value.get<double>();
        }
        report.n_predictions = doc.at("n_predictions").get<std::size_t>();
        report.n_gold = doc.at("n_gold").get<std::size_t>();
    } catch (const std::exception& e) {
        throw Error(std::string("malformed metrics report: ") + e.what());
    }
    return report;
}

namespace {

nlohmann::ordered_json delta_json(const MetricDelta& d) {
    nlohmann::ordered_json j;
    j["before"] = d.before;
    j["after"] = d.after;
    j["delta"] = d.delta;
    j["improved"] = d.improved;
    return j;
}

}  // namespace

std::string to_json(const ComparisonReport& report) {
    nlohmann::ordered_json doc;
    doc["auc"] = delta_json(report.auc);
    auto& p_at = doc["p_at"] = nlohmann::ordered_json::object();
    for (const auto& [n, d] : report.precision_at) p_at[std::to_string(n)] = delta_json(d);
    return doc.dump();
}

void write_pr_curve(std::ostream& out, const PrCurve& curve) {
    char line[64];
    for (const auto& pt : curve.points) {
        std::snprintf(line, sizeof(line), "%.17g %.17g\n", pt.recall, pt.precision);
        out << line;
    }
}

}  // namespace qaval
