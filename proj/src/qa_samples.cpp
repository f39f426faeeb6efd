#include "qaval/qa_samples.hpp"

#include <algorithm>
#include <span>

#include <json.hpp>

#include "qaval/random.hpp"

namespace qaval {

std::string make_question(std::string_view head, std::string_view relation_label) {
    if (head.empty()) throw Error("cannot build a question from an empty head entity");
    if (relation_label.empty()) throw Error("cannot build a question from an empty relation label");
    std::string q;
    q.reserve(head.size() + kQuestionSeparator.size() + relation_label.size());
    q.append(head).append(kQuestionSeparator).append(relation_label);
    return q;
}

QaDataset generate_qa_dataset(const std::vector<Bag>& bags, const RelationSchema& schema,
                              const QaDatasetOptions& options) {
    QaDataset dataset;
    for (const auto& bag : bags) {
        std::vector<RelationIndex> positives;
        for (auto r : bag.true_relations) {
            if (!schema.is_na(r)) positives.push_back(r);
        }
        if (positives.empty()) continue;

        Context context = build_context(bag, options.window);
        if (!context.tail_span) {
            ++dataset.skipped_bags;
            continue;
        }

        std::vector<RelationIndex> wrong;
        for (auto r : schema.non_na_indices()) {
            if (!bag.has_relation(r)) wrong.push_back(r);
        }
        auto rng = derived_rng(options.seed, bag.bag_id);
        const std::size_t n_neg = std::min(wrong.size(), positives.size() * options.negatives_per_positive);
        partial_shuffle(std::span(wrong), n_neg, rng);
        wrong.resize(n_neg);
        std::sort(wrong.begin(), wrong.end());

        for (auto r : positives) {
            dataset.samples.push_back(
                QaSample{make_question(bag.head, schema.label(r)), context, *context.tail_span, true});
        }
        for (auto r : wrong) {
            dataset.samples.push_back(QaSample{make_question(bag.head, schema.label(r)), context, Span{0, 1}, false});
        }
    }
    return dataset;
}

void write_qa_sample(std::ostream& out, const QaSample& sample) {
    nlohmann::ordered_json doc;
    doc["question"] = sample.question;
    doc["context_tokens"] = sample.context.tokens;
    doc["answer_start"] = sample.answer_span.start;
    doc["answer_end"] = sample.answer_span.end;
    doc["answerable"] = sample.answerable;
    out << doc.dump() << '\n';
}

}  // namespace qaval
