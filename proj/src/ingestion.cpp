#include "qaval/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string_view>

#include <json.hpp>

namespace qaval {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kScoreTolerance = 1e-9;

// Calls fn(line_number, line) for every non-blank line.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!record.is_object()) throw ParseError(line_no, "record is not a JSON object");
        fn(line_no, record);
    }
}

const json& require(const json& record, const char* field, std::size_t line_no) {
    auto it = record.find(field);
    if (it == record.end()) throw ParseError(line_no, std::string("missing field '") + field + "'");
    return *it;
}

std::string require_string(const json& record, const char* field, std::size_t line_no, bool allow_empty = false) {
    const json& v = require(record, field, line_no);
    if (!v.is_string()) throw ParseError(line_no, std::string("field '") + field + "' must be a string");
    auto s = v.get<std::string>();
    if (s.empty() && !allow_empty) throw ParseError(line_no, std::string("field '") + field + "' is empty");
    return s;
}

const json& require_array(const json& record, const char* field, std::size_t line_no) {
    const json& v = require(record, field, line_no);
    if (!v.is_array()) throw ParseError(line_no, std::string("field '") + field + "' must be an array");
    return v;
}

std::size_t as_index(const json& v, const char* what, std::size_t line_no) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ParseError(line_no, std::string(what) + " must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

std::string join_tokens(const Sentence& sentence, std::size_t start, std::size_t end) {
    std::string out;
    for (std::size_t i = start; i < end; ++i) {
        if (i > start) out += ' ';
        out += sentence[i];
    }
    return out;
}

std::vector<Mention> parse_mentions(const json& record, const char* field, const std::vector<Sentence>& sentences,
                                    const std::string& entity, std::size_t line_no) {
    std::vector<Mention> mentions;
    for (const auto& m : require_array(record, field, line_no)) {
        if (!m.is_array() || m.size() != 3) {
            throw ParseError(line_no, std::string(field) + " entries must be [sentence, start, end]");
        }
        Mention mention{as_index(m[0], "mention sentence", line_no), as_index(m[1], "mention start", line_no),
                        as_index(m[2], "mention end", line_no)};
        if (mention.sentence_index >= sentences.size()) {
            throw ParseError(line_no, std::string(field) + ": sentence index " +
                                          std::to_string(mention.sentence_index) + " out of range");
        }
        const auto& sentence = sentences[mention.sentence_index];
        if (mention.token_start >= mention.token_end || mention.token_end > sentence.size()) {
            throw ParseError(line_no, std::string(field) + ": mention [" + std::to_string(mention.token_start) + ", " +
                                          std::to_string(mention.token_end) + ") out of range for sentence " +
                                          std::to_string(mention.sentence_index) + " of length " +
                                          std::to_string(sentence.size()));
        }
        auto text = join_tokens(sentence, mention.token_start, mention.token_end);
        if (text != entity) {
            throw ParseError(line_no, std::string(field) + ": mention text '" + text + "' does not match entity '" +
                                          entity + "'");
        }
        mentions.push_back(mention);
    }
    return mentions;
}

Bag parse_bag_record(const json& record, const RelationSchema& schema, std::size_t line_no) {
    Bag bag;
    bag.bag_id = require_string(record, "bag_id", line_no);
    bag.head = require_string(record, "head", line_no);
    bag.tail = require_string(record, "tail", line_no);

    for (const auto& s : require_array(record, "sentences", line_no)) {
        if (!s.is_array()) throw ParseError(line_no, "each sentence must be an array of tokens");
        Sentence sentence;
        sentence.reserve(s.size());
        for (const auto& tok : s) {
            if (!tok.is_string() || tok.get_ref<const std::string&>().empty()) {
                throw ParseError(line_no, "tokens must be non-empty strings");
            }
            sentence.push_back(tok.get<std::string>());
        }
        if (sentence.empty()) throw ParseError(line_no, "empty sentence");
        bag.sentences.push_back(std::move(sentence));
    }

    bag.head_mentions = parse_mentions(record, "head_mentions", bag.sentences, bag.head, line_no);
    bag.tail_mentions = parse_mentions(record, "tail_mentions", bag.sentences, bag.tail, line_no);

    std::vector<bool> has_head(bag.sentences.size()), has_tail(bag.sentences.size());
    for (const auto& m : bag.head_mentions) has_head[m.sentence_index] = true;
    for (const auto& m : bag.tail_mentions) has_tail[m.sentence_index] = true;
    for (std::size_t i = 0; i < bag.sentences.size(); ++i) {
        if (!has_head[i] || !has_tail[i]) {
            throw ParseError(line_no, "sentence " + std::to_string(i) + " lacks a " + (has_head[i] ? "tail" : "head") +
                                          " mention");
        }
    }

    std::set<RelationIndex> relations;
    for (const auto& label : require_array(record, "relations", line_no)) {
        if (!label.is_string()) throw ParseError(line_no, "relation labels must be strings");
        auto r = schema.find(label.get_ref<const std::string&>());
        if (!r) throw ParseError(line_no, "unknown relation label '" + label.get<std::string>() + "'");
        relations.insert(*r);
    }
    if (relations.size() > 1 && relations.contains(schema.na_index())) {
        throw ParseError(line_no, "NA cannot be combined with other relations");
    }
    bag.true_relations.assign(relations.begin(), relations.end());
    return bag;
}

ordered_json mentions_to_json(const std::vector<Mention>& mentions) {
    ordered_json out = ordered_json::array();
    for (const auto& m : mentions) out.push_back({m.sentence_index, m.token_start, m.token_end});
    return out;
}

// First mention of the given sentence in token order.
const Mention* first_mention_in(const std::vector<Mention>& mentions, std::size_t sentence) {
    const Mention* best = nullptr;
    for (const auto& m : mentions) {
        if (m.sentence_index != sentence) continue;
        if (!best || std::pair(m.token_start, m.token_end) < std::pair(best->token_start, best->token_end)) best = &m;
    }
    return best;
}

}  // namespace

RelationSchema parse_schema(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("malformed schema file: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("labels") || !doc.contains("na_label")) {
        throw SchemaError("schema file must be an object with 'labels' and 'na_label'");
    }
    try {
        return RelationSchema::from_labels(doc.at("labels").get<std::vector<std::string>>(),
                                           doc.at("na_label").get<std::string>());
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed schema file: ") + e.what());
    }
}

void write_schema(std::ostream& out, const RelationSchema& schema) {
    ordered_json doc;
    doc["labels"] = schema.labels();
    doc["na_label"] = schema.label(schema.na_index());
    out << doc.dump() << '\n';
}

std::vector<Bag> parse_bags(std::istream& in, const RelationSchema& schema) {
    std::vector<Bag> bags;
    std::set<std::string, std::less<>> seen;
    for_each_record(in, [&](std::size_t line_no, const json& record) {
        Bag bag = parse_bag_record(record, schema, line_no);
        if (!seen.insert(bag.bag_id).second) throw ParseError(line_no, "duplicate bag_id '" + bag.bag_id + "'");
        bags.push_back(std::move(bag));
    });
    return bags;
}

void write_bag(std::ostream& out, const Bag& bag, const RelationSchema& schema) {
    ordered_json doc;
    doc["bag_id"] = bag.bag_id;
    doc["head"] = bag.head;
    doc["tail"] = bag.tail;
    auto& relations = doc["relations"] = ordered_json::array();
    for (auto r : bag.true_relations) relations.push_back(schema.label(r));
    doc["sentences"] = bag.sentences;
    doc["head_mentions"] = mentions_to_json(bag.head_mentions);
    doc["tail_mentions"] = mentions_to_json(bag.tail_mentions);
    out << doc.dump() << '\n';
}

RcPredictionMap parse_rc_predictions(std::istream& in, const RelationSchema& schema) {
    RcPredictionMap predictions;
    for_each_record(in, [&](std::size_t line_no, const json& record) {
        RcPrediction pred;
        pred.bag_id = require_string(record, "bag_id", line_no);
        const auto& scores = require_array(record, "scores", line_no);
        if (scores.size() != schema.size()) {
            throw ParseError(line_no, "score vector has " + std::to_string(scores.size()) + " entries, schema has " +
                                          std::to_string(schema.size()) + " relations");
        }
        pred.scores.reserve(scores.size());
        for (const auto& s : scores) {
            if (!s.is_number()) throw ParseError(line_no, "scores must be numbers");
            double v = s.get<double>();
            if (!std::isfinite(v) || v < -kScoreTolerance || v > 1.0 + kScoreTolerance) {
                throw ParseError(line_no, "score " + s.dump() + " outside [0, 1]");
            }
            pred.scores.push_back(std::clamp(v, 0.0, 1.0));
        }
        auto id = pred.bag_id;
        if (!predictions.emplace(id, std::move(pred)).second) {
            throw ParseError(line_no, "duplicate bag_id '" + id + "'");
        }
    });
    return predictions;
}

void write_rc_prediction(std::ostream& out, const RcPrediction& prediction) {
    ordered_json doc;
    doc["bag_id"] = prediction.bag_id;
    doc["scores"] = prediction.scores;
    out << doc.dump() << '\n';
}

Span truncation_range(std::size_t sentence_length, const Mention& head, const Mention& tail, std::size_t window) {
    const std::size_t first = std::min(head.token_start, tail.token_start);
    const std::size_t last = std::max(head.token_end, tail.token_end);
    const std::size_t begin = first > window ? first - window : 0;
    const std::size_t end = std::min(sentence_length, last + std::min(window, sentence_length));
    return {begin, end};
}

Sentence truncate_sentence(const Sentence& sentence, const Mention& head, const Mention& tail, std::size_t window) {
    auto range = truncation_range(sentence.size(), head, tail, window);
    return Sentence(sentence.begin() + static_cast<std::ptrdiff_t>(range.start),
                    sentence.begin() + static_cast<std::ptrdiff_t>(range.end));
}

Context build_context(const Bag& bag, std::size_t window) {
    Context ctx;
    ctx.tokens.emplace_back(kNullToken);
    for (std::size_t s = 0; s < bag.sentences.size(); ++s) {
        const auto& sentence = bag.sentences[s];
        const Mention* head = first_mention_in(bag.head_mentions, s);
        const Mention* tail = first_mention_in(bag.tail_mentions, s);
        if (!head || !tail) continue;

        const auto range = truncation_range(sentence.size(), *head, *tail, window);
        const std::size_t offset = ctx.tokens.size();
        if (!ctx.tail_span) {
            const Mention* first_kept = nullptr;
            for (const auto& m : bag.tail_mentions) {
                if (m.sentence_index != s || m.token_start < range.start || m.token_end > range.end) continue;
                if (!first_kept || m.token_start < first_kept->token_start) first_kept = &m;
            }
            if (first_kept) {
                ctx.tail_span = Span{offset + first_kept->token_start - range.start,
                                     offset + first_kept->token_end - range.start};
            }
        }
        ctx.tokens.insert(ctx.tokens.end(), sentence.begin() + static_cast<std::ptrdiff_t>(range.start),
                          sentence.begin() + static_cast<std::ptrdiff_t>(range.end));
    }
    return ctx;
}

}  // namespace qaval
