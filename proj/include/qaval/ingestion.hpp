#pragma once

// Line-delimited JSON readers/writers for bag, schema and RC-score files, and
// the per-bag context builder (truncation, concatenation, "null" sentinel).
// Byte-level formats are documented in docs/formats.md.

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "qaval/types.hpp"

namespace qaval {

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

    // 1-based line number in the input stream.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

inline constexpr const char* kNullToken = "null";
inline constexpr std::size_t kDefaultWindow = 40;

// Half-open token span.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    friend bool operator==(const Span&, const Span&) = default;
};

// Concatenated, truncated context of a bag. tokens[0] is always "null".
struct Context {
    std::vector<std::string> tokens;
    // First tail mention surviving truncation, in context coordinates.
    std::optional<Span> tail_span;

    std::size_t size() const noexcept { return tokens.size(); }
    friend bool operator==(const Context&, const Context&) = default;
};

// Schema file: a single JSON object {"labels": [...], "na_label": "NA"}.
RelationSchema parse_schema(std::istream& in);
void write_schema(std::ostream& out, const RelationSchema& schema);

std::vector<Bag> parse_bags(std::istream& in, const RelationSchema& schema);
void write_bag(std::ostream& out, const Bag& bag, const RelationSchema& schema);

using RcPredictionMap = std::map<std::string, RcPrediction, std::less<>>;

// Scores outside [0, 1] by more than 1e-9 are rejected; values inside the
// tolerance band are clamped onto the interval.
RcPredictionMap parse_rc_predictions(std::istream& in, const RelationSchema& schema);
void write_rc_prediction(std::ostream& out, const RcPrediction& prediction);

// Range kept by truncation: `window` tokens before the earlier mention through
// `window` tokens after the later one, clipped to the sentence.
Span truncation_range(std::size_t sentence_length, const Mention& head, const Mention& tail, std::size_t window);

Sentence truncate_sentence(const Sentence& sentence, const Mention& head, const Mention& tail, std::size_t window);

Context build_context(const Bag& bag, std::size_t window = kDefaultWindow);

}  // namespace qaval
