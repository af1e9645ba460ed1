#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace gbert {

/// Typed half-open character span [start, end).
struct EntitySpan {
    std::string type;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const EntitySpan&) const = default;
    auto operator<=>(const EntitySpan&) const = default;
};

/// Spans from a BIO sequence. A B-X tag opens a span, following I-X tags
/// extend it. An I-X that does not continue an X span opens a new one
/// (the lenient conlleval reading). Throws DataError on non-BIO tags.
std::vector<EntitySpan> decode_entities(const std::vector<std::string>& tags);

/// Inverse of decode_entities for non-overlapping spans within [0, length).
std::vector<std::string> encode_bio(const std::vector<EntitySpan>& spans, std::size_t length);

struct PrfScore {
    std::size_t gold = 0;
    std::size_t predicted = 0;
    std::size_t correct = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct PrfReport {
    PrfScore overall;
    std::map<std::string, PrfScore> per_type;
};

/// Exact-match entity scores. Both sides empty gives 1.0 everywhere; an
/// empty side against a nonempty one gives 0 for the undefined ratio.
PrfReport entity_prf(const std::vector<std::vector<EntitySpan>>& gold,
                     const std::vector<std::vector<EntitySpan>>& predicted);

}  // namespace gbert
