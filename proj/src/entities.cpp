#include "gbert/entities.hpp"

#include <algorithm>
#include <set>

#include "gbert/errors.hpp"

namespace gbert {

std::vector<EntitySpan> decode_entities(const std::vector<std::string>& tags) {
    std::vector<EntitySpan> spans;
    bool open = false;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        const std::string& t = tags[i];
        if (t == "O") {
            open = false;
            continue;
        }
        if (t.size() < 3 || (t[0] != 'B' && t[0] != 'I') || t[1] != '-') {
            throw DataError("tag " + std::to_string(i) + " '" + t + "' is not a BIO tag");
        }
        const std::string type = t.substr(2);
        if (t[0] == 'I' && open && spans.back().type == type) {
            spans.back().end = i + 1;
            continue;
        }
        spans.push_back({type, i, i + 1});
        open = true;
    }
    return spans;
}

std::vector<std::string> encode_bio(const std::vector<EntitySpan>& spans, std::size_t length) {
    std::vector<std::string> tags(length, "O");
    for (const auto& s : spans) {
        if (s.start >= s.end || s.end > length) {
            throw DataError("span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                            ") outside a sentence of length " + std::to_string(length));
        }
        for (std::size_t i = s.start; i < s.end; ++i) {
            if (tags[i] != "O") {
                throw DataError("overlapping spans at position " + std::to_string(i));
            }
            tags[i] = (i == s.start ? "B-" : "I-") + s.type;
        }
    }
    return tags;
}

namespace {

void finish(PrfScore& s) {
    if (s.gold == 0 && s.predicted == 0) {
        s.precision = s.recall = s.f1 = 1.0;
        return;
    }
    s.precision = s.predicted == 0 ? 0.0 : double(s.correct) / double(s.predicted);
    s.recall = s.gold == 0 ? 0.0 : double(s.correct) / double(s.gold);
    const double d = s.precision + s.recall;
    s.f1 = d == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / d;
}

}  // namespace

PrfReport entity_prf(const std::vector<std::vector<EntitySpan>>& gold,
                     const std::vector<std::vector<EntitySpan>>& predicted) {
    if (gold.size() != predicted.size()) {
        throw DataError("entity_prf: " + std::to_string(gold.size()) + " gold sentences but " +
                        std::to_string(predicted.size()) + " predicted");
    }
    PrfReport r;
    for (std::size_t k = 0; k < gold.size(); ++k) {
        const std::set<EntitySpan> g(gold[k].begin(), gold[k].end());
        const std::set<EntitySpan> p(predicted[k].begin(), predicted[k].end());
        for (const auto& s : g) {
            ++r.overall.gold;
            ++r.per_type[s.type].gold;
            if (p.count(s)) {
                ++r.overall.correct;
                ++r.per_type[s.type].correct;
            }
        }
        for (const auto& s : p) {
            ++r.overall.predicted;
            ++r.per_type[s.type].predicted;
        }
    }
    finish(r.overall);
    for (auto& [type, s] : r.per_type) {
        finish(s);
    }
    return r;
}

}  // namespace gbert
