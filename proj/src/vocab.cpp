#include "gbert/vocab.hpp"

#include <algorithm>
#include <map>

#include "gbert/errors.hpp"

namespace gbert {

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (!index_.emplace(labels_[i], i).second) {
            throw DataError("duplicate label '" + labels_[i] + "' in inventory");
        }
    }
}

std::size_t LabelSet::id(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) {
        throw DataError("label '" + label + "' is not in the inventory");
    }
    return it->second;
}

Vocab::Vocab() {
    assign({"[PAD]", "[UNK]", "[MASK]", "[CLS]", "[SEP]"});
}

void Vocab::assign(std::vector<std::string> tokens) {
    if (tokens.size() < kReserved) {
        throw DataError("vocabulary needs the " + std::to_string(kReserved) + " reserved tokens");
    }
    tokens_ = std::move(tokens);
    index_.clear();
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], i).second) {
            throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
        }
    }
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& sentences, std::size_t min_count) {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : sentences) {
        for (const auto& c : s) {
            ++counts[c];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (auto& [tok, n] : counts) {
        if (n >= min_count) {
            ranked.emplace_back(tok, n);
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocab v;
    std::vector<std::string> tokens = v.tokens_;
    for (auto& [tok, n] : ranked) {
        if (v.index_.count(tok) == 0) {
            tokens.push_back(tok);
        }
    }
    return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
    Vocab v;
    v.assign(std::move(tokens));
    return v;
}

std::size_t Vocab::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocab::encode(const std::vector<std::string>& chars) const {
    std::vector<std::size_t> ids;
    ids.reserve(chars.size());
    for (const auto& c : chars) {
        ids.push_back(id(c));
    }
    return ids;
}

namespace labels {

LabelSet cws() {
    return LabelSet({"O", "B", "I"});
}

}  // namespace labels

}  // namespace gbert
