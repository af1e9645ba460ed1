#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace gbert {

/// Closed label inventory with dense ids in insertion order.
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<std::string> labels);

    /// Throws DataError for labels outside the inventory.
    std::size_t id(const std::string& label) const;
    bool contains(const std::string& label) const { return index_.count(label) != 0; }
    const std::string& label(std::size_t id) const { return labels_.at(id); }
    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    bool operator==(const LabelSet& o) const { return labels_ == o.labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Character vocabulary. Ids 0..4 are reserved for PAD, UNK, MASK, CLS, SEP.
class Vocab {
public:
    static constexpr std::size_t kPad = 0;
    static constexpr std::size_t kUnk = 1;
    static constexpr std::size_t kMask = 2;
    static constexpr std::size_t kCls = 3;
    static constexpr std::size_t kSep = 4;
    static constexpr std::size_t kReserved = 5;

    Vocab();

    /// Tokens with count ≥ min_count, ordered by descending frequency then
    /// byte-wise lexicographic order, after the reserved ids.
    static Vocab build(const std::vector<std::vector<std::string>>& sentences, std::size_t min_count = 1);
    /// Restores a vocabulary from its full token list (reserved tokens first).
    static Vocab from_tokens(std::vector<std::string> tokens);

    std::size_t id(const std::string& token) const;
    const std::string& token(std::size_t id) const { return tokens_.at(id); }
    std::size_t size() const noexcept { return tokens_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    std::vector<std::size_t> encode(const std::vector<std::string>& chars) const;

    static bool is_special(std::size_t id) noexcept { return id < kReserved; }

private:
    void assign(std::vector<std::string> tokens);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
};

namespace labels {

inline constexpr const char* kPad = "PAD";
inline constexpr const char* kRoot = "ROOT";

/// CWS inventory: O (specials and padding), B, I.
LabelSet cws();

}  // namespace labels

}  // namespace gbert
