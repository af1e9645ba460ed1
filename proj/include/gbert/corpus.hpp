#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gbert/rng.hpp"
#include "gbert/tree.hpp"
#include "gbert/vocab.hpp"

namespace gbert {

/// A segmented, POS-tagged sentence with an optional constituency tree.
struct SegmentedSentence {
    std::vector<std::string> chars;
    std::vector<std::pair<std::size_t, std::size_t>> word_spans;  // [start, end) over chars
    std::vector<std::string> pos;                                 // one per word
    std::optional<ParseTree> tree;

    static SegmentedSentence from_words(const std::vector<std::string>& words,
                                        std::vector<std::string> pos,
                                        std::optional<ParseTree> tree = std::nullopt);

    std::vector<std::string> words() const;
    /// Throws DataError when spans do not partition chars or |pos| ≠ |words|.
    void validate() const;

    bool operator==(const SegmentedSentence& o) const {
        return chars == o.chars && word_spans == o.word_spans && pos == o.pos && tree == o.tree;
    }
};

/// Per-character supervision streams for one sentence. A stream is absent
/// when its source annotation is missing (sp1/sp2 need a tree).
struct CharLabels {
    std::vector<std::string> chars;
    std::optional<std::vector<std::string>> cws;
    std::optional<std::vector<std::string>> pos;
    std::optional<std::vector<std::string>> sp1;
    std::optional<std::vector<std::string>> sp2;

    CharLabels truncated(std::size_t n) const;
};

/// BIO segmentation tags: B on the first character of each word, I elsewhere.
std::vector<std::string> cws_to_bio(const SegmentedSentence& sentence);

/// Each character inherits its word's POS tag.
std::vector<std::string> propagate_pos(const SegmentedSentence& sentence);

struct SpTags {
    std::vector<std::string> sp1;
    std::vector<std::string> sp2;
};

/// Character-level parsing tags. Throws DataError naming the first word index
/// where the tree's leaves disagree with the segmentation.
SpTags derive_sp_labels(const SegmentedSentence& sentence);

/// All streams available for the sentence.
CharLabels label_sentence(const SegmentedSentence& sentence);

// ---------------------------------------------------------------- masking

inline constexpr std::size_t kIgnoreTarget = std::numeric_limits<std::size_t>::max();

struct MaskedIds {
    std::vector<std::size_t> ids;
    std::vector<std::size_t> targets;  // original id at selected positions, else kIgnoreTarget
};

/// Selects each non-special position with probability mask_rate; selected
/// positions become MASK (80%), a random non-special token (10%) or stay
/// unchanged (10%).
MaskedIds make_mlm(const std::vector<std::size_t>& ids, Rng& rng, double mask_rate, const Vocab& vocab);

// ---------------------------------------------------------------- NSP

using Document = std::vector<CharLabels>;

struct SentencePair {
    CharLabels a;
    CharLabels b;
    bool is_next = false;
};

/// Draws sentence a, then with probability is_next_prob its true successor,
/// otherwise a uniformly chosen sentence that is not its successor. The pair
/// is trimmed (longer side first, from the end) so that CLS a SEP b SEP fits
/// max_len.
SentencePair make_nsp_pair(const std::vector<Document>& corpus, Rng& rng, std::size_t max_len,
                           double is_next_prob = 0.5);

// ---------------------------------------------------------------- examples

struct TagInventories {
    LabelSet cws = labels::cws();
    LabelSet syntax;  // POS and parsing labels; PAD = 0, ROOT = 1

    /// PAD, ROOT, then every POS and tree label found, sorted.
    static TagInventories build(const std::vector<SegmentedSentence>& sentences);
};

struct PretrainExample {
    std::vector<std::size_t> input_ids;
    std::vector<std::size_t> segment_ids;
    std::vector<bool> attention_mask;
    std::vector<bool> char_mask;  // true on sentence characters (not CLS/SEP/PAD)
    std::vector<std::size_t> mlm_targets;
    bool is_next = false;
    std::vector<std::size_t> cws_tags, pos_tags, sp1_tags, sp2_tags;

    std::size_t length() const noexcept { return input_ids.size(); }
};

struct ExampleOptions {
    double mask_rate = 0.15;
    std::size_t pad_to = 0;  // 0 leaves the example unpadded
};

/// Packs CLS a SEP b SEP with segment ids 0/1, applies MLM masking and
/// attaches the four tag streams (PAD tag on specials and padding). Throws
/// DataError naming any missing label stream.
PretrainExample build_pretrain_example(const SentencePair& pair, const Vocab& vocab,
                                       const TagInventories& tags, Rng& rng,
                                       const ExampleOptions& options);

// ---------------------------------------------------------------- files

struct NerSentence {
    std::vector<std::string> chars;
    std::vector<std::string> tags;

    bool operator==(const NerSentence&) const = default;
};

/// Two tab-separated columns (character, BIO tag); blank lines separate sentences.
std::vector<NerSentence> read_conll(const std::filesystem::path& path);
void write_conll(const std::filesystem::path& path, const std::vector<NerSentence>& sentences);
/// Three columns: character, gold tag, predicted tag.
void write_predictions(const std::filesystem::path& path, const std::vector<NerSentence>& gold,
                       const std::vector<std::vector<std::string>>& predicted);

/// One bracketed tree per non-blank line.
std::vector<ParseTree> read_trees(const std::filesystem::path& path);

/// One sentence per non-blank line, words separated by whitespace.
std::vector<std::vector<std::string>> read_segmentation(const std::filesystem::path& path);

/// JSON lines {"chars": str, "words": [str], "pos": [str], "tree": str?};
/// a blank line ends a document.
std::vector<std::vector<SegmentedSentence>> read_pretrain_jsonl(const std::filesystem::path& path);
void write_pretrain_jsonl(const std::filesystem::path& path,
                          const std::vector<std::vector<SegmentedSentence>>& documents);

/// Vocabulary over the characters of every sentence.
Vocab build_vocab(const std::vector<SegmentedSentence>& corpus, std::size_t min_count);

}  // namespace gbert
