#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace gbert {

/// Rooted labeled constituency tree. Word leaves hang under preterminals
/// (nodes whose only child is a word); every other node is a nonterminal.
class ParseTree {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    struct Node {
        std::string label;  // nonterminal/POS label, or the word for leaves
        std::size_t parent = npos;
        std::vector<std::size_t> children;
        bool leaf = false;
    };

    /// Parses one Penn-style bracketed tree, e.g. "(IP (NP (NN 我)) (VP (VV 来)))".
    /// An unlabeled outer wrapper "( (IP ...) )" is stripped. Throws DataError
    /// with the character offset on unbalanced brackets or malformed nodes.
    static ParseTree parse(std::string_view text);

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const Node& node(std::size_t i) const { return nodes_.at(i); }
    std::size_t root() const noexcept { return 0; }

    /// Preterminal node indices in left-to-right word order.
    std::vector<std::size_t> preterminals() const;
    std::vector<std::string> words() const;
    std::vector<std::string> pos_tags() const;
    /// Every non-leaf label (preterminals included), in preorder.
    std::vector<std::string> labels() const;

    /// Canonical single-line bracketed form; parse(str()) reproduces the tree.
    std::string str() const;

    bool operator==(const ParseTree& o) const;

    /// Builder used by generators: adds a node under `parent` (npos for root).
    std::size_t add_node(std::string label, std::size_t parent, bool leaf = false);

private:
    void write(std::size_t i, std::string& out) const;

    std::vector<Node> nodes_;
};

/// Word-level parsing tags: sp1 is the label of the preterminal's parent,
/// sp2 the label of that node's parent; ROOT substitutes a missing ancestor.
struct WordSpTags {
    std::vector<std::string> sp1;
    std::vector<std::string> sp2;
};

WordSpTags derive_sp_word_tags(const ParseTree& tree);

}  // namespace gbert
