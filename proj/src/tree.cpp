#include "gbert/tree.hpp"

#include <cctype>

#include "gbert/errors.hpp"
#include "gbert/utf8.hpp"
#include "gbert/vocab.hpp"

namespace gbert {

namespace {

struct Token {
    enum Kind { open, close, symbol } kind;
    std::string text;
    std::size_t offset;
};

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (is_space(c)) {
            ++i;
        } else if (c == '(') {
            out.push_back({Token::open, "(", i++});
        } else if (c == ')') {
            out.push_back({Token::close, ")", i++});
        } else {
            const std::size_t start = i;
            while (i < s.size() && !is_space(s[i]) && s[i] != '(' && s[i] != ')') {
                ++i;
            }
            out.push_back({Token::symbol, std::string(s.substr(start, i - start)), start});
        }
    }
    return out;
}

[[noreturn]] void malformed(std::size_t offset, const std::string& what) {
    throw DataError("bracketed tree, offset " + std::to_string(offset) + ": " + what);
}

}  // namespace

std::size_t ParseTree::add_node(std::string label, std::size_t parent, bool leaf) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({std::move(label), parent, {}, leaf});
    if (parent != npos) {
        nodes_.at(parent).children.push_back(id);
    }
    return id;
}

ParseTree ParseTree::parse(std::string_view text) {
    utf8::split_chars(text);  // encoding check
    const auto toks = tokenize(text);
    if (toks.empty()) {
        malformed(0, "empty input");
    }
    if (toks[0].kind != Token::open) {
        malformed(toks[0].offset, "expected '('");
    }

    // Raw parse into a scratch tree that may carry an unlabeled wrapper.
    ParseTree raw;
    std::vector<std::size_t> stack;
    std::size_t pos = 0;
    while (pos < toks.size()) {
        const Token& t = toks[pos];
        if (t.kind == Token::open) {
            if (pos > 0 && stack.empty()) {
                malformed(t.offset, "text after the end of the tree");
            }
            std::string label;
            if (pos + 1 < toks.size() && toks[pos + 1].kind == Token::symbol) {
                label = toks[pos + 1].text;
                ++pos;
            }
            const std::size_t parent = stack.empty() ? npos : stack.back();
            if (label.empty() && parent != npos) {
                malformed(t.offset, "unlabeled constituent below the root");
            }
            stack.push_back(raw.add_node(label, parent));
        } else if (t.kind == Token::close) {
            if (stack.empty()) {
                malformed(t.offset, "unbalanced ')'");
            }
            const Node& n = raw.nodes_[stack.back()];
            if (n.children.empty()) {
                malformed(t.offset, "constituent '" + n.label + "' has no children");
            }
            stack.pop_back();
        } else {
            if (stack.empty()) {
                malformed(t.offset, "text after the end of the tree");
            }
            raw.add_node(t.text, stack.back(), true);
        }
        ++pos;
    }
    if (!stack.empty()) {
        malformed(text.size(), "unbalanced '(' (" + std::to_string(stack.size()) + " unclosed)");
    }

    // Word leaves must be the only child of their parent.
    for (const Node& n : raw.nodes_) {
        if (n.leaf) {
            const Node& p = raw.nodes_[n.parent];
            if (p.children.size() != 1) {
                malformed(0, "word '" + n.label + "' under '" + p.label +
                                 "' is not the only child of a preterminal");
            }
            if (p.label.empty()) {
                malformed(0, "word '" + n.label + "' has no POS label");
            }
        }
    }

    std::size_t top = 0;
    if (raw.nodes_[0].label.empty()) {
        if (raw.nodes_[0].children.size() != 1) {
            malformed(toks[0].offset, "unlabeled root must wrap exactly one tree");
        }
        top = raw.nodes_[0].children[0];
    }
    // Copy the subtree at `top` so the root is node 0.
    ParseTree tree;
    std::vector<std::pair<std::size_t, std::size_t>> work{{top, npos}};
    while (!work.empty()) {
        auto [src, parent] = work.back();
        work.pop_back();
        const Node& n = raw.nodes_[src];
        const std::size_t id = tree.add_node(n.label, parent, n.leaf);
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
            work.emplace_back(*it, id);
        }
    }
    return tree;
}

std::vector<std::size_t> ParseTree::preterminals() const {
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const Node& n = nodes_[i];
        if (n.children.size() == 1 && nodes_[n.children[0]].leaf) {
            out.push_back(i);
            continue;
        }
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
            stack.push_back(*it);
        }
    }
    return out;
}

std::vector<std::string> ParseTree::words() const {
    std::vector<std::string> out;
    for (std::size_t p : preterminals()) {
        out.push_back(nodes_[nodes_[p].children[0]].label);
    }
    return out;
}

std::vector<std::string> ParseTree::pos_tags() const {
    std::vector<std::string> out;
    for (std::size_t p : preterminals()) {
        out.push_back(nodes_[p].label);
    }
    return out;
}

std::vector<std::string> ParseTree::labels() const {
    std::vector<std::string> out;
    for (const Node& n : nodes_) {
        if (!n.leaf) {
            out.push_back(n.label);
        }
    }
    return out;
}

void ParseTree::write(std::size_t i, std::string& out) const {
    const Node& n = nodes_[i];
    if (n.leaf) {
        out += n.label;
        return;
    }
    out += '(';
    out += n.label;
    for (std::size_t c : n.children) {
        out += ' ';
        write(c, out);
    }
    out += ')';
}

std::string ParseTree::str() const {
    std::string out;
    if (!nodes_.empty()) {
        write(0, out);
    }
    return out;
}

bool ParseTree::operator==(const ParseTree& o) const {
    if (nodes_.size() != o.nodes_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& a = nodes_[i];
        const Node& b = o.nodes_[i];
        if (a.label != b.label || a.parent != b.parent || a.children != b.children || a.leaf != b.leaf) {
            return false;
        }
    }
    return true;
}

WordSpTags derive_sp_word_tags(const ParseTree& tree) {
    WordSpTags tags;
    for (std::size_t p : tree.preterminals()) {
        const std::size_t parent = tree.node(p).parent;
        const std::size_t grand = parent == ParseTree::npos ? ParseTree::npos : tree.node(parent).parent;
        tags.sp1.push_back(parent == ParseTree::npos ? labels::kRoot : tree.node(parent).label);
        tags.sp2.push_back(grand == ParseTree::npos ? labels::kRoot : tree.node(grand).label);
    }
    return tags;
}

}  // namespace gbert
