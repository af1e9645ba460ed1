#include "gbert/synthetic.hpp"

#include <set>

#include "gbert/errors.hpp"
#include "gbert/utf8.hpp"

namespace gbert {

namespace {

// The lexicon is fixed; only sentence sampling depends on the caller's rng.
constexpr std::uint64_t kLexiconSeed = 0x6c657869636f6e31ULL;
constexpr std::size_t kNamesPerType = 12;

std::string encode_cp(std::uint32_t cp) {
    std::string s;
    s += static_cast<char>(0xE0 | (cp >> 12));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
    return s;
}

struct Lexicon {
    std::vector<std::string> nn, vv, jj, ad, p, lc, vc;
    std::vector<std::vector<std::string>> names;  // per entity type
};

class LexiconBuilder {
public:
    explicit LexiconBuilder(Rng& rng) : rng_(rng) {}

    std::string fresh_char() {
        while (true) {
            const auto cp = static_cast<std::uint32_t>(0x4E00 + rng_.below(0x9FA5 - 0x4E00));
            std::string c = encode_cp(cp);
            if (chars_.insert(c).second) return c;
        }
    }

    std::vector<std::string> pool(std::size_t n) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(fresh_char());
        return out;
    }

    // `count` distinct words of length in [min_len, max_len]; the first
    // character comes from `first` when given.
    std::vector<std::string> words(std::size_t count, std::size_t min_len, std::size_t max_len,
                                   const std::vector<std::string>& body,
                                   const std::vector<std::string>& first = {}) {
        std::vector<std::string> out;
        while (out.size() < count) {
            const std::size_t len = min_len + rng_.below(max_len - min_len + 1);
            std::string w;
            for (std::size_t i = 0; i < len; ++i) {
                const auto& src = (i == 0 && !first.empty()) ? first : body;
                w += src[rng_.below(src.size())];
            }
            if (words_.insert(w).second) out.push_back(w);
        }
        return out;
    }

private:
    Rng& rng_;
    std::set<std::string> chars_;
    std::set<std::string> words_;
};

Lexicon build_lexicon(std::size_t entity_types) {
    Rng rng(kLexiconSeed);
    LexiconBuilder b(rng);
    const auto common = b.pool(60);
    const auto function_chars = b.pool(12);
    Lexicon lex;
    lex.nn = b.words(30, 1, 2, common);
    lex.vv = b.words(16, 1, 2, common);
    lex.jj = b.words(8, 1, 2, common);
    lex.ad = b.words(6, 1, 2, common);
    lex.p = b.words(4, 1, 1, function_chars);
    lex.lc = b.words(4, 1, 1, function_chars);
    lex.vc = b.words(1, 1, 1, function_chars);
    // Each entity type has its own character pools. Types are built in order,
    // so type k's names do not depend on how many types follow it.
    for (std::size_t t = 0; t < entity_types; ++t) {
        const auto heads = b.pool(6);
        const auto body = b.pool(10);
        lex.names.push_back(b.words(kNamesPerType, 2, 3, body, heads));
    }
    return lex;
}

class SentenceBuilder {
public:
    SentenceBuilder(const Lexicon& lex, const std::vector<std::string>& types, Rng& rng)
        : lex_(lex), types_(types), rng_(rng) {}

    void ip(std::size_t parent, int depth) {
        const std::size_t n = tree_.add_node("IP", parent);
        np(n, depth);
        vp(n, depth);
    }

    void np(std::size_t parent, int depth) {
        const std::size_t n = tree_.add_node("NP", parent);
        const double r = rng_.uniform();
        if (r < 0.4) {
            const std::size_t t = rng_.below(types_.size());
            const auto& names = lex_.names[t];
            const std::size_t start = chars_;
            word(n, "NR", names[rng_.below(names.size())]);
            spans_.push_back({types_[t], start, chars_});
        } else if (r < 0.7 || depth > 2) {
            word(n, "NN", pick(lex_.nn));
        } else if (r < 0.85) {
            word(n, "NN", pick(lex_.nn));
            word(n, "NN", pick(lex_.nn));
        } else {
            const std::size_t a = tree_.add_node("ADJP", n);
            word(a, "JJ", pick(lex_.jj));
            np(n, depth + 1);
        }
    }

    void vp(std::size_t parent, int depth) {
        const std::size_t n = tree_.add_node("VP", parent);
        const double r = rng_.uniform();
        if (r < 0.4 || depth > 2) {
            word(n, "VV", pick(lex_.vv));
            np(n, depth + 1);
        } else if (r < 0.6) {
            const std::size_t a = tree_.add_node("ADVP", n);
            word(a, "AD", pick(lex_.ad));
            vp(n, depth + 1);
        } else if (r < 0.8) {
            const std::size_t pp = tree_.add_node("PP", n);
            word(pp, "P", pick(lex_.p));
            const std::size_t lcp = tree_.add_node("LCP", pp);
            np(lcp, depth + 1);
            word(lcp, "LC", pick(lex_.lc));
            vp(n, depth + 1);
        } else {
            word(n, "VC", lex_.vc[0]);
            np(n, depth + 1);
        }
    }

    SegmentedSentence sentence() const { return SegmentedSentence::from_words(words_, pos_, tree_); }
    const std::vector<EntitySpan>& spans() const { return spans_; }

private:
    const std::string& pick(const std::vector<std::string>& v) { return v[rng_.below(v.size())]; }

    void word(std::size_t parent, const char* pos, const std::string& w) {
        const std::size_t pre = tree_.add_node(pos, parent);
        tree_.add_node(w, pre, true);
        words_.push_back(w);
        pos_.push_back(pos);
        chars_ += utf8::split_chars(w).size();
    }

    const Lexicon& lex_;
    const std::vector<std::string>& types_;
    Rng& rng_;
    ParseTree tree_;
    std::vector<std::string> words_, pos_;
    std::vector<EntitySpan> spans_;
    std::size_t chars_ = 0;
};

}  // namespace

std::vector<std::string> synthetic_entity_types(std::size_t count) {
    std::vector<std::string> out;
    const char* base[] = {"PER", "LOC", "ORG"};
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(i < 3 ? std::string(base[i]) : "MISC" + std::to_string(i - 2));
    }
    return out;
}

SyntheticCorpus generate_synthetic_corpus(Rng& rng, std::size_t n_sentences, std::size_t entity_types,
                                          std::size_t sentences_per_document) {
    if (n_sentences == 0) throw UsageError("synthetic corpus needs at least one sentence");
    if (entity_types == 0) throw UsageError("synthetic corpus needs at least one entity type");
    if (sentences_per_document == 0) throw UsageError("documents need at least one sentence");
    const Lexicon lex = build_lexicon(entity_types);
    const auto types = synthetic_entity_types(entity_types);

    SyntheticCorpus out;
    for (std::size_t i = 0; i < n_sentences; ++i) {
        SentenceBuilder b(lex, types, rng);
        b.ip(ParseTree::npos, 0);
        SegmentedSentence s = b.sentence();
        out.ner.push_back({s.chars, encode_bio(b.spans(), s.chars.size())});
        out.entities.push_back(b.spans());
        if (i % sentences_per_document == 0) out.documents.emplace_back();
        out.documents.back().push_back(std::move(s));
    }
    return out;
}

}  // namespace gbert
