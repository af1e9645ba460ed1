#include "gbert/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "gbert/errors.hpp"
#include "gbert/utf8.hpp"

namespace gbert {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "' for reading");
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

// getline without the trailing carriage return.
bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) {
        return false;
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return true;
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t") == std::string::npos;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        cols.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) {
            break;
        }
        start = tab + 1;
    }
    return cols;
}

bool valid_bio(const std::string& tag) {
    if (tag == "O") {
        return true;
    }
    return tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-';
}

template <class T>
std::vector<T> slice(const std::vector<T>& v, std::size_t n) {
    return std::vector<T>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(n, v.size())));
}

std::vector<std::string> words_to_chars(const std::vector<std::string>& words,
                                        const SegmentedSentence& sentence) {
    std::vector<std::string> out;
    out.reserve(sentence.chars.size());
    for (std::size_t w = 0; w < sentence.word_spans.size(); ++w) {
        const auto [s, e] = sentence.word_spans[w];
        for (std::size_t i = s; i < e; ++i) {
            out.push_back(words[w]);
        }
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- sentences

SegmentedSentence SegmentedSentence::from_words(const std::vector<std::string>& words,
                                                std::vector<std::string> pos,
                                                std::optional<ParseTree> tree) {
    SegmentedSentence s;
    for (const auto& w : words) {
        auto cs = utf8::split_chars(w);
        if (cs.empty()) {
            throw DataError("empty word in segmentation");
        }
        const std::size_t start = s.chars.size();
        s.chars.insert(s.chars.end(), cs.begin(), cs.end());
        s.word_spans.emplace_back(start, s.chars.size());
    }
    s.pos = std::move(pos);
    s.tree = std::move(tree);
    s.validate();
    return s;
}

std::vector<std::string> SegmentedSentence::words() const {
    std::vector<std::string> out;
    for (const auto& [s, e] : word_spans) {
        std::string w;
        for (std::size_t i = s; i < e; ++i) {
            w += chars[i];
        }
        out.push_back(std::move(w));
    }
    return out;
}

void SegmentedSentence::validate() const {
    std::size_t expect = 0;
    for (std::size_t w = 0; w < word_spans.size(); ++w) {
        const auto [s, e] = word_spans[w];
        if (s != expect || e <= s) {
            throw DataError("word span " + std::to_string(w) + " is not contiguous and nonempty");
        }
        expect = e;
    }
    if (expect != chars.size()) {
        throw DataError("word spans cover " + std::to_string(expect) + " of " +
                        std::to_string(chars.size()) + " characters");
    }
    if (pos.size() != word_spans.size()) {
        throw DataError(std::to_string(pos.size()) + " POS tags for " +
                        std::to_string(word_spans.size()) + " words");
    }
}

CharLabels CharLabels::truncated(std::size_t n) const {
    CharLabels out;
    out.chars = slice(chars, n);
    auto cut = [n](const std::optional<std::vector<std::string>>& s) {
        return s ? std::optional(slice(*s, n)) : std::nullopt;
    };
    out.cws = cut(cws);
    out.pos = cut(pos);
    out.sp1 = cut(sp1);
    out.sp2 = cut(sp2);
    return out;
}

std::vector<std::string> cws_to_bio(const SegmentedSentence& sentence) {
    std::vector<std::string> tags;
    tags.reserve(sentence.chars.size());
    for (const auto& [s, e] : sentence.word_spans) {
        for (std::size_t i = s; i < e; ++i) {
            tags.emplace_back(i == s ? "B" : "I");
        }
    }
    return tags;
}

std::vector<std::string> propagate_pos(const SegmentedSentence& sentence) {
    if (sentence.pos.size() != sentence.word_spans.size()) {
        throw DataError(std::to_string(sentence.pos.size()) + " POS tags for " +
                        std::to_string(sentence.word_spans.size()) + " words");
    }
    return words_to_chars(sentence.pos, sentence);
}

SpTags derive_sp_labels(const SegmentedSentence& sentence) {
    if (!sentence.tree) {
        throw DataError("sentence has no parse tree");
    }
    const auto tree_words = sentence.tree->words();
    const auto seg_words = sentence.words();
    const std::size_t common = std::min(tree_words.size(), seg_words.size());
    for (std::size_t i = 0; i < common; ++i) {
        if (tree_words[i] != seg_words[i]) {
            throw DataError("tree leaf '" + tree_words[i] + "' does not match segmented word '" +
                            seg_words[i] + "' at word " + std::to_string(i));
        }
    }
    if (tree_words.size() != seg_words.size()) {
        throw DataError("tree has " + std::to_string(tree_words.size()) + " leaves but segmentation has " +
                        std::to_string(seg_words.size()) + " words; first mismatch at word " +
                        std::to_string(common));
    }
    const WordSpTags w = derive_sp_word_tags(*sentence.tree);
    return {words_to_chars(w.sp1, sentence), words_to_chars(w.sp2, sentence)};
}

CharLabels label_sentence(const SegmentedSentence& sentence) {
    sentence.validate();
    CharLabels out;
    out.chars = sentence.chars;
    out.cws = cws_to_bio(sentence);
    out.pos = propagate_pos(sentence);
    if (sentence.tree) {
        SpTags sp = derive_sp_labels(sentence);
        out.sp1 = std::move(sp.sp1);
        out.sp2 = std::move(sp.sp2);
    }
    return out;
}

// ---------------------------------------------------------------- masking

MaskedIds make_mlm(const std::vector<std::size_t>& ids, Rng& rng, double mask_rate, const Vocab& vocab) {
    if (!(mask_rate > 0.0 && mask_rate < 1.0)) {
        throw UsageError("mask_rate must lie in (0, 1)");
    }
    MaskedIds out{ids, std::vector<std::size_t>(ids.size(), kIgnoreTarget)};
    const std::size_t regular = vocab.size() - Vocab::kReserved;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (Vocab::is_special(ids[i])) {
            continue;
        }
        if (rng.uniform() >= mask_rate) {
            continue;
        }
        out.targets[i] = ids[i];
        const double r = rng.uniform();
        if (r < 0.8) {
            out.ids[i] = Vocab::kMask;
        } else if (r < 0.9) {
            out.ids[i] = regular == 0 ? Vocab::kMask : Vocab::kReserved + rng.below(regular);
        }
    }
    return out;
}

// ---------------------------------------------------------------- NSP

SentencePair make_nsp_pair(const std::vector<Document>& corpus, Rng& rng, std::size_t max_len,
                           double is_next_prob) {
    if (max_len < 5) {
        throw UsageError("make_nsp_pair: max_len must be at least 5 to hold two sentences");
    }
    // Flat index of every sentence plus its in-document successor.
    std::vector<std::pair<std::size_t, std::size_t>> index;
    std::vector<std::size_t> with_successor;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        for (std::size_t s = 0; s < corpus[d].size(); ++s) {
            if (corpus[d][s].chars.empty()) {
                throw DataError("document " + std::to_string(d) + " sentence " + std::to_string(s) +
                                " is empty");
            }
            if (s + 1 < corpus[d].size()) {
                with_successor.push_back(index.size());
            }
            index.emplace_back(d, s);
        }
    }
    if (index.size() < 2) {
        throw DataError("next-sentence pairs need at least two sentences");
    }
    if (with_successor.empty()) {
        throw DataError("next-sentence pairs need a document with two or more sentences");
    }

    SentencePair pair;
    pair.is_next = rng.uniform() < is_next_prob;
    std::size_t a = 0, b = 0;
    if (pair.is_next) {
        a = with_successor[rng.below(with_successor.size())];
        b = a + 1;
    } else {
        a = rng.below(index.size());
        const bool has_succ = a + 1 < index.size() && index[a + 1].first == index[a].first;
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < index.size(); ++i) {
            if (i != a && !(has_succ && i == a + 1)) {
                candidates.push_back(i);
            }
        }
        b = candidates.empty() ? a : candidates[rng.below(candidates.size())];
    }
    pair.a = corpus[index[a].first][index[a].second];
    pair.b = corpus[index[b].first][index[b].second];

    std::size_t la = pair.a.chars.size(), lb = pair.b.chars.size();
    while (la + lb + 3 > max_len) {
        if (la > lb) {
            --la;
        } else {
            --lb;
        }
    }
    pair.a = pair.a.truncated(la);
    pair.b = pair.b.truncated(lb);
    return pair;
}

// ---------------------------------------------------------------- examples

TagInventories TagInventories::build(const std::vector<SegmentedSentence>& sentences) {
    std::set<std::string> found;
    for (const auto& s : sentences) {
        found.insert(s.pos.begin(), s.pos.end());
        if (s.tree) {
            for (auto& l : s.tree->labels()) {
                found.insert(l);
            }
        }
    }
    found.erase(labels::kPad);
    found.erase(labels::kRoot);
    std::vector<std::string> all{labels::kPad, labels::kRoot};
    all.insert(all.end(), found.begin(), found.end());
    TagInventories inv;
    inv.syntax = LabelSet(std::move(all));
    return inv;
}

PretrainExample build_pretrain_example(const SentencePair& pair, const Vocab& vocab,
                                       const TagInventories& tags, Rng& rng,
                                       const ExampleOptions& options) {
    struct Stream {
        const char* name;
        std::optional<std::vector<std::string>> CharLabels::*member;
        const LabelSet* inventory;
        std::vector<std::size_t> PretrainExample::*out;
    };
    const Stream streams[] = {
        {"cws", &CharLabels::cws, &tags.cws, &PretrainExample::cws_tags},
        {"pos", &CharLabels::pos, &tags.syntax, &PretrainExample::pos_tags},
        {"sp1", &CharLabels::sp1, &tags.syntax, &PretrainExample::sp1_tags},
        {"sp2", &CharLabels::sp2, &tags.syntax, &PretrainExample::sp2_tags},
    };
    for (const auto* side : {&pair.a, &pair.b}) {
        const char* which = side == &pair.a ? "a" : "b";
        for (const auto& st : streams) {
            const auto& s = side->*st.member;
            if (!s) {
                throw DataError(std::string("sentence ") + which + " is missing the '" + st.name +
                                "' label stream");
            }
            if (s->size() != side->chars.size()) {
                throw DataError(std::string("sentence ") + which + " '" + st.name + "' stream has " +
                                std::to_string(s->size()) + " tags for " +
                                std::to_string(side->chars.size()) + " characters");
            }
        }
    }

    PretrainExample ex;
    ex.is_next = pair.is_next;
    const std::size_t cws_pad = tags.cws.id("O");
    const std::size_t syn_pad = tags.syntax.id(labels::kPad);
    auto push_special = [&](std::size_t id, std::size_t segment) {
        ex.input_ids.push_back(id);
        ex.segment_ids.push_back(segment);
        ex.attention_mask.push_back(id != Vocab::kPad);
        ex.char_mask.push_back(false);
        ex.cws_tags.push_back(cws_pad);
        ex.pos_tags.push_back(syn_pad);
        ex.sp1_tags.push_back(syn_pad);
        ex.sp2_tags.push_back(syn_pad);
    };
    auto push_sentence = [&](const CharLabels& s, std::size_t segment) {
        for (std::size_t i = 0; i < s.chars.size(); ++i) {
            ex.input_ids.push_back(vocab.id(s.chars[i]));
            ex.segment_ids.push_back(segment);
            ex.attention_mask.push_back(true);
            ex.char_mask.push_back(true);
            for (const auto& st : streams) {
                (ex.*st.out).push_back(st.inventory->id((*(s.*st.member))[i]));
            }
        }
    };

    push_special(Vocab::kCls, 0);
    push_sentence(pair.a, 0);
    push_special(Vocab::kSep, 0);
    push_sentence(pair.b, 1);
    push_special(Vocab::kSep, 1);

    MaskedIds masked = make_mlm(ex.input_ids, rng, options.mask_rate, vocab);
    ex.input_ids = std::move(masked.ids);
    ex.mlm_targets = std::move(masked.targets);

    if (options.pad_to != 0) {
        if (ex.length() > options.pad_to) {
            throw DataError("example of length " + std::to_string(ex.length()) + " exceeds pad length " +
                            std::to_string(options.pad_to));
        }
        while (ex.length() < options.pad_to) {
            push_special(Vocab::kPad, 0);
            ex.mlm_targets.push_back(kIgnoreTarget);
        }
    }
    return ex;
}

// ---------------------------------------------------------------- files

std::vector<NerSentence> read_conll(const std::filesystem::path& path) {
    auto in = open_input(path);
    const std::string src = path.string();
    std::vector<NerSentence> out;
    NerSentence cur;
    std::string line;
    std::size_t lineno = 0;
    while (next_line(in, line)) {
        ++lineno;
        if (blank(line)) {
            if (!cur.chars.empty()) {
                out.push_back(std::move(cur));
                cur = {};
            }
            continue;
        }
        const auto cols = split_tabs(line);
        if (cols.size() != 2) {
            throw DataError(src, lineno, "expected 2 tab-separated columns, found " + std::to_string(cols.size()));
        }
        try {
            utf8::split_chars(line);
        } catch (const DataError& e) {
            throw DataError(src, lineno, e.what());
        }
        if (!utf8::is_single_char(cols[0])) {
            throw DataError(src, lineno, "first column must be a single character, got '" + cols[0] + "'");
        }
        if (!valid_bio(cols[1])) {
            throw DataError(src, lineno, "invalid BIO tag '" + cols[1] + "'");
        }
        cur.chars.push_back(cols[0]);
        cur.tags.push_back(cols[1]);
    }
    if (!cur.chars.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

void write_conll(const std::filesystem::path& path, const std::vector<NerSentence>& sentences) {
    auto out = open_output(path);
    for (const auto& s : sentences) {
        for (std::size_t i = 0; i < s.chars.size(); ++i) {
            out << s.chars[i] << '\t' << s.tags[i] << '\n';
        }
        out << '\n';
    }
}

void write_predictions(const std::filesystem::path& path, const std::vector<NerSentence>& gold,
                       const std::vector<std::vector<std::string>>& predicted) {
    if (gold.size() != predicted.size()) {
        throw DataError("prediction count does not match sentence count");
    }
    auto out = open_output(path);
    for (std::size_t k = 0; k < gold.size(); ++k) {
        for (std::size_t i = 0; i < gold[k].chars.size(); ++i) {
            out << gold[k].chars[i] << '\t' << gold[k].tags[i] << '\t' << predicted[k].at(i) << '\n';
        }
        out << '\n';
    }
}

std::vector<ParseTree> read_trees(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<ParseTree> out;
    std::string line;
    std::size_t lineno = 0;
    while (next_line(in, line)) {
        ++lineno;
        if (blank(line)) {
            continue;
        }
        try {
            out.push_back(ParseTree::parse(line));
        } catch (const DataError& e) {
            throw DataError(path.string(), lineno, e.what());
        }
    }
    return out;
}

std::vector<std::vector<std::string>> read_segmentation(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<std::vector<std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (next_line(in, line)) {
        ++lineno;
        if (blank(line)) {
            continue;
        }
        try {
            utf8::split_chars(line);
        } catch (const DataError& e) {
            throw DataError(path.string(), lineno, e.what());
        }
        std::vector<std::string> words;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
            const std::size_t start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
            if (i > start) {
                words.push_back(line.substr(start, i - start));
            }
        }
        out.push_back(std::move(words));
    }
    return out;
}

std::vector<std::vector<SegmentedSentence>> read_pretrain_jsonl(const std::filesystem::path& path) {
    using nlohmann::json;
    auto in = open_input(path);
    const std::string src = path.string();
    std::vector<std::vector<SegmentedSentence>> docs;
    std::vector<SegmentedSentence> cur;
    std::string line;
    std::size_t lineno = 0;
    auto string_array = [&](const json& j, const char* key) {
        if (!j.is_array()) {
            throw DataError(src, lineno, std::string("field '") + key + "' must be an array of strings");
        }
        std::vector<std::string> out;
        for (const auto& e : j) {
            if (!e.is_string()) {
                throw DataError(src, lineno, std::string("field '") + key + "' must be an array of strings");
            }
            out.push_back(e.get<std::string>());
        }
        return out;
    };
    while (next_line(in, line)) {
        ++lineno;
        if (blank(line)) {
            if (!cur.empty()) {
                docs.push_back(std::move(cur));
                cur.clear();
            }
            continue;
        }
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(src, lineno, std::string("malformed JSON: ") + e.what());
        }
        if (!rec.is_object()) {
            throw DataError(src, lineno, "record must be a JSON object");
        }
        for (const auto& [key, value] : rec.items()) {
            if (key != "chars" && key != "words" && key != "pos" && key != "tree") {
                throw DataError(src, lineno, "unknown field '" + key + "'");
            }
        }
        for (const char* key : {"chars", "words", "pos"}) {
            if (!rec.contains(key)) {
                throw DataError(src, lineno, std::string("missing field '") + key + "'");
            }
        }
        if (!rec["chars"].is_string()) {
            throw DataError(src, lineno, "field 'chars' must be a string");
        }
        try {
            const auto chars = rec["chars"].get<std::string>();
            const auto words = string_array(rec["words"], "words");
            auto pos = string_array(rec["pos"], "pos");
            std::optional<ParseTree> tree;
            if (rec.contains("tree") && !rec["tree"].is_null()) {
                if (!rec["tree"].is_string()) {
                    throw DataError(src, lineno, "field 'tree' must be a string");
                }
                tree = ParseTree::parse(rec["tree"].get<std::string>());
            }
            if (utf8::join(words) != chars) {
                throw DataError(src, lineno, "words do not concatenate to chars");
            }
            SegmentedSentence s = SegmentedSentence::from_words(words, std::move(pos), std::move(tree));
            if (s.tree) {
                derive_sp_labels(s);  // alignment check
            }
            cur.push_back(std::move(s));
        } catch (const DataError& e) {
            const std::string what = e.what();
            if (what.rfind(src + ":", 0) == 0) {
                throw;
            }
            throw DataError(src, lineno, what);
        }
    }
    if (!cur.empty()) {
        docs.push_back(std::move(cur));
    }
    return docs;
}

void write_pretrain_jsonl(const std::filesystem::path& path,
                          const std::vector<std::vector<SegmentedSentence>>& documents) {
    using nlohmann::json;
    auto out = open_output(path);
    for (std::size_t d = 0; d < documents.size(); ++d) {
        if (d > 0) {
            out << '\n';
        }
        for (const auto& s : documents[d]) {
            json rec;
            rec["chars"] = utf8::join(s.chars);
            rec["words"] = s.words();
            rec["pos"] = s.pos;
            if (s.tree) {
                rec["tree"] = s.tree->str();
            }
            out << rec.dump() << '\n';
        }
    }
}

Vocab build_vocab(const std::vector<SegmentedSentence>& corpus, std::size_t min_count) {
    std::vector<std::vector<std::string>> chars;
    chars.reserve(corpus.size());
    for (const auto& s : corpus) {
        chars.push_back(s.chars);
    }
    return Vocab::build(chars, min_count);
}

}  // namespace gbert
