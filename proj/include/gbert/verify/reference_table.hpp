#pragma once

#include <string>
#include <vector>

namespace gbert::verify {

/// Reference word-level labeling of the sentence 句法分析是自然语言处理中关键技术之一
/// and a bracketed tree that produces it under parent/grandparent semantics.
/// Entries marked excluded cannot be reproduced together with the rest by
/// any single tree; they are reported, never compared.
struct ReferenceWord {
    const char* word;
    const char* cws;  // per character, space separated
    const char* pos;
    const char* sp1;
    const char* sp2;
    bool sp1_excluded = false;
    bool sp2_excluded = false;
};

inline constexpr const char* kReferenceTree =
    "(IP (NP (NN 句法)) (VP (VV 分析)) (VP (VC 是) (IP (ADVP (AD 自然)) "
    "(LCP (NP (NN 语言) (NN 处理)) (LC 中)) (NP (ADJP (JJ 关键)) (NP (NN 技术)) (NP (NN 之一))))))";

inline const std::vector<ReferenceWord>& reference_table() {
    static const std::vector<ReferenceWord> table = {
        {"句法", "B I", "NN", "NN", "IP", true, false},
        {"分析", "B I", "VV", "VP", "IP"},
        {"是", "B", "VC", "VP", "IP"},
        {"自然", "B I", "AD", "ADVP", "IP", false, true},
        {"语言", "B I", "NN", "NP", "LCP", false, true},
        {"处理", "B I", "NN", "NP", "LCP"},
        {"中", "B", "LC", "LCP", "IP"},
        {"关键", "B I", "JJ", "ADJP", "NP"},
        {"技术", "B I", "NN", "NP", "NP"},
        {"之一", "B I", "NN", "NP", "NP"},
    };
    return table;
}

}  // namespace gbert::verify
