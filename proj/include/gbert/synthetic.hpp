#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gbert/corpus.hpp"
#include "gbert/entities.hpp"
#include "gbert/rng.hpp"

namespace gbert {

/// Output of the synthetic grammar: every sentence appears both as a
/// segmented, tagged, parsed sentence and as a BIO-tagged NER sentence.
struct SyntheticCorpus {
    std::vector<std::vector<SegmentedSentence>> documents;
    std::vector<NerSentence> ner;                 // one per sentence, corpus order
    std::vector<std::vector<EntitySpan>> entities;  // planted spans, per sentence
};

/// Entity type names: PER, LOC, ORG, then MISC1, MISC2, ...
std::vector<std::string> synthetic_entity_types(std::size_t count);

/// Samples n_sentences from a small fixed PCFG (IP/NP/VP/PP/LCP/ADVP/ADJP)
/// over a fixed CJK lexicon. Proper-noun slots are filled from per-type
/// entity lexicons. Documents hold `sentences_per_document` sentences.
/// Throws UsageError when n_sentences or entity_types is 0.
SyntheticCorpus generate_synthetic_corpus(Rng& rng, std::size_t n_sentences, std::size_t entity_types = 3,
                                          std::size_t sentences_per_document = 5);

}  // namespace gbert
