#pragma once

#include <cstdint>
#include <string>

#include "gbert/model_config.hpp"

namespace gbert {

/// Exact parameter tally of an encoder built from a ModelConfig.
///
///   embeddings  = vocab·H + max_len·H + type_vocab·H + 2H (layer norm)
///   per layer   = 4H² + 3H               attention Q, K, V, output projections
///                                        (biases on Q, V and output only)
///               + H·ff + ff + ff·H + H   feed-forward
///               + 4H                     two layer norms
///               + 2H² + 2H               gate GLU projections
///   gate init   = H
///
/// Head parameters are not included; see pretrain/CRF head counters.
struct ParamCount {
    std::uint64_t embeddings = 0;
    std::uint64_t attention = 0;
    std::uint64_t feed_forward = 0;
    std::uint64_t layer_norms = 0;
    std::uint64_t gates = 0;
    std::uint64_t gate_init = 0;

    std::uint64_t total() const noexcept {
        return embeddings + attention + feed_forward + layer_norms + gates + gate_init;
    }
};

ParamCount count_params(const ModelConfig& config);

/// Forward-pass multiply and add counts (one MAC = 2 operations) for a
/// sequence of n tokens, embedding lookups excluded:
///
///   per layer   attention projections  2 · 4nH²
///               scores and mixing      2 · 2n²H
///               feed-forward           2 · 8nH²   (with ff = 4H; 2nH·ff in general)
///               gate update            2 · 2H²
struct FlopEstimate {
    std::uint64_t projections = 0;
    std::uint64_t attention_mix = 0;
    std::uint64_t feed_forward = 0;
    std::uint64_t gate = 0;

    std::uint64_t total() const noexcept { return projections + attention_mix + feed_forward + gate; }
    std::string formula() const;
};

FlopEstimate estimate_flops(const ModelConfig& config, std::uint64_t seq_len);

}  // namespace gbert
