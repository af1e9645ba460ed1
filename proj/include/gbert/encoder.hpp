#pragma once

#include <cstddef>
#include <vector>

#include "gbert/model_config.hpp"
#include "gbert/params.hpp"
#include "gbert/rng.hpp"
#include "gbert/tensor.hpp"

namespace gbert {

enum class Mode { train, eval };

struct LayerParams {
    // No key bias: it shifts every score of a query row equally, so softmax
    // cancels it and its gradient is identically zero.
    Tensor wq, bq, wk, wv, bv, wo, bo;
    Tensor ln1_gain, ln1_bias;
    Tensor ff_in, ff_in_bias, ff_out, ff_out_bias;
    Tensor ln2_gain, ln2_bias;
};

/// GLU projections of one gate update: (prev·w_a + b_a) ⊗ σ(pool·w_b + b_b).
struct GateParams {
    Tensor w_a, b_a, w_b, b_b;
};

struct EncoderParams {
    Tensor token_emb;  // vocab × H
    Tensor pos_emb;    // max_len × H
    Tensor seg_emb;    // type_vocab × H
    Tensor emb_ln_gain, emb_ln_bias;
    std::vector<LayerParams> layers;
    std::vector<GateParams> gates;
    Tensor g0;  // learned initial gate state, 1 × H

    static EncoderParams init(const ModelConfig& config, Rng& rng);
    /// Registers every tensor under a stable dotted name ("enc.layer0.wq", ...).
    void collect(ParamSet& out) const;
};

struct EncoderInput {
    std::vector<std::size_t> token_ids;
    std::vector<std::size_t> segment_ids;
    std::vector<bool> mask;  // true = real token
};

struct EncoderState {
    /// token_states[0] is the embedding output; token_states[l] the output of layer l.
    std::vector<Tensor> token_states;
    /// gate_states[0] = g0; gate_states[l] is the gate after layer l.
    std::vector<Tensor> gate_states;
    std::vector<bool> mask;

    const Tensor& final_tokens() const { return token_states.back(); }
    const Tensor& final_gate() const { return gate_states.back(); }
};

/// Token + position + segment embeddings, layer norm, then dropout in train mode.
Tensor embed(const EncoderInput& input, const ModelConfig& config, const EncoderParams& params,
             Mode mode, Rng& rng);

/// One transformer block whose keys/values are the n tokens plus the gate
/// state as an extra (always visible) position. Masked tokens are not keys.
Tensor attention_layer(const Tensor& x, const Tensor& gate, const std::vector<bool>& mask,
                       const LayerParams& params, const ModelConfig& config, Mode mode, Rng& rng);

/// Max-pools the unmasked token states and applies the gated linear unit.
Tensor gate_update(const Tensor& prev_gate, const Tensor& token_states,
                   const std::vector<bool>& mask, const GateParams& params);

EncoderState encode(const EncoderInput& input, const ModelConfig& config,
                    const EncoderParams& params, Mode mode, Rng& rng);

}  // namespace gbert
