#include "gbert/encoder.hpp"

#include <cmath>
#include <string>

#include "gbert/errors.hpp"
#include "gbert/ops.hpp"

namespace gbert {

namespace {

constexpr double kLayerNormEps = 1e-12;

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    return ops::add_row(ops::matmul(x, w), b);
}

Tensor maybe_dropout(const Tensor& x, const ModelConfig& config, Mode mode, Rng& rng) {
    return mode == Mode::train ? ops::dropout(x, config.dropout, rng) : x;
}

}  // namespace

EncoderParams EncoderParams::init(const ModelConfig& config, Rng& rng) {
    config.validate();
    const std::size_t h = config.hidden;
    const std::size_t ff = config.ff_size();
    const double sd = config.init_std;
    EncoderParams p;
    p.token_emb = init::normal({config.vocab, h}, sd, rng);
    p.pos_emb = init::normal({config.max_len, h}, sd, rng);
    p.seg_emb = init::normal({config.type_vocab, h}, sd, rng);
    p.emb_ln_gain = init::ones({1, h});
    p.emb_ln_bias = init::zeros({1, h});
    for (std::size_t l = 0; l < config.layers; ++l) {
        LayerParams lp;
        lp.wq = init::normal({h, h}, sd, rng);
        lp.bq = init::zeros({1, h});
        lp.wk = init::normal({h, h}, sd, rng);
        lp.wv = init::normal({h, h}, sd, rng);
        lp.bv = init::zeros({1, h});
        lp.wo = init::normal({h, h}, sd, rng);
        lp.bo = init::zeros({1, h});
        lp.ln1_gain = init::ones({1, h});
        lp.ln1_bias = init::zeros({1, h});
        lp.ff_in = init::normal({h, ff}, sd, rng);
        lp.ff_in_bias = init::zeros({1, ff});
        lp.ff_out = init::normal({ff, h}, sd, rng);
        lp.ff_out_bias = init::zeros({1, h});
        lp.ln2_gain = init::ones({1, h});
        lp.ln2_bias = init::zeros({1, h});
        p.layers.push_back(std::move(lp));

        GateParams gp;
        gp.w_a = init::normal({h, h}, sd, rng);
        gp.b_a = init::zeros({1, h});
        gp.w_b = init::normal({h, h}, sd, rng);
        gp.b_b = init::zeros({1, h});
        p.gates.push_back(std::move(gp));
    }
    p.g0 = init::normal({1, h}, sd, rng);
    return p;
}

void EncoderParams::collect(ParamSet& out) const {
    out.add("enc.token_emb", token_emb, true);
    out.add("enc.pos_emb", pos_emb, true);
    out.add("enc.seg_emb", seg_emb, true);
    out.add("enc.emb_ln.gain", emb_ln_gain, false);
    out.add("enc.emb_ln.bias", emb_ln_bias, false);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string pre = "enc.layer" + std::to_string(l) + ".";
        const LayerParams& lp = layers[l];
        out.add(pre + "attn.wq", lp.wq, true);
        out.add(pre + "attn.bq", lp.bq, false);
        out.add(pre + "attn.wk", lp.wk, true);
        out.add(pre + "attn.wv", lp.wv, true);
        out.add(pre + "attn.bv", lp.bv, false);
        out.add(pre + "attn.wo", lp.wo, true);
        out.add(pre + "attn.bo", lp.bo, false);
        out.add(pre + "ln1.gain", lp.ln1_gain, false);
        out.add(pre + "ln1.bias", lp.ln1_bias, false);
        out.add(pre + "ffn.w_in", lp.ff_in, true);
        out.add(pre + "ffn.b_in", lp.ff_in_bias, false);
        out.add(pre + "ffn.w_out", lp.ff_out, true);
        out.add(pre + "ffn.b_out", lp.ff_out_bias, false);
        out.add(pre + "ln2.gain", lp.ln2_gain, false);
        out.add(pre + "ln2.bias", lp.ln2_bias, false);
        const GateParams& gp = gates[l];
        out.add(pre + "gate.w_a", gp.w_a, true);
        out.add(pre + "gate.b_a", gp.b_a, false);
        out.add(pre + "gate.w_b", gp.w_b, true);
        out.add(pre + "gate.b_b", gp.b_b, false);
    }
    out.add("enc.g0", g0, false);
}

Tensor embed(const EncoderInput& input, const ModelConfig& config, const EncoderParams& params,
             Mode mode, Rng& rng) {
    const std::size_t n = input.token_ids.size();
    if (n == 0) {
        throw ShapeError("embed: empty sequence");
    }
    if (input.segment_ids.size() != n || input.mask.size() != n) {
        throw ShapeError("embed: token, segment and mask lengths differ (" + std::to_string(n) +
                         ", " + std::to_string(input.segment_ids.size()) + ", " +
                         std::to_string(input.mask.size()) + ")");
    }
    if (n > config.max_len) {
        throw ShapeError("embed: sequence length " + std::to_string(n) + " exceeds max_len " +
                         std::to_string(config.max_len));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (input.token_ids[i] >= params.token_emb.rows()) {
            throw ShapeError("embed: token id " + std::to_string(input.token_ids[i]) +
                             " at position " + std::to_string(i) + " outside vocabulary of " +
                             std::to_string(params.token_emb.rows()));
        }
        if (input.segment_ids[i] >= params.seg_emb.rows()) {
            throw ShapeError("embed: segment id " + std::to_string(input.segment_ids[i]) +
                             " at position " + std::to_string(i) + " outside " +
                             std::to_string(params.seg_emb.rows()) + " segment types");
        }
    }
    std::vector<std::size_t> positions(n);
    for (std::size_t i = 0; i < n; ++i) {
        positions[i] = i;
    }
    Tensor sum = ops::add(ops::add(ops::gather_rows(params.token_emb, input.token_ids),
                                   ops::gather_rows(params.pos_emb, positions)),
                          ops::gather_rows(params.seg_emb, input.segment_ids));
    Tensor normed = ops::layer_norm(sum, params.emb_ln_gain, params.emb_ln_bias, kLayerNormEps);
    return maybe_dropout(normed, config, mode, rng);
}

Tensor attention_layer(const Tensor& x, const Tensor& gate, const std::vector<bool>& mask,
                       const LayerParams& p, const ModelConfig& config, Mode mode, Rng& rng) {
    const std::size_t n = x.rows();
    const std::size_t h = config.hidden;
    if (x.cols() != h) {
        throw ShapeError("attention_layer: input " + x.shape().str() + " for hidden size " +
                         std::to_string(h));
    }
    if (gate.shape() != Shape{1, h}) {
        throw ShapeError("attention_layer: gate " + gate.shape().str() + " for hidden size " +
                         std::to_string(h));
    }
    if (mask.size() != n) {
        throw ShapeError("attention_layer: mask length " + std::to_string(mask.size()) +
                         " for " + std::to_string(n) + " tokens");
    }

    // Key/value row 0 is the gate state; rows 1..n are the tokens.
    const Tensor kv_in = ops::concat_rows(gate, x);
    const Tensor q = linear(x, p.wq, p.bq);
    const Tensor k = ops::matmul(kv_in, p.wk);
    const Tensor v = linear(kv_in, p.wv, p.bv);

    std::vector<bool> key_mask(n * (n + 1));
    for (std::size_t i = 0; i < n; ++i) {
        key_mask[i * (n + 1)] = true;
        for (std::size_t j = 0; j < n; ++j) {
            key_mask[i * (n + 1) + j + 1] = mask[j];
        }
    }

    const std::size_t d = config.head_dim();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<Tensor> heads;
    heads.reserve(config.heads);
    for (std::size_t a = 0; a < config.heads; ++a) {
        const std::size_t lo = a * d, hi = lo + d;
        const Tensor qh = config.heads == 1 ? q : ops::slice_cols(q, lo, hi);
        const Tensor kh = config.heads == 1 ? k : ops::slice_cols(k, lo, hi);
        const Tensor vh = config.heads == 1 ? v : ops::slice_cols(v, lo, hi);
        const Tensor weights = ops::softmax_rows(ops::scale(ops::matmul_nt(qh, kh), inv_sqrt_d), key_mask);
        heads.push_back(ops::matmul(weights, vh));
    }
    const Tensor mixed = heads.size() == 1 ? heads.front() : ops::concat_cols(heads);
    const Tensor attn_out = maybe_dropout(linear(mixed, p.wo, p.bo), config, mode, rng);
    const Tensor h1 = ops::layer_norm(ops::add(x, attn_out), p.ln1_gain, p.ln1_bias, kLayerNormEps);

    const Tensor inner = ops::gelu(linear(h1, p.ff_in, p.ff_in_bias));
    const Tensor ff_out = maybe_dropout(linear(inner, p.ff_out, p.ff_out_bias), config, mode, rng);
    return ops::layer_norm(ops::add(h1, ff_out), p.ln2_gain, p.ln2_bias, kLayerNormEps);
}

Tensor gate_update(const Tensor& prev_gate, const Tensor& token_states,
                   const std::vector<bool>& mask, const GateParams& p) {
    if (prev_gate.rows() != 1 || prev_gate.cols() != token_states.cols()) {
        throw ShapeError("gate_update: gate " + prev_gate.shape().str() + " vs token states " +
                         token_states.shape().str());
    }
    bool any = false;
    for (bool m : mask) {
        any = any || m;
    }
    if (!any) {
        throw ShapeError("gate_update: sentence has no unmasked tokens");
    }
    const Tensor pooled = ops::max_pool_rows(token_states, mask);
    return ops::glu(linear(prev_gate, p.w_a, p.b_a), linear(pooled, p.w_b, p.b_b));
}

EncoderState encode(const EncoderInput& input, const ModelConfig& config,
                    const EncoderParams& params, Mode mode, Rng& rng) {
    if (params.layers.size() != config.layers || params.gates.size() != config.layers) {
        throw ShapeError("encode: parameters hold " + std::to_string(params.layers.size()) +
                         " layers, config expects " + std::to_string(config.layers));
    }
    EncoderState state;
    state.mask = input.mask;
    state.token_states.push_back(embed(input, config, params, mode, rng));
    state.gate_states.push_back(params.g0);
    for (std::size_t l = 0; l < config.layers; ++l) {
        Tensor out = attention_layer(state.token_states.back(), state.gate_states.back(), input.mask,
                                     params.layers[l], config, mode, rng);
        Tensor gate = gate_update(state.gate_states.back(), out, input.mask, params.gates[l]);
        state.token_states.push_back(std::move(out));
        state.gate_states.push_back(std::move(gate));
    }
    return state;
}

}  // namespace gbert
