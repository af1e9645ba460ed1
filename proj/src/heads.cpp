#include "gbert/heads.hpp"

#include <cmath>

#include "gbert/errors.hpp"
#include "gbert/ops.hpp"

namespace gbert {

void TaskWeights::validate() const {
    const double all[] = {mlm, nsp, cws, pos, sp1, sp2};
    const char* names[] = {"mlm", "nsp", "cws", "pos", "sp1", "sp2"};
    bool any = false;
    for (int i = 0; i < 6; ++i) {
        if (!std::isfinite(all[i]) || all[i] < 0.0) {
            throw UsageError(std::string("task weight '") + names[i] + "' must be finite and nonnegative");
        }
        any = any || all[i] > 0.0;
    }
    if (!any) {
        throw UsageError("at least one task weight must be positive");
    }
}

namespace {

TagHead make_head(std::size_t hidden, std::size_t classes, double std, Rng& rng) {
    return {init::normal({hidden, classes}, std, rng), init::zeros({1, classes})};
}

void add_head(ParamSet& out, const std::string& name, const TagHead& h) {
    out.add("head." + name + ".weight", h.weight, true);
    out.add("head." + name + ".bias", h.bias, false);
}

Tensor project(const Tensor& states, const TagHead& h) {
    return ops::add_row(ops::matmul(states, h.weight), h.bias);
}

}  // namespace

HeadParams HeadParams::init(const ModelConfig& config, const HeadSizes& sizes, bool tie_mlm, Rng& rng) {
    if (sizes.vocab == 0 || sizes.cws_tags == 0 || sizes.syntax_tags == 0) {
        throw UsageError("head sizes must be positive");
    }
    const std::size_t h = config.hidden;
    const double s = config.init_std;
    HeadParams p;
    p.tie_mlm = tie_mlm;
    if (!tie_mlm) {
        p.mlm_weight = init::normal({h, sizes.vocab}, s, rng);
    }
    p.mlm_bias = init::zeros({1, sizes.vocab});
    p.nsp = make_head(h, 2, s, rng);
    p.cws = make_head(h, sizes.cws_tags, s, rng);
    p.pos = make_head(h, sizes.syntax_tags, s, rng);
    p.sp1 = make_head(h, sizes.syntax_tags, s, rng);
    p.sp2 = make_head(h, sizes.syntax_tags, s, rng);
    return p;
}

void HeadParams::collect(ParamSet& out) const {
    if (!tie_mlm) {
        out.add("head.mlm.weight", mlm_weight, true);
    }
    out.add("head.mlm.bias", mlm_bias, false);
    add_head(out, "nsp", nsp);
    add_head(out, "cws", cws);
    add_head(out, "pos", pos);
    add_head(out, "sp1", sp1);
    add_head(out, "sp2", sp2);
}

std::uint64_t count_head_params(const ModelConfig& config, const HeadSizes& sizes, bool tie_mlm) {
    const std::uint64_t h = config.hidden;
    std::uint64_t n = sizes.vocab + (tie_mlm ? 0 : h * sizes.vocab);
    n += 2 * h + 2;
    n += h * sizes.cws_tags + sizes.cws_tags;
    n += 3 * (h * sizes.syntax_tags + sizes.syntax_tags);
    return n;
}

Tensor mlm_loss(const Tensor& token_states, const std::vector<std::size_t>& targets, const HeadParams& head,
                const EncoderParams& encoder) {
    if (targets.size() != token_states.rows()) {
        throw ShapeError("mlm_loss: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(token_states.rows()) + " positions");
    }
    std::vector<std::size_t> rows, ids;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] != kIgnoreTarget) {
            rows.push_back(i);
            ids.push_back(targets[i]);
        }
    }
    if (rows.empty()) {
        return Tensor::scalar(0.0);
    }
    const Tensor selected = ops::gather_rows(token_states, rows);
    const Tensor logits = head.tie_mlm ? ops::matmul_nt(selected, encoder.token_emb)
                                       : ops::matmul(selected, head.mlm_weight);
    return ops::cross_entropy(ops::add_row(logits, head.mlm_bias), ids, std::vector<double>(ids.size(), 1.0));
}

Tensor nsp_loss(const Tensor& sentence, bool is_next, const HeadParams& head) {
    return ops::cross_entropy(project(sentence, head.nsp), {is_next ? 0u : 1u}, {1.0});
}

Tensor tagging_loss(const Tensor& token_states, const std::vector<std::size_t>& tags, const std::vector<bool>& mask,
                    const TagHead& head) {
    if (tags.size() != token_states.rows() || mask.size() != token_states.rows()) {
        throw ShapeError("tagging_loss: tags/mask length does not match " + std::to_string(token_states.rows()) +
                         " positions");
    }
    std::vector<double> w(mask.size());
    bool any = false;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        w[i] = mask[i] ? 1.0 : 0.0;
        any = any || mask[i];
    }
    if (!any) {
        return Tensor::scalar(0.0);
    }
    return ops::cross_entropy(project(token_states, head), tags, w);
}

Tensor combined_loss(const TaskLosses& l, const TaskWeights& w) {
    const std::pair<const Tensor*, double> terms[] = {{&l.mlm, w.mlm}, {&l.nsp, w.nsp}, {&l.cws, w.cws},
                                                      {&l.pos, w.pos}, {&l.sp1, w.sp1}, {&l.sp2, w.sp2}};
    const char* names[] = {"mlm", "nsp", "cws", "pos", "sp1", "sp2"};
    Tensor total;
    for (int i = 0; i < 6; ++i) {
        const auto& [loss, weight] = terms[i];
        if (weight == 0.0) {
            continue;
        }
        if (!loss->defined()) {
            throw UsageError(std::string("combined_loss: task '") + names[i] + "' has weight " +
                             std::to_string(weight) + " but no loss");
        }
        const Tensor term = ops::scale(*loss, weight);
        total = total.defined() ? ops::add(total, term) : term;
    }
    if (!total.defined()) {
        throw UsageError("combined_loss: every task weight is zero");
    }
    return total;
}

TaskLosses pretrain_losses(const PretrainExample& ex, const EncoderState& state, const HeadParams& head,
                           const EncoderParams& encoder, const TaskWeights& w) {
    TaskLosses l;
    const Tensor& tokens = state.final_tokens();
    if (w.mlm > 0) l.mlm = mlm_loss(tokens, ex.mlm_targets, head, encoder);
    if (w.nsp > 0) l.nsp = nsp_loss(state.final_gate(), ex.is_next, head);
    if (w.cws > 0) l.cws = tagging_loss(tokens, ex.cws_tags, ex.char_mask, head.cws);
    if (w.pos > 0) l.pos = tagging_loss(tokens, ex.pos_tags, ex.char_mask, head.pos);
    if (w.sp1 > 0) l.sp1 = tagging_loss(tokens, ex.sp1_tags, ex.char_mask, head.sp1);
    if (w.sp2 > 0) l.sp2 = tagging_loss(tokens, ex.sp2_tags, ex.char_mask, head.sp2);
    return l;
}

}  // namespace gbert
