#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gbert/corpus.hpp"
#include "gbert/encoder.hpp"
#include "gbert/model_config.hpp"
#include "gbert/params.hpp"
#include "gbert/tensor.hpp"

namespace gbert {

/// Per-task loss weights. Defaults: MLM and NSP 1.0, tagging tasks 0.1.
struct TaskWeights {
    double mlm = 1.0;
    double nsp = 1.0;
    double cws = 0.1;
    double pos = 0.1;
    double sp1 = 0.1;
    double sp2 = 0.1;

    /// Throws UsageError on negative or non-finite weights, or all zero.
    void validate() const;
    bool operator==(const TaskWeights&) const = default;
};

struct HeadSizes {
    std::size_t vocab = 0;
    std::size_t cws_tags = 3;
    std::size_t syntax_tags = 2;
};

struct TagHead {
    Tensor weight;  // H × tags
    Tensor bias;    // 1 × tags
};

struct HeadParams {
    bool tie_mlm = true;
    Tensor mlm_weight;  // H × vocab, only when untied
    Tensor mlm_bias;    // 1 × vocab
    TagHead nsp;        // 2 classes: 0 = is-next, 1 = not-next
    TagHead cws, pos, sp1, sp2;

    static HeadParams init(const ModelConfig& config, const HeadSizes& sizes, bool tie_mlm, Rng& rng);
    /// Registers "head.mlm.bias", "head.nsp.weight", ... in a fixed order.
    void collect(ParamSet& out) const;
};

/// Exact head parameter count for the given sizes.
std::uint64_t count_head_params(const ModelConfig& config, const HeadSizes& sizes, bool tie_mlm);

/// Mean cross-entropy of the vocabulary projection at positions whose target
/// is not kIgnoreTarget; a constant 0 when there are none. The tied
/// projection reuses the token embedding matrix.
Tensor mlm_loss(const Tensor& token_states, const std::vector<std::size_t>& targets, const HeadParams& head,
                const EncoderParams& encoder);

/// Two-way softmax cross-entropy on the sentence representation (1 × H).
Tensor nsp_loss(const Tensor& sentence, bool is_next, const HeadParams& head);

/// Mean cross-entropy over positions with mask true; a constant 0 when the
/// mask has no true entry.
Tensor tagging_loss(const Tensor& token_states, const std::vector<std::size_t>& tags,
                    const std::vector<bool>& mask, const TagHead& head);

/// Per-task losses. Tasks that were not computed are left undefined.
struct TaskLosses {
    Tensor mlm, nsp, cws, pos, sp1, sp2;
};

/// Σ weight · loss over tasks with a positive weight. Undefined losses for
/// zero-weight tasks are skipped; an undefined loss with positive weight is
/// a UsageError.
Tensor combined_loss(const TaskLosses& losses, const TaskWeights& weights);

/// Runs every head with a positive weight on one encoded example.
TaskLosses pretrain_losses(const PretrainExample& example, const EncoderState& state, const HeadParams& head,
                           const EncoderParams& encoder, const TaskWeights& weights);

}  // namespace gbert
