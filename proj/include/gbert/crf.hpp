#pragma once

#include <cstddef>
#include <vector>

#include "gbert/params.hpp"
#include "gbert/rng.hpp"
#include "gbert/tensor.hpp"

namespace gbert {

/// Linear-chain CRF over T tags.
struct CrfParams {
    Tensor emission;     // H × T
    Tensor transitions;  // T × T, score of tag i followed by tag j
    Tensor start;        // 1 × T
    Tensor end;          // 1 × T

    static CrfParams init(std::size_t hidden, std::size_t tags, double init_std, Rng& rng);
    void collect(ParamSet& out) const;
    std::size_t num_tags() const { return transitions.rows(); }
};

/// Token states (n × H) projected to per-tag scores (n × T).
Tensor crf_emissions(const Tensor& token_states, const CrfParams& crf);

/// Length of the unmasked prefix. Throws ShapeError when the mask is empty,
/// does not match n, or has an unmasked entry after a masked one.
std::size_t crf_prefix_length(const std::vector<bool>& mask, std::size_t n);

/// log Σ_paths exp(score) over the unmasked prefix, by the forward recursion.
Tensor crf_log_partition(const Tensor& emissions, const std::vector<bool>& mask, const CrfParams& crf);

/// log Z − score(gold). Gradients come from forward-backward marginals.
Tensor crf_nll(const Tensor& emissions, const std::vector<std::size_t>& gold,
               const std::vector<bool>& mask, const CrfParams& crf);

/// start + Σ emissions + Σ transitions + end for one path over the prefix.
double crf_path_score(const Tensor& emissions, const std::vector<std::size_t>& path, const CrfParams& crf);

/// Highest-scoring path over the unmasked prefix. Ties go to the lowest tag
/// index at every backtrack step.
std::vector<std::size_t> viterbi(const Tensor& emissions, const std::vector<bool>& mask, const CrfParams& crf);

}  // namespace gbert
