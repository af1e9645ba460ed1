#include "gbert/analysis.hpp"

#include "gbert/errors.hpp"

namespace gbert {

ParamCount count_params(const ModelConfig& config) {
    const std::uint64_t h = config.hidden;
    const std::uint64_t ff = config.ff_size();
    const std::uint64_t l = config.layers;
    ParamCount c;
    c.embeddings = config.vocab * h + config.max_len * h + config.type_vocab * h + 2 * h;
    c.attention = l * (4 * h * h + 3 * h);
    c.feed_forward = l * (h * ff + ff + ff * h + h);
    c.layer_norms = l * 4 * h;
    c.gates = l * (2 * h * h + 2 * h);
    c.gate_init = h;
    return c;
}

FlopEstimate estimate_flops(const ModelConfig& config, std::uint64_t seq_len) {
    if (seq_len == 0 || seq_len > config.max_len) {
        throw UsageError("estimate_flops: seq_len " + std::to_string(seq_len) +
                         " outside [1, max_len=" + std::to_string(config.max_len) + "]");
    }
    const std::uint64_t n = seq_len;
    const std::uint64_t h = config.hidden;
    const std::uint64_t ff = config.ff_size();
    const std::uint64_t l = config.layers;
    FlopEstimate f;
    f.projections = l * 2 * (4 * n * h * h);
    f.attention_mix = l * 2 * (2 * n * n * h);
    f.feed_forward = l * 2 * (2 * n * h * ff);
    f.gate = l * 2 * (2 * h * h);
    return f;
}

std::string FlopEstimate::formula() const {
    return "flops = L * 2 * (4nH^2 [projections] + 2n^2H [scores+mix] + 2nH*ff [feed-forward] + "
           "2H^2 [gate]); embedding lookups excluded";
}

}  // namespace gbert
