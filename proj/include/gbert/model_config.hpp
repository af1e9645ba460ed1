#pragma once

#include <cstddef>
#include <string>

namespace gbert {

/// Encoder hyperparameters: L layers, hidden size H, A attention heads,
/// feed-forward size (4H unless overridden).
struct ModelConfig {
    std::size_t layers = 2;
    std::size_t hidden = 64;
    std::size_t heads = 4;
    std::size_t ff = 0;  // 0 means 4·hidden
    std::size_t vocab = 0;
    std::size_t max_len = 64;
    std::size_t type_vocab = 2;
    double dropout = 0.1;
    double init_std = 0.02;

    std::size_t ff_size() const noexcept { return ff == 0 ? 4 * hidden : ff; }
    std::size_t head_dim() const noexcept { return hidden / heads; }

    /// Throws UsageError naming the violated constraint.
    void validate() const;

    bool same_architecture(const ModelConfig& other) const noexcept {
        return layers == other.layers && hidden == other.hidden && heads == other.heads &&
               ff_size() == other.ff_size() && max_len == other.max_len &&
               type_vocab == other.type_vocab;
    }

    /// First architecture field that differs, or empty.
    std::string first_difference(const ModelConfig& other) const;

    bool operator==(const ModelConfig&) const = default;
};

}  // namespace gbert
