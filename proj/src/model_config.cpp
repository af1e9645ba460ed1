#include "gbert/model_config.hpp"

#include "gbert/errors.hpp"

namespace gbert {

void ModelConfig::validate() const {
    if (hidden == 0 || heads == 0) {
        throw UsageError("model: hidden and heads must be positive");
    }
    if (hidden % heads != 0) {
        throw UsageError("model: hidden " + std::to_string(hidden) + " is not divisible by heads " +
                         std::to_string(heads));
    }
    if (max_len < 2) {
        throw UsageError("model: max_len must be at least 2");
    }
    if (vocab == 0 || type_vocab == 0) {
        throw UsageError("model: vocab and type_vocab must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw UsageError("model: dropout must lie in [0, 1)");
    }
    if (!(init_std > 0.0)) {
        throw UsageError("model: init_std must be positive");
    }
}

std::string ModelConfig::first_difference(const ModelConfig& o) const {
    auto field = [](const char* name, std::size_t a, std::size_t b) {
        return std::string(name) + " " + std::to_string(a) + " != " + std::to_string(b);
    };
    if (layers != o.layers) return field("layers", layers, o.layers);
    if (hidden != o.hidden) return field("hidden", hidden, o.hidden);
    if (heads != o.heads) return field("heads", heads, o.heads);
    if (ff_size() != o.ff_size()) return field("ff", ff_size(), o.ff_size());
    if (max_len != o.max_len) return field("max_len", max_len, o.max_len);
    if (type_vocab != o.type_vocab) return field("type_vocab", type_vocab, o.type_vocab);
    return {};
}

}  // namespace gbert
