#pragma once

#include <cstddef>
#include <vector>

#include "gbert/crf.hpp"

namespace gbert::verify {

struct EnumerationResult {
    double log_partition = 0.0;
    double best_score = 0.0;
    std::vector<std::size_t> best_path;  // lexicographically first among ties
    std::size_t paths = 0;
};

/// Scores all T^m tag paths over the first m rows of `emissions` directly.
EnumerationResult enumerate_paths(const Tensor& emissions, std::size_t m, const CrfParams& crf);

}  // namespace gbert::verify
