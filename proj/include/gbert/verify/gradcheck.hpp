#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gbert/params.hpp"
#include "gbert/tensor.hpp"

namespace gbert::verify {

struct GradEntry {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t checked = 0;
    std::vector<GradEntry> entries;  // every checked element

    bool passed(double tolerance) const noexcept { return max_rel_error < tolerance; }
    std::vector<GradEntry> failures(double tolerance) const;
};

/// Compares backward() gradients of `loss` against central finite
/// differences, element by element over every tensor in `params`. Relative
/// error is |a − n| / max(|a|, |n|, 1e-8). Parameter values are restored.
GradCheckResult check_gradients(const std::function<Tensor()>& loss, const ParamSet& params,
                                double step = 1e-5);

}  // namespace gbert::verify
