#include "gbert/verify/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gbert::verify {

GradCheckResult check_gradients(const std::function<Tensor()>& loss, const ParamSet& params,
                                double step) {
    ParamSet work = params;
    work.zero_grad();
    loss().backward();

    std::vector<std::vector<double>> analytic;
    analytic.reserve(work.size());
    for (const auto& p : work) {
        if (p.tensor.has_grad()) {
            analytic.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
        } else {
            analytic.emplace_back(p.tensor.size(), 0.0);
        }
    }
    work.zero_grad();

    GradCheckResult result;
    for (std::size_t k = 0; k < work.size(); ++k) {
        Tensor t = work.items()[k].tensor;
        auto values = t.mutable_values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const double up = loss().item();
            values[i] = saved - step;
            const double down = loss().item();
            values[i] = saved;

            const double numeric = (up - down) / (2.0 * step);
            const double a = analytic[k][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            const double rel = std::abs(a - numeric) / denom;
            ++result.checked;
            result.entries.push_back({work.items()[k].name, i, a, numeric, rel});
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = work.items()[k].name;
                result.worst_index = i;
                result.worst_analytic = a;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

std::vector<GradEntry> GradCheckResult::failures(double tolerance) const {
    std::vector<GradEntry> out;
    for (const auto& e : entries) {
        if (!(e.rel_error < tolerance)) out.push_back(e);
    }
    return out;
}

}  // namespace gbert::verify
