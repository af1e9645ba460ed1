#include "gbert/optim.hpp"

#include <cmath>

#include "gbert/errors.hpp"

namespace gbert {

void adam_step(const ParamSet& params, OptimState& state, double lr) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (const auto& p : params) {
        if (!p.tensor.has_grad()) {
            continue;
        }
        Tensor tensor = p.tensor;
        auto values = tensor.mutable_values();
        const auto grad = tensor.grad();
        Moments& mo = state.moments[p.name];
        if (mo.m.size() != values.size()) {
            mo.m.assign(values.size(), 0.0);
            mo.v.assign(values.size(), 0.0);
        }
        const double decay = p.decay ? state.weight_decay : 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double g = grad[i];
            mo.m[i] = state.beta1 * mo.m[i] + (1.0 - state.beta1) * g;
            mo.v[i] = state.beta2 * mo.v[i] + (1.0 - state.beta2) * g * g;
            const double mhat = mo.m[i] / c1;
            const double vhat = mo.v[i] / c2;
            values[i] -= lr * (mhat / (std::sqrt(vhat) + state.eps) + decay * values[i]);
        }
    }
}

double scheduled_lr(double base_lr, std::size_t step, std::size_t total_steps, double warmup_frac) {
    const auto warmup = static_cast<std::size_t>(std::ceil(warmup_frac * static_cast<double>(total_steps)));
    if (warmup == 0 || step >= warmup) {
        return base_lr;
    }
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
}

double clip_grad_norm(const ParamSet& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params) {
        for (double g : p.tensor.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (const auto& p : params) {
            if (!p.tensor.has_grad()) continue;
            auto& g = p.tensor.node()->grad;
            for (double& x : g) x *= s;
        }
    }
    return norm;
}

void check_finite(const ParamSet& params, const std::string& context) {
    for (const auto& p : params) {
        for (double v : p.tensor.values()) {
            if (!std::isfinite(v)) throw NumericError(context + ": non-finite value in '" + p.name + "'");
        }
        for (double g : p.tensor.grad()) {
            if (!std::isfinite(g)) throw NumericError(context + ": non-finite gradient in '" + p.name + "'");
        }
    }
}

}  // namespace gbert
