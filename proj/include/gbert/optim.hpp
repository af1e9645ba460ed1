#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "gbert/params.hpp"

namespace gbert {

struct Moments {
    std::vector<double> m;
    std::vector<double> v;
};

/// Adam with decoupled weight decay.
struct OptimState {
    double lr = 1e-4;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step = 0;
    std::map<std::string, Moments> moments;  // by parameter name
};

/// One update at learning rate `lr` (the schedule lives with the caller).
/// Parameters without a gradient are skipped entirely: no moment update,
/// no decay. Decay applies only to parameters flagged `decay`:
///   p ← p − lr · (m̂ / (√v̂ + eps) + weight_decay · p)
void adam_step(const ParamSet& params, OptimState& state, double lr);

/// Linear warmup over the first warmup_frac · total_steps steps, then
/// constant. `step` counts from 1.
double scheduled_lr(double base_lr, std::size_t step, std::size_t total_steps, double warmup_frac);

/// Scales all gradients so their global L2 norm is at most max_norm and
/// returns the norm before scaling. max_norm ≤ 0 disables clipping.
double clip_grad_norm(const ParamSet& params, double max_norm);

/// Throws NumericError naming the first parameter with a non-finite
/// value or gradient.
void check_finite(const ParamSet& params, const std::string& context);

}  // namespace gbert
