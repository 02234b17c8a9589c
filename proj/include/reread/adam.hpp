#pragma once

#include <cstdint>
#include <vector>

#include "reread/tensor.hpp"

namespace reread {

/// Adam moments plus a linear warmup / linear decay learning-rate schedule.
///
/// The rate climbs from 0 to `base_lr` over the first
/// `warmup_fraction * total_steps` steps and then falls linearly to 0 at
/// `total_steps`. Moments are kept per parameter, in the order the
/// parameters were passed to the first `adam_step` call.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::int64_t step = 0;
    double base_lr = 4e-5;
    double warmup_fraction = 0.07;
    std::int64_t total_steps = 0;

    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    AdamState() = default;
    AdamState(double lr, double warmup, std::int64_t total) : base_lr(lr), warmup_fraction(warmup), total_steps(total) {}

    /// Learning rate applied by the update at `at_step`.
    double scheduled_lr(std::int64_t at_step) const;
};

/// One Adam update with the scheduled rate, then `step` is incremented and
/// gradients are zeroed. Throws ScheduleError once the schedule is exhausted.
void adam_step(const ParameterRefs& params, AdamState& state);

}  // namespace reread
