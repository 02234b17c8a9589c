#include "reread/adam.hpp"

#include <cmath>
#include <string>

#include "reread/error.hpp"

namespace reread {

double AdamState::scheduled_lr(std::int64_t at_step) const {
    if (total_steps <= 0) throw ScheduleError("Adam schedule has no steps");
    if (at_step < 0 || at_step > total_steps) {
        throw ScheduleError("step " + std::to_string(at_step) + " outside schedule of " +
                            std::to_string(total_steps) + " steps");
    }
    const double warmup = warmup_fraction * static_cast<double>(total_steps);
    const double t = static_cast<double>(at_step);
    if (t < warmup) return base_lr * t / warmup;
    const double remaining = static_cast<double>(total_steps) - warmup;
    if (remaining <= 0.0) return 0.0;
    return std::max(0.0, base_lr * (static_cast<double>(total_steps) - t) / remaining);
}

void adam_step(const ParameterRefs& params, AdamState& state) {
    const double lr = state.scheduled_lr(state.step);
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.param->value.shape(), 0.0);
            state.v.emplace_back(p.param->value.shape(), 0.0);
        }
    }
    if (state.m.size() != params.size()) {
        throw DimensionError("Adam state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                             std::to_string(params.size()));
    }

    const double t = static_cast<double>(state.step + 1);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);

    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k].param;
        auto value = p.value.data();
        auto grad = p.grad.data();
        auto m = state.m[k].data();
        auto v = state.v[k].data();
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad[i];
            if (g == 0.0 && m[i] == 0.0 && v[i] == 0.0) continue;
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            value[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
        p.zero_grad();
    }
    ++state.step;
}

}  // namespace reread
