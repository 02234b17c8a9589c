#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "reread/tensor.hpp"

namespace reread {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t coordinates_checked = 0;
};

/// Evaluates the loss at the current parameter values and accumulates its
/// analytic gradient into each Parameter::grad.
using LossWithGrad = std::function<double()>;

/// Compares analytic gradients against central differences, coordinate by
/// coordinate. Relative error is |a - n| / max(1e-8, |a| + |n|). Parameter
/// values are restored and gradients zeroed on return.
GradCheckResult finite_diff_check(const LossWithGrad& loss_fn, const ParameterRefs& params, double epsilon = 1e-5);

}  // namespace reread
