#include "reread/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "reread/error.hpp"

namespace reread {

namespace {

double evaluate(const LossWithGrad& loss_fn, const ParameterRefs& params) {
    const double loss = loss_fn();
    zero_grads(params);
    if (!std::isfinite(loss)) throw NumericError("loss is not finite during gradient check");
    return loss;
}

}  // namespace

GradCheckResult finite_diff_check(const LossWithGrad& loss_fn, const ParameterRefs& params, double epsilon) {
    zero_grads(params);
    const double base = loss_fn();
    if (!std::isfinite(base)) throw NumericError("loss is not finite during gradient check");

    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p.param->grad);
    zero_grads(params);

    GradCheckResult result;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto value = params[k].param->value.data();
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value[i];
            value[i] = saved + epsilon;
            const double plus = evaluate(loss_fn, params);
            value[i] = saved - epsilon;
            const double minus = evaluate(loss_fn, params);
            value[i] = saved;

            const double numeric = (plus - minus) / (2.0 * epsilon);
            const double a = analytic[k][i];
            const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            ++result.coordinates_checked;
            if (rel > result.max_relative_error) {
                result.max_relative_error = rel;
                result.worst_parameter = params[k].name;
                result.worst_index = i;
                result.worst_analytic = a;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace reread
