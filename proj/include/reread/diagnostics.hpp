#pragma once

#include <cstddef>
#include <cstdint>

#include "reread/gradcheck.hpp"

namespace reread {

struct ToyGradientOptions {
    std::uint64_t seed = 7;
    std::size_t n_sentences = 6;
    std::size_t d = 8;
    std::size_t h = 5;
    std::size_t r = 4;
    std::size_t n_buckets = 16;
    double k_percent = 30.0;
    double epsilon = 1e-5;
};

struct ToyGradientReport {
    /// Accuracy loss w.r.t. verifier and featurizer parameters.
    GradCheckResult accuracy;
    /// Combined retriever loss w.r.t. retriever parameters, all weights 1.
    GradCheckResult retriever;

    double max_relative_error() const;
};

/// Finite-difference check of both training objectives on one small
/// synthetic Supported example with freshly initialised parameters.
ToyGradientReport toy_gradient_check(const ToyGradientOptions& options = {});

}  // namespace reread
