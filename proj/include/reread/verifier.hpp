#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "reread/corpus.hpp"
#include "reread/encoder.hpp"
#include "reread/tensor.hpp"

namespace reread {

/// Claim verifier: mean-pool the sentence rows, one tanh hidden layer, softmax
/// over the three verdicts.
struct VerifierParams {
    Parameter W1;  // d x h
    Parameter b1;  // h
    Parameter W2;  // h x 3
    Parameter b2;  // 3

    std::size_t dim() const { return W1.value.rows(); }
    std::size_t hidden() const { return b1.value.size(); }
    ParameterRefs refs();

    static VerifierParams zeros(std::size_t d, std::size_t h);
    static VerifierParams init(std::size_t d, std::size_t h, std::uint64_t seed);
};

/// Probabilities indexed by label code: Ref, Sup, NEI.
struct PredictionDistribution {
    std::array<double, kNumLabels> p{};

    double operator[](VerificationLabel label) const { return p[label_index(label)]; }
    double operator[](std::size_t i) const { return p[i]; }
};

/// Intermediate values of one forward pass, kept for the backward pass.
struct VerifierTrace {
    std::size_t rows = 0;
    std::vector<double> pooled;
    std::vector<double> hidden;
    std::array<double, kNumLabels> logits{};
    PredictionDistribution probs;
};

VerifierTrace verifier_forward(const EmbeddingMatrix& S, const VerifierParams& params);

PredictionDistribution predict(const EmbeddingMatrix& S, const VerifierParams& params);

/// Cross-entropy of the prediction against the gold label.
double accuracy_loss(const EmbeddingMatrix& S, VerificationLabel gold, const VerifierParams& params);

/// Back-propagates dL/dlogits. Parameter gradients are accumulated into
/// `param_grads` when it is non-null; dL/dS is accumulated into `d_input`
/// when it is non-null.
void verifier_backward(const EmbeddingMatrix& S, const VerifierTrace& trace, std::span<const double> d_logits,
                       const VerifierParams& params, VerifierParams* param_grads, Tensor* d_input);

/// Accuracy loss together with its gradients (see verifier_backward).
double accuracy_loss_backward(const EmbeddingMatrix& S, VerificationLabel gold, const VerifierParams& params,
                              VerifierParams* param_grads, Tensor* d_input);

/// Argmax label; ties go to the lowest label code.
VerificationLabel argmax_label(std::span<const double> values);
VerificationLabel classify(const EmbeddingMatrix& S, const VerifierParams& params);

}  // namespace reread
