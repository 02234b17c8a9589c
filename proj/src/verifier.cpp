#include "reread/verifier.hpp"

#include <cmath>

#include "random.hpp"
#include "reread/error.hpp"

namespace reread {

ParameterRefs VerifierParams::refs() {
    return {{"verifier.W1", &W1}, {"verifier.b1", &b1}, {"verifier.W2", &W2}, {"verifier.b2", &b2}};
}

VerifierParams VerifierParams::zeros(std::size_t d, std::size_t h) {
    if (d < 1 || h < 1) throw ConfigError("verifier needs d >= 1 and h >= 1");
    VerifierParams p;
    p.W1 = Parameter(Tensor::matrix(d, h));
    p.b1 = Parameter(Tensor::vector(h));
    p.W2 = Parameter(Tensor::matrix(h, kNumLabels));
    p.b2 = Parameter(Tensor::vector(kNumLabels));
    return p;
}

VerifierParams VerifierParams::init(std::size_t d, std::size_t h, std::uint64_t seed) {
    VerifierParams p = zeros(d, h);
    detail::Rng rng(seed);
    const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
    // W1 ~ N(0, 1): pooling shrinks single-row signals by 1/l.
    for (double& w : p.W1.value.data()) w = rng.normal();
    for (double& w : p.W2.value.data()) w = s2 * rng.normal();
    return p;
}

VerifierTrace verifier_forward(const EmbeddingMatrix& S, const VerifierParams& params) {
    const std::size_t d = params.dim();
    const std::size_t h = params.hidden();
    if (S.rank() != 2 || S.rows() < 1) throw DimensionError("verifier input must have at least the claim row");
    if (S.cols() != d) {
        throw DimensionError("verifier expects d=" + std::to_string(d) + ", got " + S.shape_string());
    }

    VerifierTrace t;
    t.rows = S.rows();
    t.pooled.assign(d, 0.0);
    for (std::size_t r = 0; r < t.rows; ++r) {
        auto row = S.row(r);
        for (std::size_t j = 0; j < d; ++j) t.pooled[j] += row[j];
    }
    for (double& x : t.pooled) x /= static_cast<double>(t.rows);

    t.hidden.assign(params.b1.value.data().begin(), params.b1.value.data().end());
    for (std::size_t j = 0; j < d; ++j) {
        const double x = t.pooled[j];
        auto w = params.W1.value.row(j);
        for (std::size_t k = 0; k < h; ++k) t.hidden[k] += x * w[k];
    }
    for (double& x : t.hidden) x = std::tanh(x);

    for (std::size_t c = 0; c < kNumLabels; ++c) t.logits[c] = params.b2.value[c];
    for (std::size_t k = 0; k < h; ++k) {
        auto w = params.W2.value.row(k);
        for (std::size_t c = 0; c < kNumLabels; ++c) t.logits[c] += t.hidden[k] * w[c];
    }
    const auto p = softmax(t.logits);
    for (std::size_t c = 0; c < kNumLabels; ++c) t.probs.p[c] = p[c];
    return t;
}

PredictionDistribution predict(const EmbeddingMatrix& S, const VerifierParams& params) {
    return verifier_forward(S, params).probs;
}

double accuracy_loss(const EmbeddingMatrix& S, VerificationLabel gold, const VerifierParams& params) {
    return cross_entropy(predict(S, params).p, label_index(gold));
}

void verifier_backward(const EmbeddingMatrix& S, const VerifierTrace& trace, std::span<const double> d_logits,
                       const VerifierParams& params, VerifierParams* param_grads, Tensor* d_input) {
    const std::size_t d = params.dim();
    const std::size_t h = params.hidden();

    std::vector<double> dz(h, 0.0);
    for (std::size_t k = 0; k < h; ++k) {
        auto w = params.W2.value.row(k);
        double dh = 0.0;
        for (std::size_t c = 0; c < kNumLabels; ++c) dh += w[c] * d_logits[c];
        dz[k] = dh * (1.0 - trace.hidden[k] * trace.hidden[k]);
    }

    if (param_grads) {
        for (std::size_t c = 0; c < kNumLabels; ++c) param_grads->b2.grad[c] += d_logits[c];
        for (std::size_t k = 0; k < h; ++k) {
            auto g = param_grads->W2.grad.row(k);
            for (std::size_t c = 0; c < kNumLabels; ++c) g[c] += trace.hidden[k] * d_logits[c];
            param_grads->b1.grad[k] += dz[k];
        }
        for (std::size_t j = 0; j < d; ++j) {
            auto g = param_grads->W1.grad.row(j);
            const double x = trace.pooled[j];
            for (std::size_t k = 0; k < h; ++k) g[k] += x * dz[k];
        }
    }

    if (d_input) {
        if (d_input->rows() != S.rows() || d_input->cols() != d) {
            throw DimensionError("verifier_backward: input gradient has shape " + d_input->shape_string());
        }
        std::vector<double> d_pooled(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            auto w = params.W1.value.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < h; ++k) acc += w[k] * dz[k];
            d_pooled[j] = acc / static_cast<double>(trace.rows);
        }
        for (std::size_t r = 0; r < S.rows(); ++r) {
            auto g = d_input->row(r);
            for (std::size_t j = 0; j < d; ++j) g[j] += d_pooled[j];
        }
    }
}

double accuracy_loss_backward(const EmbeddingMatrix& S, VerificationLabel gold, const VerifierParams& params,
                              VerifierParams* param_grads, Tensor* d_input) {
    const VerifierTrace trace = verifier_forward(S, params);
    const std::size_t y = label_index(gold);
    const double loss = cross_entropy(trace.probs.p, y);
    const auto d_logits = cross_entropy_logit_grad(trace.probs.p, y);
    verifier_backward(S, trace, d_logits, params, param_grads, d_input);
    return loss;
}

VerificationLabel argmax_label(std::span<const double> values) {
    if (values.size() != kNumLabels) throw DimensionError("expected one value per label");
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumLabels; ++c)
        if (values[c] > values[best]) best = c;
    return label_from_index(best);
}

VerificationLabel classify(const EmbeddingMatrix& S, const VerifierParams& params) {
    return argmax_label(predict(S, params).p);
}

}  // namespace reread
