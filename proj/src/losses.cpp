#include "reread/losses.hpp"

#include <algorithm>
#include <cmath>

#include "reread/error.hpp"

namespace reread {

void LossWeights::validate() const {
    for (double a : {alpha_full, alpha_suff, alpha_plau}) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("loss weights must be finite and nonnegative");
    }
}

void FaithfulnessMargins::validate() const {
    if (!(b_f > 0.0) || !(b_s > 0.0)) throw ConfigError("faithfulness margins b_f and b_s must be positive");
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
    l_acc += o.l_acc;
    l_plau += o.l_plau;
    l_full_raw += o.l_full_raw;
    l_full_hinged += o.l_full_hinged;
    l_suff_raw += o.l_suff_raw;
    l_suff_hinged += o.l_suff_hinged;
    combined += o.combined;
    return *this;
}

LossBreakdown& LossBreakdown::operator/=(double n) {
    l_acc /= n;
    l_plau /= n;
    l_full_raw /= n;
    l_full_hinged /= n;
    l_suff_raw /= n;
    l_suff_hinged /= n;
    combined /= n;
    return *this;
}

double hinge(double raw, double margin) { return std::max(0.0, raw + margin); }

namespace {

std::vector<double> gold_as_double(std::span<const std::uint8_t> gold) {
    return {gold.begin(), gold.end()};
}

}  // namespace

double plausibility_loss(const SentenceScores& scores, std::span<const std::uint8_t> gold) {
    return binary_cross_entropy(scores.s, gold_as_double(gold));
}

std::vector<double> plausibility_grad(const SentenceScores& scores, std::span<const std::uint8_t> gold) {
    return binary_cross_entropy_grad(scores.s, gold_as_double(gold));
}

HingedLoss fullness_loss(const VerifierParams& verifier, const EmbeddingMatrix& S, const EmbeddingMatrix& complement,
                         VerificationLabel gold, double b_f) {
    HingedLoss out;
    out.raw = accuracy_loss(S, gold, verifier) - accuracy_loss(complement, gold, verifier);
    out.hinged = hinge(out.raw, b_f);
    return out;
}

HingedLoss sufficiency_loss(const VerifierParams& verifier, const EmbeddingMatrix& S, const EmbeddingMatrix& evidence,
                            VerificationLabel gold, double b_s) {
    HingedLoss out;
    out.raw = accuracy_loss(evidence, gold, verifier) - accuracy_loss(S, gold, verifier);
    out.hinged = hinge(out.raw, b_s);
    return out;
}

LossBreakdown combined_retriever_loss(double l_acc, double l_plau, const HingedLoss& fullness,
                                      const HingedLoss& sufficiency, const LossWeights& weights) {
    weights.validate();
    LossBreakdown b;
    b.l_acc = l_acc;
    b.l_plau = l_plau;
    b.l_full_raw = fullness.raw;
    b.l_full_hinged = fullness.hinged;
    b.l_suff_raw = sufficiency.raw;
    b.l_suff_hinged = sufficiency.hinged;
    b.combined = weights.alpha_full * fullness.hinged + weights.alpha_suff * sufficiency.hinged +
                 weights.alpha_plau * l_plau;
    return b;
}

LossBreakdown retriever_objective(const RetrieverExample& example, const VerifierParams& verifier,
                                  const RetrieverParams& retriever, const LossWeights& weights,
                                  const FaithfulnessMargins& margins, double k_percent,
                                  RetrieverParams* param_grads) {
    const EmbeddingMatrix& S = example.S;
    const std::size_t y = label_index(example.label);

    const RetrieverTrace trace = retriever_forward(S, retriever);
    const EvidenceMask mask = select_top_k(trace.scores, k_percent);
    const MaskedView complement = complement_view(S, trace.scores, mask, ViewMode::Soft);
    const MaskedView evidence = evidence_view(S, trace.scores, mask, ViewMode::Soft);

    const double ce_full_doc = accuracy_loss(S, example.label, verifier);
    const VerifierTrace complement_trace = verifier_forward(complement.matrix, verifier);
    const VerifierTrace evidence_trace = verifier_forward(evidence.matrix, verifier);
    const double ce_complement = cross_entropy(complement_trace.probs.p, y);
    const double ce_evidence = cross_entropy(evidence_trace.probs.p, y);

    HingedLoss fullness{ce_full_doc - ce_complement, 0.0};
    fullness.hinged = hinge(fullness.raw, margins.b_f);
    HingedLoss sufficiency{ce_evidence - ce_full_doc, 0.0};
    sufficiency.hinged = hinge(sufficiency.raw, margins.b_s);
    const double l_plau = plausibility_loss(trace.scores, example.gold_evidence);

    LossBreakdown breakdown = combined_retriever_loss(ce_full_doc, l_plau, fullness, sufficiency, weights);
    if (!param_grads) return breakdown;

    std::vector<double> d_scores(trace.scores.size(), 0.0);
    if (weights.alpha_plau != 0.0) {
        const auto g = plausibility_grad(trace.scores, example.gold_evidence);
        for (std::size_t i = 0; i < g.size(); ++i) d_scores[i] += weights.alpha_plau * g[i];
    }

    // d(hinged)/d(CE of a view) is -alpha for fullness and +alpha for
    // sufficiency while the hinge is open.
    auto through_view = [&](const MaskedView& view, const VerifierTrace& vt, double d_ce) {
        auto d_logits = cross_entropy_logit_grad(vt.probs.p, y);
        for (double& g : d_logits) g *= d_ce;
        Tensor d_view(view.matrix.shape(), 0.0);
        verifier_backward(view.matrix, vt, d_logits, verifier, nullptr, &d_view);
        view_backward(S, view, d_view, d_scores);
    };
    if (weights.alpha_full != 0.0 && fullness.active()) through_view(complement, complement_trace, -weights.alpha_full);
    if (weights.alpha_suff != 0.0 && sufficiency.active()) through_view(evidence, evidence_trace, weights.alpha_suff);

    retriever_backward(S, trace, d_scores, retriever, param_grads, nullptr);
    return breakdown;
}

}  // namespace reread
