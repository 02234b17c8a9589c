#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "reread/corpus.hpp"
#include "reread/retriever.hpp"
#include "reread/verifier.hpp"

namespace reread {

struct LossWeights {
    double alpha_full = 1.0;
    double alpha_suff = 1.0;
    double alpha_plau = 1.0;

    void validate() const;
};

struct FaithfulnessMargins {
    double b_f = 0.5;
    double b_s = 0.5;

    void validate() const;
};

struct LossBreakdown {
    double l_acc = 0.0;
    double l_plau = 0.0;
    double l_full_raw = 0.0;
    double l_full_hinged = 0.0;
    double l_suff_raw = 0.0;
    double l_suff_hinged = 0.0;
    double combined = 0.0;

    LossBreakdown& operator+=(const LossBreakdown& o);
    LossBreakdown& operator/=(double n);
};

/// max(0, raw + margin).
double hinge(double raw, double margin);

struct HingedLoss {
    double raw = 0.0;
    double hinged = 0.0;

    /// True when the hinge passes gradient (raw + margin > 0).
    bool active() const { return hinged > 0.0; }
};

/// Binary cross-entropy between sentence scores and the gold mask.
double plausibility_loss(const SentenceScores& scores, std::span<const std::uint8_t> gold);
std::vector<double> plausibility_grad(const SentenceScores& scores, std::span<const std::uint8_t> gold);

/// raw = CE(F(S), y) - CE(F(S \ E), y).
HingedLoss fullness_loss(const VerifierParams& verifier, const EmbeddingMatrix& S, const EmbeddingMatrix& complement,
                         VerificationLabel gold, double b_f);

/// raw = CE(F(E), y) - CE(F(S), y).
HingedLoss sufficiency_loss(const VerifierParams& verifier, const EmbeddingMatrix& S, const EmbeddingMatrix& evidence,
                            VerificationLabel gold, double b_s);

/// Weighted sum of hinged fullness, hinged sufficiency and plausibility.
/// Throws ConfigError on negative weights.
LossBreakdown combined_retriever_loss(double l_acc, double l_plau, const HingedLoss& fullness,
                                      const HingedLoss& sufficiency, const LossWeights& weights);

/// Everything the retriever objective needs from one example.
struct RetrieverExample {
    const EmbeddingMatrix& S;
    std::span<const std::uint8_t> gold_evidence;
    VerificationLabel label;
};

/// Full retriever objective on one example against a frozen verifier: scores,
/// top-k selection, soft views, the three losses and their combination.
/// Gradients w.r.t. the retriever parameters are accumulated into
/// `param_grads` when non-null; the verifier never receives gradient.
LossBreakdown retriever_objective(const RetrieverExample& example, const VerifierParams& verifier,
                                  const RetrieverParams& retriever, const LossWeights& weights,
                                  const FaithfulnessMargins& margins, double k_percent,
                                  RetrieverParams* param_grads);

}  // namespace reread
