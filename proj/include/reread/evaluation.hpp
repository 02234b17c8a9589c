#pragma once

#include <span>
#include <string>
#include <vector>

#include "reread/metrics.hpp"
#include "reread/retriever.hpp"
#include "reread/trainer.hpp"
#include "reread/verifier.hpp"

namespace reread {

struct FaithfulnessDeltas {
    /// p_c(S) - p_c(S \ E): how much the predicted label loses without the evidence.
    double fullness = 0.0;
    /// p_c(S) - p_c(E): how much it changes when only the evidence is kept.
    double sufficiency = 0.0;
};

/// Probability deltas of the label c = classify(S) under the hard views.
/// `scores` is only used for consistency checks.
FaithfulnessDeltas faithfulness_deltas(const VerifierParams& verifier, const EmbeddingMatrix& S,
                                       const EvidenceMask& mask, const SentenceScores& scores);

struct RetrievalResult {
    std::string id;
    SentenceScores scores;
    EvidenceMask mask;
};

std::vector<RetrievalResult> retrieve(const Dataset& ds, std::span<const EmbeddingMatrix> embeddings,
                                      const RetrieverParams& retriever, double k_percent);

/// Evidence quality over the examples that have gold evidence: mean
/// per-example P/R/F1 and mean sentence BLEU of retrieved vs gold text.
struct EvidenceSummary {
    std::size_t examples = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double bleu = 0.0;
};

EvidenceSummary summarize_evidence(const Dataset& ds, std::span<const EvidenceMask> masks);

/// Claim + selected sentences, unscaled.
std::vector<EmbeddingMatrix> hard_evidence_views(std::span<const EmbeddingMatrix> embeddings,
                                                 std::span<const RetrievalResult> retrieved);

std::vector<VerificationLabel> classify_all(std::span<const EmbeddingMatrix> inputs, const VerifierParams& verifier);
std::vector<VerificationLabel> gold_labels(const Dataset& ds);

struct EvalReport {
    std::size_t n_examples = 0;
    double k_percent = 0.0;
    /// Revisited verifier on claim + retrieved evidence.
    F1Report verification;
    /// Phase-1 verifier on the full document, for reference.
    F1Report full_document;
    EvidenceSummary evidence;
    double mean_fullness_delta = 0.0;
    double mean_sufficiency_delta = 0.0;

    std::string to_json() const;
};

EvalReport evaluate_embedded(const Dataset& ds, std::span<const EmbeddingMatrix> embeddings,
                             const TrainedSystem& system, double k_percent);

EvalReport evaluate(const TrainedSystem& system, const Dataset& ds, double k_percent,
                    const EmbeddingStore* precomputed = nullptr);

struct KSweepRow {
    double k_percent = 0.0;
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;
};

/// For each k: reselect evidence with the trained retriever, rerun phase 3
/// from the phase-1 verifier, and score the dev split.
std::vector<KSweepRow> k_sweep(const TrainedSystem& system, const Dataset& train, const Dataset& dev,
                               std::span<const double> k_values, const EmbeddingStore* precomputed = nullptr);

/// CSV with header "k,micro_f1,macro_f1".
std::string k_sweep_csv(std::span<const KSweepRow> rows);

}  // namespace reread
