#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "reread/corpus.hpp"

namespace reread {

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct F1Report {
    double micro = 0.0;
    double macro = 0.0;
    std::array<ClassScores, kNumLabels> per_class{};
    /// confusion[gold][pred]
    std::array<std::array<std::size_t, kNumLabels>, kNumLabels> confusion{};
};

/// Per-class P/R/F1 from the confusion matrix. Macro is the unweighted mean
/// over all three classes (a class that never occurs scores 0); micro F1
/// equals accuracy for single-label prediction.
F1Report micro_macro_f1(std::span<const VerificationLabel> preds, std::span<const VerificationLabel> golds);

struct EvidencePRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Set overlap between selected and gold sentences. Empty gold with empty
/// selection scores (1, 1, 1); empty gold with a nonempty selection has
/// precision 0 and (vacuous) recall 1.
EvidencePRF evidence_prf(std::span<const std::uint8_t> selected, std::span<const std::uint8_t> gold);

/// Sentence BLEU-4: clipped n-gram precisions with uniform weights, brevity
/// penalty, and add-one smoothing (numerator and denominator) for orders
/// n >= 2 that have no matches. No unigram match gives 0.
double bleu(const Tokens& retrieved, const Tokens& gold);

}  // namespace reread
