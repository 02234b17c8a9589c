#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "reread/encoder.hpp"
#include "reread/tensor.hpp"

namespace reread {

/// Evidence retriever. Each document row x_i is scored against the claim row c
/// as sigmoid(w_out . tanh((Wc^T c) * (Ws^T x_i)) + b_out).
struct RetrieverParams {
    Parameter Wc;     // d x r
    Parameter Ws;     // d x r
    Parameter w_out;  // r
    Parameter b_out;  // 1

    std::size_t dim() const { return Wc.value.rows(); }
    std::size_t interaction() const { return w_out.value.size(); }
    ParameterRefs refs();

    static RetrieverParams zeros(std::size_t d, std::size_t r);
    static RetrieverParams init(std::size_t d, std::size_t r, std::uint64_t seed);
};

/// Per-document-sentence importance in [0,1], aligned to document order.
struct SentenceScores {
    std::vector<double> s;

    std::size_t size() const { return s.size(); }
    double operator[](std::size_t i) const { return s[i]; }
};

struct RetrieverTrace {
    std::vector<double> claim_proj;  // Wc^T c
    Tensor sentence_proj;            // n_doc x r, rows Ws^T x_i
    Tensor activation;               // n_doc x r, tanh of the interaction
    SentenceScores scores;
};

RetrieverTrace retriever_forward(const EmbeddingMatrix& S, const RetrieverParams& params);
SentenceScores score_sentences(const EmbeddingMatrix& S, const RetrieverParams& params);

/// Back-propagates dL/ds. Parameter gradients go to `param_grads` and dL/dS
/// to `d_input`; either may be null.
void retriever_backward(const EmbeddingMatrix& S, const RetrieverTrace& trace, std::span<const double> d_scores,
                        const RetrieverParams& params, RetrieverParams* param_grads, Tensor* d_input);

struct EvidenceMask {
    std::vector<std::uint8_t> m;
    double k_percent = 0.0;

    std::size_t size() const { return m.size(); }
    std::size_t count() const;
    std::vector<std::size_t> selected() const;
};

/// max(1, ceil(k_percent / 100 * n_doc)).
std::size_t selection_size(std::size_t n_doc, double k_percent);

/// Highest-scoring sentences; ties go to the lowest index.
EvidenceMask select_top_k(const SentenceScores& scores, double k_percent);

enum class ViewMode { Hard, Soft };

/// A row subset of S. Row 0 is always the claim; `doc_rows[j]` is the
/// document index behind row j + 1 and `scale[j]` the factor applied to it.
struct MaskedView {
    EmbeddingMatrix matrix;
    std::vector<std::size_t> doc_rows;
    std::vector<double> scale;
    /// d(scale)/d(score): +1 for the soft evidence view, -1 for the soft
    /// complement view, 0 for hard views.
    double score_sign = 0.0;
};

/// Claim plus selected rows (E_emb). Soft mode scales row i by s_i.
MaskedView evidence_view(const EmbeddingMatrix& S, const SentenceScores& scores, const EvidenceMask& mask,
                         ViewMode mode);

/// Claim plus unselected rows (S \ E). Soft mode scales row i by 1 - s_i.
MaskedView complement_view(const EmbeddingMatrix& S, const SentenceScores& scores, const EvidenceMask& mask,
                           ViewMode mode);

/// Accumulates dL/ds_i into `d_scores` given dL/d(view matrix).
void view_backward(const EmbeddingMatrix& S, const MaskedView& view, const Tensor& d_view,
                   std::span<double> d_scores);

}  // namespace reread
