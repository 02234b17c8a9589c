#include "reread/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "random.hpp"
#include "reread/error.hpp"

namespace reread {

ParameterRefs RetrieverParams::refs() {
    return {{"retriever.Wc", &Wc}, {"retriever.Ws", &Ws}, {"retriever.w_out", &w_out}, {"retriever.b_out", &b_out}};
}

RetrieverParams RetrieverParams::zeros(std::size_t d, std::size_t r) {
    if (d < 1 || r < 1) throw ConfigError("retriever needs d >= 1 and r >= 1");
    RetrieverParams p;
    p.Wc = Parameter(Tensor::matrix(d, r));
    p.Ws = Parameter(Tensor::matrix(d, r));
    p.w_out = Parameter(Tensor::vector(r));
    p.b_out = Parameter(Tensor::vector(1));
    return p;
}

RetrieverParams RetrieverParams::init(std::size_t d, std::size_t r, std::uint64_t seed) {
    RetrieverParams p = zeros(d, r);
    detail::Rng rng(seed);
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    const double sr = 1.0 / std::sqrt(static_cast<double>(r));
    for (double& w : p.Wc.value.data()) w = sd * rng.normal();
    for (double& w : p.Ws.value.data()) w = sd * rng.normal();
    for (double& w : p.w_out.value.data()) w = sr * rng.normal();
    return p;
}

RetrieverTrace retriever_forward(const EmbeddingMatrix& S, const RetrieverParams& params) {
    const std::size_t d = params.dim();
    const std::size_t r = params.interaction();
    if (S.rank() != 2 || S.rows() < 2) {
        throw DimensionError("retriever needs the claim row and at least one document sentence");
    }
    if (S.cols() != d) throw DimensionError("retriever expects d=" + std::to_string(d) + ", got " + S.shape_string());
    const std::size_t n_doc = S.rows() - 1;

    RetrieverTrace t;
    t.claim_proj.assign(r, 0.0);
    auto claim = S.row(0);
    for (std::size_t j = 0; j < d; ++j) {
        auto w = params.Wc.value.row(j);
        for (std::size_t k = 0; k < r; ++k) t.claim_proj[k] += claim[j] * w[k];
    }

    t.sentence_proj = Tensor::matrix(n_doc, r);
    t.activation = Tensor::matrix(n_doc, r);
    t.scores.s.resize(n_doc);
    for (std::size_t i = 0; i < n_doc; ++i) {
        auto x = S.row(i + 1);
        auto proj = t.sentence_proj.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            auto w = params.Ws.value.row(j);
            for (std::size_t k = 0; k < r; ++k) proj[k] += x[j] * w[k];
        }
        auto act = t.activation.row(i);
        double a = params.b_out.value[0];
        for (std::size_t k = 0; k < r; ++k) {
            act[k] = std::tanh(t.claim_proj[k] * proj[k]);
            a += params.w_out.value[k] * act[k];
        }
        t.scores.s[i] = sigmoid(a);
    }
    return t;
}

SentenceScores score_sentences(const EmbeddingMatrix& S, const RetrieverParams& params) {
    return retriever_forward(S, params).scores;
}

void retriever_backward(const EmbeddingMatrix& S, const RetrieverTrace& trace, std::span<const double> d_scores,
                        const RetrieverParams& params, RetrieverParams* param_grads, Tensor* d_input) {
    const std::size_t d = params.dim();
    const std::size_t r = params.interaction();
    const std::size_t n_doc = trace.scores.size();
    if (d_scores.size() != n_doc) throw DimensionError("retriever_backward: score gradient length mismatch");

    std::vector<double> d_claim_proj(r, 0.0);
    std::vector<double> d_proj(r);
    for (std::size_t i = 0; i < n_doc; ++i) {
        const double s = trace.scores.s[i];
        const double da = d_scores[i] * s * (1.0 - s);
        if (da == 0.0) continue;
        auto act = trace.activation.row(i);
        auto proj = trace.sentence_proj.row(i);
        if (param_grads) param_grads->b_out.grad[0] += da;
        for (std::size_t k = 0; k < r; ++k) {
            if (param_grads) param_grads->w_out.grad[k] += da * act[k];
            const double dq = da * params.w_out.value[k] * (1.0 - act[k] * act[k]);
            d_claim_proj[k] += dq * proj[k];
            d_proj[k] = dq * trace.claim_proj[k];
        }
        auto x = S.row(i + 1);
        if (param_grads) {
            for (std::size_t j = 0; j < d; ++j) {
                auto g = param_grads->Ws.grad.row(j);
                for (std::size_t k = 0; k < r; ++k) g[k] += x[j] * d_proj[k];
            }
        }
        if (d_input) {
            auto g = d_input->row(i + 1);
            for (std::size_t j = 0; j < d; ++j) {
                auto w = params.Ws.value.row(j);
                for (std::size_t k = 0; k < r; ++k) g[j] += w[k] * d_proj[k];
            }
        }
    }
    auto claim = S.row(0);
    if (param_grads) {
        for (std::size_t j = 0; j < d; ++j) {
            auto g = param_grads->Wc.grad.row(j);
            for (std::size_t k = 0; k < r; ++k) g[k] += claim[j] * d_claim_proj[k];
        }
    }
    if (d_input) {
        auto g = d_input->row(0);
        for (std::size_t j = 0; j < d; ++j) {
            auto w = params.Wc.value.row(j);
            for (std::size_t k = 0; k < r; ++k) g[j] += w[k] * d_claim_proj[k];
        }
    }
}

std::size_t EvidenceMask::count() const {
    return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

std::vector<std::size_t> EvidenceMask::selected() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i]) out.push_back(i);
    return out;
}

std::size_t selection_size(std::size_t n_doc, double k_percent) {
    if (!(k_percent > 0.0 && k_percent <= 100.0)) {
        throw ConfigError("k_percent must lie in (0, 100], got " + std::to_string(k_percent));
    }
    // k·n/100 keeps integer products exact; the slack absorbs representation
    // error in fractional k.
    const double raw = k_percent * static_cast<double>(n_doc) / 100.0;
    const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n_doc, 1));
}

EvidenceMask select_top_k(const SentenceScores& scores, double k_percent) {
    const std::size_t n = scores.size();
    const std::size_t k = selection_size(n, k_percent);
    EvidenceMask mask;
    mask.k_percent = k_percent;
    mask.m.assign(n, 0);
    if (n == 0) return mask;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (std::size_t i = 0; i < k; ++i) mask.m[order[i]] = 1;
    return mask;
}

namespace {

MaskedView build_view(const EmbeddingMatrix& S, const SentenceScores& scores, const EvidenceMask& mask, ViewMode mode,
                      bool keep_selected) {
    if (S.rank() != 2 || S.rows() < 1) throw DimensionError("view needs at least the claim row");
    const std::size_t n_doc = S.rows() - 1;
    if (mask.size() != n_doc) {
        throw DimensionError("mask covers " + std::to_string(mask.size()) + " sentences, matrix has " +
                             std::to_string(n_doc));
    }
    if (mode == ViewMode::Soft && scores.size() != n_doc) {
        throw DimensionError("scores cover " + std::to_string(scores.size()) + " sentences, matrix has " +
                             std::to_string(n_doc));
    }

    MaskedView view;
    for (std::size_t i = 0; i < n_doc; ++i) {
        if ((mask.m[i] != 0) != keep_selected) continue;
        view.doc_rows.push_back(i);
        double scale = 1.0;
        if (mode == ViewMode::Soft) scale = keep_selected ? scores[i] : 1.0 - scores[i];
        view.scale.push_back(scale);
    }
    if (mode == ViewMode::Soft) view.score_sign = keep_selected ? 1.0 : -1.0;

    const std::size_t d = S.cols();
    view.matrix = Tensor::matrix(1 + view.doc_rows.size(), d);
    std::copy(S.row(0).begin(), S.row(0).end(), view.matrix.row(0).begin());
    for (std::size_t j = 0; j < view.doc_rows.size(); ++j) {
        auto src = S.row(view.doc_rows[j] + 1);
        auto dst = view.matrix.row(j + 1);
        const double scale = view.scale[j];
        if (scale == 1.0) {
            std::copy(src.begin(), src.end(), dst.begin());
        } else {
            for (std::size_t c = 0; c < d; ++c) dst[c] = scale * src[c];
        }
    }
    return view;
}

}  // namespace

MaskedView evidence_view(const EmbeddingMatrix& S, const SentenceScores& scores, const EvidenceMask& mask,
                         ViewMode mode) {
    return build_view(S, scores, mask, mode, true);
}

MaskedView complement_view(const EmbeddingMatrix& S, const SentenceScores& scores, const EvidenceMask& mask,
                           ViewMode mode) {
    return build_view(S, scores, mask, mode, false);
}

void view_backward(const EmbeddingMatrix& S, const MaskedView& view, const Tensor& d_view,
                   std::span<double> d_scores) {
    if (view.score_sign == 0.0) return;
    for (std::size_t j = 0; j < view.doc_rows.size(); ++j) {
        auto x = S.row(view.doc_rows[j] + 1);
        auto g = d_view.row(j + 1);
        double dot = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) dot += g[c] * x[c];
        d_scores[view.doc_rows[j]] += view.score_sign * dot;
    }
}

}  // namespace reread
