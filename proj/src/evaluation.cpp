#include "reread/evaluation.hpp"

#include <sstream>

#include <json.hpp>

#include "reread/error.hpp"

namespace reread {

FaithfulnessDeltas faithfulness_deltas(const VerifierParams& verifier, const EmbeddingMatrix& S,
                                       const EvidenceMask& mask, const SentenceScores& scores) {
    const auto full = predict(S, verifier);
    const std::size_t c = label_index(argmax_label(full.p));
    const auto without = predict(complement_view(S, scores, mask, ViewMode::Hard).matrix, verifier);
    const auto only = predict(evidence_view(S, scores, mask, ViewMode::Hard).matrix, verifier);
    return {full[c] - without[c], full[c] - only[c]};
}

std::vector<RetrievalResult> retrieve(const Dataset& ds, std::span<const EmbeddingMatrix> embeddings,
                                      const RetrieverParams& retriever, double k_percent) {
    if (embeddings.size() != ds.size()) throw DimensionError("retrieve: one embedding matrix per example required");
    std::vector<RetrievalResult> out;
    out.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        RetrievalResult r;
        r.id = ds.examples[i].id;
        r.scores = score_sentences(embeddings[i], retriever);
        r.mask = select_top_k(r.scores, k_percent);
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

Tokens concat_selected(const ClaimDocument& ex, std::span<const std::uint8_t> mask) {
    Tokens out;
    for (std::size_t i = 0; i < ex.num_sentences(); ++i)
        if (mask[i]) out.insert(out.end(), ex.doc_sentences[i].begin(), ex.doc_sentences[i].end());
    return out;
}

}  // namespace

EvidenceSummary summarize_evidence(const Dataset& ds, std::span<const EvidenceMask> masks) {
    if (masks.size() != ds.size()) throw DimensionError("summarize_evidence: one mask per example required");
    EvidenceSummary s;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& ex = ds.examples[i];
        if (!ex.has_gold_evidence()) continue;
        const auto prf = evidence_prf(masks[i].m, ex.gold_evidence);
        s.precision += prf.precision;
        s.recall += prf.recall;
        s.f1 += prf.f1;
        s.bleu += bleu(concat_selected(ex, masks[i].m), concat_selected(ex, ex.gold_evidence));
        ++s.examples;
    }
    if (s.examples) {
        const double n = static_cast<double>(s.examples);
        s.precision /= n;
        s.recall /= n;
        s.f1 /= n;
        s.bleu /= n;
    }
    return s;
}

std::vector<EmbeddingMatrix> hard_evidence_views(std::span<const EmbeddingMatrix> embeddings,
                                                 std::span<const RetrievalResult> retrieved) {
    if (embeddings.size() != retrieved.size()) throw DimensionError("hard_evidence_views: size mismatch");
    std::vector<EmbeddingMatrix> out;
    out.reserve(embeddings.size());
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        out.push_back(evidence_view(embeddings[i], retrieved[i].scores, retrieved[i].mask, ViewMode::Hard).matrix);
    }
    return out;
}

std::vector<VerificationLabel> classify_all(std::span<const EmbeddingMatrix> inputs, const VerifierParams& verifier) {
    std::vector<VerificationLabel> out;
    out.reserve(inputs.size());
    for (const auto& S : inputs) out.push_back(classify(S, verifier));
    return out;
}

std::vector<VerificationLabel> gold_labels(const Dataset& ds) {
    std::vector<VerificationLabel> out;
    out.reserve(ds.size());
    for (const auto& ex : ds.examples) out.push_back(ex.label);
    return out;
}

EvalReport evaluate_embedded(const Dataset& ds, std::span<const EmbeddingMatrix> embeddings,
                             const TrainedSystem& system, double k_percent) {
    if (ds.empty()) throw ConfigError("cannot evaluate an empty dataset");
    EvalReport rep;
    rep.n_examples = ds.size();
    rep.k_percent = k_percent;

    const auto retrieved = retrieve(ds, embeddings, system.retriever, k_percent);
    const auto golds = gold_labels(ds);
    rep.verification = micro_macro_f1(classify_all(hard_evidence_views(embeddings, retrieved), system.verifier_revisited),
                                      golds);
    rep.full_document = micro_macro_f1(classify_all(embeddings, system.verifier_phase1), golds);

    std::vector<EvidenceMask> masks;
    masks.reserve(retrieved.size());
    for (const auto& r : retrieved) masks.push_back(r.mask);
    rep.evidence = summarize_evidence(ds, masks);

    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto d = faithfulness_deltas(system.verifier_phase1, embeddings[i], retrieved[i].mask,
                                           retrieved[i].scores);
        rep.mean_fullness_delta += d.fullness;
        rep.mean_sufficiency_delta += d.sufficiency;
    }
    rep.mean_fullness_delta /= static_cast<double>(ds.size());
    rep.mean_sufficiency_delta /= static_cast<double>(ds.size());
    return rep;
}

EvalReport evaluate(const TrainedSystem& system, const Dataset& ds, double k_percent,
                    const EmbeddingStore* precomputed) {
    const auto embeddings = embed_dataset(ds, system.featurizer_ptr(), precomputed, system.config.d);
    return evaluate_embedded(ds, embeddings, system, k_percent);
}

namespace {

nlohmann::ordered_json f1_json(const F1Report& f) {
    nlohmann::ordered_json j;
    j["micro_f1"] = f.micro;
    j["macro_f1"] = f.macro;
    nlohmann::ordered_json per_class;
    for (std::size_t c = 0; c < kNumLabels; ++c) {
        const auto& cs = f.per_class[c];
        per_class[std::string(label_code(label_from_index(c)))] = {
            {"precision", cs.precision}, {"recall", cs.recall}, {"f1", cs.f1}, {"support", cs.support}};
    }
    j["per_class"] = per_class;
    j["confusion"] = f.confusion;
    return j;
}

}  // namespace

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["n_examples"] = n_examples;
    j["k_percent"] = k_percent;
    j["micro_f1"] = verification.micro;
    j["macro_f1"] = verification.macro;
    j["verification"] = f1_json(verification);
    j["full_document"] = f1_json(full_document);
    j["bleu"] = evidence.bleu;
    j["evidence_precision"] = evidence.precision;
    j["evidence_recall"] = evidence.recall;
    j["evidence_f1"] = evidence.f1;
    j["evidence_examples"] = evidence.examples;
    j["mean_fullness_delta"] = mean_fullness_delta;
    j["mean_sufficiency_delta"] = mean_sufficiency_delta;
    return j.dump(2);
}

std::vector<KSweepRow> k_sweep(const TrainedSystem& system, const Dataset& train, const Dataset& dev,
                               std::span<const double> k_values, const EmbeddingStore* precomputed) {
    if (k_values.empty()) throw ConfigError("k_sweep needs at least one k value");
    for (double k : k_values) selection_size(1, k);

    const auto dev_S = embed_dataset(dev, system.featurizer_ptr(), precomputed, system.config.d);
    const TrainingContext ctx{nullptr, precomputed, nullptr};
    std::vector<KSweepRow> rows;
    for (double k : k_values) {
        TrainConfig cfg = system.config;
        cfg.k_percent = k;
        const VerifierParams revisited =
            train_phase3_revisit(train, system.featurizer_ptr(), system.retriever, system.verifier_phase1, cfg, ctx);
        const auto views = hard_evidence_views(dev_S, retrieve(dev, dev_S, system.retriever, k));
        const auto f1 = micro_macro_f1(classify_all(views, revisited), gold_labels(dev));
        rows.push_back({k, f1.micro, f1.macro});
    }
    return rows;
}

std::string k_sweep_csv(std::span<const KSweepRow> rows) {
    std::ostringstream os;
    os.precision(17);
    os << "k,micro_f1,macro_f1\n";
    for (const auto& r : rows) os << r.k_percent << ',' << r.micro_f1 << ',' << r.macro_f1 << '\n';
    return os.str();
}

}  // namespace reread
