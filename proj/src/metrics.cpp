#include "reread/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "reread/error.hpp"

namespace reread {

namespace {

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

F1Report micro_macro_f1(std::span<const VerificationLabel> preds, std::span<const VerificationLabel> golds) {
    if (preds.size() != golds.size()) {
        throw DimensionError("micro_macro_f1: " + std::to_string(preds.size()) + " predictions for " +
                             std::to_string(golds.size()) + " gold labels");
    }
    if (preds.empty()) throw DimensionError("micro_macro_f1: no examples");

    F1Report rep;
    for (std::size_t i = 0; i < preds.size(); ++i) ++rep.confusion[label_index(golds[i])][label_index(preds[i])];

    std::size_t correct = 0;
    for (std::size_t c = 0; c < kNumLabels; ++c) {
        std::size_t predicted = 0, actual = 0;
        for (std::size_t k = 0; k < kNumLabels; ++k) {
            predicted += rep.confusion[k][c];
            actual += rep.confusion[c][k];
        }
        const std::size_t tp = rep.confusion[c][c];
        correct += tp;
        auto& cs = rep.per_class[c];
        cs.precision = ratio(tp, predicted);
        cs.recall = ratio(tp, actual);
        cs.f1 = harmonic(cs.precision, cs.recall);
        cs.support = actual;
        rep.macro += cs.f1;
    }
    rep.macro /= static_cast<double>(kNumLabels);
    rep.micro = ratio(correct, preds.size());
    return rep;
}

EvidencePRF evidence_prf(std::span<const std::uint8_t> selected, std::span<const std::uint8_t> gold) {
    if (selected.size() != gold.size()) throw DimensionError("evidence_prf: mask length mismatch");
    std::size_t tp = 0, n_sel = 0, n_gold = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        n_sel += selected[i] ? 1 : 0;
        n_gold += gold[i] ? 1 : 0;
        tp += (selected[i] && gold[i]) ? 1 : 0;
    }
    EvidencePRF out;
    if (n_gold == 0) {
        out.precision = n_sel == 0 ? 1.0 : 0.0;
        out.recall = 1.0;
    } else {
        out.precision = n_sel == 0 ? 0.0 : ratio(tp, n_sel);
        out.recall = ratio(tp, n_gold);
    }
    out.f1 = harmonic(out.precision, out.recall);
    return out;
}

double bleu(const Tokens& retrieved, const Tokens& gold) {
    if (gold.empty()) throw MetricError("BLEU needs a non-empty gold reference");
    if (retrieved.empty()) return 0.0;

    constexpr std::size_t kOrder = 4;
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= kOrder; ++n) {
        std::map<std::vector<std::string>, std::size_t> ref_counts;
        for (std::size_t i = 0; i + n <= gold.size(); ++i) ++ref_counts[{gold.begin() + i, gold.begin() + i + n}];
        std::map<std::vector<std::string>, std::size_t> hyp_counts;
        for (std::size_t i = 0; i + n <= retrieved.size(); ++i)
            ++hyp_counts[{retrieved.begin() + i, retrieved.begin() + i + n}];

        std::size_t matches = 0;
        std::size_t total = 0;
        for (const auto& [gram, count] : hyp_counts) {
            total += count;
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) matches += std::min(count, it->second);
        }
        total = std::max<std::size_t>(total, 1);

        double precision;
        if (matches > 0) {
            precision = static_cast<double>(matches) / static_cast<double>(total);
        } else if (n == 1) {
            return 0.0;
        } else {
            precision = 1.0 / static_cast<double>(total + 1);
        }
        log_sum += std::log(precision) / static_cast<double>(kOrder);
    }

    const double c = static_cast<double>(retrieved.size());
    const double r = static_cast<double>(gold.size());
    const double brevity = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return brevity * std::exp(log_sum);
}

}  // namespace reread
