#include "reread/diagnostics.hpp"

#include <algorithm>

#include "reread/corpus.hpp"
#include "reread/encoder.hpp"
#include "reread/losses.hpp"
#include "reread/retriever.hpp"
#include "reread/verifier.hpp"

namespace reread {

double ToyGradientReport::max_relative_error() const {
    return std::max(accuracy.max_relative_error, retriever.max_relative_error);
}

ToyGradientReport toy_gradient_check(const ToyGradientOptions& options) {
    SynthConfig sc;
    sc.n_examples = 1;
    sc.vocab_size = 32;
    sc.n_subjects = 4;
    sc.n_attributes = 2;
    sc.n_values = 3;
    sc.min_sentences = sc.max_sentences = options.n_sentences;
    sc.label_mix = {0.0, 1.0, 0.0};
    sc.seed = options.seed;
    const ClaimDocument ex = generate_synthetic(sc).examples.front();

    FeaturizerParams featurizer = FeaturizerParams::init(options.n_buckets, options.d, options.seed + 1);
    VerifierParams verifier = VerifierParams::init(options.d, options.h, options.seed + 2);
    RetrieverParams retriever = RetrieverParams::init(options.d, options.r, options.seed + 3);

    ToyGradientReport report;

    const BaggedExample bags = bag_example(ex, options.n_buckets);
    ParameterRefs acc_params = verifier.refs();
    for (const auto& p : featurizer.refs()) acc_params.push_back(p);
    report.accuracy = finite_diff_check(
        [&] {
            const EmbeddingMatrix S = embed(bags, featurizer);
            Tensor dS(S.shape(), 0.0);
            const double loss = accuracy_loss_backward(S, ex.label, verifier, &verifier, &dS);
            embed_backward(bags, S, dS, featurizer);
            return loss;
        },
        acc_params, options.epsilon);

    const EmbeddingMatrix S = embed(bags, featurizer);
    const RetrieverExample item{S, ex.gold_evidence, ex.label};
    report.retriever = finite_diff_check(
        [&] {
            return retriever_objective(item, verifier, retriever, LossWeights{}, FaithfulnessMargins{},
                                       options.k_percent, &retriever)
                .combined;
        },
        retriever.refs(), options.epsilon);
    return report;
}

}  // namespace reread
