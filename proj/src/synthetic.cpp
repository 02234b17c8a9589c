#include <algorithm>
#include <cstdio>
#include <numeric>

#include "random.hpp"
#include "reread/corpus.hpp"
#include "reread/error.hpp"

namespace reread {

namespace {

constexpr std::size_t kMinVocab = 16;
constexpr std::size_t kMinFiller = 4;

// Vocabulary layout: subjects, attributes and values each take a fixed slice,
// the remainder is filler.
struct VocabLayout {
    std::size_t subjects;
    std::size_t attributes;
    std::size_t values;
    std::size_t filler;

    explicit VocabLayout(const SynthConfig& cfg)
        : subjects(cfg.n_subjects),
          attributes(cfg.n_attributes),
          values(cfg.n_values),
          filler(cfg.vocab_size - subjects - attributes - values) {}

    std::string token(std::size_t id) const {
        if (id < subjects) return "ent" + std::to_string(id);
        id -= subjects;
        if (id < attributes) return "attr" + std::to_string(id);
        id -= attributes;
        if (id < values) return "val" + std::to_string(id);
        id -= values;
        return "w" + std::to_string(id);
    }

    std::size_t value_id(std::size_t v) const { return subjects + attributes + v; }
    std::size_t filler_id(std::size_t f) const { return subjects + attributes + values + f; }
};

VerificationLabel sample_label(detail::Rng& rng, const std::array<double, kNumLabels>& mix) {
    const double total = mix[0] + mix[1] + mix[2];
    double u = rng.uniform() * total;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
        if (u < mix[k]) return label_from_index(k);
        u -= mix[k];
    }
    for (std::size_t k = kNumLabels; k-- > 0;)
        if (mix[k] > 0.0) return label_from_index(k);
    return VerificationLabel::NotEnoughInfo;
}

std::size_t sample_between(detail::Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.index(hi - lo + 1));
}

}  // namespace

void SynthConfig::validate() const {
    if (vocab_size < kMinVocab) throw ConfigError("vocab_size must be at least " + std::to_string(kMinVocab));
    if (n_subjects < 1 || n_attributes < 1 || n_values < 2) {
        throw ConfigError("need at least one subject, one attribute and two values");
    }
    if (n_subjects + n_attributes + n_values + kMinFiller > vocab_size) {
        throw ConfigError("role tokens leave fewer than " + std::to_string(kMinFiller) + " filler tokens in a vocabulary of " +
                          std::to_string(vocab_size));
    }
    if (min_sentences < 1 || max_sentences < min_sentences) throw ConfigError("invalid sentences_per_doc range");
    if (min_tokens_per_sentence < 3 || max_tokens_per_sentence < min_tokens_per_sentence) {
        throw ConfigError("tokens_per_sentence range must start at 3 or more");
    }
    if (evidence_sentences_per_doc >= min_sentences) {
        throw ConfigError("evidence_sentences_per_doc (" + std::to_string(evidence_sentences_per_doc) +
                          ") must be smaller than the minimum document length (" + std::to_string(min_sentences) +
                          ")");
    }
    double total = 0.0;
    for (double w : label_mix) {
        if (!(w >= 0.0)) throw ConfigError("label_mix weights must be nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("label_mix weights must have a positive sum");
}

Dataset generate_synthetic(const SynthConfig& cfg, Split split) {
    cfg.validate();
    const VocabLayout vocab(cfg);
    detail::Rng rng(cfg.seed);

    Dataset ds;
    ds.split = split;
    ds.examples.reserve(cfg.n_examples);
    for (std::size_t n = 0; n < cfg.n_examples; ++n) {
        ClaimDocument ex;
        char id[32];
        std::snprintf(id, sizeof id, "syn%06zu", n);
        ex.id = id;
        ex.label = sample_label(rng, cfg.label_mix);

        const std::size_t subject = rng.index(vocab.subjects);
        const std::size_t attribute = vocab.subjects + rng.index(vocab.attributes);
        const std::size_t value = rng.index(vocab.values);
        std::size_t stated_value = value;
        if (ex.label == VerificationLabel::Refuted) {
            stated_value = (value + 1 + rng.index(vocab.values - 1)) % vocab.values;
        }
        ex.claim = {vocab.token(subject), vocab.token(attribute), vocab.token(vocab.value_id(value))};

        const std::size_t n_doc = sample_between(rng, cfg.min_sentences, cfg.max_sentences);
        ex.gold_evidence.assign(n_doc, 0);
        if (ex.label != VerificationLabel::NotEnoughInfo) {
            std::vector<std::size_t> positions(n_doc);
            std::iota(positions.begin(), positions.end(), std::size_t{0});
            rng.shuffle(positions);
            for (std::size_t e = 0; e < cfg.evidence_sentences_per_doc; ++e) ex.gold_evidence[positions[e]] = 1;
        }

        auto noise_token = [&] { return vocab.token(vocab.filler_id(rng.index(vocab.filler))); };

        ex.doc_sentences.resize(n_doc);
        for (std::size_t i = 0; i < n_doc; ++i) {
            const std::size_t len = sample_between(rng, cfg.min_tokens_per_sentence, cfg.max_tokens_per_sentence);
            Tokens sentence;
            sentence.reserve(len);
            if (ex.gold_evidence[i]) {
                // Fact tokens keep their order; the rest of the sentence is noise.
                std::vector<std::size_t> slots(len);
                std::iota(slots.begin(), slots.end(), std::size_t{0});
                rng.shuffle(slots);
                std::sort(slots.begin(), slots.begin() + 3);
                sentence.resize(len);
                sentence[slots[0]] = vocab.token(subject);
                sentence[slots[1]] = vocab.token(attribute);
                sentence[slots[2]] = vocab.token(vocab.value_id(stated_value));
                for (auto& tok : sentence)
                    if (tok.empty()) tok = noise_token();
            } else {
                for (std::size_t t = 0; t < len; ++t) sentence.push_back(noise_token());
            }
            ex.doc_sentences[i] = std::move(sentence);
        }
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

SynthTokenRole synth_token_role(std::string_view token) {
    auto numeric_tail = [&](std::string_view prefix) {
        if (token.size() <= prefix.size() || token.substr(0, prefix.size()) != prefix) return false;
        return std::all_of(token.begin() + static_cast<std::ptrdiff_t>(prefix.size()), token.end(),
                           [](char c) { return c >= '0' && c <= '9'; });
    };
    if (numeric_tail("ent")) return SynthTokenRole::Subject;
    if (numeric_tail("attr")) return SynthTokenRole::Attribute;
    if (numeric_tail("val")) return SynthTokenRole::Value;
    if (numeric_tail("w")) return SynthTokenRole::Filler;
    return SynthTokenRole::Unknown;
}

}  // namespace reread
