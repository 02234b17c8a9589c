#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reread {

enum class VerificationLabel : int { Refuted = 0, Supported = 1, NotEnoughInfo = 2 };

inline constexpr std::size_t kNumLabels = 3;

inline std::size_t label_index(VerificationLabel label) { return static_cast<std::size_t>(label); }
VerificationLabel label_from_index(std::size_t index);

/// "REF" / "SUP" / "NEI".
std::string_view label_code(VerificationLabel label);
std::optional<VerificationLabel> parse_label(std::string_view code);

using Tokens = std::vector<std::string>;

/// Whitespace tokenization of pre-tokenized text.
Tokens tokenize(std::string_view text);
std::string join_tokens(const Tokens& tokens);

/// One claim with its source document, gold evidence mask over the document
/// sentences, and gold verdict.
struct ClaimDocument {
    std::string id;
    Tokens claim;
    std::vector<Tokens> doc_sentences;
    std::vector<std::uint8_t> gold_evidence;
    VerificationLabel label = VerificationLabel::NotEnoughInfo;

    std::size_t num_sentences() const { return doc_sentences.size(); }
    bool has_gold_evidence() const;

    friend bool operator==(const ClaimDocument&, const ClaimDocument&) = default;
};

enum class Split { Train, Dev, Test };

std::string_view split_name(Split split);

struct Dataset {
    Split split = Split::Train;
    std::vector<ClaimDocument> examples;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Throws ValidationError if the example breaks a structural invariant.
void validate_example(const ClaimDocument& example);

/// Reads a JSONL dataset. Errors carry the 1-based line number. Ref/Sup
/// examples with an all-zero gold mask are accepted, with a message appended
/// to `warnings` when it is non-null.
Dataset load_dataset(const std::filesystem::path& path, Split split, std::vector<std::string>* warnings = nullptr);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Single-line JSON encoding of one example, fields in fixed order.
std::string example_to_json_line(const ClaimDocument& example);

// Synthetic planted-evidence corpus.

struct SynthConfig {
    std::size_t n_examples = 1000;
    std::size_t vocab_size = 100;
    // Role slices of the vocabulary; the remainder is filler. Distractor
    // sentences and evidence padding draw only from filler.
    std::size_t n_subjects = 10;
    std::size_t n_attributes = 5;
    std::size_t n_values = 3;
    std::size_t min_sentences = 20;
    std::size_t max_sentences = 20;
    std::size_t evidence_sentences_per_doc = 1;
    std::size_t min_tokens_per_sentence = 4;
    std::size_t max_tokens_per_sentence = 8;
    std::array<double, kNumLabels> label_mix{1.0, 1.0, 1.0};
    std::uint64_t seed = 42;

    void validate() const;
};

/// Generates claims asserting a (subject, attribute, value) fact. Supported
/// documents state the fact in the evidence sentences, Refuted documents state
/// it with a different value, NEI documents contain only distractors.
/// Deterministic in `cfg`.
Dataset generate_synthetic(const SynthConfig& cfg, Split split = Split::Train);

/// Role of a synthetic token, recovered from its spelling.
enum class SynthTokenRole { Subject, Attribute, Value, Filler, Unknown };
SynthTokenRole synth_token_role(std::string_view token);

}  // namespace reread
