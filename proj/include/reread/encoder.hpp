#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reread/corpus.hpp"
#include "reread/tensor.hpp"

namespace reread {

/// Sentence embedding matrices are plain l x d tensors: row 0 is the claim,
/// rows 1..l-1 are the document sentences in order.
using EmbeddingMatrix = Tensor;

/// 64-bit FNV-1a. Fixed so hashed features are stable across platforms.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Identifier of the token hash, written into featurizer checkpoints.
inline constexpr double kHashFnv1a64 = 1.0;

/// Trainable hashed bag-of-tokens featurizer: tokens are hashed into
/// `n_buckets`, the bucket one-hots are averaged per sentence, then projected
/// (n_buckets x d) with a bias and squashed by tanh.
struct FeaturizerParams {
    std::size_t n_buckets = 4096;
    Parameter projection;
    Parameter bias;

    std::size_t dim() const { return bias.value.size(); }
    ParameterRefs refs();

    static FeaturizerParams init(std::size_t n_buckets, std::size_t d, std::uint64_t seed);
    static FeaturizerParams zeros(std::size_t n_buckets, std::size_t d);
};

/// Averaged bucket one-hot of one sentence, stored sparsely.
using SentenceBag = std::vector<std::pair<std::uint32_t, double>>;

/// Bags for every row of an example (claim first).
struct BaggedExample {
    std::vector<SentenceBag> rows;
};

std::uint32_t token_bucket(std::string_view token, std::size_t n_buckets);
SentenceBag bag_sentence(const Tokens& sentence, std::size_t n_buckets);
BaggedExample bag_example(const ClaimDocument& example, std::size_t n_buckets);

EmbeddingMatrix embed(const BaggedExample& bags, const FeaturizerParams& params);

/// Accumulates featurizer gradients given dL/dS; `embeddings` is the output of
/// `embed` for the same bags.
void embed_backward(const BaggedExample& bags, const EmbeddingMatrix& embeddings, const Tensor& d_embeddings,
                    FeaturizerParams& params);

EmbeddingMatrix encode(const ClaimDocument& example, const FeaturizerParams& params);

/// Externally computed embeddings in the "REMB" file format: magic "REMB",
/// u32 version (1), u32 d, u32 count, then per example u16 id length, UTF-8
/// id, u32 l, l x d little-endian f64.
class EmbeddingStore {
public:
    static constexpr std::uint32_t kVersion = 1;

    explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return matrices_.size(); }

    void add(const std::string& id, EmbeddingMatrix matrix);

    /// Returns the stored matrix for `example`, checking its row count against
    /// the example and its width against `expected_dim`.
    const EmbeddingMatrix& lookup(const ClaimDocument& example, std::size_t expected_dim) const;
    const EmbeddingMatrix& lookup(const std::string& id) const;

    void save(const std::filesystem::path& path) const;
    static EmbeddingStore load(const std::filesystem::path& path);

private:
    std::size_t dim_;
    std::map<std::string, EmbeddingMatrix> matrices_;
    std::vector<std::string> order_;
};

EmbeddingMatrix load_precomputed(const std::filesystem::path& path, const ClaimDocument& example,
                                 std::size_t expected_dim);

}  // namespace reread
