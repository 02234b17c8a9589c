#include "reread/encoder.hpp"

#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "random.hpp"
#include "reread/error.hpp"

namespace reread {

ParameterRefs FeaturizerParams::refs() {
    return {{"featurizer.projection", &projection}, {"featurizer.bias", &bias}};
}

FeaturizerParams FeaturizerParams::zeros(std::size_t n_buckets, std::size_t d) {
    if (n_buckets < 1 || d < 1) throw ConfigError("featurizer needs n_buckets >= 1 and d >= 1");
    FeaturizerParams p;
    p.n_buckets = n_buckets;
    p.projection = Parameter(Tensor::matrix(n_buckets, d));
    p.bias = Parameter(Tensor::vector(d));
    return p;
}

FeaturizerParams FeaturizerParams::init(std::size_t n_buckets, std::size_t d, std::uint64_t seed) {
    FeaturizerParams p = zeros(n_buckets, d);
    detail::Rng rng(seed);
    for (double& w : p.projection.value.data()) w = rng.normal();
    return p;
}

std::uint32_t token_bucket(std::string_view token, std::size_t n_buckets) {
    return static_cast<std::uint32_t>(fnv1a64(token) % n_buckets);
}

SentenceBag bag_sentence(const Tokens& sentence, std::size_t n_buckets) {
    std::map<std::uint32_t, double> counts;
    for (const auto& tok : sentence) counts[token_bucket(tok, n_buckets)] += 1.0;
    SentenceBag bag;
    bag.reserve(counts.size());
    const double n = static_cast<double>(sentence.size());
    for (const auto& [bucket, count] : counts) bag.emplace_back(bucket, count / n);
    return bag;
}

BaggedExample bag_example(const ClaimDocument& example, std::size_t n_buckets) {
    BaggedExample out;
    out.rows.reserve(1 + example.num_sentences());
    out.rows.push_back(bag_sentence(example.claim, n_buckets));
    for (const auto& s : example.doc_sentences) out.rows.push_back(bag_sentence(s, n_buckets));
    return out;
}

EmbeddingMatrix embed(const BaggedExample& bags, const FeaturizerParams& params) {
    const std::size_t d = params.dim();
    EmbeddingMatrix out = Tensor::matrix(bags.rows.size(), d);
    for (std::size_t r = 0; r < bags.rows.size(); ++r) {
        auto row = out.row(r);
        for (std::size_t j = 0; j < d; ++j) row[j] = params.bias.value[j];
        for (const auto& [bucket, weight] : bags.rows[r]) {
            auto proj = params.projection.value.row(bucket);
            for (std::size_t j = 0; j < d; ++j) row[j] += weight * proj[j];
        }
        for (double& x : row) x = std::tanh(x);
    }
    return out;
}

void embed_backward(const BaggedExample& bags, const EmbeddingMatrix& embeddings, const Tensor& d_embeddings,
                    FeaturizerParams& params) {
    const std::size_t d = params.dim();
    if (d_embeddings.rows() != bags.rows.size() || d_embeddings.cols() != d) {
        throw DimensionError("embed_backward: gradient shape " + d_embeddings.shape_string());
    }
    std::vector<double> dz(d);
    for (std::size_t r = 0; r < bags.rows.size(); ++r) {
        auto e = embeddings.row(r);
        auto de = d_embeddings.row(r);
        for (std::size_t j = 0; j < d; ++j) {
            dz[j] = de[j] * (1.0 - e[j] * e[j]);
            params.bias.grad[j] += dz[j];
        }
        for (const auto& [bucket, weight] : bags.rows[r]) {
            auto g = params.projection.grad.row(bucket);
            for (std::size_t j = 0; j < d; ++j) g[j] += weight * dz[j];
        }
    }
}

EmbeddingMatrix encode(const ClaimDocument& example, const FeaturizerParams& params) {
    return embed(bag_example(example, params.n_buckets), params);
}

void EmbeddingStore::add(const std::string& id, EmbeddingMatrix matrix) {
    if (matrix.rank() != 2 || matrix.cols() != dim_) {
        throw ConsistencyError("embedding for '" + id + "' has shape " + matrix.shape_string() + ", store expects d=" +
                               std::to_string(dim_));
    }
    if (!matrices_.contains(id)) order_.push_back(id);
    matrices_[id] = std::move(matrix);
}

const EmbeddingMatrix& EmbeddingStore::lookup(const std::string& id) const {
    auto it = matrices_.find(id);
    if (it == matrices_.end()) throw LookupError("no precomputed embeddings for example '" + id + "'");
    return it->second;
}

const EmbeddingMatrix& EmbeddingStore::lookup(const ClaimDocument& example, std::size_t expected_dim) const {
    if (expected_dim != dim_) {
        throw ConsistencyError("embedding file has d=" + std::to_string(dim_) + " but the configuration uses d=" +
                               std::to_string(expected_dim));
    }
    const EmbeddingMatrix& m = lookup(example.id);
    if (m.rows() != 1 + example.num_sentences()) {
        throw ConsistencyError("embeddings for '" + example.id + "' have " + std::to_string(m.rows()) +
                               " rows, the example needs " + std::to_string(1 + example.num_sentences()));
    }
    return m;
}

void EmbeddingStore::save(const std::filesystem::path& path) const {
    detail::write_atomically(path, [this](std::ostream& os) {
        detail::LeWriter w(os);
        w.bytes("REMB");
        w.uint<std::uint32_t>(kVersion);
        w.uint<std::uint32_t>(static_cast<std::uint32_t>(dim_));
        w.uint<std::uint32_t>(static_cast<std::uint32_t>(order_.size()));
        for (const auto& id : order_) {
            const auto& m = matrices_.at(id);
            w.uint<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
            w.bytes(id);
            w.uint<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
            for (double x : m.data()) w.f64(x);
        }
    });
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file " + path.string());
    detail::LeReader r(in, path.string());
    if (r.bytes(4) != "REMB") throw ValidationError(path.string() + ": not a REMB embedding file");
    const auto version = r.uint<std::uint32_t>();
    if (version != kVersion) {
        throw ValidationError(path.string() + ": unsupported embedding file version " + std::to_string(version));
    }
    EmbeddingStore store(r.uint<std::uint32_t>());
    const auto count = r.uint<std::uint32_t>();
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto id_len = r.uint<std::uint16_t>();
        std::string id = r.bytes(id_len);
        const auto rows = r.uint<std::uint32_t>();
        EmbeddingMatrix m = Tensor::matrix(rows, store.dim_);
        for (double& x : m.data()) x = r.f64();
        store.add(id, std::move(m));
    }
    return store;
}

EmbeddingMatrix load_precomputed(const std::filesystem::path& path, const ClaimDocument& example,
                                 std::size_t expected_dim) {
    return EmbeddingStore::load(path).lookup(example, expected_dim);
}

}  // namespace reread
