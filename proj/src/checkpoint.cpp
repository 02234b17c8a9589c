#include "reread/checkpoint.hpp"

#include <fstream>
#include <limits>

#include "binary_io.hpp"
#include "reread/error.hpp"

namespace reread {

void Checkpoint::add(std::string name, Tensor tensor) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw ValidationError("tensor name too long");
    if (contains(name)) throw ValidationError("duplicate tensor name '" + name + "' in checkpoint");
    entries_.emplace_back(std::move(name), std::move(tensor));
}

void Checkpoint::add(const ParameterRefs& params) {
    for (const auto& p : params) add(p.name, p.param->value);
}

const Tensor& Checkpoint::get(const std::string& name) const {
    for (const auto& [n, t] : entries_)
        if (n == name) return t;
    throw LookupError("checkpoint has no tensor named '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
    for (const auto& entry : entries_)
        if (entry.first == name) return true;
    return false;
}

void Checkpoint::restore(const ParameterRefs& params) const {
    for (const auto& p : params) {
        const Tensor& stored = get(p.name);
        if (stored.shape() != p.param->value.shape()) {
            throw ConsistencyError("checkpoint tensor '" + p.name + "' has shape " + stored.shape_string() +
                                   ", model expects " + p.param->value.shape_string());
        }
        p.param->value = stored;
        p.param->zero_grad();
    }
}

void Checkpoint::save(const std::filesystem::path& path) const {
    detail::write_atomically(path, [this](std::ostream& os) {
        detail::LeWriter w(os);
        w.bytes("RRCK");
        w.uint<std::uint32_t>(kVersion);
        w.uint<std::uint32_t>(static_cast<std::uint32_t>(entries_.size()));
        for (const auto& [name, t] : entries_) {
            w.uint<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
            w.bytes(name);
            w.uint<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
            for (std::size_t dim : t.shape()) w.uint<std::uint32_t>(static_cast<std::uint32_t>(dim));
            for (double x : t.data()) w.f64(x);
        }
    });
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    detail::LeReader r(in, path.string());
    if (r.bytes(4) != "RRCK") throw ValidationError(path.string() + ": not an RRCK checkpoint");
    const auto version = r.uint<std::uint32_t>();
    if (version != kVersion) {
        throw ValidationError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = r.uint<std::uint32_t>();
    Checkpoint ckpt;
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto name_len = r.uint<std::uint16_t>();
        std::string name = r.bytes(name_len);
        const auto rank = r.uint<std::uint8_t>();
        std::vector<std::size_t> shape(rank);
        for (auto& dim : shape) dim = r.uint<std::uint32_t>();
        Tensor t(shape);
        for (double& x : t.data()) x = r.f64();
        ckpt.add(std::move(name), std::move(t));
    }
    return ckpt;
}

Tensor encode_u64(std::uint64_t value) {
    Tensor t = Tensor::vector(4);
    for (std::size_t i = 0; i < 4; ++i) t[i] = static_cast<double>((value >> (16 * i)) & 0xFFFF);
    return t;
}

std::uint64_t decode_u64(const Tensor& t) {
    if (t.size() != 4) throw ValidationError("encoded u64 must have 4 limbs");
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < 4; ++i) value |= static_cast<std::uint64_t>(t[i]) << (16 * i);
    return value;
}

}  // namespace reread
