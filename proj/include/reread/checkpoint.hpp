#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "reread/tensor.hpp"

namespace reread {

/// Ordered list of named tensors as stored in an "RRCK" checkpoint.
///
/// Layout (all integers little-endian): magic "RRCK", u32 version (1),
/// u32 tensor count, then per tensor: u16 name length, UTF-8 name, u8 rank,
/// rank x u32 dims, product(dims) x f64 payload.
class Checkpoint {
public:
    static constexpr std::uint32_t kVersion = 1;

    void add(std::string name, Tensor tensor);
    void add(const ParameterRefs& params);

    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }

    /// Copies stored values into the given parameters; shapes must match.
    void restore(const ParameterRefs& params) const;

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Stores a 64-bit value exactly as four 16-bit limbs in a rank-1 tensor.
Tensor encode_u64(std::uint64_t value);
std::uint64_t decode_u64(const Tensor& t);

}  // namespace reread
