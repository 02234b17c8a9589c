#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "reread/losses.hpp"

namespace reread {

/// Training hyperparameters. Defaults follow the reference setup (lr 4e-5,
/// warmup 0.07, batch 16, k = 5%, unit loss weights) at desk-scale model
/// sizes.
struct TrainConfig {
    double lr = 4e-5;
    std::size_t batch_size = 16;
    double warmup_fraction = 0.07;
    std::array<std::size_t, 3> epochs{10, 10, 5};
    double k_percent = 5.0;
    LossWeights weights;
    FaithfulnessMargins margins;
    std::uint64_t seed = 42;
    std::size_t d = 64;
    std::size_t h = 64;
    std::size_t r = 64;
    std::size_t n_buckets = 4096;

    void validate() const;

    /// Sets one key of the flat config format. Throws ConfigError on unknown
    /// keys or unparsable values.
    void set(std::string_view key, std::string_view value);

    /// Canonical "key=value" lines, one per key, in a fixed order.
    std::string to_text() const;

    /// FNV-1a of to_text(); stamped into every checkpoint.
    std::uint64_t hash() const;

    static const std::vector<std::string>& keys();
    static TrainConfig parse(std::string_view text);
    static TrainConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

}  // namespace reread
