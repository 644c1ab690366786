#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace srac::rng {

/// Root seed plus a path of labels naming the consumer of a stream.
///
/// Streams are keyed by a hash of the whole path, so adding a new consumer
/// never shifts the draws of an existing one. Labels may not contain '/'.
struct SeedTree {
    std::uint64_t root_seed = 0;
    std::vector<std::string> path;

    bool operator==(const SeedTree&) const = default;
};

SeedTree derive(const SeedTree& tree, const std::string& label);

/// "root:label/label/..." form, parsed back by parse_seed_tree.
std::string to_string(const SeedTree& tree);
SeedTree parse_seed_tree(const std::string& text);

/// 64-bit key of a tree; identical trees give identical keys.
std::uint64_t tree_key(const SeedTree& tree);

/// A single-owner stream of draws. The distribution transforms are written
/// out here instead of using <random>'s distributions so that draws are
/// bit-identical across standard library implementations.
class RandomStream {
public:
    explicit RandomStream(const SeedTree& tree);

    /// Uniform on [0, 1) with 53 bits of resolution.
    double next_uniform();
    /// Inverse-CDF draw over `weights` in the given order.
    std::size_t next_categorical(std::span<const double> weights);
    double next_gaussian(double mean = 0.0, double stddev = 1.0);
    double next_gamma(double shape);
    std::vector<double> next_dirichlet(std::span<const double> concentration);

    std::uint64_t next_u64() { return engine_(); }

    friend std::ostream& operator<<(std::ostream& os, const RandomStream& s);
    friend std::istream& operator>>(std::istream& is, RandomStream& s);

    bool operator==(const RandomStream& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace srac::rng
