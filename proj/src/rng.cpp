#include "srac/rng.hpp"

#include "srac/errors.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace srac::rng {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

void check_label(const std::string& label) {
    if (label.empty() || label.find('/') != std::string::npos) {
        throw InvalidInput("seed label must be non-empty and free of '/': '" + label + "'");
    }
}

}  // namespace

SeedTree derive(const SeedTree& tree, const std::string& label) {
    check_label(label);
    SeedTree out = tree;
    out.path.push_back(label);
    return out;
}

std::string to_string(const SeedTree& tree) {
    std::string out = std::to_string(tree.root_seed) + ":";
    for (std::size_t i = 0; i < tree.path.size(); ++i) {
        if (i) out += '/';
        out += tree.path[i];
    }
    return out;
}

SeedTree parse_seed_tree(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos || colon == 0) {
        throw InvalidInput("malformed seed tree: '" + text + "'");
    }
    SeedTree tree;
    try {
        std::size_t used = 0;
        tree.root_seed = std::stoull(text.substr(0, colon), &used);
        if (used != colon) throw InvalidInput("trailing characters in root seed");
    } catch (const std::logic_error&) {
        throw InvalidInput("malformed root seed in '" + text + "'");
    }
    std::string rest = text.substr(colon + 1);
    std::size_t start = 0;
    while (start < rest.size()) {
        auto slash = rest.find('/', start);
        if (slash == std::string::npos) slash = rest.size();
        std::string label = rest.substr(start, slash - start);
        check_label(label);
        tree.path.push_back(label);
        start = slash + 1;
    }
    return tree;
}

std::uint64_t tree_key(const SeedTree& tree) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    std::uint64_t root = tree.root_seed;
    h ^= splitmix64(root);
    for (const auto& label : tree.path) {
        h = fnv1a(label, h);
        h = fnv1a("/", h);
    }
    return h;
}

RandomStream::RandomStream(const SeedTree& tree) {
    std::uint64_t state = tree_key(tree);
    std::vector<std::uint32_t> words;
    for (int i = 0; i < 4; ++i) {
        std::uint64_t w = splitmix64(state);
        words.push_back(static_cast<std::uint32_t>(w));
        words.push_back(static_cast<std::uint32_t>(w >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
}

double RandomStream::next_uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t RandomStream::next_categorical(std::span<const double> weights) {
    if (weights.empty()) throw InvalidInput("categorical over an empty support");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("categorical weight must be finite and >= 0");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("categorical weights must sum to 1");
    const double u = next_uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    // u landed in the rounding gap at the top; return the last positive entry.
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) return i;
    }
    return weights.size() - 1;
}

double RandomStream::next_gaussian(double mean, double stddev) {
    if (!(stddev >= 0.0)) throw InvalidInput("gaussian stddev must be >= 0");
    // Box-Muller, one output per call so the stream carries no hidden cache.
    double u1 = next_uniform();
    while (u1 <= 0.0) u1 = next_uniform();
    const double u2 = next_uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
}

double RandomStream::next_gamma(double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape)) throw InvalidInput("gamma shape must be > 0");
    if (shape < 1.0) {
        double u = next_uniform();
        while (u <= 0.0) u = next_uniform();
        return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    // Marsaglia & Tsang.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = next_gaussian();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = next_uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<double> RandomStream::next_dirichlet(std::span<const double> concentration) {
    if (concentration.empty()) throw InvalidInput("dirichlet needs at least one component");
    std::vector<double> out;
    out.reserve(concentration.size());
    double total = 0.0;
    for (double a : concentration) {
        if (!(a > 0.0)) throw InvalidInput("dirichlet concentration must be > 0");
        out.push_back(next_gamma(a));
        total += out.back();
    }
    for (double& x : out) x /= total;
    return out;
}

std::ostream& operator<<(std::ostream& os, const RandomStream& s) { return os << s.engine_; }
std::istream& operator>>(std::istream& is, RandomStream& s) { return is >> s.engine_; }

}  // namespace srac::rng
