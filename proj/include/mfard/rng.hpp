#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <istream>
#include <ostream>
#include <random>
#include <string_view>

namespace mfard {

// SplitMix64 finalizer. Used only to derive seeds, never as a stream.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// FNV-1a over a purpose tag, so "dataset" and "init" streams never collide.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Derives an independent 64-bit seed from (master, tag, indices...).
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices = {});

// A seeded stream of uniform/normal variates. Copyable; copies replay the
// same sequence, which is what the determinism tests rely on.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    // +1 or -1 with equal probability.
    double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }
    std::uint64_t next_u64() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

    bool operator==(const Rng& other) const {
        return engine_ == other.engine_ && normal_ == other.normal_;
    }

    friend std::ostream& operator<<(std::ostream& os, const Rng& r) {
        return os << r.engine_ << ' ' << r.normal_;
    }
    friend std::istream& operator>>(std::istream& is, Rng& r) {
        return is >> r.engine_ >> r.normal_;
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace mfard
