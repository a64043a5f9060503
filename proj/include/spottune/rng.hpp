#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace spottune {

// splitmix64; used to mix seeds when deriving child streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Deterministic random stream. Floating-point draws are built from raw bits so
// results are identical across standard-library implementations.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(mix64(seed)), lineage_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (no cached spare, so draw order is obvious).
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        // 1 - u1 keeps the log argument in (0, 1].
        return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(6.283185307179586 * u2);
    }

    // Uniform integer in [0, n). Modulo bias is irrelevant at the n used here.
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

    // Independent stream derived from this stream's seed and a label.
    RngStream child(std::string_view tag) const { return RngStream(mix64(lineage_ ^ hash_tag(tag))); }
    RngStream child(std::uint64_t index) const {
        return RngStream(mix64(lineage_ + 0x632be59bd9b4e019ULL * (index + 1)));
    }

    std::uint64_t lineage() const { return lineage_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t lineage_ = 0;
};

}  // namespace spottune
