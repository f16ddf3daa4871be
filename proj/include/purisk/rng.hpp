#pragma once

// Counter-based random streams.  Every sampled record gets its own substream
// derived from (seed, record_index), so datasets and Monte-Carlo sums are
// reproducible bit-for-bit regardless of how work is split across threads.
// The generator is SplitMix64; normals come from Box-Muller with one cached
// value per stream.

#include <cmath>
#include <cstdint>
#include <span>

namespace purisk {

// SplitMix64 finalizer (Stafford mix 13).
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

class RngStream {
  public:
    // Root stream for a seed (record index not involved).
    explicit RngStream(std::uint64_t seed) : state_(mix64(seed)) {}

    // Substream for one record: decorrelated from neighbours by pushing the
    // index through the golden-ratio increment before finalizing.
    static RngStream for_record(std::uint64_t seed, std::uint64_t index) {
        RngStream s(0);
        s.state_ = mix64(mix64(seed) + kGamma * (index + 1));
        s.cached_valid_ = false;
        return s;
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix64(state_);
    }

    // Uniform on the open interval (0, 1): 53-bit mantissa, half-ulp offset
    // keeps 0 and 1 unreachable (safe for logs and strict comparisons).
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via Box-Muller; draws two uniforms per pair and caches
    // the second value.
    double normal() {
        if (cached_valid_) {
            cached_valid_ = false;
            return cached_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(a);
        cached_valid_ = true;
        return r * std::cos(a);
    }

    void fill_normals(std::span<double> out) {
        for (double& v : out) v = normal();
    }

  private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
    std::uint64_t state_;
    double cached_ = 0.0;
    bool cached_valid_ = false;
};

}  // namespace purisk
