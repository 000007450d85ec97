#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace upsr {

/// Counter-based deterministic random stream.
///
/// Every output is a pure function of (key, counter), so a stream can be
/// consumed sequentially or filled in parallel with identical results: the
/// bits for draw i never depend on how draws 0..i-1 were scheduled across
/// threads. Same seed => bit-identical stream on every run and platform.
///
/// Streams are split by hashing a purpose tag into a fresh key; child
/// streams are independent of the parent's position.
class Rng {
public:
    explicit Rng(uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    /// Derive an independent stream. Does not consume from this stream.
    Rng stream(uint64_t id) const { return Rng(key_, mix(key_ ^ mix(id)), 0); }
    Rng stream(std::string_view purpose) const { return stream(fnv1a64(purpose)); }

    uint64_t next_u64() { return bits_at(counter_++); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        if (hi <= lo) return lo;
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes exactly two counter slots,
    /// which is what lets fill_normal index draws independently.
    double normal() {
        const double z = normal_at(key_, counter_);
        counter_ += 2;
        return z;
    }

    /// Fill with iid standard normals. Parallelized; bit-identical to
    /// calling normal() sample_count times.
    void fill_normal(std::span<float> out);
    void fill_normal(std::span<double> out);

    uint64_t counter() const { return counter_; }

private:
    Rng(uint64_t key, uint64_t derived, uint64_t counter) : key_(derived), counter_(counter) { (void)key; }

    // splitmix64 finalizer
    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static uint64_t fnv1a64(std::string_view s) {
        uint64_t h = 0xcbf29ce484222325ull;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return h;
    }

    uint64_t bits_at(uint64_t counter) const { return mix(key_ ^ mix(counter)); }

    static double normal_at_impl(uint64_t u1_bits, uint64_t u2_bits);

    double normal_at(uint64_t key, uint64_t counter) const;

    uint64_t key_ = 0;
    uint64_t counter_ = 0;

    friend class RngTestPeer;
};

}  // namespace upsr
