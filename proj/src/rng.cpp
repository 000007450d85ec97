#include "upsr/rng.hpp"

#include <cmath>
#include <numbers>

namespace upsr {

double Rng::normal_at_impl(uint64_t u1_bits, uint64_t u2_bits) {
    // u1 in (0,1] so the log is finite; u2 in [0,1).
    const double u1 = static_cast<double>((u1_bits >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(u2_bits >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::normal_at(uint64_t /*key*/, uint64_t counter) const {
    return normal_at_impl(bits_at(counter), bits_at(counter + 1));
}

void Rng::fill_normal(std::span<float> out) {
    const uint64_t base = counter_;
    const int64_t n = static_cast<int64_t>(out.size());
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        out[i] = static_cast<float>(normal_at(key_, base + 2 * static_cast<uint64_t>(i)));
    counter_ = base + 2 * static_cast<uint64_t>(n);
}

void Rng::fill_normal(std::span<double> out) {
    const uint64_t base = counter_;
    const int64_t n = static_cast<int64_t>(out.size());
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        out[i] = normal_at(key_, base + 2 * static_cast<uint64_t>(i));
    counter_ = base + 2 * static_cast<uint64_t>(n);
}

}  // namespace upsr
