#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "fieldloc/errors.hpp"

namespace fieldloc {

// All randomness flows through mt19937_64 plus the explicit converters
// below. std::uniform_real_distribution / std::normal_distribution are
// implementation-defined, so they are never used: reproducibility of
// checkpoints and benchmark numbers must not depend on the stdlib vendor.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random mantissa bits.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

// Unbiased integer in [0, n). Rejection sampling, no modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    if (n == 0) throw ContractError("uniform_index: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

// Box-Muller, consuming exactly two draws per call. The sine partner is
// discarded so the call sequence stays position-independent.
inline double normal_unit(Rng& rng) {
    double u1 = uniform_unit(rng);
    while (u1 <= 0.0) u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Mixing function for deriving independent child seeds from a base seed
// and integer coordinates (scene index, sweep cell, ...).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(base ^ 0x6a09e667f3bcc909ULL);
    s = splitmix64(s ^ splitmix64(a));
    s = splitmix64(s ^ splitmix64(b ^ 0xbb67ae8584caa73bULL));
    s = splitmix64(s ^ splitmix64(c ^ 0x3c6ef372fe94f82bULL));
    return s;
}

// mt19937_64 stream state; the textual format is specified by the
// standard, so round trips are portable across implementations.
inline std::string rng_state_to_string(const Rng& rng) {
    std::ostringstream oss;
    oss << rng;
    return oss.str();
}

inline Rng rng_state_from_string(const std::string& s) {
    Rng rng;
    std::istringstream iss(s);
    iss >> rng;
    if (iss.fail()) throw IntegrityError("rng state: unparsable stream state");
    return rng;
}

// CRC-32 (reflected polynomial 0xEDB88320) for checkpoint section checksums.
inline std::uint32_t crc32(const void* data, std::size_t len,
                           std::uint32_t seed = 0) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        c = table[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

}  // namespace fieldloc
