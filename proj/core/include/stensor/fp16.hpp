// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace stensor {

// Round-to-nearest-even float -> IEEE 754 binary16, returned widened back to
// float. Handles subnormals and overflow-to-inf.
inline float round_to_half(float x) {
    const std::uint32_t u = std::bit_cast<std::uint32_t>(x);
    const std::uint32_t sign = u & 0x80000000u;
    const std::uint32_t abs = u & 0x7fffffffu;

    if (abs >= 0x7f800000u) return x;  // inf / nan pass through

    std::uint16_t h;
    if (abs >= 0x477ff000u) {  // rounds to >= 2^16: overflow to inf
        h = 0x7c00;
    } else if (abs < 0x38800000u) {  // below 2^-14: subnormal half (or zero)
        const int e = static_cast<int>(abs >> 23);
        const int shift = 126 - e;  // ulp of half subnormals is 2^-24
        if (shift > 24) {
            h = 0;
        } else {
            const std::uint32_t mant = (abs & 0x007fffffu) | 0x00800000u;
            std::uint32_t q = mant >> shift;
            const std::uint32_t rem = mant & ((1u << shift) - 1);
            const std::uint32_t half = 1u << (shift - 1);
            if (rem > half || (rem == half && (q & 1))) ++q;
            h = static_cast<std::uint16_t>(q);
        }
    } else {
        // normal: ((e-112)<<10)|(mant>>13), mantissa rounded RNE with the
        // carry allowed to ripple into the exponent field
        std::uint32_t base = abs >> 13;
        const std::uint32_t rem = abs & 0x1fffu;
        if (rem > 0x1000u || (rem == 0x1000u && (base & 1))) ++base;
        h = static_cast<std::uint16_t>(base - (112u << 10));
    }

    // widen back
    const std::uint32_t hs = h & 0x7fffu;
    float out;
    if (hs == 0) {
        out = 0.0f;
    } else if (hs >= 0x7c00u) {
        out = std::numeric_limits<float>::infinity();
    } else if (hs < 0x0400u) {  // subnormal
        out = std::ldexp(static_cast<float>(hs), -24);
    } else {
        const std::uint32_t f = ((hs >> 10) + 112u) << 23 | (hs & 0x3ffu) << 13;
        out = std::bit_cast<float>(f);
    }
    return sign ? -out : out;
}

inline double round_to_half(double x) { return round_to_half(static_cast<float>(x)); }

}  // namespace stensor
