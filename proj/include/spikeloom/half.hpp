#pragma once

#include <bit>
#include <cstdint>

namespace spikeloom {

// IEEE 754 binary16 conversion, round-to-nearest-even.
constexpr std::uint16_t f32_to_f16_bits(float f) noexcept {
    const std::uint32_t x = std::bit_cast<std::uint32_t>(f);
    const std::uint32_t sign = (x >> 16) & 0x8000u;
    std::uint32_t mant = x & 0x007fffffu;
    const std::int32_t exp8 = static_cast<std::int32_t>((x >> 23) & 0xffu);

    if (exp8 == 0xff) {
        // inf / nan; keep nan payload top bits, force quiet bit
        if (mant != 0) return static_cast<std::uint16_t>(sign | 0x7e00u | (mant >> 13));
        return static_cast<std::uint16_t>(sign | 0x7c00u);
    }

    const std::int32_t exp = exp8 - 112;  // rebias 127 -> 15
    if (exp >= 0x1f) return static_cast<std::uint16_t>(sign | 0x7c00u);  // overflow -> inf
    if (exp <= 0) {
        if (exp < -10) return static_cast<std::uint16_t>(sign);  // underflow -> signed zero
        mant |= 0x00800000u;
        const std::uint32_t shift = static_cast<std::uint32_t>(14 - exp);
        std::uint32_t half = mant >> shift;
        const std::uint32_t rem = mant & ((1u << shift) - 1u);
        const std::uint32_t halfway = 1u << (shift - 1);
        if (rem > halfway || (rem == halfway && (half & 1u))) ++half;
        return static_cast<std::uint16_t>(sign | half);
    }

    std::uint32_t half = (static_cast<std::uint32_t>(exp) << 10) | (mant >> 13);
    const std::uint32_t rem = mant & 0x1fffu;
    // rounding may carry into the exponent; the carry yields inf, which is correct
    if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;
    return static_cast<std::uint16_t>(sign | half);
}

constexpr float f16_bits_to_f32(std::uint16_t h) noexcept {
    const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
    const std::uint32_t exp = (h >> 10) & 0x1fu;
    std::uint32_t mant = h & 0x3ffu;

    if (exp == 0) {
        if (mant == 0) return std::bit_cast<float>(sign);
        // subnormal: value = mant * 2^-24
        const int p = 31 - std::countl_zero(mant);
        const std::uint32_t exp32 = static_cast<std::uint32_t>(p + 103);
        const std::uint32_t mant32 = (mant << (23 - p)) & 0x007fffffu;
        return std::bit_cast<float>(sign | (exp32 << 23) | mant32);
    }
    if (exp == 0x1f) return std::bit_cast<float>(sign | 0x7f800000u | (mant << 13));
    return std::bit_cast<float>(sign | ((exp + 112) << 23) | (mant << 13));
}

// 16-bit storage scalar. No arithmetic on purpose: state kept in Half is
// widened to float for the step arithmetic and rounded back on store.
class Half {
public:
    Half() = default;
    explicit Half(float f) noexcept : bits_(f32_to_f16_bits(f)) {}
    explicit operator float() const noexcept { return f16_bits_to_f32(bits_); }

    static Half from_bits(std::uint16_t b) noexcept {
        Half h;
        h.bits_ = b;
        return h;
    }
    std::uint16_t bits() const noexcept { return bits_; }

    bool is_finite() const noexcept { return (bits_ & 0x7c00u) != 0x7c00u; }

    friend bool operator==(Half a, Half b) noexcept { return float(a) == float(b); }

private:
    std::uint16_t bits_ = 0;
};

}  // namespace spikeloom
