#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "spikeloom/half.hpp"

namespace spikeloom {

enum class Precision : std::uint8_t { Half = 0, Single = 1, Double = 2 };

inline std::string_view to_string(Precision p) {
    switch (p) {
        case Precision::Half: return "half";
        case Precision::Single: return "single";
        case Precision::Double: return "double";
    }
    return "?";
}

inline Precision precision_from_string(std::string_view s) {
    if (s == "half") return Precision::Half;
    if (s == "single") return Precision::Single;
    if (s == "double") return Precision::Double;
    throw std::invalid_argument("unknown precision '" + std::string(s) +
                                "' (expected half|single|double)");
}

// Storage scalar -> arithmetic scalar. 16-bit state is widened to 32-bit for
// the per-step arithmetic and rounded back on store.
template <class S>
struct compute_of {
    using type = float;
};
template <>
struct compute_of<double> {
    using type = double;
};
template <class S>
using compute_t = typename compute_of<S>::type;

inline float ld(Half x) noexcept { return static_cast<float>(x); }
inline float ld(float x) noexcept { return x; }
inline double ld(double x) noexcept { return x; }

template <class S>
inline S stv(compute_t<S> x) noexcept {
    if constexpr (std::is_same_v<S, Half>) return Half(x);
    else return x;
}

inline bool finite_scalar(Half x) noexcept { return x.is_finite(); }
inline bool finite_scalar(float x) noexcept { return std::isfinite(x); }
inline bool finite_scalar(double x) noexcept { return std::isfinite(x); }

}  // namespace spikeloom
