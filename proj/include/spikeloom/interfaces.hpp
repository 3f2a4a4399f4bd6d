#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "spikeloom/precision.hpp"
#include "spikeloom/rng.hpp"

namespace spikeloom {

enum class Topology : std::uint8_t { Line = 0, Ring = 1 };

// Topology-preserving value -> spike encoder. Each unit has a preferred point
// on the [lo, hi] segment (line) or circle (ring, where lo and hi are glued);
// a unit fires with probability p_max * exp(-d^2 / (2 sigma^2)) where d is the
// topological distance from the encoded value, sigma in units of inter-unit
// spacing.
struct TopologySpec {
    Topology kind = Topology::Line;
    double lo = 0.0, hi = 1.0;
    std::uint32_t n_units = 2;
    double sigma = 1.5;   // in inter-unit spacings
    double p_max = 0.5;   // peak per-step spike probability

    void check() const {
        if (!(hi > lo)) throw std::invalid_argument("TopologySpec: hi must exceed lo");
        if (n_units < 2) throw std::invalid_argument("TopologySpec: n_units must be >= 2");
        if (!(sigma > 0)) throw std::invalid_argument("TopologySpec: sigma must be > 0");
        if (p_max < 0.0 || p_max > 1.0)
            throw std::invalid_argument("TopologySpec: p_max must be in [0, 1]");
    }

    double spacing() const {
        return (hi - lo) / (kind == Topology::Line ? (n_units - 1) : n_units);
    }

    double preferred(std::uint32_t u) const { return lo + spacing() * u; }
};

inline double spiker_rate(double value, std::uint32_t unit, const TopologySpec& spec) {
    const double range = spec.hi - spec.lo;
    double v = value;
    if (spec.kind == Topology::Line) {
        if (v < spec.lo) v = spec.lo;
        if (v > spec.hi) v = spec.hi;
    } else {
        v = spec.lo + std::fmod(std::fmod(v - spec.lo, range) + range, range);
    }
    double d = std::fabs(v - spec.preferred(unit));
    if (spec.kind == Topology::Ring) d = std::min(d, range - d);
    const double sv = spec.sigma * spec.spacing();
    return spec.p_max * std::exp(-(d * d) / (2.0 * sv * sv));
}

// One encoding step: independent Bernoulli draw per unit. Always consumes
// exactly n_units draws so the stream counter advances uniformly.
inline void spiker_encode(double value, const TopologySpec& spec, RngStream& rng,
                          std::span<std::uint8_t> spikes_out) {
    if (spikes_out.size() != spec.n_units)
        throw std::invalid_argument("spiker_encode: output width mismatch");
    for (std::uint32_t u = 0; u < spec.n_units; ++u)
        spikes_out[u] = rng.bernoulli(spiker_rate(value, u, spec)) ? 1 : 0;
}

// Saturable exponential integrator: k traces in [0, 1], each exclusively fed
// by one spike group. z <- z*exp(-dt/tau_z) + gain*count*(1 - z), clamped.
template <class C>
struct IntegratorParams {
    C tau_z;
    C gain;
    C dt;

    void check() const {
        if (!(tau_z > 0) || !(dt > 0))
            throw std::invalid_argument("IntegratorParams: tau_z, dt must be > 0");
        if (gain < 0) throw std::invalid_argument("IntegratorParams: gain must be >= 0");
    }
};

template <class S>
struct IntegratorState {
    std::vector<S> z;

    static IntegratorState zeros(std::size_t k) {
        IntegratorState st;
        st.z.assign(k, stv<S>(compute_t<S>(0)));
        return st;
    }
};

template <class S>
void integrator_step(IntegratorState<S>& st, std::span<const std::uint32_t> counts,
                     const IntegratorParams<compute_t<S>>& p) {
    using C = compute_t<S>;
    if (counts.size() != st.z.size()) throw std::invalid_argument("integrator_step: size mismatch");
    const C k = static_cast<C>(std::exp(-static_cast<double>(p.dt) / static_cast<double>(p.tau_z)));
    for (std::size_t g = 0; g < st.z.size(); ++g) {
        C z = ld(st.z[g]) * k;
        z = z + p.gain * static_cast<C>(counts[g]) * (C(1) - z);
        if (z < C(0)) z = C(0);
        if (z > C(1)) z = C(1);
        st.z[g] = stv<S>(z);
    }
}

// Greedy readout: index of the largest trace, ties broken toward the lowest index.
inline std::size_t greedy_action(std::span<const double> traces) {
    if (traces.empty()) throw std::invalid_argument("greedy_action: needs k >= 1 traces");
    std::size_t best = 0;
    for (std::size_t i = 1; i < traces.size(); ++i)
        if (traces[i] > traces[best]) best = i;
    return best;
}

}  // namespace spikeloom
