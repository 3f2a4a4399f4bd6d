#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "spikeloom/precision.hpp"
#include "spikeloom/synapse.hpp"

namespace spikeloom {

template <class C>
struct PlasticityParams {
    C eta;    // learning rate (1/ms scale)
    C alpha;  // presynaptic spike term
    C beta;   // presynaptic trace term
    C gamma;  // postsynaptic spike term
    C delta;  // postsynaptic trace term
    C tau_pre;
    C tau_post;
    C dt;

    void check() const {
        if (!(tau_pre > 0) || !(tau_post > 0))
            throw std::invalid_argument("PlasticityParams: tau_pre, tau_post must be > 0");
        if (!(dt > 0)) throw std::invalid_argument("PlasticityParams: dt must be > 0");
    }
};

template <class S>
struct TraceState {
    std::vector<S> x_pre;   // one per presynaptic unit
    std::vector<S> x_post;  // one per postsynaptic unit

    static TraceState zeros(std::size_t n_pre, std::size_t n_post) {
        TraceState t;
        t.x_pre.assign(n_pre, stv<S>(compute_t<S>(0)));
        t.x_post.assign(n_post, stv<S>(compute_t<S>(0)));
        return t;
    }
};

// Eligibility trace update: exponential decay, then +1 on the owning unit's
// spike. Presynaptic spikes here are the undelayed pool output.
template <class S>
void trace_step(TraceState<S>& tr, std::span<const std::uint8_t> pre_spikes,
                std::span<const std::uint8_t> post_spikes,
                const PlasticityParams<compute_t<S>>& p) {
    using C = compute_t<S>;
    if (pre_spikes.size() != tr.x_pre.size() || post_spikes.size() != tr.x_post.size())
        throw std::invalid_argument("trace_step: size mismatch");
    const C k_pre = static_cast<C>(std::exp(-static_cast<double>(p.dt) / static_cast<double>(p.tau_pre)));
    const C k_post = static_cast<C>(std::exp(-static_cast<double>(p.dt) / static_cast<double>(p.tau_post)));
    for (std::size_t i = 0; i < tr.x_pre.size(); ++i) {
        C x = ld(tr.x_pre[i]) * k_pre;
        if (pre_spikes[i]) x += C(1);
        tr.x_pre[i] = stv<S>(x);
    }
    for (std::size_t j = 0; j < tr.x_post.size(); ++j) {
        C x = ld(tr.x_post[j]) * k_post;
        if (post_spikes[j]) x += C(1);
        tr.x_post[j] = stv<S>(x);
    }
}

template <class C>
inline C clamp_signed(C w, SynapseSign sign, C w_max) {
    if (sign == SynapseSign::Excitatory) {
        if (w < C(0)) w = C(0);
        if (w > w_max) w = w_max;
    } else {
        if (w > C(0)) w = C(0);
        if (w < -w_max) w = -w_max;
    }
    return w;
}

// Three-factor quadruplet update:
//   dw = eta * M3rd * (S_i_delayed * [alpha + beta x_pre(i)]
//                      + S_j * [gamma + delta x_post(j)]) * dt
// S_i is the presynaptic spike as delivered at the synapse (after its
// per-connection delay), matching the spike that injected current this step;
// S_j is the current postsynaptic spike. Weights are clamped to their pool
// sign and |w| <= w_max after every change; a weight pinned at exactly zero
// still receives the spike-triggered terms, which is what lets connections
// regrow after deletion.
//
// Associativity is pinned as ((eta * m3) * term) * dt so a per-connection
// scalar evaluation reproduces this bit-for-bit.
template <class S>
void stdp_update(SynapseCore<S>& syn, const TraceState<S>& tr,
                 std::span<const Arrival> arrivals, std::span<const std::uint8_t> post_spikes,
                 compute_t<S> m3, const PlasticityParams<compute_t<S>>& p) {
    using C = compute_t<S>;
    const std::uint32_t n_pre = syn.n_pre();
    const std::uint32_t n_post = syn.n_post();
    if (post_spikes.size() != n_post) throw std::invalid_argument("stdp_update: size mismatch");

    const C em = p.eta * m3;
    auto& W = syn.weights();

    const auto apply = [&](std::uint32_t i, std::uint32_t j, C term) {
        const C d = (em * term) * p.dt;
        if (d == C(0)) return;
        const std::size_t idx = std::size_t(j) * n_pre + i;
        C w = ld(W[idx]) + d;
        W[idx] = stv<S>(clamp_signed(w, syn.sign(), syn.w_max()));
    };

    for (const Arrival& a : arrivals) {
        C term = p.alpha + p.beta * ld(tr.x_pre[a.pre]);
        if (post_spikes[a.post])
            term += p.gamma + p.delta * ld(tr.x_post[a.post]);
        apply(a.pre, a.post, term);
    }
    for (std::uint32_t j = 0; j < n_post; ++j) {
        if (!post_spikes[j]) continue;
        const C post_term = p.gamma + p.delta * ld(tr.x_post[j]);
        for (std::uint32_t i = 0; i < n_pre; ++i) {
            if (syn.arrived_now(i, j)) continue;  // handled with the arrival above
            apply(i, j, post_term);
        }
    }
}

}  // namespace spikeloom
