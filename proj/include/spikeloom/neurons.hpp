#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikeloom/precision.hpp"

namespace spikeloom {

// One step of exact linear relaxation toward x_inf with time constant tau.
// The decay factor is evaluated in double and cast to the arithmetic type, so
// kernels that hoist the factor out of their unit loop match this bit-for-bit.
template <class C>
inline C exp_euler(C x, C x_inf, C tau, C dt) {
    const C k = static_cast<C>(std::exp(-static_cast<double>(dt) / static_cast<double>(tau)));
    return x_inf + (x - x_inf) * k;
}

// ---------------------------------------------------------------------------
// Leaky integrate-and-fire with adaptive threshold and refractory period.

template <class C>
struct LifParams {
    C tau_m;       // membrane time constant, ms
    C v_rest;      // resting potential, mV
    C R;           // membrane resistance, MOhm
    C theta_base;  // base firing threshold, mV
    C a;           // threshold increment per spike, mV
    C tau_th;      // threshold relaxation time constant, ms
    C r_spike;     // refractory time, ms
    C dt;          // step, ms

    void check() const {
        if (!(tau_m > 0) || !(tau_th > 0) || !(r_spike > 0) || !(dt > 0))
            throw std::invalid_argument("LifParams: tau_m, tau_th, r_spike, dt must be > 0");
        if (!(theta_base > v_rest))
            throw std::invalid_argument("LifParams: theta_base must exceed v_rest");
    }
};

// Membrane and threshold are stored as offsets from v_rest / theta_base: the
// interesting dynamics live within ~15 mV of rest, and a 16-bit float has far
// more resolution near zero than near -65. voltage()/threshold() expose mV.
template <class S>
struct LifState {
    std::vector<S> v_off;   // v - v_rest, mV
    std::vector<S> th_off;  // theta - theta_base, mV
    std::vector<S> r;       // refractory countdown; unit is responsive iff r > 0

    static LifState at_rest(std::size_t n, const LifParams<compute_t<S>>& p) {
        LifState st;
        st.v_off.assign(n, stv<S>(compute_t<S>(0)));
        st.th_off.assign(n, stv<S>(compute_t<S>(0)));
        st.r.assign(n, stv<S>(p.dt));
        return st;
    }
    std::size_t size() const noexcept { return v_off.size(); }

    double voltage(std::size_t i, const LifParams<compute_t<S>>& p) const {
        return static_cast<double>(p.v_rest) + static_cast<double>(ld(v_off[i]));
    }
    double threshold(std::size_t i, const LifParams<compute_t<S>>& p) const {
        return static_cast<double>(p.theta_base) + static_cast<double>(ld(th_off[i]));
    }
};

// One step for a homogeneous pool. current[i] is the summed synaptic input in
// nA; spikes_out must have the pool size. Throws on non-finite input current.
template <class S>
void lif_step(LifState<S>& st, std::span<const double> current,
              const LifParams<compute_t<S>>& p, std::span<std::uint8_t> spikes_out) {
    using C = compute_t<S>;
    const std::size_t n = st.size();
    if (current.size() != n || spikes_out.size() != n)
        throw std::invalid_argument("lif_step: size mismatch");

    const C k_m = static_cast<C>(std::exp(-static_cast<double>(p.dt) / static_cast<double>(p.tau_m)));
    const C k_th = static_cast<C>(std::exp(-static_cast<double>(p.dt) / static_cast<double>(p.tau_th)));
    const C margin = p.theta_base - p.v_rest;

    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(current[i]))
            throw std::domain_error("lif_step: non-finite input current at unit " +
                                    std::to_string(i));
        const C I = static_cast<C>(current[i]);
        C v = ld(st.v_off[i]);
        C theta = ld(st.th_off[i]);
        C r = ld(st.r[i]);

        const bool responsive = r > C(0);
        const C target = responsive ? p.R * I : C(0);
        v = target + (v - target) * k_m;
        theta = theta * k_th;

        const bool spike = responsive && v > theta + margin;
        if (spike) {
            v = C(0);
            theta = theta + p.a;
            r = -p.r_spike;
        } else {
            r = r + p.dt;
        }

        st.v_off[i] = stv<S>(v);
        st.th_off[i] = stv<S>(theta);
        st.r[i] = stv<S>(r);
        spikes_out[i] = spike ? 1 : 0;
    }
}

// ---------------------------------------------------------------------------
// Adaptive exponential integrate-and-fire (two-variable).
// Units: mV, ms, nA, nF, uS.

template <class C>
struct AdexParams {
    C C_m;      // capacitance, nF
    C g_L;      // leak conductance, uS
    C E_L;      // leak reversal, mV
    C V_T;      // exponential threshold, mV
    C delta_T;  // slope factor, mV
    C a_w;      // subthreshold adaptation, uS
    C b_w;      // spike-triggered adaptation, nA
    C tau_w;    // adaptation time constant, ms
    C V_reset;  // reset potential, mV
    C V_peak;   // numerical spike cut, mV
    C dt;       // step, ms

    void check() const {
        if (!(delta_T > 0)) throw std::invalid_argument("AdexParams: delta_T must be > 0");
        if (!(V_peak > V_T)) throw std::invalid_argument("AdexParams: V_peak must exceed V_T");
        if (!(C_m > 0) || !(tau_w > 0) || !(dt > 0))
            throw std::invalid_argument("AdexParams: C_m, tau_w, dt must be > 0");
    }
};

// Same offset representation as LifState: v is stored relative to E_L.
template <class S>
struct AdexState {
    std::vector<S> v_off;  // v - E_L, mV
    std::vector<S> w;      // adaptation current, nA

    static AdexState at_rest(std::size_t n, const AdexParams<compute_t<S>>&) {
        AdexState st;
        st.v_off.assign(n, stv<S>(compute_t<S>(0)));
        st.w.assign(n, stv<S>(compute_t<S>(0)));
        return st;
    }
    std::size_t size() const noexcept { return v_off.size(); }

    double voltage(std::size_t i, const AdexParams<compute_t<S>>& p) const {
        return static_cast<double>(p.E_L) + static_cast<double>(ld(v_off[i]));
    }
};

// v by forward Euler (the exponential term is clamped before exponentiation so
// low precision never sees an overflow), w by exponential Euler. Both updates
// read the pre-step values.
template <class S>
void adex_step(AdexState<S>& st, std::span<const double> current,
               const AdexParams<compute_t<S>>& p, std::span<std::uint8_t> spikes_out) {
    using C = compute_t<S>;
    const std::size_t n = st.size();
    if (current.size() != n || spikes_out.size() != n)
        throw std::invalid_argument("adex_step: size mismatch");

    const C k_w = static_cast<C>(std::exp(-static_cast<double>(p.dt) / static_cast<double>(p.tau_w)));
    const C vt_off = p.V_T - p.E_L;
    const C peak_off = p.V_peak - p.E_L;
    const C reset_off = p.V_reset - p.E_L;

    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(current[i]))
            throw std::domain_error("adex_step: non-finite input current at unit " +
                                    std::to_string(i));
        const C I = static_cast<C>(current[i]);
        const C v0 = ld(st.v_off[i]);
        const C w0 = ld(st.w[i]);

        C arg = (v0 - vt_off) / p.delta_T;
        if (arg > C(20)) arg = C(20);
        const C I_exp = p.g_L * p.delta_T * static_cast<C>(std::exp(arg));
        const C dv = (-p.g_L * v0 + I_exp - w0 + I) / p.C_m;
        C v = v0 + p.dt * dv;

        const C w_inf = p.a_w * v0;
        C w = w_inf + (w0 - w_inf) * k_w;

        const bool spike = v > peak_off;
        if (spike) {
            v = reset_off;
            w = w + p.b_w;
        }

        st.v_off[i] = stv<S>(v);
        st.w[i] = stv<S>(w);
        spikes_out[i] = spike ? 1 : 0;
    }
}

// ---------------------------------------------------------------------------
// Hodgkin-Huxley (squid axon rates, -65 mV resting convention).
// Units: mV, ms; conductances mS/cm^2, currents uA/cm^2, capacitance uF/cm^2.

template <class C>
struct HhParams {
    C C_m;
    C g_Na, g_K, g_L;
    C E_Na, E_K, E_L;
    C dt;

    void check() const {
        if (!(C_m > 0) || !(dt > 0)) throw std::invalid_argument("HhParams: C_m, dt must be > 0");
    }
};

template <class S>
struct HhState {
    std::vector<S> v;
    std::vector<S> m, h, n;

    std::size_t size() const noexcept { return v.size(); }
};

namespace hh_rates {

// alpha_m has a removable singularity at v = -40; evaluate the limit there.
inline double alpha_m(double v) {
    const double x = v + 40.0;
    if (std::fabs(x) < 1e-7) return 1.0;
    return 0.1 * x / (1.0 - std::exp(-x / 10.0));
}
inline double beta_m(double v) { return 4.0 * std::exp(-(v + 65.0) / 18.0); }
inline double alpha_h(double v) { return 0.07 * std::exp(-(v + 65.0) / 20.0); }
inline double beta_h(double v) { return 1.0 / (1.0 + std::exp(-(v + 35.0) / 10.0)); }
// alpha_n: removable singularity at v = -55.
inline double alpha_n(double v) {
    const double x = v + 55.0;
    if (std::fabs(x) < 1e-7) return 0.1;
    return 0.01 * x / (1.0 - std::exp(-x / 10.0));
}
inline double beta_n(double v) { return 0.125 * std::exp(-(v + 65.0) / 80.0); }

}  // namespace hh_rates

template <class S>
HhState<S> hh_rest_state(std::size_t n_units, double v0 = -65.0) {
    using namespace hh_rates;
    HhState<S> st;
    const double am = alpha_m(v0), bm = beta_m(v0);
    const double ah = alpha_h(v0), bh = beta_h(v0);
    const double an = alpha_n(v0), bn = beta_n(v0);
    st.v.assign(n_units, stv<S>(static_cast<compute_t<S>>(v0)));
    st.m.assign(n_units, stv<S>(static_cast<compute_t<S>>(am / (am + bm))));
    st.h.assign(n_units, stv<S>(static_cast<compute_t<S>>(ah / (ah + bh))));
    st.n.assign(n_units, stv<S>(static_cast<compute_t<S>>(an / (an + bn))));
    return st;
}

// v by forward Euler, gates by exponential Euler toward their voltage-dependent
// steady states (which keeps them inside [0,1]). Spike = upward crossing of 0 mV.
// Gates outside [0,1] by more than 1e-3 indicate an unusable dt and are an error.
template <class S>
void hh_step(HhState<S>& st, std::span<const double> current,
             const HhParams<compute_t<S>>& p, std::span<std::uint8_t> spikes_out) {
    using C = compute_t<S>;
    using namespace hh_rates;
    const std::size_t n = st.size();
    if (current.size() != n || spikes_out.size() != n)
        throw std::invalid_argument("hh_step: size mismatch");

    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(current[i]))
            throw std::domain_error("hh_step: non-finite input current at unit " +
                                    std::to_string(i));
        const C I = static_cast<C>(current[i]);
        const C v0 = ld(st.v[i]);
        C m = ld(st.m[i]);
        C h = ld(st.h[i]);
        C ng = ld(st.n[i]);

        const C tol = static_cast<C>(1e-3);
        if (m < -tol || m > C(1) + tol || h < -tol || h > C(1) + tol || ng < -tol ||
            ng > C(1) + tol)
            throw std::domain_error("hh_step: gate out of [0,1] at unit " + std::to_string(i) +
                                    " (dt too large?)");

        const C I_Na = p.g_Na * m * m * m * h * (v0 - p.E_Na);
        const C I_K = p.g_K * ng * ng * ng * ng * (v0 - p.E_K);
        const C I_L = p.g_L * (v0 - p.E_L);
        const C v = v0 + p.dt * (I - I_Na - I_K - I_L) / p.C_m;

        const double vd = static_cast<double>(v0);
        const double am = alpha_m(vd), bm = beta_m(vd);
        const double ah = alpha_h(vd), bh = beta_h(vd);
        const double an = alpha_n(vd), bn = beta_n(vd);

        const auto gate_step = [&](C x, double a, double b) -> C {
            const double tau = 1.0 / (a + b);
            const C x_inf = static_cast<C>(a * tau);
            const C k = static_cast<C>(std::exp(-static_cast<double>(p.dt) / tau));
            return x_inf + (x - x_inf) * k;
        };
        m = gate_step(m, am, bm);
        h = gate_step(h, ah, bh);
        ng = gate_step(ng, an, bn);

        spikes_out[i] = (v > C(0) && v0 <= C(0)) ? 1 : 0;
        st.v[i] = stv<S>(v);
        st.m[i] = stv<S>(m);
        st.h[i] = stv<S>(h);
        st.n[i] = stv<S>(ng);
    }
}

}  // namespace spikeloom
