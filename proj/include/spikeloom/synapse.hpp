#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikeloom/precision.hpp"
#include "spikeloom/rng.hpp"

namespace spikeloom {

// Circular history of presynaptic spike vectors.
class DelayRing {
public:
    DelayRing() = default;
    DelayRing(std::uint32_t width, std::uint32_t depth)
        : width_(width), depth_(depth), data_(std::size_t(width) * depth, 0) {}

    std::uint32_t width() const noexcept { return width_; }
    std::uint32_t depth() const noexcept { return depth_; }
    std::uint64_t pushes() const noexcept { return pushes_; }

    void push(std::span<const std::uint8_t> spikes) {
        if (spikes.size() != width_) throw std::invalid_argument("DelayRing: width mismatch");
        auto* row = data_.data() + std::size_t(pushes_ % depth_) * width_;
        for (std::uint32_t i = 0; i < width_; ++i) row[i] = spikes[i];
        ++pushes_;
    }

    // Row pushed `back` pushes ago; back = 0 is the most recent push.
    // Rows older than the history (or never pushed) read as silent.
    const std::uint8_t* row_back(std::uint32_t back) const {
        if (back >= depth_) throw std::out_of_range("DelayRing: delay exceeds ring depth");
        if (back + 1 > pushes_) return nullptr;
        const std::uint64_t idx = (pushes_ - 1 - back) % depth_;
        return data_.data() + std::size_t(idx) * width_;
    }

    bool spiked_back(std::uint32_t unit, std::uint32_t back) const {
        const auto* row = row_back(back);
        return row != nullptr && row[unit] != 0;
    }

    void save(std::vector<std::uint8_t>& out) const { out = data_; }
    std::vector<std::uint8_t>& raw() noexcept { return data_; }
    const std::vector<std::uint8_t>& raw() const noexcept { return data_; }
    void set_pushes(std::uint64_t p) noexcept { pushes_ = p; }

private:
    std::uint32_t width_ = 0;
    std::uint32_t depth_ = 0;
    std::uint64_t pushes_ = 0;
    std::vector<std::uint8_t> data_;
};

enum class SynapseSign : std::int8_t { Excitatory = 1, Inhibitory = -1 };

// Sparse uniform weight initialization. Entries are independently nonzero with
// probability `density`; nonzero magnitudes are uniform in [lo, hi] and carry
// the pool sign. `no_self` zeroes the diagonal (pool connected to itself).
// Layout is post-major: W[j * n_pre + i].
inline std::vector<double> init_weights(std::uint32_t n_post, std::uint32_t n_pre,
                                        double density, double lo, double hi,
                                        SynapseSign sign, bool no_self, RngStream& rng) {
    if (!(density > 0.0) || density > 1.0)
        throw std::invalid_argument("init_weights: density must be in (0, 1]");
    if (lo > hi) throw std::invalid_argument("init_weights: invalid magnitude range (lo > hi)");
    if (lo < 0.0) throw std::invalid_argument("init_weights: magnitudes must be >= 0");

    std::vector<double> w(std::size_t(n_post) * n_pre, 0.0);
    const double s = sign == SynapseSign::Excitatory ? 1.0 : -1.0;
    for (std::uint32_t j = 0; j < n_post; ++j) {
        for (std::uint32_t i = 0; i < n_pre; ++i) {
            if (no_self && i == j) continue;
            if (!rng.bernoulli(density)) continue;
            w[std::size_t(j) * n_pre + i] = s * rng.uniform(lo, hi);
        }
    }
    return w;
}

struct Arrival {
    std::uint32_t pre;
    std::uint32_t post;
};

// Traced-current synapse between one presynaptic and one postsynaptic pool,
// with per-connection integer delays. Currents are accumulated per
// postsynaptic unit; a spike from i delivered on connection (i,j) adds the
// signed weight w_ij to the accumulated current of j, which then decays with
// tau_s.
template <class S>
class SynapseCore {
public:
    using C = compute_t<S>;

    SynapseCore() = default;

    SynapseCore(std::uint32_t n_post, std::uint32_t n_pre, C tau_s, C w_max, C dt,
                SynapseSign sign, std::vector<double> weights,
                std::vector<std::uint16_t> delays)
        : n_pre_(n_pre), n_post_(n_post), tau_s_(tau_s), w_max_(w_max), dt_(dt), sign_(sign) {
        if (!(tau_s > 0)) throw std::invalid_argument("SynapseCore: tau_s must be > 0");
        if (!(w_max > 0)) throw std::invalid_argument("SynapseCore: w_max must be > 0");
        if (weights.size() != std::size_t(n_post) * n_pre ||
            delays.size() != std::size_t(n_post) * n_pre)
            throw std::invalid_argument("SynapseCore: matrix size mismatch");

        std::uint16_t max_d = 1;
        for (auto d : delays) {
            if (d < 1) throw std::invalid_argument("SynapseCore: all delays must be >= 1 step");
            if (d > max_d) max_d = d;
        }
        max_delay_ = max_d;

        W_.resize(weights.size());
        for (std::size_t k = 0; k < weights.size(); ++k)
            W_[k] = stv<S>(static_cast<C>(weights[k]));
        delays_ = std::move(delays);
        current_.assign(n_post, stv<S>(C(0)));
        ring_ = DelayRing(n_pre, std::uint32_t(max_d) + 1);

        build_buckets();
    }

    std::uint32_t n_pre() const noexcept { return n_pre_; }
    std::uint32_t n_post() const noexcept { return n_post_; }
    std::uint16_t max_delay() const noexcept { return max_delay_; }
    SynapseSign sign() const noexcept { return sign_; }
    C w_max() const noexcept { return w_max_; }
    C dt() const noexcept { return dt_; }

    std::vector<S>& weights() noexcept { return W_; }
    const std::vector<S>& weights() const noexcept { return W_; }
    std::vector<S>& currents() noexcept { return current_; }
    const std::vector<S>& currents() const noexcept { return current_; }
    const std::vector<std::uint16_t>& delays() const noexcept { return delays_; }
    DelayRing& ring() noexcept { return ring_; }
    const DelayRing& ring() const noexcept { return ring_; }

    C weight(std::uint32_t i, std::uint32_t j) const { return ld(W_[std::size_t(j) * n_pre_ + i]); }
    void set_weight(std::uint32_t i, std::uint32_t j, C w) {
        W_[std::size_t(j) * n_pre_ + i] = stv<S>(w);
    }
    std::uint16_t delay(std::uint32_t i, std::uint32_t j) const {
        return delays_[std::size_t(j) * n_pre_ + i];
    }

    // Pushes this step's presynaptic spikes and collects the connections whose
    // delayed spike arrives now. The same arrival set feeds both the current
    // injection and the plasticity rule's presynaptic term.
    void push_and_collect(std::span<const std::uint8_t> pre_spikes,
                          std::vector<Arrival>& arrivals) {
        if (pre_spikes.size() != n_pre_)
            throw std::invalid_argument("SynapseCore: pre spike width mismatch");
        ring_.push(pre_spikes);
        arrivals.clear();
        const std::uint32_t nd = std::uint32_t(max_delay_) + 1;
        for (std::uint32_t d = 1; d <= max_delay_; ++d) {
            const std::uint8_t* past = ring_.row_back(d);
            if (past == nullptr) continue;
            for (std::uint32_t i = 0; i < n_pre_; ++i) {
                if (!past[i]) continue;
                const std::uint32_t b = bucket_begin_[std::size_t(i) * nd + d];
                const std::uint32_t e = bucket_begin_[std::size_t(i) * nd + d + 1];
                for (std::uint32_t k = b; k < e; ++k)
                    arrivals.push_back({i, bucket_post_[k]});
            }
        }
    }

    // Did the delayed presynaptic spike for connection (i, j) arrive on the
    // most recent push_and_collect step?
    bool arrived_now(std::uint32_t i, std::uint32_t j) const {
        return ring_.spiked_back(i, delay(i, j));
    }

    // Exponential current decay plus signed-weight injection for each arrival.
    void step_currents(std::span<const Arrival> arrivals) {
        const C k = static_cast<C>(std::exp(-static_cast<double>(dt_) / static_cast<double>(tau_s_)));
        for (std::uint32_t j = 0; j < n_post_; ++j)
            current_[j] = stv<S>(ld(current_[j]) * k);
        for (const Arrival& a : arrivals) {
            const std::size_t idx = std::size_t(a.post) * n_pre_ + a.pre;
            current_[a.post] = stv<S>(ld(current_[a.post]) + ld(W_[idx]));
        }
    }

    // Summed per-postsynaptic current, accumulated into `out`.
    void add_currents_to(std::span<double> out) const {
        for (std::uint32_t j = 0; j < n_post_; ++j)
            out[j] += static_cast<double>(ld(current_[j]));
    }

    bool weights_finite(std::size_t* bad_index = nullptr) const {
        for (std::size_t k = 0; k < W_.size(); ++k)
            if (!finite_scalar(W_[k])) {
                if (bad_index) *bad_index = k;
                return false;
            }
        for (std::size_t k = 0; k < current_.size(); ++k)
            if (!finite_scalar(current_[k])) {
                if (bad_index) *bad_index = k;
                return false;
            }
        return true;
    }

private:
    void build_buckets() {
        // Group connections by (pre unit, delay) so injection touches only the
        // connections whose spike actually arrives this step.
        const std::uint32_t nd = std::uint32_t(max_delay_) + 1;
        bucket_begin_.assign(std::size_t(n_pre_) * nd + 1, 0);
        for (std::uint32_t j = 0; j < n_post_; ++j)
            for (std::uint32_t i = 0; i < n_pre_; ++i)
                ++bucket_begin_[std::size_t(i) * nd + delays_[std::size_t(j) * n_pre_ + i] + 1];
        for (std::size_t k = 1; k < bucket_begin_.size(); ++k)
            bucket_begin_[k] += bucket_begin_[k - 1];
        bucket_post_.resize(std::size_t(n_pre_) * n_post_);
        std::vector<std::uint32_t> cursor(bucket_begin_.begin(), bucket_begin_.end() - 1);
        for (std::uint32_t j = 0; j < n_post_; ++j)
            for (std::uint32_t i = 0; i < n_pre_; ++i) {
                const std::uint32_t d = delays_[std::size_t(j) * n_pre_ + i];
                bucket_post_[cursor[std::size_t(i) * nd + d]++] = j;
            }
    }

    std::uint32_t n_pre_ = 0, n_post_ = 0;
    C tau_s_ = C(1), w_max_ = C(1), dt_ = C(1);
    SynapseSign sign_ = SynapseSign::Excitatory;
    std::uint16_t max_delay_ = 1;

    std::vector<S> W_;
    std::vector<S> current_;
    std::vector<std::uint16_t> delays_;
    DelayRing ring_;

    std::vector<std::uint32_t> bucket_post_;
    std::vector<std::uint32_t> bucket_begin_;
};

}  // namespace spikeloom
