#include "spikeloom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spikeloom {

SpikeTrain::SpikeTrain(std::vector<double> times, double duration)
    : times_(std::move(times)), duration_(duration) {
    if (!(duration > 0.0)) throw std::invalid_argument("SpikeTrain: duration must be > 0");
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (times_[i] < 0.0 || times_[i] > duration_)
            throw std::invalid_argument("SpikeTrain: spike time outside [0, T]");
        if (i > 0 && !(times_[i] > times_[i - 1]))
            throw std::invalid_argument("SpikeTrain: times must be strictly increasing");
    }
}

namespace {

// Train completed with auxiliary spikes at 0 and T (not duplicated when the
// train already has them). Guarantees at least the two interval endpoints.
std::vector<double> with_aux(const SpikeTrain& t) {
    std::vector<double> s;
    s.reserve(t.count() + 2);
    if (t.times().empty() || t.times().front() > 0.0) s.push_back(0.0);
    s.insert(s.end(), t.times().begin(), t.times().end());
    if (s.back() < t.duration()) s.push_back(t.duration());
    return s;
}

void check_same_interval(const SpikeTrain& a, const SpikeTrain& b) {
    if (a.duration() != b.duration())
        throw std::invalid_argument("spike trains must share the observation interval");
}

// For each spike of `from`, the distance to the nearest spike of `to`.
std::vector<double> nearest_spike_distance(const std::vector<double>& from,
                                           const std::vector<double>& to) {
    std::vector<double> out(from.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < from.size(); ++i) {
        const double t = from[i];
        while (j + 1 < to.size() && to[j + 1] <= t) ++j;
        double best = std::fabs(t - to[j]);
        if (j + 1 < to.size()) best = std::min(best, std::fabs(to[j + 1] - t));
        out[i] = best;
    }
    return out;
}

}  // namespace

double isi_distance(const SpikeTrain& a, const SpikeTrain& b) {
    check_same_interval(a, b);
    const double T = a.duration();
    const std::vector<double> sa = with_aux(a);
    const std::vector<double> sb = with_aux(b);

    double acc = 0.0;
    double t = 0.0;
    std::size_t ia = 0, ib = 0;
    while (t < T) {
        const double next_a = sa[ia + 1];
        const double next_b = sb[ib + 1];
        const double t_next = std::min(next_a, next_b);
        const double nu_a = sa[ia + 1] - sa[ia];
        const double nu_b = sb[ib + 1] - sb[ib];
        const double prof = std::fabs(nu_a - nu_b) / std::max(nu_a, nu_b);
        acc += (t_next - t) * prof;
        if (next_a == t_next && ia + 2 < sa.size()) ++ia;
        if (next_b == t_next && ib + 2 < sb.size()) ++ib;
        t = t_next;
    }
    return acc / T;
}

double spike_distance(const SpikeTrain& a, const SpikeTrain& b, double resolution) {
    check_same_interval(a, b);
    if (!(resolution > 0.0)) throw std::invalid_argument("spike_distance: resolution must be > 0");
    const double T = a.duration();
    const std::vector<double> sa = with_aux(a);
    const std::vector<double> sb = with_aux(b);
    const std::vector<double> na = nearest_spike_distance(sa, sb);
    const std::vector<double> nb = nearest_spike_distance(sb, sa);

    const std::size_t samples = std::max<std::size_t>(1, std::size_t(std::floor(T / resolution)));
    double acc = 0.0;
    std::size_t ia = 0, ib = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = (static_cast<double>(k) + 0.5) * T / static_cast<double>(samples);
        while (ia + 2 < sa.size() && sa[ia + 1] <= t) ++ia;
        while (ib + 2 < sb.size() && sb[ib + 1] <= t) ++ib;

        const double isi_a = sa[ia + 1] - sa[ia];
        const double isi_b = sb[ib + 1] - sb[ib];
        const double xp_a = t - sa[ia], xf_a = sa[ia + 1] - t;
        const double xp_b = t - sb[ib], xf_b = sb[ib + 1] - t;

        const double s_a = (na[ia] * xf_a + na[ia + 1] * xp_a) / isi_a;
        const double s_b = (nb[ib] * xf_b + nb[ib + 1] * xp_b) / isi_b;
        const double mean_isi = 0.5 * (isi_a + isi_b);
        acc += (s_a * isi_b + s_b * isi_a) / (2.0 * mean_isi * mean_isi);
    }
    return acc / static_cast<double>(samples);
}

SpikeTrain shuffle_surrogate(const SpikeTrain& a, RngStream& rng) {
    if (a.count() <= 2) return a;
    const auto& t = a.times();
    std::vector<double> isi(t.size() - 1);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) isi[i] = t[i + 1] - t[i];
    // Fisher-Yates over the ISI sequence
    for (std::size_t i = isi.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i + 1));
        std::swap(isi[i], isi[j]);
    }
    std::vector<double> out(t.size());
    out[0] = t[0];
    for (std::size_t i = 0; i + 1 < t.size(); ++i) out[i + 1] = out[i] + isi[i];
    // guard against rounding drift past T
    if (out.back() > a.duration()) out.back() = a.duration();
    return SpikeTrain(std::move(out), a.duration());
}

std::vector<double> ou_series(const OuParams& p, std::size_t n_steps, RngStream& rng) {
    if (n_steps < 1) throw std::invalid_argument("ou_series: n_steps must be >= 1");
    if (!(p.tau_ou > 0.0)) throw std::invalid_argument("ou_series: tau_ou must be > 0");
    if (p.sigma < 0.0) throw std::invalid_argument("ou_series: sigma must be >= 0");
    std::vector<double> out(n_steps);
    const double sq = p.sigma * std::sqrt(p.dt);
    double x = p.mu;
    out[0] = x;
    for (std::size_t k = 1; k < n_steps; ++k) {
        x = x + (p.mu - x) * (p.dt / p.tau_ou) + sq * rng.normal();
        out[k] = x;
    }
    return out;
}

}  // namespace spikeloom
