#pragma once

#include <cstdint>
#include <vector>

#include "spikeloom/rng.hpp"

namespace spikeloom {

// Sorted spike times on a bounded observation interval [0, T].
class SpikeTrain {
public:
    SpikeTrain() = default;
    SpikeTrain(std::vector<double> times, double duration);

    const std::vector<double>& times() const noexcept { return times_; }
    double duration() const noexcept { return duration_; }
    std::size_t count() const noexcept { return times_.size(); }

private:
    std::vector<double> times_;
    double duration_ = 0.0;
};

// Time-averaged ISI-distance, evaluated exactly over the piecewise-constant
// profile |nu_a - nu_b| / max(nu_a, nu_b). Edge intervals are completed with
// auxiliary spikes at 0 and T, so sparse and empty trains are well defined.
// Result is in [0, 1).
double isi_distance(const SpikeTrain& a, const SpikeTrain& b);

// Time-averaged SPIKE-distance profile sampled on a uniform grid
// (`resolution` ms between samples). Result is in [0, 1].
double spike_distance(const SpikeTrain& a, const SpikeTrain& b, double resolution = 0.1);

// Surrogate with the same spike count and ISI multiset: permutes the ISI
// sequence uniformly at random and rebuilds the train from the first spike.
SpikeTrain shuffle_surrogate(const SpikeTrain& a, RngStream& rng);

// Discretized Ornstein-Uhlenbeck drive:
//   I_{k+1} = I_k + (mu - I_k) dt/tau + sigma sqrt(dt) xi_k,  I_0 = mu.
struct OuParams {
    double mu = 0.0;      // mean current, nA
    double tau_ou = 1.0;  // ms
    double sigma = 0.0;   // nA / sqrt(ms)
    double dt = 1.0;      // ms
};

std::vector<double> ou_series(const OuParams& p, std::size_t n_steps, RngStream& rng);

}  // namespace spikeloom
