#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikeloom/blueprint.hpp"
#include "spikeloom/cartpole.hpp"
#include "spikeloom/engine.hpp"

namespace spikeloom {

// One connection class of the agent (input, recurrent, exc->inh, inh cross).
struct SynapseClassConfig {
    double density = 0.2;
    double w_lo = 0.05;
    double w_hi = 0.3;
    double w_max = 3.0;
    double tau_s = 5.0;
    int delay_min = 1;
    int delay_max = 1;
    bool plastic = false;
};

struct PlasticityConfig {
    double eta = 0.002;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double delta = 1.0;
    double tau_pre = 20.0;
    double tau_post = 20.0;
};

// Everything the cartpole experiment needs in one versioned file; all values
// here are the shipped defaults and any key may be overridden in the config
// JSON.
struct CartpoleExperiment {
    std::uint64_t seed = 1;
    double dt = 1.0;              // ms
    double interaction_ms = 50.0;
    std::uint32_t episodes = 1000;
    std::uint32_t eval_episodes = 250;
    Precision precision = Precision::Single;

    NeuromodConfig neuromod;

    // encoder: one line-segment spiker per observation dimension
    std::uint32_t enc_units = 32;
    double enc_sigma = 1.5;
    double enc_p_max = 0.5;
    double x_range = 2.4;
    double x_dot_range = 3.0;
    double theta_range = 0.21;
    double theta_dot_range = 3.5;

    // integrator readout
    double integ_tau_z = 30.0;
    double integ_gain = 0.005;

    // pools
    std::uint32_t n_exc = 256;
    std::uint32_t n_inh = 64;
    double lif_tau_m = 20.0;
    double lif_v_rest = -65.0;
    double lif_R = 10.0;
    double lif_theta_base = -55.0;
    double lif_a = 0.5;
    double lif_tau_th = 50.0;
    double lif_r_spike = 2.0;

    SynapseClassConfig syn_input{0.25, 0.05, 0.30, 3.0, 5.0, 1, 1, true};
    SynapseClassConfig syn_recurrent{0.10, 0.02, 0.10, 2.0, 5.0, 1, 4, true};
    SynapseClassConfig syn_exc_inh{0.30, 0.10, 0.40, 5.0, 5.0, 1, 1, false};
    SynapseClassConfig syn_inh_cross{0.30, 0.20, 0.60, 5.0, 5.0, 1, 1, false};

    PlasticityConfig plasticity;

    std::uint32_t interaction_steps() const;

    static CartpoleExperiment from_json(const std::string& text);
    std::string to_json() const;
    std::uint64_t checksum() const;
};

// The dual-population agent: per side, an excitatory pool driven by the four
// observation spikers and its own recurrence, an inhibitory pool driven by the
// excitatory one, and cross-side inhibition; a two-trace integrator reads the
// excitatory pools and the greedy policy picks the larger trace.
Blueprint cartpole_blueprint(const CartpoleExperiment& cfg);

struct EpisodeRecord {
    std::uint32_t episode = 0;
    std::uint32_t steps = 0;
    Termination reason = Termination::Solved;
    double n_ema_after = 0.0;
    double mod_left = 0.0;   // modulatory signal delivered at window start
    double mod_right = 0.0;
};

std::string episode_record_json(const EpisodeRecord& r, std::uint64_t agent_seed);

struct TrainOutcome {
    std::vector<EpisodeRecord> records;
    std::vector<std::uint8_t> snapshot;  // final trained state
    double n_ema = 0.0;
};

// Online training: per interaction window the observation is held for
// interaction_ms while both motors receive the constant lambda drive; when an
// episode fails, one extra window replays the final observation while the
// routed end-of-episode signal decays step by step. Fully deterministic from
// (cfg, seed).
TrainOutcome train_run(const CartpoleExperiment& cfg, std::uint64_t seed,
                       std::uint32_t episodes);

// Frozen-network evaluation: plasticity disabled, greedy policy only. Weights
// are bit-identical before and after.
std::vector<EpisodeRecord> eval_run(ExecutionContext& ctx, const CartpoleExperiment& cfg,
                                    std::uint64_t eval_seed, std::uint32_t episodes);

// Uniform-random action baseline, same environment.
double random_policy_mean_steps(std::uint64_t seed, std::uint32_t episodes,
                                std::uint32_t n_max = 500);

}  // namespace spikeloom
