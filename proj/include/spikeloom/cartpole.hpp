#pragma once

#include <cstdint>
#include <string_view>

#include "spikeloom/rng.hpp"

namespace spikeloom {

enum class CartAction : std::uint8_t { Left = 0, Right = 1 };

enum class Termination : std::uint8_t {
    PoleFellLeft,
    PoleFellRight,
    OobLeft,
    OobRight,
    Solved,
};

std::string_view to_string(Termination t);

struct CartpoleState {
    double x = 0.0;          // m
    double x_dot = 0.0;      // m/s
    double theta = 0.0;      // rad
    double theta_dot = 0.0;  // rad/s
    std::uint32_t steps_elapsed = 0;
};

// Canonical public cartpole dynamics (10 N force, 0.02 s Euler physics step;
// v1 episode cap of 500 steps unless configured otherwise).
struct CartpoleEnv {
    static constexpr double kGravity = 9.8;
    static constexpr double kMassCart = 1.0;
    static constexpr double kMassPole = 0.1;
    static constexpr double kLength = 0.5;  // half pole length
    static constexpr double kForceMag = 10.0;
    static constexpr double kTau = 0.02;
    static constexpr double kThetaLimit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
    static constexpr double kXLimit = 2.4;

    std::uint32_t n_max = 500;

    CartpoleState reset(RngStream& rng) const;

    struct StepResult {
        CartpoleState state;
        bool done = false;
        Termination reason = Termination::Solved;  // meaningful only when done
    };
    // Stepping a finished episode is an error.
    StepResult step(const CartpoleState& s, CartAction action) const;

    bool alive(const CartpoleState& s) const;
};

// Sparse episode reward: -1 when the pole fell or the cart left the stage,
// 0 otherwise.
double r_step(Termination reason);

struct NeuromodConfig {
    double lambda = 1e-3;   // self-organization drive while the episode is alive
    double tau_r = 0.02;    // 1/ms decay rate of the end-of-episode signal
    double xi = 0.05;       // cross-motor fraction
    double ema_beta = 0.1;  // EMA coefficient for the episode-length average
    std::uint32_t n_max = 500;
};

// End-of-episode modulatory signal:
//   r != 0: sqrt(N_ema / N_max) * r * exp(-tau_r * t_in_window)
//   r == 0: lambda
double modulatory_signal(double n_ema, double n_max, double r, double t_in_window_ms,
                         const NeuromodConfig& cfg);

// Which motor's plasticity receives M3rd (suppression), the other motor
// receiving -xi * M3rd. Falling toward a side suppresses the motor pushing
// that way's fall along; leaving the stage suppresses the motor pushing
// outward. Never called for solved episodes.
struct MotorRouting {
    CartAction suppressed;
    CartAction other;
};
MotorRouting motor_routing(Termination reason);

// N_ema' = (1 - beta) * N_ema + beta * steps
double ema_update(double n_ema, double steps, double beta);

}  // namespace spikeloom
