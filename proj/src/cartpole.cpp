#include "spikeloom/cartpole.hpp"

#include <cmath>
#include <stdexcept>

namespace spikeloom {

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::PoleFellLeft: return "pole_fell_left";
        case Termination::PoleFellRight: return "pole_fell_right";
        case Termination::OobLeft: return "oob_left";
        case Termination::OobRight: return "oob_right";
        case Termination::Solved: return "solved";
    }
    return "?";
}

CartpoleState CartpoleEnv::reset(RngStream& rng) const {
    CartpoleState s;
    s.x = rng.uniform(-0.05, 0.05);
    s.x_dot = rng.uniform(-0.05, 0.05);
    s.theta = rng.uniform(-0.05, 0.05);
    s.theta_dot = rng.uniform(-0.05, 0.05);
    s.steps_elapsed = 0;
    return s;
}

bool CartpoleEnv::alive(const CartpoleState& s) const {
    return std::fabs(s.x) <= kXLimit && std::fabs(s.theta) <= kThetaLimit &&
           s.steps_elapsed < n_max;
}

CartpoleEnv::StepResult CartpoleEnv::step(const CartpoleState& s, CartAction action) const {
    if (!alive(s)) throw std::logic_error("cartpole: step on a finished episode");

    const double force = action == CartAction::Right ? kForceMag : -kForceMag;
    const double cos_t = std::cos(s.theta);
    const double sin_t = std::sin(s.theta);
    const double total_mass = kMassCart + kMassPole;
    const double polemass_length = kMassPole * kLength;

    const double temp = (force + polemass_length * s.theta_dot * s.theta_dot * sin_t) / total_mass;
    const double theta_acc =
        (kGravity * sin_t - cos_t * temp) /
        (kLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / total_mass));
    const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

    StepResult out;
    out.state.x = s.x + kTau * s.x_dot;
    out.state.x_dot = s.x_dot + kTau * x_acc;
    out.state.theta = s.theta + kTau * s.theta_dot;
    out.state.theta_dot = s.theta_dot + kTau * theta_acc;
    out.state.steps_elapsed = s.steps_elapsed + 1;

    if (out.state.theta < -kThetaLimit) {
        out.done = true;
        out.reason = Termination::PoleFellLeft;
    } else if (out.state.theta > kThetaLimit) {
        out.done = true;
        out.reason = Termination::PoleFellRight;
    } else if (out.state.x < -kXLimit) {
        out.done = true;
        out.reason = Termination::OobLeft;
    } else if (out.state.x > kXLimit) {
        out.done = true;
        out.reason = Termination::OobRight;
    } else if (out.state.steps_elapsed >= n_max) {
        out.done = true;
        out.reason = Termination::Solved;
    }
    return out;
}

double r_step(Termination reason) {
    switch (reason) {
        case Termination::PoleFellLeft:
        case Termination::PoleFellRight:
        case Termination::OobLeft:
        case Termination::OobRight:
            return -1.0;
        case Termination::Solved:
            return 0.0;
    }
    return 0.0;
}

double modulatory_signal(double n_ema, double n_max, double r, double t_in_window_ms,
                         const NeuromodConfig& cfg) {
    if (r == 0.0) return cfg.lambda;
    return std::sqrt(n_ema / n_max) * r * std::exp(-cfg.tau_r * t_in_window_ms);
}

MotorRouting motor_routing(Termination reason) {
    switch (reason) {
        // A rightward fall is accelerated by pushing left: suppress "left".
        case Termination::PoleFellRight: return {CartAction::Left, CartAction::Right};
        case Termination::PoleFellLeft: return {CartAction::Right, CartAction::Left};
        // Out of bounds on a side: suppress the motor pushing toward it.
        case Termination::OobLeft: return {CartAction::Left, CartAction::Right};
        case Termination::OobRight: return {CartAction::Right, CartAction::Left};
        case Termination::Solved:
            break;
    }
    throw std::logic_error("motor_routing: no delivery on a solved episode");
}

double ema_update(double n_ema, double steps, double beta) {
    return (1.0 - beta) * n_ema + beta * steps;
}

}  // namespace spikeloom
