#pragma once

#include <cstdint>
#include <stdexcept>

namespace spikeloom {

// Fixed-timestep clock. step_index is exact integer bookkeeping; t is derived.
class SimClock {
public:
    explicit SimClock(double dt_ms) : dt_(dt_ms) {
        if (!(dt_ms > 0.0)) throw std::invalid_argument("SimClock: dt must be > 0");
    }

    double dt() const noexcept { return dt_; }
    std::uint64_t step_index() const noexcept { return step_; }
    double t() const noexcept { return static_cast<double>(step_) * dt_; }

    void tick() noexcept { ++step_; }
    void set_step(std::uint64_t s) noexcept { step_ = s; }

private:
    double dt_;
    std::uint64_t step_ = 0;
};

}  // namespace spikeloom
