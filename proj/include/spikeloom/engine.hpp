#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikeloom/clock.hpp"
#include "spikeloom/compile.hpp"

namespace spikeloom {

// Execution mode flags. "plain" execution is recording off, learning on.
struct ModeFlags {
    bool recording = false;
    bool learning = true;
};

struct RasterEvent {
    std::uint64_t step;
    std::uint32_t node;  // plan index
    std::uint32_t unit;
};

// Append-only in-memory spike record; flushed to disk by the harness, never by
// the engine.
class RasterSink {
public:
    void append(std::uint64_t step, std::uint32_t node, std::uint32_t unit) {
        events_.push_back({step, node, unit});
    }
    const std::vector<RasterEvent>& events() const noexcept { return events_; }
    void clear() noexcept { events_.clear(); }

private:
    std::vector<RasterEvent> events_;
};

class EngineError : public std::runtime_error {
public:
    EngineError(std::string node_id, std::uint64_t step, const std::string& message)
        : std::runtime_error("node '" + node_id + "' step " + std::to_string(step) + ": " +
                             message),
          node_id_(std::move(node_id)),
          step_(step) {}
    const std::string& node_id() const noexcept { return node_id_; }
    std::uint64_t step_index() const noexcept { return step_; }

private:
    std::string node_id_;
    std::uint64_t step_;
};

using InputMap = std::map<std::string, std::vector<double>>;
using OutputMap = std::map<std::string, std::vector<double>>;

inline constexpr std::uint32_t kStateBlobMagic = 0x4D4C5053u;  // "SPLM"
inline constexpr std::uint32_t kStateBlobVersion = 1;

class NodeRuntime;

// Single-threaded executor of a compiled plan. Deterministic for a fixed
// (blueprint, seed, input schedule); transferable between threads; any number
// of contexts may run in parallel.
class ExecutionContext {
public:
    explicit ExecutionContext(std::shared_ptr<const ExecutionPlan> plan, ModeFlags mode = {});
    ExecutionContext(std::shared_ptr<const ExecutionPlan> plan, std::uint64_t seed_override,
                     ModeFlags mode);
    ~ExecutionContext();
    ExecutionContext(ExecutionContext&&) noexcept;
    ExecutionContext& operator=(ExecutionContext&&) noexcept;

    // One engine step. `inputs` must provide a value vector for every source
    // node (key = node id); feedback edges read previous-step values.
    void advance(const InputMap& inputs);

    // Holds `inputs` fixed for n_steps engine steps (zero-order hold), then
    // reads every sink once.
    OutputMap run_interaction(const InputMap& inputs, std::uint64_t n_steps);

    // Self-describing binary state container; restore() rebuilds a context
    // whose future trajectories are bit-identical to this one's.
    std::vector<std::uint8_t> snapshot() const;
    static ExecutionContext restore(std::span<const std::uint8_t> blob);

    const SimClock& clock() const;
    double dt() const;
    const ExecutionPlan& plan() const;
    std::uint64_t seed() const;

    ModeFlags mode() const;
    void set_recording(bool on);
    void set_learning(bool on);
    // Non-finite state detection cadence: 1 = every step (test profile),
    // larger values trade detection latency for throughput (bench profile).
    void set_finite_check_interval(std::uint64_t every_n_steps);

    RasterSink& raster();
    const RasterSink& raster() const;

    std::vector<double> sink_values(const std::string& sink_id) const;
    // Synapse weight matrix (post-major), widened to double.
    std::vector<double> node_weights(const std::string& synapse_id) const;
    std::uint64_t weights_checksum() const;

    struct Impl;  // engine internals, opaque

private:
    std::unique_ptr<Impl> impl_;
    explicit ExecutionContext(std::unique_ptr<Impl> impl);
};

}  // namespace spikeloom
