#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spikeloom/blueprint.hpp"
#include "spikeloom/metrics.hpp"

namespace spikeloom {

// --- fidelity bench ----------------------------------------------------------

struct FidelityConfig {
    std::string model = "lif";  // lif | adex | hh
    std::uint32_t trials = 100;
    double duration_ms = 1000.0;
    double dt = 0.1;  // ms; HH conventionally runs at 0.05
    Precision arm_a = Precision::Half;
    Precision arm_b = Precision::Double;
    std::uint64_t seed = 1;
    OuParams ou;  // zeroed mu means "use the per-model default drive"
    int threads = 2;
    double spike_distance_resolution = 0.1;
};

struct FidelityRow {
    std::uint32_t trial = 0;
    std::uint32_t spikes_a = 0, spikes_b = 0;
    double isi = 0.0, spike = 0.0;
    double isi_shuffled = 0.0, spike_shuffled = 0.0;
};

struct FidelityResult {
    std::vector<FidelityRow> rows;
    double mean_isi = 0.0, mean_spike = 0.0;
    double mean_isi_shuffled = 0.0, mean_spike_shuffled = 0.0;
};

// Per-model OU drive tuned for a 5-50 Hz firing regime.
OuParams default_ou_drive(const std::string& model, double dt);

// Conventional step for a model (0.05 ms for HH, 0.1 ms otherwise).
double default_fidelity_dt(const std::string& model);

// Single-unit soma blueprint driven by an external current source.
Blueprint fidelity_blueprint(const std::string& model, double dt, Precision precision,
                             std::uint64_t seed);

// Per trial: one OU drive, two runs of the same soma in the two precision
// arms on identical input, spike-train distances between the arms, and the
// shuffled-surrogate distances as reference.
FidelityResult run_fidelity(const FidelityConfig& cfg);

// --- performance bench ---------------------------------------------------------

struct PerfConfig {
    std::string arch = "chain";  // chain | ring | dense, or a blueprint file path
    std::vector<std::uint32_t> interactions = {1, 2, 5, 10, 50, 100};
    double duration_ms = 10000.0;
    std::uint32_t instantiations = 25;
    std::uint32_t runs = 5;
    double timeout_s = 60.0;
    std::uint64_t seed = 1;
    std::uint32_t pool_units = 1024;
    double inhibitory_fraction = 0.2;
    Precision precision = Precision::Single;
};

struct PerfRow {
    std::string arch;
    std::uint32_t interaction = 1;
    std::uint32_t instantiation = 0;
    std::uint32_t run = 0;
    std::uint64_t steps = 0;
    double wall_s = 0.0;
    double steps_per_s = 0.0;
    double setup_s = 0.0;  // parse + validate + compile + context construction
    bool estimated = false;
};

// Built-in three-pool topologies; every pool is an excitatory/inhibitory pair
// totalling `units` with the requested inhibitory fraction.
Blueprint perf_topology(const std::string& arch, std::uint32_t units, double inhibitory_fraction,
                        Precision precision, std::uint64_t seed);

std::vector<PerfRow> run_perf(const PerfConfig& cfg,
                              const std::function<void(const PerfRow&)>& on_row = {});

}  // namespace spikeloom
