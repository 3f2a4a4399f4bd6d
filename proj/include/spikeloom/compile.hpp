#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "spikeloom/blueprint.hpp"

namespace spikeloom {

enum class PortKind : std::uint8_t { Value, Spike };

struct PortSpec {
    std::string name;
    PortKind kind = PortKind::Value;
    std::uint32_t width = 0;  // 0 = any width accepted (inputs only)
    bool required = false;
};

struct NodeSchema {
    std::vector<PortSpec> inputs;
    std::vector<PortSpec> outputs;

    int input_index(const std::string& name) const {
        for (std::size_t i = 0; i < inputs.size(); ++i)
            if (inputs[i].name == name) return static_cast<int>(i);
        return -1;
    }
    int output_index(const std::string& name) const {
        for (std::size_t i = 0; i < outputs.size(); ++i)
            if (outputs[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

// Port layout for a node kind given its (defaults-merged) config. Returns an
// empty schema and sets `err` when the config is unusable.
NodeSchema schema_for(const BlueprintNode& node, std::string* err);

// Merges per-kind defaults from the model defaults table into a node config
// (explicit keys win).
ConfigMap resolve_config(const BlueprintNode& node);

// Structural and type checks; never throws, reports through Diagnostics.
Diagnostics validate(const Blueprint& bp);

// One value/spike stream produced by a node output port. Each buffer has a
// current-step and a previous-step slot; delayed edges read the previous one.
struct PlanBuffer {
    std::string node;
    std::string port;
    PortKind kind = PortKind::Value;
    std::uint32_t width = 0;
};

struct PlanInputRef {
    std::uint32_t buffer = 0;
    bool delayed = false;
};

struct PlanNode {
    std::string id;
    NodeKind kind = NodeKind::Source;
    Precision precision = Precision::Single;
    ConfigMap config;  // defaults resolved
    NodeSchema schema;
    std::vector<std::vector<PlanInputRef>> inputs;  // per input port
    std::vector<std::uint32_t> outputs;             // per output port -> buffer index
    // synapse: pre pool feeds back onto itself (diagonal suppressed at init)
    bool no_self = false;
    // plasticity: plan index of the synapse it adjusts
    std::uint32_t synapse_plan_index = UINT32_MAX;
};

struct DelayedEdgeInfo {
    PortRef src;
    PortRef dst;
    bool author_tagged = false;
};

// Deterministically ordered, buffer-allocated schedule. A pure function of the
// blueprint: byte-identical blueprints give byte-identical serialized plans.
struct ExecutionPlan {
    std::vector<PlanNode> order;
    std::vector<PlanBuffer> buffers;
    std::vector<DelayedEdgeInfo> delayed_edges;
    double dt = 1.0;
    std::uint64_t seed = 0;
    Precision default_precision = Precision::Single;
    std::string blueprint_canonical;  // embedded for snapshots

    int node_index(const std::string& id) const {
        for (std::size_t i = 0; i < order.size(); ++i)
            if (order[i].id == id) return static_cast<int>(i);
        return -1;
    }

    // Stable textual form for checksum comparisons.
    std::string describe() const;
};

// Requires validate(bp) to be error-free (throws std::invalid_argument with
// the formatted diagnostics otherwise). Node order is a topological sort over
// non-delayed edges with lexicographic node-id tie-breaking; every cycle is
// broken by marking, per strongly connected component, the lexicographically
// smallest (src, dst) untagged edge as delayed.
std::shared_ptr<const ExecutionPlan> compile(const Blueprint& bp);

// The delayed-edge set compile() will use: author-tagged edges plus the
// deterministic auto-selection. Exposed so validate() and tests can report the
// exact back-edges chosen.
std::vector<BlueprintEdge> effective_delayed_edges(const Blueprint& bp);

}  // namespace spikeloom
