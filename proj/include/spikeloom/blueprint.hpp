#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "spikeloom/precision.hpp"

namespace spikeloom {

inline constexpr int kBlueprintFormatVersion = 1;

enum class NodeKind : std::uint8_t {
    Source,
    Sink,
    Relay,
    Pool,
    Spiker,
    Integrator,
    Synapse,
    Plasticity,
};

std::string_view to_string(NodeKind k);
std::optional<NodeKind> node_kind_from_string(std::string_view s);

using ConfigValue = std::variant<bool, double, std::string>;
using ConfigMap = std::map<std::string, ConfigValue>;

struct BlueprintNode {
    std::string id;
    NodeKind kind = NodeKind::Source;
    ConfigMap config;
};

struct PortRef {
    std::string node;
    std::string port;

    std::string str() const { return node + "." + port; }
    friend auto operator<=>(const PortRef&, const PortRef&) = default;
};

struct BlueprintEdge {
    PortRef src;
    PortRef dst;
    bool delayed = false;

    friend auto operator<=>(const BlueprintEdge&, const BlueprintEdge&) = default;
};

struct BlueprintMeta {
    std::string name;
    std::int64_t version = 1;
    std::uint64_t seed = 0;
    double dt = 1.0;  // ms, single global step for the whole context
    Precision precision = Precision::Single;
};

// Declarative model graph. Node order is canonicalized (sorted by id) on
// construction from a file and on serialization.
struct Blueprint {
    BlueprintMeta meta;
    std::vector<BlueprintNode> nodes;
    std::vector<BlueprintEdge> edges;

    const BlueprintNode* find(const std::string& id) const {
        for (const auto& n : nodes)
            if (n.id == id) return &n;
        return nullptr;
    }
};

// --- configuration access helpers -----------------------------------------

double cfg_num(const ConfigMap& c, const std::string& key, double fallback);
double cfg_num_req(const ConfigMap& c, const std::string& key, const std::string& node_id);
std::int64_t cfg_int(const ConfigMap& c, const std::string& key, std::int64_t fallback);
std::string cfg_str(const ConfigMap& c, const std::string& key, const std::string& fallback);
bool cfg_bool(const ConfigMap& c, const std::string& key, bool fallback);
bool cfg_has(const ConfigMap& c, const std::string& key);

// --- parse / serialize ------------------------------------------------------

class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, int line, int column)
        : std::runtime_error(std::move(message)), line_(line), column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_, column_;
};

// Parses blueprint JSON. Throws ParseError on syntax errors (with line and
// column), duplicate node ids, unknown kinds, or format version mismatch.
// Unknown top-level/metadata keys are tolerated; schema-level warnings come
// from validate().
Blueprint parse_blueprint(const std::string& text);

// Canonical form: sorted object keys, nodes sorted by id, edges sorted by
// (src, dst, delayed). parse(serialize(bp)) is a structural identity.
std::string serialize_blueprint(const Blueprint& bp);

bool structurally_equal(const Blueprint& a, const Blueprint& b);

// --- diagnostics ------------------------------------------------------------

enum class Severity : std::uint8_t { Warning, Error };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code;    // e.g. PORT_TYPE, SHAPE, CYCLE_AUTODELAY
    std::string locus;   // node id or "src -> dst" for edges
    std::string message;
};

struct Diagnostics {
    std::vector<Diagnostic> items;

    bool has_errors() const {
        for (const auto& d : items)
            if (d.severity == Severity::Error) return true;
        return false;
    }
    void error(std::string code, std::string locus, std::string message) {
        items.push_back({Severity::Error, std::move(code), std::move(locus), std::move(message)});
    }
    void warn(std::string code, std::string locus, std::string message) {
        items.push_back({Severity::Warning, std::move(code), std::move(locus), std::move(message)});
    }
};

std::string format_diagnostics(const Diagnostics& d);

}  // namespace spikeloom
