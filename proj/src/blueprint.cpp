#include "spikeloom/blueprint.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

namespace spikeloom {

using nlohmann::json;

std::string_view to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Source: return "source";
        case NodeKind::Sink: return "sink";
        case NodeKind::Relay: return "relay";
        case NodeKind::Pool: return "pool";
        case NodeKind::Spiker: return "spiker";
        case NodeKind::Integrator: return "integrator";
        case NodeKind::Synapse: return "synapse";
        case NodeKind::Plasticity: return "plasticity";
    }
    return "?";
}

std::optional<NodeKind> node_kind_from_string(std::string_view s) {
    if (s == "source") return NodeKind::Source;
    if (s == "sink") return NodeKind::Sink;
    if (s == "relay") return NodeKind::Relay;
    if (s == "pool") return NodeKind::Pool;
    if (s == "spiker") return NodeKind::Spiker;
    if (s == "integrator") return NodeKind::Integrator;
    if (s == "synapse") return NodeKind::Synapse;
    if (s == "plasticity") return NodeKind::Plasticity;
    return std::nullopt;
}

bool cfg_has(const ConfigMap& c, const std::string& key) { return c.count(key) != 0; }

double cfg_num(const ConfigMap& c, const std::string& key, double fallback) {
    auto it = c.find(key);
    if (it == c.end()) return fallback;
    if (const double* d = std::get_if<double>(&it->second)) return *d;
    throw std::invalid_argument("config key '" + key + "' must be numeric");
}

double cfg_num_req(const ConfigMap& c, const std::string& key, const std::string& node_id) {
    auto it = c.find(key);
    if (it == c.end())
        throw std::invalid_argument("node '" + node_id + "': missing required config key '" +
                                    key + "'");
    if (const double* d = std::get_if<double>(&it->second)) return *d;
    throw std::invalid_argument("node '" + node_id + "': config key '" + key +
                                "' must be numeric");
}

std::int64_t cfg_int(const ConfigMap& c, const std::string& key, std::int64_t fallback) {
    return static_cast<std::int64_t>(cfg_num(c, key, static_cast<double>(fallback)));
}

std::string cfg_str(const ConfigMap& c, const std::string& key, const std::string& fallback) {
    auto it = c.find(key);
    if (it == c.end()) return fallback;
    if (const std::string* s = std::get_if<std::string>(&it->second)) return *s;
    throw std::invalid_argument("config key '" + key + "' must be a string");
}

bool cfg_bool(const ConfigMap& c, const std::string& key, bool fallback) {
    auto it = c.find(key);
    if (it == c.end()) return fallback;
    if (const bool* b = std::get_if<bool>(&it->second)) return *b;
    throw std::invalid_argument("config key '" + key + "' must be a boolean");
}

namespace {

// line/column (1-based) of a byte offset in text
std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

PortRef parse_port_ref(const std::string& s, const char* side) {
    const auto dot = s.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == s.size())
        throw ParseError(std::string("edge ") + side + " '" + s +
                             "' is not of the form node.port",
                         0, 0);
    return PortRef{s.substr(0, dot), s.substr(dot + 1)};
}

ConfigValue config_value_from_json(const json& v, const std::string& node_id,
                                   const std::string& key) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return v.get<std::string>();
    throw ParseError("node '" + node_id + "': config key '" + key +
                         "' must be a scalar (bool, number or string)",
                     0, 0);
}

}  // namespace

Blueprint parse_blueprint(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError(std::string("blueprint syntax error: ") + e.what(), line, col);
    }

    try {
        if (!j.is_object()) throw ParseError("blueprint must be a JSON object", 1, 1);
        const std::int64_t ver = j.value("blueprint_version", std::int64_t(0));
        if (ver != kBlueprintFormatVersion)
            throw ParseError("unsupported blueprint_version " + std::to_string(ver) +
                                 " (expected " + std::to_string(kBlueprintFormatVersion) + ")",
                             1, 1);

        Blueprint bp;
        if (j.contains("metadata")) {
            const json& m = j.at("metadata");
            bp.meta.name = m.value("name", std::string());
            bp.meta.version = m.value("version", std::int64_t(1));
            bp.meta.seed = m.value("seed", std::uint64_t(0));
            bp.meta.dt = m.value("dt", 1.0);
            if (m.contains("precision"))
                bp.meta.precision = precision_from_string(m.at("precision").get<std::string>());
        }
        if (!(bp.meta.dt > 0.0)) throw ParseError("metadata.dt must be > 0", 1, 1);

        std::set<std::string> seen;
        for (const json& jn : j.value("nodes", json::array())) {
            BlueprintNode n;
            if (!jn.contains("id") || !jn.at("id").is_string())
                throw ParseError("every node needs a string 'id'", 1, 1);
            n.id = jn.at("id").get<std::string>();
            if (n.id.empty() || n.id.find('.') != std::string::npos)
                throw ParseError("node id '" + n.id + "' is empty or contains '.'", 1, 1);
            if (!seen.insert(n.id).second)
                throw ParseError("duplicate node id '" + n.id + "'", 1, 1);
            const std::string kind = jn.value("kind", std::string());
            const auto k = node_kind_from_string(kind);
            if (!k) throw ParseError("node '" + n.id + "': unknown kind '" + kind + "'", 1, 1);
            n.kind = *k;
            if (jn.contains("config")) {
                if (!jn.at("config").is_object())
                    throw ParseError("node '" + n.id + "': config must be an object", 1, 1);
                for (const auto& [key, val] : jn.at("config").items())
                    n.config[key] = config_value_from_json(val, n.id, key);
            }
            bp.nodes.push_back(std::move(n));
        }

        for (const json& je : j.value("edges", json::array())) {
            BlueprintEdge e;
            if (!je.contains("src") || !je.contains("dst"))
                throw ParseError("every edge needs 'src' and 'dst'", 1, 1);
            e.src = parse_port_ref(je.at("src").get<std::string>(), "src");
            e.dst = parse_port_ref(je.at("dst").get<std::string>(), "dst");
            e.delayed = je.value("delayed", false);
            bp.edges.push_back(std::move(e));
        }

        std::sort(bp.nodes.begin(), bp.nodes.end(),
                  [](const BlueprintNode& a, const BlueprintNode& b) { return a.id < b.id; });
        std::sort(bp.edges.begin(), bp.edges.end());
        return bp;
    } catch (const json::exception& e) {
        throw ParseError(std::string("blueprint structure error: ") + e.what(), 1, 1);
    }
}

std::string serialize_blueprint(const Blueprint& bp) {
    // json object keys are kept sorted by the container; node/edge arrays are
    // sorted here so structurally equal blueprints serialize byte-identically.
    Blueprint c = bp;
    std::sort(c.nodes.begin(), c.nodes.end(),
              [](const BlueprintNode& a, const BlueprintNode& b) { return a.id < b.id; });
    std::sort(c.edges.begin(), c.edges.end());

    json j;
    j["blueprint_version"] = kBlueprintFormatVersion;
    j["metadata"] = {
        {"name", c.meta.name},
        {"version", c.meta.version},
        {"seed", c.meta.seed},
        {"dt", c.meta.dt},
        {"precision", std::string(to_string(c.meta.precision))},
    };
    j["nodes"] = json::array();
    for (const auto& n : c.nodes) {
        json jn;
        jn["id"] = n.id;
        jn["kind"] = std::string(to_string(n.kind));
        json cfg = json::object();
        for (const auto& [k, v] : n.config) {
            std::visit([&](const auto& x) { cfg[k] = x; }, v);
        }
        jn["config"] = cfg;
        j["nodes"].push_back(jn);
    }
    j["edges"] = json::array();
    for (const auto& e : c.edges) {
        json je;
        je["src"] = e.src.str();
        je["dst"] = e.dst.str();
        if (e.delayed) je["delayed"] = true;
        j["edges"].push_back(je);
    }
    return j.dump(2) + "\n";
}

bool structurally_equal(const Blueprint& a, const Blueprint& b) {
    return serialize_blueprint(a) == serialize_blueprint(b);
}

std::string format_diagnostics(const Diagnostics& d) {
    std::ostringstream os;
    for (const auto& item : d.items) {
        os << (item.severity == Severity::Error ? "error" : "warning") << " [" << item.code
           << "] " << item.locus << ": " << item.message << "\n";
    }
    return os.str();
}

}  // namespace spikeloom
