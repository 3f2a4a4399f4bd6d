#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "spikeloom/compile.hpp"
#include "spikeloom/model_defaults.hpp"

namespace spikeloom {

namespace {

void merge_defaults(ConfigMap& cfg, const std::string& prefix,
                    std::initializer_list<const char*> keys) {
    const auto& d = model_defaults();
    for (const char* k : keys) {
        if (!cfg_has(cfg, k)) cfg[k] = d.get(prefix + "." + k);
    }
}

const std::set<std::string>& known_keys(NodeKind kind, const std::string& model) {
    static const std::set<std::string> source = {"width", "precision"};
    static const std::set<std::string> sink = {"precision"};
    static const std::set<std::string> relay = {"width", "precision"};
    static const std::set<std::string> pool_lif = {"model", "n", "precision", "tau_m", "v_rest",
                                                   "R", "theta_base", "a", "tau_th", "r_spike"};
    static const std::set<std::string> pool_adex = {"model", "n", "precision", "C", "g_L",
                                                    "E_L", "V_T", "delta_T", "a_w", "b_w",
                                                    "tau_w", "V_reset", "V_peak"};
    static const std::set<std::string> pool_hh = {"model", "n", "precision", "C", "g_Na",
                                                  "g_K", "g_L", "E_Na", "E_K", "E_L"};
    static const std::set<std::string> spiker = {"n_units", "lo", "hi", "topology",
                                                 "sigma", "p_max", "precision"};
    static const std::set<std::string> integrator = {"k", "tau_z", "gain", "precision"};
    static const std::set<std::string> synapse = {"n_pre", "n_post", "sign", "tau_s",
                                                  "w_max", "density", "w_lo", "w_hi",
                                                  "delay_min", "delay_max", "precision"};
    static const std::set<std::string> plasticity = {"synapse", "eta", "alpha", "beta",
                                                     "gamma", "delta", "tau_pre", "tau_post",
                                                     "precision"};
    switch (kind) {
        case NodeKind::Source: return source;
        case NodeKind::Sink: return sink;
        case NodeKind::Relay: return relay;
        case NodeKind::Pool:
            if (model == "adex") return pool_adex;
            if (model == "hh") return pool_hh;
            return pool_lif;
        case NodeKind::Spiker: return spiker;
        case NodeKind::Integrator: return integrator;
        case NodeKind::Synapse: return synapse;
        case NodeKind::Plasticity: return plasticity;
    }
    return source;
}

}  // namespace

ConfigMap resolve_config(const BlueprintNode& node) {
    ConfigMap cfg = node.config;
    switch (node.kind) {
        case NodeKind::Source:
        case NodeKind::Relay:
            if (!cfg_has(cfg, "width")) cfg["width"] = 1.0;
            break;
        case NodeKind::Sink:
            break;
        case NodeKind::Pool: {
            const std::string model = cfg_str(cfg, "model", "lif");
            cfg["model"] = model;
            if (model == "lif")
                merge_defaults(cfg, "lif",
                               {"tau_m", "v_rest", "R", "theta_base", "a", "tau_th", "r_spike"});
            else if (model == "adex")
                merge_defaults(cfg, "adex", {"C", "g_L", "E_L", "V_T", "delta_T", "a_w", "b_w",
                                             "tau_w", "V_reset", "V_peak"});
            else if (model == "hh")
                merge_defaults(cfg, "hh", {"C", "g_Na", "g_K", "g_L", "E_Na", "E_K", "E_L"});
            break;
        }
        case NodeKind::Spiker:
            merge_defaults(cfg, "spiker", {"sigma", "p_max"});
            if (!cfg_has(cfg, "topology")) cfg["topology"] = std::string("line");
            break;
        case NodeKind::Integrator:
            merge_defaults(cfg, "integrator", {"tau_z", "gain"});
            if (!cfg_has(cfg, "k")) cfg["k"] = 2.0;
            break;
        case NodeKind::Synapse:
            merge_defaults(cfg, "synapse", {"tau_s", "w_max", "density", "w_lo", "w_hi",
                                            "delay_min", "delay_max"});
            if (!cfg_has(cfg, "sign")) cfg["sign"] = std::string("excitatory");
            break;
        case NodeKind::Plasticity:
            merge_defaults(cfg, "plasticity",
                           {"eta", "alpha", "beta", "gamma", "delta", "tau_pre", "tau_post"});
            break;
    }
    return cfg;
}

NodeSchema schema_for(const BlueprintNode& node, std::string* err) {
    const auto fail = [&](const std::string& m) {
        if (err) *err = m;
        return NodeSchema{};
    };
    NodeSchema s;
    ConfigMap cfg;
    try {
        cfg = resolve_config(node);
    } catch (const std::exception& e) {
        return fail(e.what());
    }

    try {
        switch (node.kind) {
            case NodeKind::Source: {
                const auto w = cfg_int(cfg, "width", 1);
                if (w < 1) return fail("source width must be >= 1");
                s.outputs.push_back({"out", PortKind::Value, std::uint32_t(w), false});
                break;
            }
            case NodeKind::Sink:
                s.inputs.push_back({"in", PortKind::Value, 0, true});  // kind resolved per edge
                break;
            case NodeKind::Relay: {
                const auto w = cfg_int(cfg, "width", 1);
                if (w < 1) return fail("relay width must be >= 1");
                s.inputs.push_back({"in", PortKind::Value, std::uint32_t(w), false});
                s.outputs.push_back({"out", PortKind::Value, std::uint32_t(w), false});
                break;
            }
            case NodeKind::Pool: {
                const std::string model = cfg_str(cfg, "model", "lif");
                if (model != "lif" && model != "adex" && model != "hh")
                    return fail("pool model must be lif, adex or hh");
                const auto n = cfg_int(cfg, "n", 0);
                if (n < 1) return fail("pool needs n >= 1");
                if (model == "lif") {
                    if (!(cfg_num(cfg, "tau_m", 0) > 0) || !(cfg_num(cfg, "tau_th", 0) > 0) ||
                        !(cfg_num(cfg, "r_spike", 0) > 0))
                        return fail("lif pool: tau_m, tau_th, r_spike must be > 0");
                    if (!(cfg_num(cfg, "theta_base", 0) > cfg_num(cfg, "v_rest", 0)))
                        return fail("lif pool: theta_base must exceed v_rest");
                } else if (model == "adex") {
                    if (!(cfg_num(cfg, "delta_T", 0) > 0)) return fail("adex pool: delta_T must be > 0");
                    if (!(cfg_num(cfg, "V_peak", 0) > cfg_num(cfg, "V_T", 0)))
                        return fail("adex pool: V_peak must exceed V_T");
                    if (!(cfg_num(cfg, "C", 0) > 0) || !(cfg_num(cfg, "tau_w", 0) > 0))
                        return fail("adex pool: C and tau_w must be > 0");
                } else {
                    if (!(cfg_num(cfg, "C", 0) > 0)) return fail("hh pool: C must be > 0");
                }
                s.inputs.push_back({"in", PortKind::Value, std::uint32_t(n), false});
                s.outputs.push_back({"out", PortKind::Spike, std::uint32_t(n), false});
                break;
            }
            case NodeKind::Spiker: {
                const auto n = cfg_int(cfg, "n_units", 0);
                if (n < 2) return fail("spiker needs n_units >= 2");
                const double lo = cfg_num_req(cfg, "lo", node.id);
                const double hi = cfg_num_req(cfg, "hi", node.id);
                if (!(hi > lo)) return fail("spiker: hi must exceed lo");
                const std::string topo = cfg_str(cfg, "topology", "line");
                if (topo != "line" && topo != "ring") return fail("spiker topology must be line or ring");
                if (!(cfg_num(cfg, "sigma", 0) > 0)) return fail("spiker: sigma must be > 0");
                const double pm = cfg_num(cfg, "p_max", 0.5);
                if (pm < 0.0 || pm > 1.0) return fail("spiker: p_max must be in [0, 1]");
                s.inputs.push_back({"in", PortKind::Value, 1, true});
                s.outputs.push_back({"out", PortKind::Spike, std::uint32_t(n), false});
                break;
            }
            case NodeKind::Integrator: {
                const auto k = cfg_int(cfg, "k", 2);
                if (k < 1) return fail("integrator needs k >= 1");
                if (!(cfg_num(cfg, "tau_z", 0) > 0)) return fail("integrator: tau_z must be > 0");
                if (cfg_num(cfg, "gain", 0) < 0) return fail("integrator: gain must be >= 0");
                for (std::int64_t g = 0; g < k; ++g)
                    s.inputs.push_back({"in" + std::to_string(g), PortKind::Spike, 0, true});
                s.outputs.push_back({"out", PortKind::Value, std::uint32_t(k), false});
                break;
            }
            case NodeKind::Synapse: {
                const auto n_pre = cfg_int(cfg, "n_pre", 0);
                const auto n_post = cfg_int(cfg, "n_post", 0);
                if (n_pre < 1 || n_post < 1) return fail("synapse needs n_pre and n_post >= 1");
                const std::string sign = cfg_str(cfg, "sign", "excitatory");
                if (sign != "excitatory" && sign != "inhibitory")
                    return fail("synapse sign must be excitatory or inhibitory");
                if (!(cfg_num(cfg, "tau_s", 0) > 0)) return fail("synapse: tau_s must be > 0");
                const double w_max = cfg_num(cfg, "w_max", 0);
                if (!(w_max > 0)) return fail("synapse: w_max must be > 0");
                const double density = cfg_num(cfg, "density", 0);
                if (!(density > 0.0) || density > 1.0)
                    return fail("synapse: density must be in (0, 1]");
                const double w_lo = cfg_num(cfg, "w_lo", 0), w_hi = cfg_num(cfg, "w_hi", 0);
                if (w_lo > w_hi) return fail("synapse: invalid weight range (w_lo > w_hi)");
                if (w_lo < 0) return fail("synapse: weight magnitudes must be >= 0");
                if (w_hi > w_max) return fail("synapse: w_hi exceeds w_max");
                const auto d_lo = cfg_int(cfg, "delay_min", 1), d_hi = cfg_int(cfg, "delay_max", 1);
                if (d_lo < 1 || d_hi < d_lo) return fail("synapse: delays must satisfy 1 <= delay_min <= delay_max");
                if (d_hi > 4096) return fail("synapse: delay_max too large (> 4096 steps)");
                s.inputs.push_back({"pre", PortKind::Spike, std::uint32_t(n_pre), true});
                s.outputs.push_back({"out", PortKind::Value, std::uint32_t(n_post), false});
                break;
            }
            case NodeKind::Plasticity: {
                if (cfg_str(cfg, "synapse", "").empty())
                    return fail("plasticity needs a 'synapse' config key naming a synapse node");
                if (!(cfg_num(cfg, "tau_pre", 0) > 0) || !(cfg_num(cfg, "tau_post", 0) > 0))
                    return fail("plasticity: tau_pre and tau_post must be > 0");
                s.inputs.push_back({"post", PortKind::Spike, 0, true});
                s.inputs.push_back({"mod", PortKind::Value, 1, true});
                break;
            }
        }
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    if (err) err->clear();
    return s;
}

Diagnostics validate(const Blueprint& bp) {
    Diagnostics diags;

    std::map<std::string, const BlueprintNode*> by_id;
    std::map<std::string, NodeSchema> schemas;
    std::map<std::string, ConfigMap> resolved;

    for (const auto& n : bp.nodes) {
        by_id[n.id] = &n;
        std::string err;
        NodeSchema s = schema_for(n, &err);
        if (!err.empty()) {
            diags.error("BAD_CONFIG", n.id, err);
            continue;
        }
        const std::string model =
            n.kind == NodeKind::Pool ? cfg_str(resolve_config(n), "model", "lif") : "";
        for (const auto& [key, v] : n.config) {
            (void)v;
            if (!known_keys(n.kind, model).count(key))
                diags.warn("UNKNOWN_KEY", n.id, "unknown config key '" + key + "' (ignored)");
        }
        if (cfg_has(n.config, "precision")) {
            try {
                (void)precision_from_string(cfg_str(n.config, "precision", "single"));
            } catch (const std::exception& e) {
                diags.error("BAD_CONFIG", n.id, e.what());
            }
        }
        schemas[n.id] = std::move(s);
        resolved[n.id] = resolve_config(n);
    }
    if (diags.has_errors()) return diags;

    // edge endpoint + type/shape checks
    std::map<std::pair<std::string, std::string>, int> edge_count;  // (dst.node, dst.port)
    std::set<std::pair<std::string, std::string>> seen_pairs;
    for (const auto& e : bp.edges) {
        const std::string locus = e.src.str() + " -> " + e.dst.str();
        const auto* sn = bp.find(e.src.node);
        const auto* dn = bp.find(e.dst.node);
        if (!sn) {
            diags.error("UNKNOWN_NODE", locus, "edge src names unknown node '" + e.src.node + "'");
            continue;
        }
        if (!dn) {
            diags.error("UNKNOWN_NODE", locus, "edge dst names unknown node '" + e.dst.node + "'");
            continue;
        }
        const NodeSchema& ss = schemas[sn->id];
        const NodeSchema& ds = schemas[dn->id];
        const int oi = ss.output_index(e.src.port);
        if (oi < 0) {
            diags.error("UNKNOWN_PORT", locus,
                        "'" + e.src.port + "' is not an output port of " +
                            std::string(to_string(sn->kind)) + " '" + sn->id + "'");
            continue;
        }
        const int ii = ds.input_index(e.dst.port);
        if (ii < 0) {
            diags.error("UNKNOWN_PORT", locus,
                        "'" + e.dst.port + "' is not an input port of " +
                            std::string(to_string(dn->kind)) + " '" + dn->id + "'");
            continue;
        }
        const PortSpec& op = ss.outputs[oi];
        const PortSpec& ip = ds.inputs[ii];
        const bool dst_any_kind = dn->kind == NodeKind::Sink;
        if (!dst_any_kind && op.kind != ip.kind) {
            diags.error("PORT_TYPE", locus,
                        std::string("cannot wire a ") +
                            (op.kind == PortKind::Spike ? "spike" : "value") + " port to a " +
                            (ip.kind == PortKind::Spike ? "spike" : "value") + " port");
            continue;
        }
        if (ip.width != 0 && op.width != ip.width) {
            // width-1 value outputs broadcast
            const bool broadcast_ok =
                op.kind == PortKind::Value && ip.kind == PortKind::Value && op.width == 1;
            if (!broadcast_ok)
                diags.error("SHAPE", locus,
                            "width mismatch: " + std::to_string(op.width) + " -> " +
                                std::to_string(ip.width));
        }
        if (!seen_pairs.insert({e.src.str(), e.dst.str()}).second)
            diags.warn("DUP_EDGE", locus, "duplicate edge (values would be summed twice)");
        ++edge_count[{e.dst.node, e.dst.port}];
    }

    // fan-in rules and unwired required ports
    for (const auto& n : bp.nodes) {
        const NodeSchema& s = schemas[n.id];
        for (const auto& ip : s.inputs) {
            const int cnt = edge_count.count({n.id, ip.name})
                                ? edge_count[{n.id, ip.name}]
                                : 0;
            if (ip.kind == PortKind::Spike && cnt > 1)
                diags.error("MULTI_EDGE", n.id + "." + ip.name,
                            "spike ports accept exactly one in-edge, found " +
                                std::to_string(cnt));
            if (n.kind == NodeKind::Sink && cnt > 1)
                diags.error("MULTI_EDGE", n.id + "." + ip.name,
                            "sinks accept exactly one in-edge, found " + std::to_string(cnt));
            if (ip.required && cnt == 0)
                diags.error("UNWIRED_PORT", n.id + "." + ip.name,
                            "required input port has no in-edge");
        }
        if (n.kind == NodeKind::Source) {
            bool used = false;
            for (const auto& e : bp.edges)
                if (e.src.node == n.id) used = true;
            if (!used)
                diags.warn("DANGLING_SOURCE", n.id, "source output is not wired to anything");
        }
    }

    // plasticity cross-references
    for (const auto& n : bp.nodes) {
        if (n.kind != NodeKind::Plasticity) continue;
        const std::string target = cfg_str(resolved[n.id], "synapse", "");
        const auto* syn = bp.find(target);
        if (!syn || syn->kind != NodeKind::Synapse) {
            diags.error("BAD_REF", n.id,
                        "plasticity 'synapse' config must name a synapse node, got '" + target +
                            "'");
            continue;
        }
        const auto n_post = cfg_int(resolved[syn->id], "n_post", 0);
        // post port width must match the synapse's postsynaptic pool
        for (const auto& e : bp.edges) {
            if (e.dst.node != n.id || e.dst.port != "post") continue;
            const auto* sn = bp.find(e.src.node);
            if (!sn) continue;
            const NodeSchema& ss = schemas[sn->id];
            const int oi = ss.output_index(e.src.port);
            if (oi >= 0 && ss.outputs[oi].width != std::uint32_t(n_post))
                diags.error("SHAPE", n.id + ".post",
                            "post spikes have width " + std::to_string(ss.outputs[oi].width) +
                                " but synapse '" + target + "' has n_post = " +
                                std::to_string(n_post));
        }
        if (cfg_has(n.config, "precision"))
            diags.warn("PRECISION", n.id,
                       "plasticity adopts the precision of its synapse; per-node override ignored");
    }
    if (diags.has_errors()) return diags;

    // cycles that need an automatic delayed edge
    const auto effective = effective_delayed_edges(bp);
    std::set<std::pair<std::string, std::string>> tagged;
    for (const auto& e : bp.edges)
        if (e.delayed) tagged.insert({e.src.str(), e.dst.str()});
    for (const auto& e : effective) {
        if (tagged.count({e.src.str(), e.dst.str()})) continue;
        diags.warn("CYCLE_AUTODELAY", e.src.str() + " -> " + e.dst.str(),
                   "cycle without a delayed edge; this edge will read previous-step values");
    }

    return diags;
}

}  // namespace spikeloom
