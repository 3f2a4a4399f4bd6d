#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "spikeloom/compile.hpp"

namespace spikeloom {

namespace {

using EdgeKey = std::pair<std::string, std::string>;  // (src.str, dst.str)

EdgeKey key_of(const BlueprintEdge& e) { return {e.src.str(), e.dst.str()}; }

// Strongly connected components (Tarjan, iterative) over node indices.
// Adjacency must be sorted for deterministic component discovery.
std::vector<std::vector<int>> tarjan_scc(int n, const std::vector<std::vector<int>>& adj) {
    std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> comps;
    int next = 0;

    struct Frame {
        int v;
        std::size_t child;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = next++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.child < adj[f.v].size()) {
                const int w = adj[f.v][f.child++];
                if (index[w] == -1) {
                    index[w] = low[w] = next++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                if (low[f.v] == index[f.v]) {
                    std::vector<int> comp;
                    while (true) {
                        const int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp.push_back(w);
                        if (w == f.v) break;
                    }
                    comps.push_back(std::move(comp));
                }
                const int v = f.v;
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }
    return comps;
}

}  // namespace

std::vector<BlueprintEdge> effective_delayed_edges(const Blueprint& bp) {
    // deduplicated edge set; author tags win
    std::map<EdgeKey, BlueprintEdge> edges;
    for (const auto& e : bp.edges) {
        auto [it, inserted] = edges.emplace(key_of(e), e);
        if (!inserted && e.delayed) it->second.delayed = true;
    }

    std::vector<std::string> ids;
    for (const auto& n : bp.nodes) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    std::map<std::string, int> idx;
    for (std::size_t i = 0; i < ids.size(); ++i) idx[ids[i]] = static_cast<int>(i);

    // Break every cycle: per strongly connected component, mark the
    // lexicographically smallest (src, dst) untagged edge as delayed; repeat
    // until the non-delayed subgraph is a DAG.
    while (true) {
        std::vector<std::vector<int>> adj(ids.size());
        for (const auto& [k, e] : edges) {
            (void)k;
            if (e.delayed) continue;
            if (!idx.count(e.src.node) || !idx.count(e.dst.node)) continue;
            adj[idx[e.src.node]].push_back(idx[e.dst.node]);
        }
        for (auto& a : adj) {
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
        }

        const auto comps = tarjan_scc(static_cast<int>(ids.size()), adj);
        bool changed = false;
        for (const auto& comp : comps) {
            bool cyclic = comp.size() > 1;
            if (!cyclic) {
                const int v = comp[0];
                cyclic = std::binary_search(adj[v].begin(), adj[v].end(), v);
            }
            if (!cyclic) continue;

            std::set<int> members(comp.begin(), comp.end());
            const BlueprintEdge* pick = nullptr;
            for (const auto& [k, e] : edges) {
                (void)k;
                if (e.delayed) continue;
                if (!idx.count(e.src.node) || !idx.count(e.dst.node)) continue;
                if (!members.count(idx[e.src.node]) || !members.count(idx[e.dst.node])) continue;
                if (!pick || key_of(e) < key_of(*pick)) pick = &e;
            }
            if (pick) {
                edges[key_of(*pick)].delayed = true;
                changed = true;
            }
        }
        if (!changed) break;
    }

    std::vector<BlueprintEdge> out;
    for (const auto& [k, e] : edges) {
        (void)k;
        if (e.delayed) out.push_back(e);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::shared_ptr<const ExecutionPlan> compile(const Blueprint& bp) {
    Diagnostics diags = validate(bp);
    if (diags.has_errors())
        throw std::invalid_argument("compile: blueprint has errors\n" + format_diagnostics(diags));

    auto plan = std::make_shared<ExecutionPlan>();
    plan->dt = bp.meta.dt;
    plan->seed = bp.meta.seed;
    plan->default_precision = bp.meta.precision;
    plan->blueprint_canonical = serialize_blueprint(bp);

    std::vector<std::string> ids;
    for (const auto& n : bp.nodes) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    std::map<std::string, int> idx;
    for (std::size_t i = 0; i < ids.size(); ++i) idx[ids[i]] = static_cast<int>(i);

    const auto delayed_list = effective_delayed_edges(bp);
    std::set<EdgeKey> delayed;
    std::set<EdgeKey> author_tagged;
    for (const auto& e : delayed_list) delayed.insert(key_of(e));
    for (const auto& e : bp.edges)
        if (e.delayed) author_tagged.insert(key_of(e));
    for (const auto& e : delayed_list)
        plan->delayed_edges.push_back({e.src, e.dst, author_tagged.count(key_of(e)) != 0});

    // precedence graph: non-delayed edges, plus synapse -> plasticity
    std::vector<std::set<int>> succ(ids.size());
    std::vector<int> indeg(ids.size(), 0);
    const auto add_prec = [&](int u, int v) {
        if (u == v) return;
        if (succ[u].insert(v).second) ++indeg[v];
    };
    std::set<EdgeKey> seen;
    for (const auto& e : bp.edges) {
        if (!seen.insert(key_of(e)).second) continue;
        if (delayed.count(key_of(e))) continue;
        add_prec(idx[e.src.node], idx[e.dst.node]);
    }
    for (const auto& n : bp.nodes) {
        if (n.kind != NodeKind::Plasticity) continue;
        const std::string target = cfg_str(resolve_config(n), "synapse", "");
        add_prec(idx[target], idx[n.id]);
    }

    // Kahn with lexicographic (node id) tie-breaking
    std::set<std::string> ready;
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (indeg[i] == 0) ready.insert(ids[i]);
    std::vector<int> order;
    while (!ready.empty()) {
        const std::string id = *ready.begin();
        ready.erase(ready.begin());
        const int u = idx[id];
        order.push_back(u);
        for (int v : succ[u])
            if (--indeg[v] == 0) ready.insert(ids[v]);
    }
    if (order.size() != ids.size())
        throw std::logic_error("compile: internal error, cycle survived delayed-edge selection");

    // nodes, schemas, buffers
    std::map<std::string, std::uint32_t> plan_index;
    for (int u : order) {
        const BlueprintNode* n = bp.find(ids[u]);
        PlanNode pn;
        pn.id = n->id;
        pn.kind = n->kind;
        pn.config = resolve_config(*n);
        std::string err;
        pn.schema = schema_for(*n, &err);
        pn.precision = cfg_has(n->config, "precision")
                           ? precision_from_string(cfg_str(n->config, "precision", "single"))
                           : bp.meta.precision;
        plan_index[pn.id] = static_cast<std::uint32_t>(plan->order.size());
        plan->order.push_back(std::move(pn));
    }

    std::map<EdgeKey, std::uint32_t> buffer_of;  // key: (node, port) of the producer
    for (auto& pn : plan->order) {
        pn.outputs.resize(pn.schema.outputs.size());
        for (std::size_t p = 0; p < pn.schema.outputs.size(); ++p) {
            const auto& ps = pn.schema.outputs[p];
            buffer_of[{pn.id, ps.name}] = static_cast<std::uint32_t>(plan->buffers.size());
            pn.outputs[p] = static_cast<std::uint32_t>(plan->buffers.size());
            plan->buffers.push_back({pn.id, ps.name, ps.kind, ps.width});
        }
    }

    // input wiring; sinks adopt the kind/width of their single in-edge
    std::set<EdgeKey> wired;
    for (auto& pn : plan->order) pn.inputs.resize(pn.schema.inputs.size());
    for (const auto& e : bp.edges) {
        if (!wired.insert(key_of(e)).second) continue;  // duplicates collapse
        PlanNode& dst = plan->order[plan_index[e.dst.node]];
        const int ii = dst.schema.input_index(e.dst.port);
        const std::uint32_t buf = buffer_of.at({e.src.node, e.src.port});
        dst.inputs[ii].push_back({buf, delayed.count(key_of(e)) != 0});
        if (dst.kind == NodeKind::Sink) {
            dst.schema.inputs[ii].kind = plan->buffers[buf].kind;
            dst.schema.inputs[ii].width = plan->buffers[buf].width;
        }
    }
    for (auto& pn : plan->order) {
        for (auto& port : pn.inputs)
            std::sort(port.begin(), port.end(),
                      [](const PlanInputRef& a, const PlanInputRef& b) {
                          return a.buffer < b.buffer;
                      });
    }

    // synapse/plasticity cross-links and self-connection detection
    for (auto& pn : plan->order) {
        if (pn.kind == NodeKind::Plasticity) {
            pn.synapse_plan_index = plan_index.at(cfg_str(pn.config, "synapse", ""));
        }
        if (pn.kind == NodeKind::Synapse) {
            std::string pre_src;
            std::set<std::string> post_dst;
            for (const auto& e : bp.edges) {
                if (e.dst.node == pn.id && e.dst.port == "pre") pre_src = e.src.node;
                if (e.src.node == pn.id && e.src.port == "out") post_dst.insert(e.dst.node);
            }
            pn.no_self = !pre_src.empty() && post_dst.count(pre_src) != 0;
        }
    }

    return plan;
}

std::string ExecutionPlan::describe() const {
    std::ostringstream os;
    os << "plan dt=" << dt << " seed=" << seed << " precision="
       << to_string(default_precision) << "\n";
    os << "order:\n";
    for (const auto& n : order) {
        os << "  " << n.id << " kind=" << to_string(n.kind) << " precision="
           << to_string(n.precision);
        if (n.no_self) os << " no_self";
        if (n.synapse_plan_index != UINT32_MAX) os << " synapse=" << order[n.synapse_plan_index].id;
        os << " inputs=[";
        for (std::size_t p = 0; p < n.inputs.size(); ++p) {
            if (p) os << "; ";
            os << n.schema.inputs[p].name << ":";
            for (std::size_t k = 0; k < n.inputs[p].size(); ++k) {
                if (k) os << ",";
                os << n.inputs[p][k].buffer << (n.inputs[p][k].delayed ? "d" : "");
            }
        }
        os << "]\n";
    }
    os << "buffers:\n";
    for (std::size_t b = 0; b < buffers.size(); ++b)
        os << "  " << b << " " << buffers[b].node << "." << buffers[b].port << " "
           << (buffers[b].kind == PortKind::Spike ? "spike" : "value") << " w="
           << buffers[b].width << "\n";
    os << "delayed:\n";
    for (const auto& d : delayed_edges)
        os << "  " << d.src.str() << " -> " << d.dst.str()
           << (d.author_tagged ? " (tagged)" : " (auto)") << "\n";
    return os.str();
}

}  // namespace spikeloom
