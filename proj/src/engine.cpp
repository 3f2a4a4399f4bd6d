#include "spikeloom/engine.hpp"

#include <algorithm>
#include <cstring>

#include "spikeloom/binio.hpp"
#include "spikeloom/interfaces.hpp"
#include "spikeloom/neurons.hpp"
#include "spikeloom/plasticity.hpp"
#include "spikeloom/rng.hpp"
#include "spikeloom/synapse.hpp"

namespace spikeloom {

namespace {

struct Buffer {
    PortKind kind = PortKind::Value;
    std::uint32_t width = 0;
    std::vector<double> val[2];
    std::vector<std::uint8_t> spk[2];

    void init(PortKind k, std::uint32_t w) {
        kind = k;
        width = w;
        if (k == PortKind::Value) {
            val[0].assign(w, 0.0);
            val[1].assign(w, 0.0);
        } else {
            spk[0].assign(w, 0);
            spk[1].assign(w, 0);
        }
    }
};

template <class S>
void save_vec(BlobWriter& w, const std::vector<S>& v);
template <>
void save_vec(BlobWriter& w, const std::vector<Half>& v) {
    w.u64(v.size());
    for (Half x : v) w.u16(x.bits());
}
template <>
void save_vec(BlobWriter& w, const std::vector<float>& v) {
    w.u64(v.size());
    for (float x : v) w.f32(x);
}
template <>
void save_vec(BlobWriter& w, const std::vector<double>& v) {
    w.u64(v.size());
    for (double x : v) w.f64(x);
}
void save_vec_u8(BlobWriter& w, const std::vector<std::uint8_t>& v) {
    w.u64(v.size());
    w.bytes(v);
}

template <class S>
void load_vec(BlobReader& r, std::vector<S>& v);
template <>
void load_vec(BlobReader& r, std::vector<Half>& v) {
    v.resize(r.u64());
    for (auto& x : v) x = Half::from_bits(r.u16());
}
template <>
void load_vec(BlobReader& r, std::vector<float>& v) {
    v.resize(r.u64());
    for (auto& x : v) x = r.f32();
}
template <>
void load_vec(BlobReader& r, std::vector<double>& v) {
    v.resize(r.u64());
    for (auto& x : v) x = r.f64();
}
void load_vec_u8(BlobReader& r, std::vector<std::uint8_t>& v) {
    const auto n = r.u64();
    auto b = r.take(n);
    v.assign(b.begin(), b.end());
}

}  // namespace

// ---------------------------------------------------------------------------

// Per-node executable state. Wiring is resolved once at construction.
class NodeRuntime {
public:
    virtual ~NodeRuntime() = default;
    virtual void step(ExecutionContext::Impl& eng) = 0;
    virtual void save(BlobWriter& w) const = 0;
    virtual void load(BlobReader& r) = 0;
    // Returns a description of the first non-finite state entry, empty if clean.
    virtual std::string find_non_finite() const { return {}; }
    // Serializes only learned weights (synapses); no-op elsewhere.
    virtual void save_weights(BlobWriter&) const {}

    const PlanNode* pn = nullptr;
    std::uint32_t plan_index = 0;
};

struct ExecutionContext::Impl {
    std::shared_ptr<const ExecutionPlan> plan;
    SimClock clock;
    ModeFlags mode;
    std::uint64_t seed = 0;
    std::uint64_t finite_check_interval = 1;
    RasterSink raster;

    std::vector<Buffer> buffers;
    std::vector<std::unique_ptr<NodeRuntime>> nodes;
    std::vector<std::uint32_t> source_indices;  // plan indices of sources
    std::vector<std::uint32_t> sink_indices;
    std::vector<double> scratch;

    explicit Impl(std::shared_ptr<const ExecutionPlan> p, std::uint64_t s)
        : plan(std::move(p)), clock(plan->dt), seed(s) {}

    int cur() const noexcept { return static_cast<int>(clock.step_index() & 1); }
    int prev() const noexcept { return cur() ^ 1; }

    std::span<const double> value_in(const PlanNode& n, int port) {
        const std::uint32_t width = n.schema.inputs[port].width;
        const auto& refs = n.inputs[port];
        if (refs.size() == 1) {
            const Buffer& b = buffers[refs[0].buffer];
            if (b.width == width)
                return b.val[refs[0].delayed ? prev() : cur()];
        }
        scratch.assign(width, 0.0);
        for (const auto& ref : refs) {
            const Buffer& b = buffers[ref.buffer];
            const auto& src = b.val[ref.delayed ? prev() : cur()];
            if (b.width == 1) {
                for (std::uint32_t i = 0; i < width; ++i) scratch[i] += src[0];
            } else {
                for (std::uint32_t i = 0; i < width; ++i) scratch[i] += src[i];
            }
        }
        return scratch;
    }

    std::span<const std::uint8_t> spike_in(const PlanNode& n, int port) {
        const auto& refs = n.inputs[port];
        static const std::vector<std::uint8_t> empty;
        if (refs.empty()) return empty;
        const Buffer& b = buffers[refs[0].buffer];
        return b.spk[refs[0].delayed ? prev() : cur()];
    }

    std::span<double> value_out(const PlanNode& n, int port) {
        return buffers[n.outputs[port]].val[cur()];
    }
    std::span<std::uint8_t> spike_out(const PlanNode& n, int port) {
        return buffers[n.outputs[port]].spk[cur()];
    }

    void step_once() {
        const std::uint64_t s = clock.step_index();
        for (auto& node : nodes) {
            try {
                node->step(*this);
            } catch (const EngineError&) {
                throw;
            } catch (const std::exception& e) {
                throw EngineError(node->pn->id, s, e.what());
            }
            if (mode.recording) {
                for (std::size_t p = 0; p < node->pn->outputs.size(); ++p) {
                    const Buffer& b = buffers[node->pn->outputs[p]];
                    if (b.kind != PortKind::Spike) continue;
                    const auto& spk = b.spk[cur()];
                    for (std::uint32_t u = 0; u < b.width; ++u)
                        if (spk[u]) raster.append(s, node->plan_index, u);
                }
            }
        }
        if (finite_check_interval != 0 && s % finite_check_interval == 0) {
            for (const auto& node : nodes) {
                const std::string what = node->find_non_finite();
                if (!what.empty()) throw EngineError(node->pn->id, s, what);
            }
        }
        clock.tick();
    }
};

using Impl = ExecutionContext::Impl;

namespace {

// --- source / sink / relay -------------------------------------------------

class SourceRt final : public NodeRuntime {
public:
    std::vector<double> held;

    void step(Impl& eng) override {
        auto out = eng.value_out(*pn, 0);
        std::copy(held.begin(), held.end(), out.begin());
    }
    void save(BlobWriter& w) const override { save_vec(w, held); }
    void load(BlobReader& r) override { load_vec(r, held); }
};

class SinkRt final : public NodeRuntime {
public:
    std::vector<double> latest;

    void step(Impl& eng) override {
        if (pn->schema.inputs[0].kind == PortKind::Spike) {
            auto in = eng.spike_in(*pn, 0);
            latest.resize(in.size());
            for (std::size_t i = 0; i < in.size(); ++i) latest[i] = in[i] ? 1.0 : 0.0;
        } else {
            auto in = eng.value_in(*pn, 0);
            latest.assign(in.begin(), in.end());
        }
    }
    void save(BlobWriter& w) const override { save_vec(w, latest); }
    void load(BlobReader& r) override { load_vec(r, latest); }
};

class RelayRt final : public NodeRuntime {
public:
    void step(Impl& eng) override {
        auto in = eng.value_in(*pn, 0);
        auto out = eng.value_out(*pn, 0);
        std::copy(in.begin(), in.end(), out.begin());
    }
    void save(BlobWriter&) const override {}
    void load(BlobReader&) override {}
};

// --- pools -------------------------------------------------------------------

template <class S>
class LifPoolRt final : public NodeRuntime {
public:
    LifParams<compute_t<S>> p{};
    LifState<S> st;

    void step(Impl& eng) override {
        auto I = eng.value_in(*pn, 0);
        lif_step(st, I, p, eng.spike_out(*pn, 0));
    }
    void save(BlobWriter& w) const override {
        save_vec(w, st.v_off);
        save_vec(w, st.th_off);
        save_vec(w, st.r);
    }
    void load(BlobReader& r) override {
        load_vec(r, st.v_off);
        load_vec(r, st.th_off);
        load_vec(r, st.r);
    }
    std::string find_non_finite() const override {
        for (std::size_t i = 0; i < st.size(); ++i) {
            if (!finite_scalar(st.v_off[i])) return "non-finite membrane potential at unit " + std::to_string(i);
            if (!finite_scalar(st.th_off[i])) return "non-finite threshold at unit " + std::to_string(i);
            if (!finite_scalar(st.r[i])) return "non-finite refractory state at unit " + std::to_string(i);
        }
        return {};
    }
};

template <class S>
class AdexPoolRt final : public NodeRuntime {
public:
    AdexParams<compute_t<S>> p{};
    AdexState<S> st;

    void step(Impl& eng) override {
        auto I = eng.value_in(*pn, 0);
        adex_step(st, I, p, eng.spike_out(*pn, 0));
    }
    void save(BlobWriter& w) const override {
        save_vec(w, st.v_off);
        save_vec(w, st.w);
    }
    void load(BlobReader& r) override {
        load_vec(r, st.v_off);
        load_vec(r, st.w);
    }
    std::string find_non_finite() const override {
        for (std::size_t i = 0; i < st.size(); ++i) {
            if (!finite_scalar(st.v_off[i])) return "non-finite membrane potential at unit " + std::to_string(i);
            if (!finite_scalar(st.w[i])) return "non-finite adaptation current at unit " + std::to_string(i);
        }
        return {};
    }
};

template <class S>
class HhPoolRt final : public NodeRuntime {
public:
    HhParams<compute_t<S>> p{};
    HhState<S> st;

    void step(Impl& eng) override {
        auto I = eng.value_in(*pn, 0);
        hh_step(st, I, p, eng.spike_out(*pn, 0));
    }
    void save(BlobWriter& w) const override {
        save_vec(w, st.v);
        save_vec(w, st.m);
        save_vec(w, st.h);
        save_vec(w, st.n);
    }
    void load(BlobReader& r) override {
        load_vec(r, st.v);
        load_vec(r, st.m);
        load_vec(r, st.h);
        load_vec(r, st.n);
    }
    std::string find_non_finite() const override {
        for (std::size_t i = 0; i < st.size(); ++i)
            if (!finite_scalar(st.v[i])) return "non-finite membrane potential at unit " + std::to_string(i);
        return {};
    }
};

// --- spiker / integrator -----------------------------------------------------

class SpikerRt final : public NodeRuntime {
public:
    TopologySpec spec;
    RngStream rng;

    void step(Impl& eng) override {
        auto in = eng.value_in(*pn, 0);
        spiker_encode(in[0], spec, rng, eng.spike_out(*pn, 0));
    }
    void save(BlobWriter& w) const override { w.u64(rng.counter()); }
    void load(BlobReader& r) override { rng.set_counter(r.u64()); }
};

template <class S>
class IntegratorRt final : public NodeRuntime {
public:
    IntegratorParams<compute_t<S>> p{};
    IntegratorState<S> st;
    std::vector<std::uint32_t> counts;

    void step(Impl& eng) override {
        counts.assign(st.z.size(), 0);
        for (std::size_t g = 0; g < st.z.size(); ++g) {
            auto in = eng.spike_in(*pn, static_cast<int>(g));
            std::uint32_t c = 0;
            for (std::uint8_t s : in) c += s ? 1u : 0u;
            counts[g] = c;
        }
        integrator_step(st, counts, p);
        auto out = eng.value_out(*pn, 0);
        for (std::size_t g = 0; g < st.z.size(); ++g) out[g] = static_cast<double>(ld(st.z[g]));
    }
    void save(BlobWriter& w) const override { save_vec(w, st.z); }
    void load(BlobReader& r) override { load_vec(r, st.z); }
};

// --- synapse / plasticity ------------------------------------------------------

template <class S>
class SynapseRt final : public NodeRuntime {
public:
    SynapseCore<S> core;
    std::vector<Arrival> arrivals;
    std::vector<std::uint8_t> last_pre;
    RngStream rng;

    void step(Impl& eng) override {
        auto pre = eng.spike_in(*pn, 0);
        last_pre.assign(pre.begin(), pre.end());
        core.push_and_collect(pre, arrivals);
        core.step_currents(arrivals);
        auto out = eng.value_out(*pn, 0);
        std::fill(out.begin(), out.end(), 0.0);
        core.add_currents_to(out);
    }
    void save_weights(BlobWriter& w) const override { save_vec(w, core.weights()); }
    void save(BlobWriter& w) const override {
        w.u64(rng.counter());
        save_vec(w, core.weights());
        save_vec(w, core.currents());
        save_vec_u8(w, core.ring().raw());
        w.u64(core.ring().pushes());
        save_vec_u8(w, last_pre);
    }
    void load(BlobReader& r) override {
        rng.set_counter(r.u64());
        load_vec(r, core.weights());
        load_vec(r, core.currents());
        load_vec_u8(r, core.ring().raw());
        core.ring().set_pushes(r.u64());
        load_vec_u8(r, last_pre);
        // rebuild the per-step arrival cache for a mid-step-consistent view
        arrivals.clear();
    }
    std::string find_non_finite() const override {
        std::size_t bad = 0;
        if (!core.weights_finite(&bad)) return "non-finite synapse state at entry " + std::to_string(bad);
        return {};
    }
};

template <class S>
class PlasticityRt final : public NodeRuntime {
public:
    PlasticityParams<compute_t<S>> p{};
    TraceState<S> tr;
    SynapseRt<S>* syn = nullptr;

    void step(Impl& eng) override {
        if (!eng.mode.learning) return;
        auto post = eng.spike_in(*pn, 0);
        auto mod = eng.value_in(*pn, 1);
        trace_step(tr, syn->last_pre, post, p);
        stdp_update(syn->core, tr, syn->arrivals, post, static_cast<compute_t<S>>(mod[0]), p);
    }
    void save(BlobWriter& w) const override {
        save_vec(w, tr.x_pre);
        save_vec(w, tr.x_post);
    }
    void load(BlobReader& r) override {
        load_vec(r, tr.x_pre);
        load_vec(r, tr.x_post);
    }
    std::string find_non_finite() const override {
        for (std::size_t i = 0; i < tr.x_pre.size(); ++i)
            if (!finite_scalar(tr.x_pre[i])) return "non-finite pre trace at unit " + std::to_string(i);
        for (std::size_t j = 0; j < tr.x_post.size(); ++j)
            if (!finite_scalar(tr.x_post[j])) return "non-finite post trace at unit " + std::to_string(j);
        return {};
    }
};

// --- construction helpers -----------------------------------------------------

template <class S>
std::unique_ptr<NodeRuntime> make_pool(const PlanNode& n, double dt) {
    using C = compute_t<S>;
    const std::string model = cfg_str(n.config, "model", "lif");
    const std::size_t units = static_cast<std::size_t>(cfg_int(n.config, "n", 1));
    if (model == "lif") {
        auto rt = std::make_unique<LifPoolRt<S>>();
        rt->p = LifParams<C>{
            static_cast<C>(cfg_num(n.config, "tau_m", 20.0)),
            static_cast<C>(cfg_num(n.config, "v_rest", -65.0)),
            static_cast<C>(cfg_num(n.config, "R", 10.0)),
            static_cast<C>(cfg_num(n.config, "theta_base", -55.0)),
            static_cast<C>(cfg_num(n.config, "a", 1.0)),
            static_cast<C>(cfg_num(n.config, "tau_th", 50.0)),
            static_cast<C>(cfg_num(n.config, "r_spike", 2.0)),
            static_cast<C>(dt)};
        rt->p.check();
        rt->st = LifState<S>::at_rest(units, rt->p);
        return rt;
    }
    if (model == "adex") {
        auto rt = std::make_unique<AdexPoolRt<S>>();
        rt->p = AdexParams<C>{
            static_cast<C>(cfg_num(n.config, "C", 0.281)),
            static_cast<C>(cfg_num(n.config, "g_L", 0.03)),
            static_cast<C>(cfg_num(n.config, "E_L", -70.6)),
            static_cast<C>(cfg_num(n.config, "V_T", -50.4)),
            static_cast<C>(cfg_num(n.config, "delta_T", 2.0)),
            static_cast<C>(cfg_num(n.config, "a_w", 0.004)),
            static_cast<C>(cfg_num(n.config, "b_w", 0.0805)),
            static_cast<C>(cfg_num(n.config, "tau_w", 144.0)),
            static_cast<C>(cfg_num(n.config, "V_reset", -70.6)),
            static_cast<C>(cfg_num(n.config, "V_peak", -40.4)),
            static_cast<C>(dt)};
        rt->p.check();
        rt->st = AdexState<S>::at_rest(units, rt->p);
        return rt;
    }
    auto rt = std::make_unique<HhPoolRt<S>>();
    rt->p = HhParams<C>{
        static_cast<C>(cfg_num(n.config, "C", 1.0)),
        static_cast<C>(cfg_num(n.config, "g_Na", 120.0)),
        static_cast<C>(cfg_num(n.config, "g_K", 36.0)),
        static_cast<C>(cfg_num(n.config, "g_L", 0.3)),
        static_cast<C>(cfg_num(n.config, "E_Na", 50.0)),
        static_cast<C>(cfg_num(n.config, "E_K", -77.0)),
        static_cast<C>(cfg_num(n.config, "E_L", -54.387)),
        static_cast<C>(dt)};
    rt->p.check();
    rt->st = hh_rest_state<S>(units);
    return rt;
}

template <class S>
std::unique_ptr<NodeRuntime> make_synapse(const PlanNode& n, double dt, RngStream rng) {
    using C = compute_t<S>;
    const auto n_pre = static_cast<std::uint32_t>(cfg_int(n.config, "n_pre", 1));
    const auto n_post = static_cast<std::uint32_t>(cfg_int(n.config, "n_post", 1));
    const SynapseSign sign = cfg_str(n.config, "sign", "excitatory") == "inhibitory"
                                 ? SynapseSign::Inhibitory
                                 : SynapseSign::Excitatory;
    auto rt = std::make_unique<SynapseRt<S>>();
    rt->rng = rng;
    auto weights = init_weights(n_post, n_pre, cfg_num(n.config, "density", 0.2),
                                cfg_num(n.config, "w_lo", 0.1), cfg_num(n.config, "w_hi", 1.0),
                                sign, n.no_self, rt->rng);
    const auto d_lo = static_cast<std::uint64_t>(cfg_int(n.config, "delay_min", 1));
    const auto d_hi = static_cast<std::uint64_t>(cfg_int(n.config, "delay_max", 1));
    std::vector<std::uint16_t> delays(std::size_t(n_pre) * n_post);
    for (auto& d : delays)
        d = static_cast<std::uint16_t>(d_lo + rt->rng.uniform_int(d_hi - d_lo + 1));
    rt->core = SynapseCore<S>(n_post, n_pre, static_cast<C>(cfg_num(n.config, "tau_s", 5.0)),
                              static_cast<C>(cfg_num(n.config, "w_max", 10.0)),
                              static_cast<C>(dt), sign, std::move(weights), std::move(delays));
    rt->last_pre.assign(n_pre, 0);
    return rt;
}

std::unique_ptr<NodeRuntime> make_runtime(const PlanNode& n, const ExecutionPlan& plan,
                                          std::uint64_t seed, std::uint32_t plan_index) {
    const double dt = plan.dt;
    const Precision prec =
        n.kind == NodeKind::Plasticity ? plan.order[n.synapse_plan_index].precision : n.precision;

    const auto dispatch = [&](auto make) -> std::unique_ptr<NodeRuntime> {
        switch (prec) {
            case Precision::Half: return make.template operator()<Half>();
            case Precision::Single: return make.template operator()<float>();
            case Precision::Double: return make.template operator()<double>();
        }
        return nullptr;
    };

    switch (n.kind) {
        case NodeKind::Source: {
            auto rt = std::make_unique<SourceRt>();
            rt->held.assign(n.schema.outputs[0].width, 0.0);
            return rt;
        }
        case NodeKind::Sink: return std::make_unique<SinkRt>();
        case NodeKind::Relay: return std::make_unique<RelayRt>();
        case NodeKind::Pool:
            return dispatch([&]<class S>() { return make_pool<S>(n, dt); });
        case NodeKind::Spiker: {
            auto rt = std::make_unique<SpikerRt>();
            rt->spec.kind = cfg_str(n.config, "topology", "line") == "ring" ? Topology::Ring
                                                                            : Topology::Line;
            rt->spec.lo = cfg_num(n.config, "lo", 0.0);
            rt->spec.hi = cfg_num(n.config, "hi", 1.0);
            rt->spec.n_units = static_cast<std::uint32_t>(cfg_int(n.config, "n_units", 2));
            rt->spec.sigma = cfg_num(n.config, "sigma", 1.5);
            rt->spec.p_max = cfg_num(n.config, "p_max", 0.5);
            rt->spec.check();
            rt->rng = RngStream(seed, plan_index);
            return rt;
        }
        case NodeKind::Integrator:
            return dispatch([&]<class S>() -> std::unique_ptr<NodeRuntime> {
                using C = compute_t<S>;
                auto rt = std::make_unique<IntegratorRt<S>>();
                rt->p = IntegratorParams<C>{static_cast<C>(cfg_num(n.config, "tau_z", 100.0)),
                                            static_cast<C>(cfg_num(n.config, "gain", 0.02)),
                                            static_cast<C>(dt)};
                rt->p.check();
                rt->st = IntegratorState<S>::zeros(
                    static_cast<std::size_t>(cfg_int(n.config, "k", 2)));
                return rt;
            });
        case NodeKind::Synapse:
            return dispatch([&]<class S>() {
                return make_synapse<S>(n, dt, RngStream(seed, plan_index));
            });
        case NodeKind::Plasticity:
            return dispatch([&]<class S>() -> std::unique_ptr<NodeRuntime> {
                using C = compute_t<S>;
                auto rt = std::make_unique<PlasticityRt<S>>();
                rt->p = PlasticityParams<C>{static_cast<C>(cfg_num(n.config, "eta", 0.001)),
                                            static_cast<C>(cfg_num(n.config, "alpha", 1.0)),
                                            static_cast<C>(cfg_num(n.config, "beta", 1.0)),
                                            static_cast<C>(cfg_num(n.config, "gamma", 1.0)),
                                            static_cast<C>(cfg_num(n.config, "delta", 1.0)),
                                            static_cast<C>(cfg_num(n.config, "tau_pre", 20.0)),
                                            static_cast<C>(cfg_num(n.config, "tau_post", 20.0)),
                                            static_cast<C>(dt)};
                rt->p.check();
                return rt;
            });
    }
    return nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------

ExecutionContext::ExecutionContext(std::shared_ptr<const ExecutionPlan> plan, ModeFlags mode)
    : ExecutionContext(plan, plan->seed, mode) {}

ExecutionContext::ExecutionContext(std::shared_ptr<const ExecutionPlan> plan,
                                   std::uint64_t seed_override, ModeFlags mode)
    : impl_(std::make_unique<Impl>(std::move(plan), seed_override)) {
    impl_->mode = mode;
    impl_->buffers.resize(impl_->plan->buffers.size());
    for (std::size_t b = 0; b < impl_->buffers.size(); ++b)
        impl_->buffers[b].init(impl_->plan->buffers[b].kind, impl_->plan->buffers[b].width);

    for (std::size_t i = 0; i < impl_->plan->order.size(); ++i) {
        const PlanNode& pn = impl_->plan->order[i];
        auto rt = make_runtime(pn, *impl_->plan, impl_->seed, static_cast<std::uint32_t>(i));
        rt->pn = &pn;
        rt->plan_index = static_cast<std::uint32_t>(i);
        if (pn.kind == NodeKind::Source) impl_->source_indices.push_back(i);
        if (pn.kind == NodeKind::Sink) impl_->sink_indices.push_back(i);
        impl_->nodes.push_back(std::move(rt));
    }

    // connect plasticity to its synapse runtime (same storage precision)
    for (auto& rt : impl_->nodes) {
        if (rt->pn->kind != NodeKind::Plasticity) continue;
        NodeRuntime* syn = impl_->nodes[rt->pn->synapse_plan_index].get();
        const Precision prec = impl_->plan->order[rt->pn->synapse_plan_index].precision;
        const auto wire = [&]<class S>() {
            auto* p = dynamic_cast<PlasticityRt<S>*>(rt.get());
            auto* s = dynamic_cast<SynapseRt<S>*>(syn);
            p->syn = s;
            p->tr = TraceState<S>::zeros(s->core.n_pre(), s->core.n_post());
        };
        switch (prec) {
            case Precision::Half: wire.operator()<Half>(); break;
            case Precision::Single: wire.operator()<float>(); break;
            case Precision::Double: wire.operator()<double>(); break;
        }
    }
}

ExecutionContext::ExecutionContext(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ExecutionContext::~ExecutionContext() = default;
ExecutionContext::ExecutionContext(ExecutionContext&&) noexcept = default;
ExecutionContext& ExecutionContext::operator=(ExecutionContext&&) noexcept = default;

namespace {

// Inputs must cover every source port; keys naming nothing are ignored.
void bind_sources(Impl& eng, const InputMap& inputs) {
    for (std::uint32_t i : eng.source_indices) {
        auto* src = static_cast<SourceRt*>(eng.nodes[i].get());
        const auto it = inputs.find(src->pn->id);
        if (it == inputs.end())
            throw EngineError(src->pn->id, eng.clock.step_index(),
                              "missing external input for source port '" + src->pn->id + ".out'");
        if (it->second.size() != src->held.size())
            throw EngineError(src->pn->id, eng.clock.step_index(),
                              "external input width " + std::to_string(it->second.size()) +
                                  " does not match source width " +
                                  std::to_string(src->held.size()));
        src->held = it->second;
    }
}

}  // namespace

void ExecutionContext::advance(const InputMap& inputs) {
    bind_sources(*impl_, inputs);
    impl_->step_once();
}

OutputMap ExecutionContext::run_interaction(const InputMap& inputs, std::uint64_t n_steps) {
    if (n_steps < 1) throw std::invalid_argument("run_interaction: n_steps must be >= 1");
    bind_sources(*impl_, inputs);
    for (std::uint64_t k = 0; k < n_steps; ++k) {
        try {
            impl_->step_once();
        } catch (const EngineError& e) {
            throw EngineError(e.node_id(), e.step_index(),
                              std::string(e.what()) + " (within-window step " +
                                  std::to_string(k) + " of " + std::to_string(n_steps) + ")");
        }
    }
    OutputMap out;
    for (std::uint32_t i : impl_->sink_indices) {
        auto* sink = static_cast<SinkRt*>(impl_->nodes[i].get());
        out[sink->pn->id] = sink->latest;
    }
    return out;
}

const SimClock& ExecutionContext::clock() const { return impl_->clock; }
double ExecutionContext::dt() const { return impl_->clock.dt(); }
const ExecutionPlan& ExecutionContext::plan() const { return *impl_->plan; }
std::uint64_t ExecutionContext::seed() const { return impl_->seed; }
ModeFlags ExecutionContext::mode() const { return impl_->mode; }
void ExecutionContext::set_recording(bool on) { impl_->mode.recording = on; }
void ExecutionContext::set_learning(bool on) { impl_->mode.learning = on; }
void ExecutionContext::set_finite_check_interval(std::uint64_t every) {
    impl_->finite_check_interval = every;
}
RasterSink& ExecutionContext::raster() { return impl_->raster; }
const RasterSink& ExecutionContext::raster() const { return impl_->raster; }

std::vector<double> ExecutionContext::sink_values(const std::string& sink_id) const {
    for (std::uint32_t i : impl_->sink_indices)
        if (impl_->nodes[i]->pn->id == sink_id)
            return static_cast<SinkRt*>(impl_->nodes[i].get())->latest;
    throw std::invalid_argument("no sink named '" + sink_id + "'");
}

std::vector<double> ExecutionContext::node_weights(const std::string& synapse_id) const {
    for (const auto& rt : impl_->nodes) {
        if (rt->pn->id != synapse_id) continue;
        if (rt->pn->kind != NodeKind::Synapse)
            throw std::invalid_argument("node '" + synapse_id + "' is not a synapse");
        const auto collect = [&]<class S>() -> std::vector<double> {
            const auto* s = dynamic_cast<const SynapseRt<S>*>(rt.get());
            std::vector<double> out(s->core.weights().size());
            for (std::size_t k = 0; k < out.size(); ++k)
                out[k] = static_cast<double>(ld(s->core.weights()[k]));
            return out;
        };
        switch (rt->pn->precision) {
            case Precision::Half: return collect.operator()<Half>();
            case Precision::Single: return collect.operator()<float>();
            case Precision::Double: return collect.operator()<double>();
        }
    }
    throw std::invalid_argument("no node named '" + synapse_id + "'");
}

std::uint64_t ExecutionContext::weights_checksum() const {
    BlobWriter w;
    for (const auto& rt : impl_->nodes) rt->save_weights(w);
    return fnv1a64(w.data());
}

std::vector<std::uint8_t> ExecutionContext::snapshot() const {
    BlobWriter w;
    w.u32(kStateBlobMagic);
    w.u32(kStateBlobVersion);
    w.str(impl_->plan->blueprint_canonical);
    w.u64(impl_->seed);
    w.u64(impl_->clock.step_index());
    w.u8(static_cast<std::uint8_t>((impl_->mode.recording ? 1 : 0) |
                                   (impl_->mode.learning ? 2 : 0)));

    w.u32(static_cast<std::uint32_t>(impl_->buffers.size()));
    for (const Buffer& b : impl_->buffers) {
        w.u8(b.kind == PortKind::Spike ? 1 : 0);
        w.u32(b.width);
        if (b.kind == PortKind::Value) {
            for (int s = 0; s < 2; ++s)
                for (double v : b.val[s]) w.f64(v);
        } else {
            for (int s = 0; s < 2; ++s) w.bytes(b.spk[s]);
        }
    }

    w.u32(static_cast<std::uint32_t>(impl_->nodes.size()));
    for (const auto& rt : impl_->nodes) {
        w.str(rt->pn->id);
        BlobWriter payload;
        rt->save(payload);
        w.u64(payload.size());
        w.bytes(payload.data());
    }
    return w.take();
}

ExecutionContext ExecutionContext::restore(std::span<const std::uint8_t> blob) {
    BlobReader r(blob);
    if (r.u32() != kStateBlobMagic) throw std::runtime_error("restore: not a state blob");
    const std::uint32_t version = r.u32();
    if (version != kStateBlobVersion)
        throw std::runtime_error("restore: incompatible state blob format version " +
                                 std::to_string(version) + " (engine supports " +
                                 std::to_string(kStateBlobVersion) + ")");

    const std::string blueprint_text = r.str();
    const std::uint64_t seed = r.u64();
    const std::uint64_t step = r.u64();
    const std::uint8_t mode_bits = r.u8();

    const Blueprint bp = parse_blueprint(blueprint_text);
    auto plan = compile(bp);
    ExecutionContext ctx(plan, seed,
                         ModeFlags{(mode_bits & 1) != 0, (mode_bits & 2) != 0});
    Impl& eng = *ctx.impl_;
    eng.clock.set_step(step);

    const std::uint32_t n_buffers = r.u32();
    if (n_buffers != eng.buffers.size()) throw std::runtime_error("restore: buffer table mismatch");
    for (Buffer& b : eng.buffers) {
        const bool spike = r.u8() != 0;
        const std::uint32_t width = r.u32();
        if (spike != (b.kind == PortKind::Spike) || width != b.width)
            throw std::runtime_error("restore: buffer layout mismatch");
        if (b.kind == PortKind::Value) {
            for (int s = 0; s < 2; ++s)
                for (std::uint32_t i = 0; i < width; ++i) b.val[s][i] = r.f64();
        } else {
            for (int s = 0; s < 2; ++s) {
                auto bytes = r.take(width);
                std::copy(bytes.begin(), bytes.end(), b.spk[s].begin());
            }
        }
    }

    const std::uint32_t n_nodes = r.u32();
    if (n_nodes != eng.nodes.size()) throw std::runtime_error("restore: node table mismatch");
    for (auto& rt : eng.nodes) {
        const std::string id = r.str();
        if (id != rt->pn->id) throw std::runtime_error("restore: node order mismatch at '" + id + "'");
        const std::uint64_t size = r.u64();
        BlobReader payload(r.take(size));
        rt->load(payload);
        if (payload.remaining() != 0)
            throw std::runtime_error("restore: node payload size mismatch at '" + id + "'");
    }
    return ctx;
}

}  // namespace spikeloom
