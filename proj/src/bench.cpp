#include "spikeloom/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "spikeloom/compile.hpp"
#include "spikeloom/engine.hpp"

namespace spikeloom {

namespace {

constexpr std::uint64_t kOuStreamBase = 1ull << 41;
constexpr std::uint64_t kShuffleStreamBase = 1ull << 42;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

double default_fidelity_dt(const std::string& model) { return model == "hh" ? 0.05 : 0.1; }

OuParams default_ou_drive(const std::string& model, double dt) {
    OuParams p;
    p.dt = dt;
    p.tau_ou = 5.0;
    if (model == "lif") {
        p.mu = 1.2;
        p.sigma = 0.45;
    } else if (model == "adex") {
        p.mu = 0.75;
        p.sigma = 0.35;
    } else {  // hh, uA/cm^2
        p.mu = 3.5;
        p.sigma = 3.0;
    }
    return p;
}

Blueprint fidelity_blueprint(const std::string& model, double dt, Precision precision,
                             std::uint64_t seed) {
    Blueprint bp;
    bp.meta.name = "fidelity-" + model;
    bp.meta.dt = dt;
    bp.meta.seed = seed;
    bp.meta.precision = precision;
    ConfigMap pool;
    pool["model"] = model;
    pool["n"] = 1.0;
    bp.nodes.push_back({"drive", NodeKind::Source, {{"width", 1.0}}});
    bp.nodes.push_back({"soma", NodeKind::Pool, std::move(pool)});
    bp.edges.push_back({{"drive", "out"}, {"soma", "in"}, false});
    return bp;
}

namespace {

SpikeTrain record_arm(const std::string& model, double dt, Precision precision,
                      std::uint64_t seed, const std::vector<double>& drive, double duration_ms) {
    auto plan = compile(fidelity_blueprint(model, dt, precision, seed));
    ExecutionContext ctx(plan, ModeFlags{/*recording=*/true, /*learning=*/true});
    InputMap in;
    auto& v = in["drive"];
    v.resize(1);
    for (double value : drive) {
        v[0] = value;
        ctx.advance(in);
    }
    std::vector<double> times;
    for (const RasterEvent& e : ctx.raster().events())
        times.push_back(static_cast<double>(e.step) * dt);
    return SpikeTrain(std::move(times), duration_ms);
}

}  // namespace

FidelityResult run_fidelity(const FidelityConfig& cfg) {
    FidelityConfig c = cfg;
    if (c.ou.mu == 0.0 && c.ou.sigma == 0.0) c.ou = default_ou_drive(c.model, c.dt);
    c.ou.dt = c.dt;
    const auto n_steps = static_cast<std::size_t>(std::llround(c.duration_ms / c.dt));

    FidelityResult result;
    result.rows.resize(c.trials);

    const auto worker = [&](std::uint32_t begin, std::uint32_t end) {
        for (std::uint32_t trial = begin; trial < end; ++trial) {
            RngStream ou_rng(c.seed, kOuStreamBase + trial);
            const std::vector<double> drive = ou_series(c.ou, n_steps, ou_rng);
            const SpikeTrain a =
                record_arm(c.model, c.dt, c.arm_a, c.seed, drive, c.duration_ms);
            const SpikeTrain b =
                record_arm(c.model, c.dt, c.arm_b, c.seed, drive, c.duration_ms);
            RngStream shuf_rng(c.seed, kShuffleStreamBase + trial);
            const SpikeTrain sb = shuffle_surrogate(b, shuf_rng);

            FidelityRow row;
            row.trial = trial;
            row.spikes_a = static_cast<std::uint32_t>(a.count());
            row.spikes_b = static_cast<std::uint32_t>(b.count());
            row.isi = isi_distance(a, b);
            row.spike = spike_distance(a, b, c.spike_distance_resolution);
            row.isi_shuffled = isi_distance(b, sb);
            row.spike_shuffled = spike_distance(b, sb, c.spike_distance_resolution);
            result.rows[trial] = row;
        }
    };

    const int threads = std::max(1, c.threads);
    if (threads == 1 || c.trials < 2) {
        worker(0, c.trials);
    } else {
        std::vector<std::thread> pool;
        const std::uint32_t chunk = (c.trials + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::uint32_t b = t * chunk;
            const std::uint32_t e = std::min(c.trials, b + chunk);
            if (b < e) pool.emplace_back(worker, b, e);
        }
        for (auto& th : pool) th.join();
    }

    for (const auto& r : result.rows) {
        result.mean_isi += r.isi;
        result.mean_spike += r.spike;
        result.mean_isi_shuffled += r.isi_shuffled;
        result.mean_spike_shuffled += r.spike_shuffled;
    }
    const double n = std::max<std::size_t>(1, result.rows.size());
    result.mean_isi /= n;
    result.mean_spike /= n;
    result.mean_isi_shuffled /= n;
    result.mean_spike_shuffled /= n;
    return result;
}

// ---------------------------------------------------------------------------

Blueprint perf_topology(const std::string& arch, std::uint32_t units, double inhibitory_fraction,
                        Precision precision, std::uint64_t seed) {
    if (arch != "chain" && arch != "ring" && arch != "dense")
        throw std::invalid_argument("perf_topology: arch must be chain, ring or dense");
    const auto n_inh = static_cast<std::uint32_t>(std::lround(units * inhibitory_fraction));
    const std::uint32_t n_exc = units - n_inh;

    Blueprint bp;
    bp.meta.name = "perf-" + arch;
    bp.meta.dt = 1.0;
    bp.meta.seed = seed;
    bp.meta.precision = precision;

    bp.nodes.push_back({"bias", NodeKind::Source, {{"width", 1.0}}});

    const auto syn = [&](double density, double lo, double hi, bool inhib, std::uint32_t n_pre,
                         std::uint32_t n_post) {
        ConfigMap m;
        m["n_pre"] = double(n_pre);
        m["n_post"] = double(n_post);
        m["sign"] = std::string(inhib ? "inhibitory" : "excitatory");
        m["tau_s"] = 5.0;
        m["w_max"] = 10.0;
        m["density"] = density;
        m["w_lo"] = lo;
        m["w_hi"] = hi;
        m["delay_min"] = 1.0;
        m["delay_max"] = 4.0;
        return m;
    };

    for (int p = 1; p <= 3; ++p) {
        const std::string pid = std::to_string(p);
        ConfigMap exc;
        exc["model"] = std::string("lif");
        exc["n"] = double(n_exc);
        bp.nodes.push_back({"exc" + pid, NodeKind::Pool, std::move(exc)});
        ConfigMap inh;
        inh["model"] = std::string("lif");
        inh["n"] = double(n_inh);
        bp.nodes.push_back({"inh" + pid, NodeKind::Pool, std::move(inh)});

        bp.edges.push_back({{"bias", "out"}, {"exc" + pid, "in"}, false});
        bp.nodes.push_back({"syn_ei" + pid, NodeKind::Synapse,
                            syn(0.05, 0.1, 0.3, false, n_exc, n_inh)});
        bp.edges.push_back({{"exc" + pid, "out"}, {"syn_ei" + pid, "pre"}, false});
        bp.edges.push_back({{"syn_ei" + pid, "out"}, {"inh" + pid, "in"}, false});
        bp.nodes.push_back({"syn_ie" + pid, NodeKind::Synapse,
                            syn(0.10, 0.2, 0.5, true, n_inh, n_exc)});
        // intra-pool feedback loop reads previous-step inhibitory spikes
        bp.edges.push_back({{"inh" + pid, "out"}, {"syn_ie" + pid, "pre"}, true});
        bp.edges.push_back({{"syn_ie" + pid, "out"}, {"exc" + pid, "in"}, false});
    }

    std::vector<std::pair<int, int>> links;
    if (arch == "chain") links = {{1, 2}, {2, 3}};
    if (arch == "ring") links = {{1, 2}, {2, 3}, {3, 1}};
    if (arch == "dense") links = {{1, 2}, {1, 3}, {2, 1}, {2, 3}, {3, 1}, {3, 2}};
    for (const auto& [a, b] : links) {
        const std::string sid = "syn_x" + std::to_string(a) + std::to_string(b);
        bp.nodes.push_back({sid, NodeKind::Synapse, syn(0.02, 0.05, 0.15, false, n_exc, n_exc)});
        // backward links read previous-step spikes so the graph stays a DAG
        const bool backward = b <= a;
        bp.edges.push_back({{"exc" + std::to_string(a), "out"}, {sid, "pre"}, backward});
        bp.edges.push_back({{sid, "out"}, {"exc" + std::to_string(b), "in"}, false});
    }

    return bp;
}

std::vector<PerfRow> run_perf(const PerfConfig& cfg,
                              const std::function<void(const PerfRow&)>& on_row) {
    std::vector<PerfRow> rows;
    const auto total_steps = static_cast<std::uint64_t>(std::llround(cfg.duration_ms));
    if (total_steps == 0) return rows;

    std::string blueprint_text;
    const bool from_file = cfg.arch != "chain" && cfg.arch != "ring" && cfg.arch != "dense";
    if (from_file) {
        std::ifstream f(cfg.arch);
        if (!f) throw std::runtime_error("cannot open blueprint file: " + cfg.arch);
        std::stringstream ss;
        ss << f.rdbuf();
        blueprint_text = ss.str();
    }

    for (std::uint32_t inst = 0; inst < cfg.instantiations; ++inst) {
        // setup = parse + validate + compile + context construction, timed once
        // per instantiation from the serialized form
        const auto t_setup = Clock::now();
        std::string text = blueprint_text;
        if (!from_file) {
            Blueprint generated = perf_topology(cfg.arch, cfg.pool_units,
                                                cfg.inhibitory_fraction, cfg.precision,
                                                cfg.seed + inst);
            text = serialize_blueprint(generated);
        }
        Blueprint bp = parse_blueprint(text);
        bp.meta.seed = cfg.seed + inst;
        const Diagnostics diags = validate(bp);
        if (diags.has_errors())
            throw std::runtime_error("perf blueprint invalid:\n" + format_diagnostics(diags));
        auto plan = compile(bp);
        {
            ExecutionContext warm(plan, ModeFlags{false, true});
            (void)warm;
        }
        const double setup_s = seconds_since(t_setup);

        for (std::uint32_t interaction : cfg.interactions) {
            const std::uint64_t windows = total_steps / interaction;
            for (std::uint32_t run = 0; run < cfg.runs; ++run) {
                ExecutionContext ctx(plan, ModeFlags{false, true});
                ctx.set_finite_check_interval(100);
                InputMap in;
                in["bias"] = {1.25};

                PerfRow row;
                row.arch = cfg.arch;
                row.interaction = interaction;
                row.instantiation = inst;
                row.run = run;
                row.setup_s = setup_s;

                const auto t0 = Clock::now();
                std::uint64_t done_windows = 0;
                for (std::uint64_t w = 0; w < windows; ++w) {
                    (void)ctx.run_interaction(in, interaction);
                    ++done_windows;
                    if ((w & 15u) == 15u && seconds_since(t0) > cfg.timeout_s) break;
                }
                row.wall_s = seconds_since(t0);
                row.steps = done_windows * interaction;
                row.estimated = done_windows < windows;
                row.steps_per_s = row.steps / row.wall_s;
                if (on_row) on_row(row);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

}  // namespace spikeloom
