#include "spikeloom/training.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "spikeloom/binio.hpp"
#include "spikeloom/compile.hpp"
#include "spikeloom/interfaces.hpp"

namespace spikeloom {

using nlohmann::json;

namespace {

constexpr std::uint64_t kEnvStreamId = 1ull << 40;

void merge_syn(SynapseClassConfig& c, const json& j) {
    c.density = j.value("density", c.density);
    c.w_lo = j.value("w_lo", c.w_lo);
    c.w_hi = j.value("w_hi", c.w_hi);
    c.w_max = j.value("w_max", c.w_max);
    c.tau_s = j.value("tau_s", c.tau_s);
    c.delay_min = j.value("delay_min", c.delay_min);
    c.delay_max = j.value("delay_max", c.delay_max);
    c.plastic = j.value("plastic", c.plastic);
}

json syn_json(const SynapseClassConfig& c) {
    return json{{"density", c.density}, {"w_lo", c.w_lo},           {"w_hi", c.w_hi},
                {"w_max", c.w_max},     {"tau_s", c.tau_s},         {"delay_min", c.delay_min},
                {"delay_max", c.delay_max}, {"plastic", c.plastic}};
}

}  // namespace

std::uint32_t CartpoleExperiment::interaction_steps() const {
    const double n = interaction_ms / dt;
    const auto ni = static_cast<std::uint32_t>(std::llround(n));
    if (ni < 1 || std::fabs(n - ni) > 1e-9)
        throw std::invalid_argument("interaction_ms must be a positive multiple of dt");
    return ni;
}

CartpoleExperiment CartpoleExperiment::from_json(const std::string& text) {
    CartpoleExperiment c;
    json j = json::parse(text);
    if (j.value("config_version", 1) != 1)
        throw std::invalid_argument("unsupported cartpole config_version");
    c.seed = j.value("seed", c.seed);
    c.dt = j.value("dt", c.dt);
    c.interaction_ms = j.value("interaction_ms", c.interaction_ms);
    c.episodes = j.value("episodes", c.episodes);
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    if (j.contains("precision"))
        c.precision = precision_from_string(j.at("precision").get<std::string>());
    if (j.contains("neuromod")) {
        const json& m = j.at("neuromod");
        c.neuromod.lambda = m.value("lambda", c.neuromod.lambda);
        c.neuromod.tau_r = m.value("tau_r", c.neuromod.tau_r);
        c.neuromod.xi = m.value("xi", c.neuromod.xi);
        c.neuromod.ema_beta = m.value("ema_beta", c.neuromod.ema_beta);
        c.neuromod.n_max = m.value("n_max", c.neuromod.n_max);
    }
    if (j.contains("encoder")) {
        const json& e = j.at("encoder");
        c.enc_units = e.value("n_units", c.enc_units);
        c.enc_sigma = e.value("sigma", c.enc_sigma);
        c.enc_p_max = e.value("p_max", c.enc_p_max);
        c.x_range = e.value("x_range", c.x_range);
        c.x_dot_range = e.value("x_dot_range", c.x_dot_range);
        c.theta_range = e.value("theta_range", c.theta_range);
        c.theta_dot_range = e.value("theta_dot_range", c.theta_dot_range);
    }
    if (j.contains("integrator")) {
        const json& e = j.at("integrator");
        c.integ_tau_z = e.value("tau_z", c.integ_tau_z);
        c.integ_gain = e.value("gain", c.integ_gain);
    }
    if (j.contains("pool")) {
        const json& p = j.at("pool");
        c.n_exc = p.value("n_exc", c.n_exc);
        c.n_inh = p.value("n_inh", c.n_inh);
        c.lif_tau_m = p.value("tau_m", c.lif_tau_m);
        c.lif_v_rest = p.value("v_rest", c.lif_v_rest);
        c.lif_R = p.value("R", c.lif_R);
        c.lif_theta_base = p.value("theta_base", c.lif_theta_base);
        c.lif_a = p.value("a", c.lif_a);
        c.lif_tau_th = p.value("tau_th", c.lif_tau_th);
        c.lif_r_spike = p.value("r_spike", c.lif_r_spike);
    }
    if (j.contains("synapses")) {
        const json& s = j.at("synapses");
        if (s.contains("input")) merge_syn(c.syn_input, s.at("input"));
        if (s.contains("recurrent")) merge_syn(c.syn_recurrent, s.at("recurrent"));
        if (s.contains("exc_to_inh")) merge_syn(c.syn_exc_inh, s.at("exc_to_inh"));
        if (s.contains("inh_cross")) merge_syn(c.syn_inh_cross, s.at("inh_cross"));
    }
    if (j.contains("plasticity")) {
        const json& p = j.at("plasticity");
        c.plasticity.eta = p.value("eta", c.plasticity.eta);
        c.plasticity.alpha = p.value("alpha", c.plasticity.alpha);
        c.plasticity.beta = p.value("beta", c.plasticity.beta);
        c.plasticity.gamma = p.value("gamma", c.plasticity.gamma);
        c.plasticity.delta = p.value("delta", c.plasticity.delta);
        c.plasticity.tau_pre = p.value("tau_pre", c.plasticity.tau_pre);
        c.plasticity.tau_post = p.value("tau_post", c.plasticity.tau_post);
    }
    (void)c.interaction_steps();  // validate early
    return c;
}

std::string CartpoleExperiment::to_json() const {
    json j;
    j["config_version"] = 1;
    j["seed"] = seed;
    j["dt"] = dt;
    j["interaction_ms"] = interaction_ms;
    j["episodes"] = episodes;
    j["eval_episodes"] = eval_episodes;
    j["precision"] = std::string(to_string(precision));
    j["neuromod"] = {{"lambda", neuromod.lambda}, {"tau_r", neuromod.tau_r},
                     {"xi", neuromod.xi},         {"ema_beta", neuromod.ema_beta},
                     {"n_max", neuromod.n_max}};
    j["encoder"] = {{"n_units", enc_units},      {"sigma", enc_sigma},
                    {"p_max", enc_p_max},        {"x_range", x_range},
                    {"x_dot_range", x_dot_range}, {"theta_range", theta_range},
                    {"theta_dot_range", theta_dot_range}};
    j["integrator"] = {{"tau_z", integ_tau_z}, {"gain", integ_gain}};
    j["pool"] = {{"n_exc", n_exc},   {"n_inh", n_inh},       {"tau_m", lif_tau_m},
                 {"v_rest", lif_v_rest}, {"R", lif_R},       {"theta_base", lif_theta_base},
                 {"a", lif_a},       {"tau_th", lif_tau_th}, {"r_spike", lif_r_spike}};
    j["synapses"] = {{"input", syn_json(syn_input)},
                     {"recurrent", syn_json(syn_recurrent)},
                     {"exc_to_inh", syn_json(syn_exc_inh)},
                     {"inh_cross", syn_json(syn_inh_cross)}};
    j["plasticity"] = {{"eta", plasticity.eta},         {"alpha", plasticity.alpha},
                       {"beta", plasticity.beta},       {"gamma", plasticity.gamma},
                       {"delta", plasticity.delta},     {"tau_pre", plasticity.tau_pre},
                       {"tau_post", plasticity.tau_post}};
    return j.dump(2) + "\n";
}

std::uint64_t CartpoleExperiment::checksum() const { return fnv1a64(to_json()); }

namespace {

void add_node(Blueprint& bp, std::string id, NodeKind kind, ConfigMap cfg) {
    bp.nodes.push_back({std::move(id), kind, std::move(cfg)});
}

void add_edge(Blueprint& bp, const std::string& src, const std::string& dst,
              bool delayed = false) {
    const auto dot_s = src.rfind('.');
    const auto dot_d = dst.rfind('.');
    bp.edges.push_back({{src.substr(0, dot_s), src.substr(dot_s + 1)},
                        {dst.substr(0, dot_d), dst.substr(dot_d + 1)},
                        delayed});
}

ConfigMap syn_cfg(const SynapseClassConfig& c, std::uint32_t n_pre, std::uint32_t n_post,
                  bool inhibitory) {
    ConfigMap m;
    m["n_pre"] = double(n_pre);
    m["n_post"] = double(n_post);
    m["sign"] = std::string(inhibitory ? "inhibitory" : "excitatory");
    m["tau_s"] = c.tau_s;
    m["w_max"] = c.w_max;
    m["density"] = c.density;
    m["w_lo"] = c.w_lo;
    m["w_hi"] = c.w_hi;
    m["delay_min"] = double(c.delay_min);
    m["delay_max"] = double(c.delay_max);
    return m;
}

ConfigMap plast_cfg(const PlasticityConfig& p, const std::string& synapse) {
    ConfigMap m;
    m["synapse"] = synapse;
    m["eta"] = p.eta;
    m["alpha"] = p.alpha;
    m["beta"] = p.beta;
    m["gamma"] = p.gamma;
    m["delta"] = p.delta;
    m["tau_pre"] = p.tau_pre;
    m["tau_post"] = p.tau_post;
    return m;
}

}  // namespace

Blueprint cartpole_blueprint(const CartpoleExperiment& cfg) {
    Blueprint bp;
    bp.meta.name = "cartpole-agent";
    bp.meta.seed = cfg.seed;
    bp.meta.dt = cfg.dt;
    bp.meta.precision = cfg.precision;

    struct Dim {
        const char* name;
        double lo, hi;
    };
    const Dim dims[4] = {{"x", -cfg.x_range, cfg.x_range},
                         {"xdot", -cfg.x_dot_range, cfg.x_dot_range},
                         {"theta", -cfg.theta_range, cfg.theta_range},
                         {"thetadot", -cfg.theta_dot_range, cfg.theta_dot_range}};

    for (const auto& d : dims) {
        add_node(bp, std::string("obs_") + d.name, NodeKind::Source, {{"width", 1.0}});
        ConfigMap sc;
        sc["n_units"] = double(cfg.enc_units);
        sc["lo"] = d.lo;
        sc["hi"] = d.hi;
        sc["topology"] = std::string("line");
        sc["sigma"] = cfg.enc_sigma;
        sc["p_max"] = cfg.enc_p_max;
        add_node(bp, std::string("spk_") + d.name, NodeKind::Spiker, std::move(sc));
        add_edge(bp, std::string("obs_") + d.name + ".out", std::string("spk_") + d.name + ".in");
    }

    add_node(bp, "mod_left", NodeKind::Source, {{"width", 1.0}});
    add_node(bp, "mod_right", NodeKind::Source, {{"width", 1.0}});

    ConfigMap lif;
    lif["model"] = std::string("lif");
    lif["tau_m"] = cfg.lif_tau_m;
    lif["v_rest"] = cfg.lif_v_rest;
    lif["R"] = cfg.lif_R;
    lif["theta_base"] = cfg.lif_theta_base;
    lif["a"] = cfg.lif_a;
    lif["tau_th"] = cfg.lif_tau_th;
    lif["r_spike"] = cfg.lif_r_spike;

    for (const char* side : {"left", "right"}) {
        const std::string s = side;
        const std::string other = s == "left" ? "right" : "left";
        ConfigMap exc = lif;
        exc["n"] = double(cfg.n_exc);
        add_node(bp, "exc_" + s, NodeKind::Pool, std::move(exc));
        ConfigMap inh = lif;
        inh["n"] = double(cfg.n_inh);
        add_node(bp, "inh_" + s, NodeKind::Pool, std::move(inh));

        for (const auto& d : dims) {
            const std::string syn = "syn_in_" + std::string(d.name) + "_" + s;
            add_node(bp, syn, NodeKind::Synapse,
                     syn_cfg(cfg.syn_input, cfg.enc_units, cfg.n_exc, false));
            add_edge(bp, "spk_" + std::string(d.name) + ".out", syn + ".pre");
            add_edge(bp, syn + ".out", "exc_" + s + ".in");
            if (cfg.syn_input.plastic) {
                const std::string pl = "pl_in_" + std::string(d.name) + "_" + s;
                add_node(bp, pl, NodeKind::Plasticity, plast_cfg(cfg.plasticity, syn));
                add_edge(bp, "exc_" + s + ".out", pl + ".post");
                add_edge(bp, "mod_" + s + ".out", pl + ".mod");
            }
        }

        add_node(bp, "syn_rec_" + s, NodeKind::Synapse,
                 syn_cfg(cfg.syn_recurrent, cfg.n_exc, cfg.n_exc, false));
        add_edge(bp, "exc_" + s + ".out", "syn_rec_" + s + ".pre", /*delayed=*/true);
        add_edge(bp, "syn_rec_" + s + ".out", "exc_" + s + ".in");
        if (cfg.syn_recurrent.plastic) {
            add_node(bp, "pl_rec_" + s, NodeKind::Plasticity,
                     plast_cfg(cfg.plasticity, "syn_rec_" + s));
            add_edge(bp, "exc_" + s + ".out", "pl_rec_" + s + ".post");
            add_edge(bp, "mod_" + s + ".out", "pl_rec_" + s + ".mod");
        }

        add_node(bp, "syn_ei_" + s, NodeKind::Synapse,
                 syn_cfg(cfg.syn_exc_inh, cfg.n_exc, cfg.n_inh, false));
        add_edge(bp, "exc_" + s + ".out", "syn_ei_" + s + ".pre");
        add_edge(bp, "syn_ei_" + s + ".out", "inh_" + s + ".in");

        // activity on one side inhibits the other side's excitatory pool
        add_node(bp, "syn_cross_" + s, NodeKind::Synapse,
                 syn_cfg(cfg.syn_inh_cross, cfg.n_inh, cfg.n_exc, true));
        add_edge(bp, "inh_" + s + ".out", "syn_cross_" + s + ".pre", /*delayed=*/true);
        add_edge(bp, "syn_cross_" + s + ".out", "exc_" + other + ".in");
    }

    ConfigMap ic;
    ic["k"] = 2.0;
    ic["tau_z"] = cfg.integ_tau_z;
    ic["gain"] = cfg.integ_gain;
    add_node(bp, "integ", NodeKind::Integrator, std::move(ic));
    add_edge(bp, "exc_left.out", "integ.in0");
    add_edge(bp, "exc_right.out", "integ.in1");
    add_node(bp, "action", NodeKind::Sink, {});
    add_edge(bp, "integ.out", "action.in");

    return bp;
}

std::string episode_record_json(const EpisodeRecord& r, std::uint64_t agent_seed) {
    json j;
    j["episode"] = r.episode;
    j["steps"] = r.steps;
    j["reason"] = std::string(to_string(r.reason));
    j["n_ema"] = r.n_ema_after;
    j["mod_left"] = r.mod_left;
    j["mod_right"] = r.mod_right;
    j["agent_seed"] = agent_seed;
    return j.dump();
}

namespace {

InputMap observation_inputs(const CartpoleState& s, double lambda) {
    InputMap in;
    in["obs_x"] = {s.x};
    in["obs_xdot"] = {s.x_dot};
    in["obs_theta"] = {s.theta};
    in["obs_thetadot"] = {s.theta_dot};
    in["mod_left"] = {lambda};
    in["mod_right"] = {lambda};
    return in;
}

CartAction pick_action(const std::vector<double>& traces) {
    return greedy_action(traces) == 0 ? CartAction::Left : CartAction::Right;
}

}  // namespace

TrainOutcome train_run(const CartpoleExperiment& cfg, std::uint64_t seed,
                       std::uint32_t episodes) {
    if (episodes < 1) throw std::invalid_argument("train_run: episodes must be >= 1");
    const Blueprint bp = cartpole_blueprint(cfg);
    auto plan = compile(bp);
    ExecutionContext ctx(plan, seed, ModeFlags{false, true});
    ctx.set_finite_check_interval(100);

    CartpoleEnv env;
    env.n_max = cfg.neuromod.n_max;
    RngStream env_rng(seed, kEnvStreamId);
    const std::uint32_t n_steps = cfg.interaction_steps();

    TrainOutcome out;
    double n_ema = 0.0;

    for (std::uint32_t ep = 0; ep < episodes; ++ep) {
        CartpoleState s = env.reset(env_rng);
        bool done = false;
        Termination reason = Termination::Solved;
        try {
            while (!done) {
                const InputMap in = observation_inputs(s, cfg.neuromod.lambda);
                const OutputMap res = ctx.run_interaction(in, n_steps);
                const CartAction a = pick_action(res.at("action"));
                const auto step = env.step(s, a);
                s = step.state;
                done = step.done;
                reason = step.reason;
            }
        } catch (const EngineError& e) {
            throw std::runtime_error("episode " + std::to_string(ep) + ": " + e.what());
        }

        EpisodeRecord rec;
        rec.episode = ep;
        rec.steps = s.steps_elapsed;
        rec.reason = reason;

        const double r = r_step(reason);
        if (r != 0.0) {
            // one extra interaction window on the final observation; the routed
            // signal decays within the window while the observation is held
            const MotorRouting route = motor_routing(reason);
            InputMap in = observation_inputs(s, 0.0);
            for (std::uint32_t k = 0; k < n_steps; ++k) {
                const double t = static_cast<double>(k) * cfg.dt;
                const double m = modulatory_signal(n_ema, cfg.neuromod.n_max, r, t, cfg.neuromod);
                const double m_sup = m;
                const double m_oth = -cfg.neuromod.xi * m;
                in["mod_left"] = {route.suppressed == CartAction::Left ? m_sup : m_oth};
                in["mod_right"] = {route.suppressed == CartAction::Right ? m_sup : m_oth};
                if (k == 0) {
                    rec.mod_left = in["mod_left"][0];
                    rec.mod_right = in["mod_right"][0];
                }
                ctx.advance(in);
            }
        }

        n_ema = ema_update(n_ema, s.steps_elapsed, cfg.neuromod.ema_beta);
        rec.n_ema_after = n_ema;
        out.records.push_back(rec);
    }

    out.n_ema = n_ema;
    out.snapshot = ctx.snapshot();
    return out;
}

std::vector<EpisodeRecord> eval_run(ExecutionContext& ctx, const CartpoleExperiment& cfg,
                                    std::uint64_t eval_seed, std::uint32_t episodes) {
    ctx.set_learning(false);
    CartpoleEnv env;
    env.n_max = cfg.neuromod.n_max;
    RngStream env_rng(eval_seed, kEnvStreamId);
    const std::uint32_t n_steps = cfg.interaction_steps();

    std::vector<EpisodeRecord> records;
    for (std::uint32_t ep = 0; ep < episodes; ++ep) {
        CartpoleState s = env.reset(env_rng);
        bool done = false;
        Termination reason = Termination::Solved;
        while (!done) {
            const InputMap in = observation_inputs(s, 0.0);
            const OutputMap res = ctx.run_interaction(in, n_steps);
            const CartAction a = pick_action(res.at("action"));
            const auto step = env.step(s, a);
            s = step.state;
            done = step.done;
            reason = step.reason;
        }
        EpisodeRecord rec;
        rec.episode = ep;
        rec.steps = s.steps_elapsed;
        rec.reason = reason;
        records.push_back(rec);
    }
    return records;
}

double random_policy_mean_steps(std::uint64_t seed, std::uint32_t episodes,
                                std::uint32_t n_max) {
    CartpoleEnv env;
    env.n_max = n_max;
    RngStream rng(seed, kEnvStreamId + 1);
    double total = 0.0;
    for (std::uint32_t ep = 0; ep < episodes; ++ep) {
        CartpoleState s = env.reset(rng);
        bool done = false;
        while (!done) {
            const CartAction a = rng.bernoulli(0.5) ? CartAction::Left : CartAction::Right;
            const auto step = env.step(s, a);
            s = step.state;
            done = step.done;
        }
        total += s.steps_elapsed;
    }
    return total / episodes;
}

}  // namespace spikeloom
