#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spikeloom/cartpole.hpp"
#include "spikeloom/compile.hpp"
#include "spikeloom/training.hpp"
#include "support/oracles.hpp"

using namespace spikeloom;

TEST_CASE("env_reset: all state variables land in the init box, reproducibly") {
    CartpoleEnv env;
    RngStream a(3, 0), b(3, 0);
    for (int k = 0; k < 100; ++k) {
        const auto s = env.reset(a);
        CHECK(std::fabs(s.x) <= 0.05);
        CHECK(std::fabs(s.x_dot) <= 0.05);
        CHECK(std::fabs(s.theta) <= 0.05);
        CHECK(std::fabs(s.theta_dot) <= 0.05);
        CHECK(s.steps_elapsed == 0);
        const auto t = env.reset(b);
        CHECK(s.x == t.x);
        CHECK(s.theta_dot == t.theta_dot);
    }
}

TEST_CASE("env_reset: per-dimension means near zero over many resets") {
    CartpoleEnv env;
    RngStream rng(11, 0);
    const int n = 10000;
    double mx = 0, mxd = 0, mt = 0, mtd = 0;
    for (int k = 0; k < n; ++k) {
        const auto s = env.reset(rng);
        mx += s.x;
        mxd += s.x_dot;
        mt += s.theta;
        mtd += s.theta_dot;
    }
    // uniform on [-0.05, 0.05]: sigma_mean = 0.1/sqrt(12)/sqrt(n)
    const double tol = 3.0 * 0.1 / std::sqrt(12.0) / std::sqrt(double(n));
    CHECK(std::fabs(mx / n) <= tol);
    CHECK(std::fabs(mxd / n) <= tol);
    CHECK(std::fabs(mt / n) <= tol);
    CHECK(std::fabs(mtd / n) <= tol);
}

TEST_CASE("env_step: mirror symmetry of the dynamics") {
    CartpoleEnv env;
    RngStream rng(7, 0);
    for (int k = 0; k < 1000; ++k) {
        CartpoleState s;
        s.x = rng.uniform(-2.0, 2.0);
        s.x_dot = rng.uniform(-2.0, 2.0);
        s.theta = rng.uniform(-0.2, 0.2);
        s.theta_dot = rng.uniform(-2.0, 2.0);
        CartpoleState m;
        m.x = -s.x;
        m.x_dot = -s.x_dot;
        m.theta = -s.theta;
        m.theta_dot = -s.theta_dot;
        const auto r1 = env.step(s, CartAction::Right);
        const auto r2 = env.step(m, CartAction::Left);
        CHECK(r1.state.x == doctest::Approx(-r2.state.x).epsilon(1e-12));
        CHECK(r1.state.x_dot == doctest::Approx(-r2.state.x_dot).epsilon(1e-12));
        CHECK(r1.state.theta == doctest::Approx(-r2.state.theta).epsilon(1e-12));
        CHECK(r1.state.theta_dot == doctest::Approx(-r2.state.theta_dot).epsilon(1e-12));
    }
}

TEST_CASE("env_step: pushing right from upright rest moves cart right, pole left") {
    CartpoleEnv env;
    CartpoleState s;  // zeros
    const auto r = env.step(s, CartAction::Right);
    CHECK(r.state.x_dot > 0.0);
    CHECK(r.state.theta_dot < 0.0);
}

TEST_CASE("env_step: matches the independent reference to 1e-10 relative") {
    CartpoleEnv env;
    RngStream rng(99, 0);
    for (int k = 0; k < 100000; ++k) {
        CartpoleState s;
        s.x = rng.uniform(-2.3, 2.3);
        s.x_dot = rng.uniform(-3.0, 3.0);
        s.theta = rng.uniform(-0.2, 0.2);
        s.theta_dot = rng.uniform(-3.0, 3.0);
        const bool right = rng.bernoulli(0.5);
        const auto got = env.step(s, right ? CartAction::Right : CartAction::Left).state;
        const auto ref = oracles::cartpole_reference_step(s, right);
        CHECK(got.x == doctest::Approx(ref.x).epsilon(1e-10));
        CHECK(got.x_dot == doctest::Approx(ref.x_dot).epsilon(1e-10));
        CHECK(got.theta == doctest::Approx(ref.theta).epsilon(1e-10));
        CHECK(got.theta_dot == doctest::Approx(ref.theta_dot).epsilon(1e-10));
    }
}

TEST_CASE("env_step: 500 alive steps end as solved; finished episodes refuse stepping") {
    CartpoleEnv env;
    CartpoleState s;
    s.theta_dot = 0.0;
    bool done = false;
    Termination reason{};
    int guard = 0;
    // alternate pushes to keep the pole up from the exact upright state
    while (!done && guard < 600) {
        const CartAction a = (s.theta + 0.1 * s.theta_dot) > 0 ? CartAction::Right
                                                               : CartAction::Left;
        const auto r = env.step(s, a);
        s = r.state;
        done = r.done;
        reason = r.reason;
        ++guard;
    }
    REQUIRE(done);
    CHECK(reason == Termination::Solved);
    CHECK(s.steps_elapsed == 500);
    CHECK_THROWS_AS(env.step(s, CartAction::Left), std::logic_error);
}

TEST_CASE("r_step: sparse reward cases") {
    CHECK(r_step(Termination::PoleFellLeft) == -1.0);
    CHECK(r_step(Termination::PoleFellRight) == -1.0);
    CHECK(r_step(Termination::OobLeft) == -1.0);
    CHECK(r_step(Termination::OobRight) == -1.0);
    CHECK(r_step(Termination::Solved) == 0.0);
}

TEST_CASE("modulatory_signal: Eq-style cases") {
    NeuromodConfig cfg;
    cfg.lambda = 1e-3;
    cfg.tau_r = 0.02;
    CHECK(modulatory_signal(250.0, 500.0, 0.0, 0.0, cfg) == 1e-3);
    CHECK(modulatory_signal(500.0, 500.0, -1.0, 0.0, cfg) == -1.0);
    CHECK(modulatory_signal(125.0, 500.0, -1.0, 0.0, cfg) == -0.5);
    // exponential decay within the window
    const double m0 = modulatory_signal(400.0, 500.0, -1.0, 0.0, cfg);
    const double m25 = modulatory_signal(400.0, 500.0, -1.0, 25.0, cfg);
    CHECK(m25 == doctest::Approx(m0 * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("modulatory_signal: magnitude non-increasing in t and bounded by the EMA factor") {
    NeuromodConfig cfg;
    double prev = 1e9;
    for (double t = 0.0; t <= 50.0; t += 1.0) {
        const double m = std::fabs(modulatory_signal(321.0, 500.0, -1.0, t, cfg));
        CHECK(m <= prev);
        CHECK(m <= std::sqrt(321.0 / 500.0) + 1e-12);
        prev = m;
    }
}

TEST_CASE("motor_routing: physics-consistent suppression map") {
    CHECK(motor_routing(Termination::PoleFellRight).suppressed == CartAction::Left);
    CHECK(motor_routing(Termination::PoleFellLeft).suppressed == CartAction::Right);
    CHECK(motor_routing(Termination::OobLeft).suppressed == CartAction::Left);
    CHECK(motor_routing(Termination::OobRight).suppressed == CartAction::Right);
    CHECK_THROWS_AS(motor_routing(Termination::Solved), std::logic_error);
}

TEST_CASE("motor_routing: pushing along the fall accelerates it (physics oracle)") {
    CartpoleEnv env;
    CartpoleState s;
    s.theta = 0.15;  // falling right
    auto push_left = env.step(s, CartAction::Left).state;
    auto push_right = env.step(s, CartAction::Right).state;
    CHECK(push_left.theta_dot > push_right.theta_dot);  // left push worsens rightward fall
}

TEST_CASE("ema_update: arithmetic and contraction") {
    CHECK(ema_update(77.0, 500.0, 1.0) == 500.0);
    CHECK(ema_update(100.0, 500.0, 0.1) == doctest::Approx(140.0).epsilon(1e-12));
    double ema = 0.0;
    double prev_gap = 300.0;
    for (int k = 0; k < 50; ++k) {
        ema = ema_update(ema, 300.0, 0.2);
        const double gap = std::fabs(300.0 - ema);
        CHECK(gap <= prev_gap);
        prev_gap = gap;
    }
    CHECK(ema == doctest::Approx(300.0).epsilon(1e-4));
}

TEST_CASE("cartpole blueprint: architecture constants and validity") {
    CartpoleExperiment cfg;
    const Blueprint bp = cartpole_blueprint(cfg);
    const auto diags = validate(bp);
    INFO(format_diagnostics(diags));
    CHECK_FALSE(diags.has_errors());
    // dual 256/64 populations with cross-side inhibition
    CHECK(cfg_int(bp.find("exc_left")->config, "n", 0) == 256);
    CHECK(cfg_int(bp.find("exc_right")->config, "n", 0) == 256);
    CHECK(cfg_int(bp.find("inh_left")->config, "n", 0) == 64);
    CHECK(cfg_int(bp.find("inh_right")->config, "n", 0) == 64);
    CHECK(cfg_str(bp.find("syn_cross_left")->config, "sign", "") == "inhibitory");
    // cross synapses target the opposite side
    bool cross_ok = false;
    for (const auto& e : bp.edges)
        if (e.src.node == "syn_cross_left" && e.dst.node == "exc_right") cross_ok = true;
    CHECK(cross_ok);
    // defaults: 50 engine steps per interaction at dt = 1 ms
    CHECK(cfg.interaction_steps() == 50);
    CHECK(cfg.episodes == 1000);
    CHECK(cfg.eval_episodes == 250);
    CHECK(cfg.neuromod.n_max == 500);
}

TEST_CASE("experiment config: JSON round trip preserves the checksum") {
    CartpoleExperiment cfg;
    cfg.seed = 77;
    cfg.plasticity.eta = 0.123;
    const std::string text = cfg.to_json();
    const CartpoleExperiment back = CartpoleExperiment::from_json(text);
    CHECK(back.seed == 77);
    CHECK(back.plasticity.eta == 0.123);
    CHECK(back.checksum() == cfg.checksum());
    // partial configs overlay the defaults
    const auto partial = CartpoleExperiment::from_json(R"({"episodes": 12})");
    CHECK(partial.episodes == 12);
    CHECK(partial.n_exc == 256);
}

TEST_CASE("train_run: lambda = 0 and eta = 0 leave the weights untouched") {
    CartpoleExperiment cfg;
    cfg.neuromod.lambda = 0.0;
    cfg.plasticity.eta = 0.0;
    cfg.n_exc = 32;  // desk-size for speed
    cfg.n_inh = 8;
    cfg.enc_units = 8;
    const auto outcome = train_run(cfg, 5, 3);
    ExecutionContext trained = ExecutionContext::restore(outcome.snapshot);
    ExecutionContext fresh(compile(cartpole_blueprint(cfg)), 5, ModeFlags{});
    CHECK(trained.weights_checksum() == fresh.weights_checksum());
    CHECK(outcome.records.size() == 3);
}

TEST_CASE("train_run: modulatory delivery is sparse and routed") {
    CartpoleExperiment cfg;
    cfg.n_exc = 32;
    cfg.n_inh = 8;
    cfg.enc_units = 8;
    const auto outcome = train_run(cfg, 9, 5);
    for (const auto& rec : outcome.records) {
        if (rec.reason == Termination::Solved) {
            CHECK(rec.mod_left == 0.0);
            CHECK(rec.mod_right == 0.0);
        } else {
            // one motor gets the full signal, the other -xi times it
            const double big = std::max(std::fabs(rec.mod_left), std::fabs(rec.mod_right));
            const double small = std::min(std::fabs(rec.mod_left), std::fabs(rec.mod_right));
            if (big > 0.0)
                CHECK(small == doctest::Approx(cfg.neuromod.xi * big).epsilon(1e-9));
            // suppressed motor receives a non-positive signal (r = -1)
            CHECK(std::min(rec.mod_left, rec.mod_right) <= 0.0);
        }
    }
}

TEST_CASE("train_run: xi = 0 delivers exactly zero to the other motor") {
    CartpoleExperiment cfg;
    cfg.n_exc = 32;
    cfg.n_inh = 8;
    cfg.enc_units = 8;
    cfg.neuromod.xi = 0.0;
    const auto outcome = train_run(cfg, 12, 4);
    bool saw_failure = false;
    for (const auto& rec : outcome.records) {
        if (rec.reason == Termination::Solved) continue;
        saw_failure = true;
        if (rec.n_ema_after > 0.0)
            CHECK(std::max(rec.mod_left, rec.mod_right) == 0.0);  // other motor exactly 0
    }
    CHECK(saw_failure);
}

TEST_CASE("train/eval: deterministic from the seed; eval is frozen") {
    CartpoleExperiment cfg;
    cfg.n_exc = 32;
    cfg.n_inh = 8;
    cfg.enc_units = 8;
    const auto o1 = train_run(cfg, 21, 4);
    const auto o2 = train_run(cfg, 21, 4);
    REQUIRE(o1.records.size() == o2.records.size());
    for (std::size_t i = 0; i < o1.records.size(); ++i) {
        CHECK(o1.records[i].steps == o2.records[i].steps);
        CHECK(o1.records[i].reason == o2.records[i].reason);
    }
    CHECK(o1.snapshot == o2.snapshot);

    ExecutionContext ctx = ExecutionContext::restore(o1.snapshot);
    const auto w_before = ctx.weights_checksum();
    const auto e1 = eval_run(ctx, cfg, 99, 5);
    CHECK(ctx.weights_checksum() == w_before);
    CHECK(e1.size() == 5);
    ExecutionContext ctx2 = ExecutionContext::restore(o1.snapshot);
    const auto e2 = eval_run(ctx2, cfg, 99, 5);
    for (std::size_t i = 0; i < e1.size(); ++i) CHECK(e1[i].steps == e2[i].steps);
}

TEST_CASE("episode record serializes to one JSON line") {
    EpisodeRecord r;
    r.episode = 3;
    r.steps = 41;
    r.reason = Termination::OobRight;
    r.n_ema_after = 38.5;
    const std::string line = episode_record_json(r, 7);
    CHECK(line.find("\"steps\":41") != std::string::npos);
    CHECK(line.find("oob_right") != std::string::npos);
    CHECK(line.find('\n') == std::string::npos);
}
