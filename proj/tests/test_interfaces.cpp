#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spikeloom/interfaces.hpp"
#include "spikeloom/rng.hpp"

using namespace spikeloom;

TEST_CASE("spiker: empirical rate at the preferred point is within 3 sigma of p_max") {
    TopologySpec spec;
    spec.kind = Topology::Line;
    spec.lo = -1.0;
    spec.hi = 1.0;
    spec.n_units = 9;
    spec.sigma = 0.2;  // narrow tuning
    spec.p_max = 0.5;
    spec.check();
    RngStream rng(5, 0);

    const double value = spec.preferred(4);  // center unit
    const int n = 10000;
    std::vector<int> counts(spec.n_units, 0);
    std::vector<std::uint8_t> spikes(spec.n_units);
    for (int k = 0; k < n; ++k) {
        spiker_encode(value, spec, rng, spikes);
        for (std::uint32_t u = 0; u < spec.n_units; ++u) counts[u] += spikes[u];
    }
    const double sigma_bin = std::sqrt(n * spec.p_max * (1 - spec.p_max));
    CHECK(std::fabs(counts[4] - n * spec.p_max) <= 3 * sigma_bin);
    // narrow sigma: neighbours are nearly silent
    CHECK(counts[3] < n / 1000 + 10);
    CHECK(counts[5] < n / 1000 + 10);
}

TEST_CASE("spiker: ring topology glues the borders") {
    TopologySpec spec;
    spec.kind = Topology::Ring;
    spec.lo = 0.0;
    spec.hi = 2.0 * 3.14159265358979;
    spec.n_units = 16;
    spec.sigma = 1.5;
    spec.p_max = 0.4;
    for (std::uint32_t u = 0; u < spec.n_units; ++u)
        CHECK(spiker_rate(spec.lo, u, spec) == spiker_rate(spec.hi, u, spec));
    // and a wrapped-distance sanity point: last unit is close to value lo
    CHECK(spiker_rate(spec.lo, spec.n_units - 1, spec) >
          spiker_rate(spec.lo, spec.n_units / 2, spec));
}

TEST_CASE("spiker: p_max = 0 emits nothing") {
    TopologySpec spec;
    spec.lo = 0;
    spec.hi = 1;
    spec.n_units = 8;
    spec.p_max = 0.0;
    RngStream rng(1, 0);
    std::vector<std::uint8_t> spikes(8);
    for (int k = 0; k < 100; ++k) {
        spiker_encode(0.5, spec, rng, spikes);
        for (auto s : spikes) CHECK(s == 0);
    }
}

TEST_CASE("spiker: same (value, seed, counter) reproduces the same spikes") {
    TopologySpec spec;
    spec.lo = -2;
    spec.hi = 2;
    spec.n_units = 32;
    RngStream a(9, 3), b(9, 3);
    std::vector<std::uint8_t> sa(32), sb(32);
    for (int k = 0; k < 50; ++k) {
        spiker_encode(0.37, spec, a, sa);
        spiker_encode(0.37, spec, b, sb);
        CHECK(sa == sb);
    }
}

TEST_CASE("spiker: line rate profile is unimodal in unit index") {
    TopologySpec spec;
    spec.lo = -1;
    spec.hi = 1;
    spec.n_units = 21;
    spec.sigma = 2.0;
    RngStream rng(4, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const double value = rng.uniform(-1.2, 1.2);  // clipping included
        std::vector<double> rate(spec.n_units);
        for (std::uint32_t u = 0; u < spec.n_units; ++u) rate[u] = spiker_rate(value, u, spec);
        // rises to the peak, falls after
        std::size_t peak = 0;
        for (std::size_t u = 1; u < rate.size(); ++u)
            if (rate[u] > rate[peak]) peak = u;
        for (std::size_t u = 0; u + 1 < rate.size(); ++u) {
            if (u < peak) CHECK(rate[u] <= rate[u + 1] + 1e-15);
            if (u >= peak) CHECK(rate[u + 1] <= rate[u] + 1e-15);
        }
    }
}

TEST_CASE("integrator: zero counts decay, closed forms hold") {
    IntegratorParams<double> p{50.0, 0.1, 1.0};
    auto st = IntegratorState<double>::zeros(2);
    st.z[0] = 0.8;
    std::vector<std::uint32_t> counts = {0, 1};
    integrator_step(st, counts, p);
    CHECK(st.z[0] == doctest::Approx(0.8 * std::exp(-1.0 / 50.0)).epsilon(1e-12));
    // z = 0 and one spike: gain * 1 * (1 - 0) = 0.1
    CHECK(st.z[1] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("integrator: saturation keeps z in [0, 1] for any input") {
    IntegratorParams<double> p{20.0, 0.5, 1.0};
    auto st = IntegratorState<double>::zeros(1);
    st.z[0] = 1.0;
    RngStream rng(2, 0);
    for (int k = 0; k < 500; ++k) {
        std::vector<std::uint32_t> counts = {static_cast<std::uint32_t>(rng.uniform_int(200))};
        integrator_step(st, counts, p);
        CHECK(st.z[0] >= 0.0);
        CHECK(st.z[0] <= 1.0);
    }
}

TEST_CASE("greedy action: argmax with low-index tie break") {
    CHECK(greedy_action(std::vector<double>{0.2, 0.7}) == 1);
    CHECK(greedy_action(std::vector<double>{0.5, 0.5}) == 0);
    CHECK(greedy_action(std::vector<double>{0.3}) == 0);
    CHECK_THROWS_AS(greedy_action(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("greedy action: invariant under positive rescaling") {
    RngStream rng(8, 0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> z(4);
        for (auto& x : z) x = rng.uniform01();
        const auto base = greedy_action(z);
        for (double c : {0.1, 3.0, 1e6}) {
            std::vector<double> scaled = z;
            for (auto& x : scaled) x *= c;
            CHECK(greedy_action(scaled) == base);
        }
    }
}
