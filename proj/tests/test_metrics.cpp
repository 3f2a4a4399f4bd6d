#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "spikeloom/metrics.hpp"
#include "support/oracles.hpp"

using namespace spikeloom;

namespace {

SpikeTrain periodic(double period, double T, double first = 0.0) {
    std::vector<double> t;
    for (double x = first; x <= T; x += period) t.push_back(x);
    return SpikeTrain(std::move(t), T);
}

}  // namespace

TEST_CASE("spike train: construction validates ordering and bounds") {
    CHECK_THROWS_AS(SpikeTrain({1.0, 1.0}, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(SpikeTrain({-0.5}, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(SpikeTrain({3.0}, 2.0), std::invalid_argument);
    CHECK_NOTHROW(SpikeTrain({}, 2.0));
}

TEST_CASE("isi distance: identical trains give exactly zero") {
    RngStream rng(1, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = oracles::random_train(1000.0, 0.02, rng);
        CHECK(isi_distance(a, a) == 0.0);
    }
}

TEST_CASE("isi distance: phase-aligned 100 vs 200 ms periodic trains") {
    const auto a = periodic(100.0, 10000.0);
    const auto b = periodic(200.0, 10000.0);
    const double d = isi_distance(a, b);
    CHECK(d >= 0.45);
    CHECK(d <= 0.5);
    CHECK(d == doctest::Approx(oracles::isi_distance_grid(a, b, 0.01)).epsilon(1e-3));
}

TEST_CASE("isi distance: empty vs empty is zero by the auxiliary convention") {
    const SpikeTrain a({}, 500.0), b({}, 500.0);
    CHECK(isi_distance(a, b) == 0.0);
    // empty vs non-empty is well defined too
    const SpikeTrain c({250.0}, 500.0);
    CHECK(isi_distance(a, c) >= 0.0);
    CHECK(isi_distance(a, c) < 1.0);
}

TEST_CASE("isi distance: exact sweep matches the dense-grid oracle within 1e-3") {
    RngStream rng(77, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = oracles::random_train(1000.0, 0.05, rng);
        const auto b = oracles::random_train(1000.0, 0.03, rng);
        const double exact = isi_distance(a, b);
        const double grid = oracles::isi_distance_grid(a, b, 0.01);
        CHECK(std::fabs(exact - grid) <= 1e-3);
    }
}

TEST_CASE("isi/spike distances: symmetry and bounds on random pairs") {
    RngStream rng(99, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = oracles::random_train(200.0, 0.08, rng);
        const auto b = oracles::random_train(200.0, 0.05, rng);
        const double di = isi_distance(a, b);
        CHECK(di >= 0.0);
        CHECK(di < 1.0);
        CHECK(di == isi_distance(b, a));
        const double ds = spike_distance(a, b);
        CHECK(ds >= 0.0);
        CHECK(ds <= 1.0);
        CHECK(ds == spike_distance(b, a));
    }
}

TEST_CASE("isi distance: invariant under time rescaling by powers of two") {
    RngStream rng(13, 0);
    const auto a = oracles::random_train(500.0, 0.04, rng);
    const auto b = oracles::random_train(500.0, 0.04, rng);
    const double base = isi_distance(a, b);
    for (double c : {2.0, 0.5}) {
        std::vector<double> ta, tb;
        for (double t : a.times()) ta.push_back(t * c);
        for (double t : b.times()) tb.push_back(t * c);
        const SpikeTrain as(std::move(ta), 500.0 * c), bs(std::move(tb), 500.0 * c);
        CHECK(isi_distance(as, bs) == base);
        // SPIKE-distance with the grid scaled alongside
        CHECK(spike_distance(as, bs, 0.1 * c) == spike_distance(a, b, 0.1));
    }
}

TEST_CASE("spike distance: identical trains give exactly zero") {
    RngStream rng(3, 0);
    const auto a = oracles::random_train(300.0, 0.05, rng);
    CHECK(spike_distance(a, a) == 0.0);
}

TEST_CASE("spike distance: a single shifted spike, smaller shift means smaller distance") {
    std::vector<double> base;
    for (double t = 50.0; t < 1000.0; t += 50.0) base.push_back(t);
    const SpikeTrain a(std::vector<double>(base), 1000.0);

    const auto shifted = [&](double shift) {
        auto t = base;
        t[9] += shift;
        std::sort(t.begin(), t.end());
        return SpikeTrain(std::move(t), 1000.0);
    };
    const double d5 = spike_distance(a, shifted(5.0));
    const double d1 = spike_distance(a, shifted(1.0));
    CHECK(d5 > 0.0);
    CHECK(d1 > 0.0);
    CHECK(d1 < d5);
}

TEST_CASE("spike distance: agrees with the naive grid oracle") {
    RngStream rng(55, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = oracles::random_train(200.0, 0.06, rng);
        const auto b = oracles::random_train(200.0, 0.04, rng);
        CHECK(spike_distance(a, b, 0.1) ==
              doctest::Approx(oracles::spike_distance_grid(a, b, 0.1)).epsilon(1e-9));
    }
}

TEST_CASE("shuffle surrogate: tiny trains come back unchanged") {
    RngStream rng(1, 0);
    const SpikeTrain a({100.0, 250.0}, 500.0);
    const auto s = shuffle_surrogate(a, rng);
    CHECK(s.times() == a.times());
    const SpikeTrain e({}, 500.0);
    CHECK(shuffle_surrogate(e, rng).times().empty());
}

TEST_CASE("shuffle surrogate: ISI multiset and count preserved") {
    RngStream rng(31, 0);
    const auto a = oracles::random_train(1000.0, 0.05, rng);
    REQUIRE(a.count() > 10);
    const auto s = shuffle_surrogate(a, rng);
    CHECK(s.count() == a.count());
    const auto isis = [](const SpikeTrain& t) {
        std::vector<double> d;
        for (std::size_t i = 1; i < t.times().size(); ++i)
            d.push_back(t.times()[i] - t.times()[i - 1]);
        std::sort(d.begin(), d.end());
        return d;
    };
    const auto ia = isis(a);
    const auto is = isis(s);
    REQUIRE(ia.size() == is.size());
    for (std::size_t i = 0; i < ia.size(); ++i)
        CHECK(is[i] == doctest::Approx(ia[i]).epsilon(1e-9));
    // actually shuffled (overwhelmingly likely with > 10 spikes)
    CHECK(s.times() != a.times());
}

TEST_CASE("ou series: zero sigma is the constant mean") {
    RngStream rng(1, 0);
    const auto s = ou_series({2.5, 10.0, 0.0, 0.1}, 100, rng);
    for (double x : s) CHECK(x == 2.5);
}

TEST_CASE("ou series: stationary variance within 10% of sigma^2 tau / 2") {
    RngStream rng(4, 0);
    const OuParams p{0.0, 20.0, 0.3, 0.1};
    const auto s = ou_series(p, 1000000, rng);
    double mean = 0;
    for (double x : s) mean += x;
    mean /= s.size();
    double var = 0;
    for (double x : s) var += (x - mean) * (x - mean);
    var /= s.size();
    const double expected = p.sigma * p.sigma * p.tau_ou / 2.0;
    CHECK(var == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("ou series: same seed reproduces the series") {
    RngStream a(42, 1), b(42, 1);
    const OuParams p{1.0, 5.0, 0.5, 0.1};
    CHECK(ou_series(p, 1000, a) == ou_series(p, 1000, b));
}
