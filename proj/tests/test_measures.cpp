#include <catch2/catch_amalgamated.hpp>

#include "motlp/json_io.hpp"
#include "motlp/measures.hpp"
#include "motlp/rng.hpp"

using namespace motlp;

TEST_CASE("normalize_merge merges duplicates and renormalizes") {
    auto m = measure1d({{0.0, 0.5}, {0.0, 0.5}});
    REQUIRE(m.size() == 1);
    REQUIRE(m.atoms[0].x[0] == 0.0);
    REQUIRE(m.atoms[0].w == 1.0);

    auto m2 = measure1d({{0.0, 1.0}, {1.0, 1.0}});
    REQUIRE(m2.size() == 2);
    CHECK(m2.atoms[0].w == Catch::Approx(0.5).margin(1e-15));
    CHECK(m2.atoms[1].w == Catch::Approx(0.5).margin(1e-15));

    auto m3 = measure1d({{0.0, 0.2}, {1.0, 0.3}, {0.0, 0.5}});
    REQUIRE(m3.size() == 2);
    CHECK(m3.atoms[0].w == Catch::Approx(0.7).margin(1e-15));
    CHECK(m3.atoms[1].w == Catch::Approx(0.3).margin(1e-15));
}

TEST_CASE("normalize_merge rejects empty and zero-mass input") {
    CHECK_THROWS_AS(normalize_merge(1, {}), Error);
    try {
        normalize_merge(1, {{Point{0.0}, 0.0}});
        FAIL("expected EmptyMeasure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyMeasure);
    }
}

TEST_CASE("moments on spec examples") {
    auto r1 = moments(dirac1(0.0), 2.0);
    CHECK(r1.mean[0] == 0.0);
    CHECK(r1.abs_moment == 0.0);
    CHECK(r1.second_moment == 0.0);

    auto r2 = moments(measure1d({{-1.0, 0.5}, {1.0, 0.5}}), 3.0);
    CHECK(r2.mean[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(r2.abs_moment == Catch::Approx(1.0).margin(1e-15));
    CHECK(r2.moment_theta == Catch::Approx(1.0).margin(1e-15));

    auto r3 = moments(measure1d({{0.0, 0.5}, {2.0, 0.5}}), 2.0);
    CHECK(r3.mean[0] == Catch::Approx(1.0).margin(1e-15));
    CHECK(r3.abs_moment == Catch::Approx(1.0).margin(1e-15));
    CHECK(r3.second_moment == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("moments are additive under mixtures") {
    CounterRng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Atom> a, b, mix;
        int na = 1 + static_cast<int>(rng.next_u64() % 5);
        int nb = 1 + static_cast<int>(rng.next_u64() % 5);
        for (int i = 0; i < na; ++i) {
            Atom at{Point{rng.next_uniform(-3.0, 3.0)}, rng.next_uniform(0.1, 1.0)};
            a.push_back(at);
        }
        for (int i = 0; i < nb; ++i) {
            Atom at{Point{rng.next_uniform(-3.0, 3.0)}, rng.next_uniform(0.1, 1.0)};
            b.push_back(at);
        }
        auto ma = normalize_merge(1, a);
        auto mb = normalize_merge(1, b);
        for (const auto& at : ma.atoms) mix.push_back({at.x, 0.5 * at.w});
        for (const auto& at : mb.atoms) mix.push_back({at.x, 0.5 * at.w});
        auto mm = normalize_merge(1, mix);
        auto ra = moments(ma, 2.0), rb = moments(mb, 2.0), rm = moments(mm, 2.0);
        CHECK(rm.mean[0] == Catch::Approx(0.5 * (ra.mean[0] + rb.mean[0])).margin(1e-12));
        CHECK(rm.abs_moment ==
              Catch::Approx(0.5 * (ra.abs_moment + rb.abs_moment)).margin(1e-12));
        CHECK(rm.second_moment ==
              Catch::Approx(0.5 * (ra.second_moment + rb.second_moment)).margin(1e-12));
    }
}

TEST_CASE("convex order on spec examples") {
    auto delta0 = dirac1(0.0);
    auto spread = measure1d({{-1.0, 0.5}, {1.0, 0.5}});
    CHECK(convex_order_1d(delta0, spread));
    CHECK_FALSE(convex_order_1d(delta0, dirac1(1.0)));  // means differ
    CHECK_FALSE(convex_order_1d(spread, delta0));        // call at 0 decreases
}

TEST_CASE("convex order is reflexive and antisymmetric") {
    CounterRng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Atom> a;
        int na = 1 + static_cast<int>(rng.next_u64() % 6);
        for (int i = 0; i < na; ++i)
            a.push_back({Point{rng.next_uniform(-2.0, 2.0)}, rng.next_uniform(0.05, 1.0)});
        auto mu = normalize_merge(1, a);
        CHECK(convex_order_1d(mu, mu));
    }
    // mu <= nu and nu <= mu forces equality of the atom sets
    auto mu = measure1d({{0.0, 0.25}, {1.0, 0.75}});
    auto nu = measure1d({{0.0, 0.25}, {1.0, 0.75}});
    CHECK(convex_order_1d(mu, nu));
    CHECK(convex_order_1d(nu, mu));
    REQUIRE(mu.size() == nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        CHECK(mu.atoms[i].x[0] == nu.atoms[i].x[0]);
        CHECK(mu.atoms[i].w == nu.atoms[i].w);
    }
}

TEST_CASE("convex order requires dimension one") {
    DiscreteMeasure m2 = normalize_merge(2, {{Point{0.0, 0.0}, 1.0}});
    try {
        convex_order_1d(m2, m2);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
}

TEST_CASE("measure JSON round-trips exactly") {
    CounterRng rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        int d = 1 + static_cast<int>(rng.next_u64() % 3);
        std::vector<Atom> a;
        int na = 1 + static_cast<int>(rng.next_u64() % 8);
        for (int i = 0; i < na; ++i) {
            Point x(d);
            for (int k = 0; k < d; ++k) x[k] = rng.next_uniform(-5.0, 5.0);
            a.push_back({std::move(x), rng.next_uniform(0.01, 1.0)});
        }
        auto m = normalize_merge(d, a);
        auto back = read_measure_json(write_measure_json(m));
        REQUIRE(back.size() == m.size());
        REQUIRE(back.dim == m.dim);
        for (std::size_t i = 0; i < m.size(); ++i) {
            CHECK(back.atoms[i].w == m.atoms[i].w); // bit-exact through 17 digits
            for (int k = 0; k < d; ++k) CHECK(back.atoms[i].x[k] == m.atoms[i].x[k]);
        }
    }
}

TEST_CASE("validate rejects bad weight sums") {
    DiscreteMeasure m;
    m.dim = 1;
    m.atoms = {{Point{0.0}, 0.5}};
    CHECK_THROWS_AS(m.validate(), Error);
}
