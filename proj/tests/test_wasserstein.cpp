#include <catch2/catch_amalgamated.hpp>

#include "motlp/measures.hpp"
#include "motlp/rng.hpp"
#include "motlp/wasserstein.hpp"

using namespace motlp;

namespace {

DiscreteMeasure random_measure1d(CounterRng& rng, int max_atoms) {
    std::vector<Atom> a;
    int n = 1 + static_cast<int>(rng.next_u64() % max_atoms);
    for (int i = 0; i < n; ++i)
        a.push_back({Point{rng.next_uniform(-4.0, 4.0)}, rng.next_uniform(0.05, 1.0)});
    return normalize_merge(1, a);
}

} // namespace

TEST_CASE("w1_1d on spec examples") {
    CHECK(w1_1d(dirac1(0.0), dirac1(2.0)).value == Catch::Approx(2.0).margin(1e-15));
    auto m = measure1d({{0.0, 0.5}, {1.0, 0.5}});
    CHECK(w1_1d(m, m).value == 0.0);
    auto nu = measure1d({{-1.0, 0.5}, {2.0, 0.5}});
    CHECK(w1_1d(m, nu).value == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("w1_1d coupling is a valid plan") {
    auto mu = measure1d({{0.0, 0.25}, {1.0, 0.75}});
    auto nu = measure1d({{-1.0, 0.5}, {2.0, 0.5}});
    auto res = w1_1d(mu, nu);
    REQUIRE(res.coupling.has_value());
    res.coupling->validate();
    std::vector<double> wmu, wnu;
    for (const auto& a : mu.atoms) wmu.push_back(a.w);
    for (const auto& a : nu.atoms) wnu.push_back(a.w);
    CHECK(res.coupling->marginal_residual(0, wmu) < 1e-12);
    CHECK(res.coupling->marginal_residual(1, wnu) < 1e-12);
}

TEST_CASE("w1_1d symmetry and triangle inequality") {
    CounterRng rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        auto a = random_measure1d(rng, 8);
        auto b = random_measure1d(rng, 8);
        auto c = random_measure1d(rng, 8);
        double ab = w1_1d(a, b).value;
        double ba = w1_1d(b, a).value;
        CHECK(ab == Catch::Approx(ba).margin(1e-9));
        double ac = w1_1d(a, c).value, cb = w1_1d(c, b).value;
        CHECK(ab <= ac + cb + 1e-9);
    }
}

TEST_CASE("Kantorovich dual sanity on a 1-Lipschitz family") {
    CounterRng rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        auto mu = random_measure1d(rng, 10);
        auto nu = random_measure1d(rng, 10);
        double w = w1_1d(mu, nu).value;
        auto test_f = [&](auto&& f) {
            double imu = 0.0, inu = 0.0;
            for (const auto& a : mu.atoms) imu += a.w * f(a.x[0]);
            for (const auto& a : nu.atoms) inu += a.w * f(a.x[0]);
            CHECK(imu - inu <= w + 1e-9);
        };
        test_f([](double x) { return x; });
        test_f([](double x) { return -x; });
        for (const auto& a : mu.atoms) {
            double k = a.x[0];
            test_f([k](double x) { return std::max(0.0, x - k); });
        }
        for (const auto& a : nu.atoms) {
            double k = a.x[0];
            test_f([k](double x) { return std::max(0.0, x - k); });
        }
    }
}

TEST_CASE("w1_lp on spec examples") {
    auto d00 = normalize_merge(2, {{Point{0.0, 0.0}, 1.0}});
    auto d12 = normalize_merge(2, {{Point{1.0, 2.0}, 1.0}});
    CHECK(w1_lp(d00, d12).value == Catch::Approx(3.0).margin(1e-9));

    auto m = measure1d({{0.0, 0.5}, {1.0, 0.5}});
    CHECK(w1_lp(m, m).value == Catch::Approx(0.0).margin(1e-12));

    auto mu = normalize_merge(2, {{Point{0.0, 0.0}, 0.5}, {Point{1.0, 0.0}, 0.5}});
    auto nu = normalize_merge(2, {{Point{0.0, 1.0}, 0.5}, {Point{1.0, 1.0}, 0.5}});
    CHECK(w1_lp(mu, nu).value == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("w1_lp agrees with w1_1d in dimension one") {
    CounterRng rng(13);
    for (int rep = 0; rep < 25; ++rep) {
        auto mu = random_measure1d(rng, 12);
        auto nu = random_measure1d(rng, 12);
        double exact = w1_1d(mu, nu).value;
        double lp = w1_lp(mu, nu).value;
        CHECK(lp == Catch::Approx(exact).margin(1e-9));
    }
}

TEST_CASE("w1_product sums per-pair distances") {
    CHECK(w1_product({{dirac1(0.0), dirac1(0.0)}}) == 0.0);
    CHECK(w1_product({{dirac1(0.0), dirac1(1.0)}, {dirac1(0.0), dirac1(2.0)}}) ==
          Catch::Approx(3.0).margin(1e-15));
    auto m = measure1d({{0.0, 0.5}, {1.0, 0.5}});
    auto nu = measure1d({{-1.0, 0.5}, {2.0, 0.5}});
    CHECK(w1_product({{m, nu}, {dirac1(0.0), dirac1(0.0)}}) ==
          Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("w1 rejects dimension mismatches") {
    auto d2 = normalize_merge(2, {{Point{0.0, 0.0}, 1.0}});
    try {
        w1_1d(d2, d2);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
    try {
        w1_lp(d2, dirac1(0.0));
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
}
