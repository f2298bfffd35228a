#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "stsinr/marks.hpp"
#include "stsinr/stats.hpp"

using namespace stsinr;

TEST_CASE("model params invariants") {
    ModelParams p;
    p.window = Window{10.0, 10.0, BoundaryMode::torus, 0.0};
    CHECK_NOTHROW(p.validate());
    auto reject = [&](auto&& tweak) {
        ModelParams bad = p;
        tweak(bad);
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    };
    reject([](ModelParams& m) { m.aloha_p = 1.0; });
    reject([](ModelParams& m) { m.aloha_p = 0.0; });
    reject([](ModelParams& m) { m.pathloss_beta = 2.0; });
    reject([](ModelParams& m) { m.fading_mu = 0.0; });
    reject([](ModelParams& m) { m.lambda_m = -1.0; });
    reject([](ModelParams& m) { m.grid_step = 0.0; });
    reject([](ModelParams& m) { m.noise = NoiseSpec::constant(0.0); });
}

TEST_CASE("marks replay bit-for-bit and depend only on ids and slots") {
    MarkStream a(123, 0.5, 1.0, NoiseSpec::exponential(0.4));
    MarkStream b(123, 0.5, 1.0, NoiseSpec::exponential(0.4));
    for (int i = 0; i < 50; ++i) {
        CHECK(a.transmits(i, -3) == b.transmits(i, -3));
        CHECK(a.fading(i, i + 1, 17) == b.fading(i, i + 1, 17));
        CHECK(a.noise(i, -9) == b.noise(i, -9));
    }
    MarkStream c(124, 0.5, 1.0, NoiseSpec::exponential(0.4));
    int diff = 0;
    for (int i = 0; i < 50; ++i) diff += a.transmits(i, 0) != c.transmits(i, 0) ? 1 : 0;
    CHECK(diff > 0);
}

TEST_CASE("mac marks are Bernoulli(p)") {
    MarkStream s(7, 0.5, 1.0, NoiseSpec::off());
    const int n = 100000;
    int ones = 0;
    for (int k = 0; k < n; ++k) ones += s.transmits(k % 500, k / 500) ? 1 : 0;
    double freq = static_cast<double>(ones) / n;
    CHECK(std::fabs(freq - 0.5) < 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("fading marks are exponential with mean 1/mu") {
    MarkStream s(7, 0.5, 1.0, NoiseSpec::off());
    const int n = 100000;
    double acc = 0.0;
    int above = 0;  // P{F > 2} = exp(-2) at mu = 1
    for (int k = 0; k < n; ++k) {
        double f = s.fading(k % 300, 300 + k % 17, k / 300);
        acc += f;
        above += f > 2.0 ? 1 : 0;
    }
    double mean = acc / n;
    CHECK(std::fabs(mean - 1.0) < 3.0 * 1.0 / std::sqrt(static_cast<double>(n)));
    double p_ref = std::exp(-2.0);
    double se = std::sqrt(p_ref * (1.0 - p_ref) / n);
    CHECK(std::fabs(static_cast<double>(above) / n - p_ref) < 3.0 * se);
    CHECK_THROWS_AS(s.fading(4, 4, 0), std::invalid_argument);

    // different mu, same keys: the law rescales
    MarkStream fast(7, 0.5, 2.0, NoiseSpec::off());
    CHECK(fast.fading(1, 2, 3) == Catch::Approx(0.5 * s.fading(1, 2, 3)).epsilon(1e-14));
}

TEST_CASE("noise laws") {
    MarkStream off(5, 0.5, 1.0, NoiseSpec::off());
    MarkStream constant(5, 0.5, 1.0, NoiseSpec::constant(0.3));
    MarkStream expo(5, 0.5, 1.0, NoiseSpec::exponential(2.5));
    double acc = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        CHECK(off.noise(k % 100, k) == 0.0);
        CHECK(constant.noise(k % 100, k) == 0.3);
        acc += expo.noise(k % 100, k / 100);
    }
    CHECK(std::fabs(acc / n - 2.5) < 3.0 * 2.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("mark values at distinct keys are uncorrelated") {
    MarkStream s(11, 0.5, 1.0, NoiseSpec::off());
    const int n = 10000;
    std::vector<double> xs, ys;
    UniformStream keys(3, 0x6b6579ull);
    for (int k = 0; k < n; ++k) {
        int i1 = static_cast<int>(keys.next() * 1000);
        int j1 = 1000 + static_cast<int>(keys.next() * 1000);
        int i2 = 2000 + static_cast<int>(keys.next() * 1000);
        int j2 = 3000 + static_cast<int>(keys.next() * 1000);
        std::int64_t t = static_cast<std::int64_t>(keys.next() * 10000) - 5000;
        xs.push_back(s.fading(i1, j1, t));
        ys.push_back(s.fading(i2, j2, t + 1));
    }
    CHECK(std::fabs(pearson_correlation(xs, ys)) < 0.03);
}

TEST_CASE("transmitter sets partition the pattern") {
    Window w{20.0, 20.0, BoundaryMode::torus, 0.0};
    PointPattern pat = sample_poisson(1.0, w, 9);
    MarkStream s(9, 0.5, 1.0, NoiseSpec::off());

    PointPattern empty;
    empty.window = w;
    CHECK(transmitters(empty, s, 0).empty());

    const int slots = 400;
    double acc = 0.0;
    for (int t = 0; t < slots; ++t) {
        auto tx = transmitters(pat, s, t);
        acc += static_cast<double>(tx.size());
        // complement check on a few slots
        if (t < 5) {
            std::size_t listeners = 0;
            for (const auto& p : pat.points)
                if (!s.transmits(p.id, t)) ++listeners;
            CHECK(tx.size() + listeners == pat.size());
        }
    }
    double nd = static_cast<double>(pat.size());
    double se = std::sqrt(nd * 0.25) / std::sqrt(static_cast<double>(slots));
    CHECK(std::fabs(acc / slots - 0.5 * nd) < 3.0 * se);
}
