#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "stsinr/graph.hpp"

using namespace stsinr;

namespace {

ModelParams small_model() {
    ModelParams p;
    p.lambda_m = 1.0;
    p.aloha_p = 0.5;
    p.fading_mu = 1.0;
    p.threshold = 1.0;
    p.pathloss_a = 1.0;
    p.pathloss_beta = 4.0;
    p.noise = NoiseSpec::constant(0.1);
    p.window = Window{12.0, 12.0, BoundaryMode::torus, 0.0};
    p.seed = 21;
    return p;
}

PointPattern sample_pattern(const ModelParams& p) {
    return sample_poisson(p.lambda_m, p.window, p.seed);
}

}  // namespace

TEST_CASE("interference: empty transmitter slot gives zero") {
    ModelParams p = small_model();
    PointPattern pat;
    pat.window = p.window;
    pat.points = {{0, Vec2{0.0, 0.0}, PointOrigin::poisson},
                  {1, Vec2{2.0, 0.0}, PointOrigin::poisson},
                  {2, Vec2{-3.0, 1.0}, PointOrigin::poisson}};
    MarkStream s(3, 0.5, 1.0, p.noise);
    for (std::int64_t t = 0; t < 200; ++t) {
        SlotView view(pat, p, s, t);
        if (view.transmitter_ids().empty()) {
            CHECK(interference(view, 0) == 0.0);
            return;
        }
    }
    FAIL("no empty slot found in 200 tries");
}

TEST_CASE("interference: single transmitter at distance 2 with beta 4") {
    ModelParams p = small_model();
    PointPattern pat;
    pat.window = p.window;
    pat.points = {{0, Vec2{0.0, 0.0}, PointOrigin::poisson},
                  {1, Vec2{2.0, 0.0}, PointOrigin::poisson}};
    MarkStream s(5, 0.5, 1.0, p.noise);
    for (std::int64_t t = 0; t < 400; ++t) {
        SlotView view(pat, p, s, t);
        if (view.transmits(1) && !view.transmits(0)) {
            double f = s.fading(1, 0, t);
            CHECK(interference(view, 0) == Catch::Approx(f / 16.0).epsilon(1e-12));
            return;
        }
    }
    FAIL("no suitable slot found");
}

TEST_CASE("interference decomposes into excluded term plus remainder") {
    ModelParams p = small_model();
    PointPattern pat = sample_pattern(p);
    MarkStream s(p.seed, p.aloha_p, p.fading_mu, p.noise);
    SlotView view(pat, p, s, 7);
    const int n = static_cast<int>(pat.size());
    for (int j = 0; j < std::min(n, 20); ++j) {
        for (int i = 0; i < std::min(n, 20); ++i) {
            if (i == j) continue;
            double with_exclusion = interference(view, j, i);
            double term = 0.0;
            if (view.transmits(i))
                term = s.fading(i, j, 7) / p.pathloss(pat.distance(i, j));
            CHECK(with_exclusion + term == Catch::Approx(interference(view, j)).margin(1e-9));
        }
    }
}

TEST_CASE("sinr is the received power over noise plus interference") {
    ModelParams p = small_model();
    PointPattern pat;
    pat.window = p.window;
    pat.points = {{0, Vec2{0.0, 0.0}, PointOrigin::poisson},
                  {1, Vec2{1.0, 0.0}, PointOrigin::poisson},
                  {2, Vec2{3.0, 0.0}, PointOrigin::poisson}};
    MarkStream s(31, 0.5, 1.0, p.noise);
    for (std::int64_t t = 0; t < 500; ++t) {
        SlotView view(pat, p, s, t);
        if (!(view.transmits(0) && view.transmits(2) && !view.transmits(1))) continue;
        double signal = s.fading(0, 1, t) / p.pathloss(1.0);
        double interf = s.fading(2, 1, t) / p.pathloss(2.0);
        double manual = signal / (0.1 + interf);
        CHECK(sinr(view, 0, 1) == Catch::Approx(manual).epsilon(1e-9));
        CHECK(edge(view, 0, 1) == (sinr(view, 0, 1) >= p.threshold));
        return;
    }
    FAIL("no suitable slot found");
}

TEST_CASE("slot view power cache equals fresh recomputation") {
    ModelParams p = small_model();
    PointPattern pat = sample_pattern(p);
    MarkStream s(p.seed, p.aloha_p, p.fading_mu, p.noise);
    SlotView view(pat, p, s, 3);
    for (int j = 0; j < static_cast<int>(pat.size()); ++j)
        CHECK(view.total_power(j) == view.compute_total_power(j));
}

TEST_CASE("sinr value conventions") {
    ModelParams p = small_model();
    p.noise = NoiseSpec::off();
    PointPattern pat;
    pat.window = p.window;
    pat.points = {{0, Vec2{0.0, 0.0}, PointOrigin::poisson},
                  {1, Vec2{1.0, 0.0}, PointOrigin::poisson}};
    MarkStream s(8, 0.5, 1.0, p.noise);
    for (std::int64_t t = 0; t < 400; ++t) {
        SlotView view(pat, p, s, t);
        CHECK_THROWS_AS(sinr(view, 1, 1), std::domain_error);
        if (view.transmits(0) && !view.transmits(1)) {
            // no interferer and no noise: infinite ratio, edge at any T
            CHECK(std::isinf(sinr(view, 0, 1)));
            CHECK(std::isinf(snr(view, 0, 1)));
            CHECK(edge(view, 0, 1));
            ModelParams huge_t = p;
            huge_t.threshold = 1e12;
            SlotView view2(pat, huge_t, s, t);
            CHECK(edge(view2, 0, 1));
            return;
        }
    }
    FAIL("no suitable slot found");
}

TEST_CASE("edges: self loops, gating, monotonicity in T, snr inclusion") {
    ModelParams p = small_model();
    ModelParams stricter = p;
    stricter.threshold = 2.0;  // doubling T never adds edges
    PointPattern pat = sample_pattern(p);
    MarkStream s(p.seed, p.aloha_p, p.fading_mu, p.noise);
    const int n = static_cast<int>(pat.size());
    UniformStream u(77, 0x65ull);
    for (int it = 0; it < 10000; ++it) {
        int i = static_cast<int>(u.next() * n);
        int j = static_cast<int>(u.next() * n);
        std::int64_t t = static_cast<std::int64_t>(u.next() * 100) - 50;
        SlotView view(pat, p, s, t, /*with_power=*/false);
        CHECK(edge(view, i, i));
        if (i == j) continue;
        bool e = edge(view, i, j, EdgeVariant::sinr);
        if (!view.transmits(i) || view.transmits(j)) CHECK_FALSE(e);
        if (e) {
            CHECK(edge(view, i, j, EdgeVariant::snr));
            SlotView view2(pat, stricter, s, t, /*with_power=*/false);
            // threshold is the only difference; a stricter edge implies this one
            if (edge(view2, i, j, EdgeVariant::sinr)) CHECK(e);
        }
    }
}

TEST_CASE("edge decisions agree between SlotView and slot_adjacency") {
    ModelParams p = small_model();
    PointPattern pat = sample_pattern(p);
    MarkStream s(p.seed, p.aloha_p, p.fading_mu, p.noise);
    for (std::int64_t t = 0; t < 12; ++t) {
        auto adj = slot_adjacency(pat, p, s, t);
        SlotView view(pat, p, s, t);
        const int n = static_cast<int>(pat.size());
        for (int i = 0; i < n; ++i) {
            std::vector<bool> listed(static_cast<std::size_t>(n), false);
            for (int j : adj[static_cast<std::size_t>(i)]) listed[static_cast<std::size_t>(j)] = true;
            for (int j = 0; j < n; ++j)
                CHECK(listed[static_cast<std::size_t>(j)] == edge(view, i, j));
        }
    }
}

TEST_CASE("degrees: self edge floor and the hard in-degree ceiling") {
    ModelParams p = small_model();
    p.threshold = 0.5;  // xi = 4
    PointPattern pat = sample_pattern(p);
    MarkStream s(p.seed, p.aloha_p, p.fading_mu, p.noise);
    const int n = static_cast<int>(pat.size());
    for (std::int64_t t = 0; t < 40; ++t) {
        for (int v = 0; v < n; v += 7) {
            int din = degree(pat, p, s, v, t, Direction::in);
            int dout = degree(pat, p, s, v, t, Direction::out);
            CHECK(din >= 1);
            CHECK(dout >= 1);
            CHECK(din <= 4);
        }
    }
}

TEST_CASE("at T=1 a vertex has at most two distinct non-self in-neighbours") {
    ModelParams p = small_model();
    REQUIRE(p.threshold == 1.0);
    PointPattern pat = sample_pattern(p);
    MarkStream s(p.seed, p.aloha_p, p.fading_mu, p.noise);
    for (std::int64_t t = 0; t < 60; ++t) {
        auto adj = slot_adjacency(pat, p, s, t);
        std::vector<int> nonself(pat.size(), 0);
        for (std::size_t i = 0; i < adj.size(); ++i)
            for (int j : adj[i])
                if (static_cast<int>(i) != j) ++nonself[static_cast<std::size_t>(j)];
        for (int c : nonself) CHECK(c <= 2);
    }
}

TEST_CASE("path counts: base cases and the xi^k ceiling") {
    ModelParams p = small_model();
    PointPattern pat = sample_pattern(p);
    MarkStream s(p.seed, p.aloha_p, p.fading_mu, p.noise);
    const double xi = 1.0 / p.threshold + 2.0;
    CHECK_THROWS_AS(count_paths(pat, p, s, 0, 0, -1, Direction::out), std::invalid_argument);
    for (int v = 0; v < static_cast<int>(pat.size()); v += 11) {
        CHECK(count_paths(pat, p, s, v, 4, 0, Direction::out) == 1.0);
        CHECK(count_paths(pat, p, s, v, 4, 0, Direction::in) == 1.0);
        CHECK(count_paths(pat, p, s, v, 4, 1, Direction::out) ==
              static_cast<double>(degree(pat, p, s, v, 4, Direction::out)));
        CHECK(count_paths(pat, p, s, v, 4, 1, Direction::in) ==
              static_cast<double>(degree(pat, p, s, v, 4, Direction::in)));
        for (int k = 1; k <= 3; ++k)
            CHECK(count_paths(pat, p, s, v, 4, k, Direction::in) <= std::pow(xi, k));
    }
}

TEST_CASE("edge dump format") {
    ModelParams p = small_model();
    PointPattern pat;
    pat.window = p.window;
    pat.points = {{0, Vec2{0.0, 0.0}, PointOrigin::poisson},
                  {1, Vec2{1.0, 0.0}, PointOrigin::poisson}};
    MarkStream s(2, 0.5, 1.0, p.noise);
    std::ostringstream os;
    dump_edges(pat, p, s, 0, 2, EdgeVariant::sinr, os);
    std::string text = os.str();
    CHECK(text.rfind("slot,i,j,variant\n", 0) == 0);
    CHECK(text.find("0,0,0,sinr") != std::string::npos);  // self edge always present
    CHECK(text.find("1,1,1,sinr") != std::string::npos);
}
