#include <catch_amalgamated.hpp>

#include <cmath>

#include "stsinr/experiments.hpp"
#include "stsinr/oracle.hpp"
#include "stsinr/quadrature.hpp"

using namespace stsinr;

namespace {

ModelParams base_model() {
    ModelParams p;
    p.lambda_m = 1.0;
    p.aloha_p = 0.5;
    p.fading_mu = 1.0;
    p.threshold = 1.0;
    p.pathloss_a = 1.0;
    p.pathloss_beta = 4.0;
    p.noise = NoiseSpec::constant(0.1);
    p.window = Window{20.0, 20.0, BoundaryMode::plane_with_guard, 0.0};
    p.seed = 1;
    return p;
}

// closed antiderivative of the grid tail constant:
// (2 pi / s^2) a^(2-beta) (1/(beta-2) + 1/(beta-1)), a = sqrt(2) s
double grid_tail_closed_form(double s, double beta) {
    double a = std::sqrt(2.0) * s;
    return 2.0 * M_PI / (s * s) * std::pow(a, 2.0 - beta) *
           (1.0 / (beta - 2.0) + 1.0 / (beta - 1.0));
}

// closed form of Int_0^inf u/(u^beta + c) du
double power_tail_integral_closed_form(double beta, double c) {
    return std::pow(c, 2.0 / beta - 1.0) * M_PI / (beta * std::sin(2.0 * M_PI / beta));
}

}  // namespace

TEST_CASE("noise laplace transform basics") {
    oracle::NoiseLaplace off{NoiseSpec::off()};
    oracle::NoiseLaplace cst{NoiseSpec::constant(0.3)};
    oracle::NoiseLaplace exp_law{NoiseSpec::exponential(2.0)};
    for (auto* lw : {&off, &cst, &exp_law}) {
        CHECK((*lw)(0.0) == 1.0);
        double prev = 1.0;
        for (double xi : {0.1, 0.5, 1.0, 3.0, 10.0}) {
            double v = (*lw)(xi);
            CHECK(v > 0.0);
            CHECK(v <= prev);
            prev = v;
        }
    }
    CHECK(cst(2.0) == Catch::Approx(std::exp(-0.6)).epsilon(1e-14));
    CHECK(exp_law(2.0) == Catch::Approx(1.0 / 5.0).epsilon(1e-14));
    CHECK_THROWS_AS(off(-1.0), std::invalid_argument);
}

TEST_CASE("success probability: the two- and three-node closed forms") {
    ModelParams p = base_model();
    PointPattern pat;
    pat.window = p.window;
    pat.points = {{0, Vec2{-0.5, 0.0}, PointOrigin::palm}, {1, Vec2{0.5, 0.0}, PointOrigin::palm}};
    double pi2 = oracle::success_prob_given_pattern(pat, p, 0, 1);
    CHECK(pi2 == Catch::Approx(0.25 * std::exp(-0.1)).epsilon(1e-12));

    // a third node at distance 2 from the receiver contributes
    // 1 - p + p/(1 + T d_ij^4 / d_kj^4) = 1 - p + p/(1 + 1/16)
    pat.points.push_back({2, Vec2{2.5, 0.0}, PointOrigin::poisson});
    double pi3 = oracle::success_prob_given_pattern(pat, p, 0, 1);
    double factor = 0.5 + 0.5 / (1.0 + 1.0 / 16.0);
    CHECK(factor == Catch::Approx(0.97059).margin(5e-6));
    CHECK(pi3 == Catch::Approx(pi2 * factor).epsilon(1e-12));
    CHECK(pi3 < pi2);  // extra points only hurt

    // noise off drops the noise factor
    ModelParams quiet = p;
    quiet.noise = NoiseSpec::off();
    CHECK(oracle::success_prob_given_pattern(pat, quiet, 0, 1) ==
          Catch::Approx(0.25 * factor).epsilon(1e-12));

    CHECK_THROWS_AS(oracle::success_prob_given_pattern(pat, p, 1, 1), std::domain_error);
}

TEST_CASE("success probability is monotone under densification") {
    ModelParams p = base_model();
    PointPattern pat;
    pat.window = p.window;
    pat.points = {{0, Vec2{-0.5, 0.0}, PointOrigin::palm}, {1, Vec2{0.5, 0.0}, PointOrigin::palm}};
    double prev = oracle::success_prob_given_pattern(pat, p, 0, 1);
    UniformStream u(9, 0x6f72ull);
    for (int k = 0; k < 30; ++k) {
        pat.points.push_back({static_cast<int>(pat.points.size()),
                              Vec2{(u.next() - 0.5) * 18.0, (u.next() - 0.5) * 18.0},
                              PointOrigin::poisson});
        double cur = oracle::success_prob_given_pattern(pat, p, 0, 1);
        CHECK(cur <= prev);
        CHECK(cur > 0.0);
        prev = cur;
    }
}

TEST_CASE("grid tail constant: quadrature vs antiderivative") {
    for (auto [s, beta] : {std::pair{2.0, 4.0}, {1.0, 3.0}, {0.5, 4.5}, {2.0, 2.5}}) {
        double quadrature = oracle::grid_tail_constant(s, beta);
        double closed = grid_tail_closed_form(s, beta);
        INFO("s=" << s << " beta=" << beta);
        CHECK(std::fabs(quadrature - closed) / closed < 1e-8);
    }
    // the worked instance used elsewhere: s=2, beta=4 gives 5 pi / 96
    CHECK(oracle::grid_tail_constant(2.0, 4.0) ==
          Catch::Approx(5.0 * M_PI / 96.0).epsilon(1e-9));
    CHECK_THROWS_AS(oracle::grid_tail_constant(0.0, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(oracle::grid_tail_constant(1.0, 2.0), std::invalid_argument);
}

TEST_CASE("conditional mean delay and the grid-plus-poisson envelope") {
    ModelParams p = base_model();
    p.grid_step = 2.0;
    p.window = Window{30.0, 30.0, BoundaryMode::plane_with_guard, 0.0};

    int violations = 0;
    int checked = 0;
    for (int rep = 0; rep < 60 && checked < 40; ++rep) {
        PointPattern pat = make_model_pattern(p, derive_seed(33, seeds::pattern, rep), true);
        // pick a pair near the centre so a moderate R covers it
        int i = pat.nearest(Vec2{-1.0, 0.5});
        int j = pat.nearest(Vec2{1.0, -0.5});
        if (i == j) continue;
        double R = std::max(pat.window.distance(pat.position(i), Vec2{0, 0}),
                            pat.window.distance(pat.position(j), Vec2{0, 0})) +
                   0.1;
        auto res = oracle::mean_local_delay_given_pattern(pat, p, i, j, R);
        REQUIRE(res.upper_bound.has_value());
        double pi = oracle::success_prob_given_pattern(pat, p, i, j);
        CHECK(res.exact == Catch::Approx(1.0 / pi).epsilon(1e-12));
        if (res.exact > *res.upper_bound) ++violations;
        ++checked;
    }
    CHECK(checked >= 40);
    CHECK(violations == 0);

    // bound needs a grid component and a covering radius
    ModelParams no_grid = base_model();
    PointPattern pat = palm_add(sample_poisson(1.0, no_grid.window, 3), {Vec2{0, 0}, Vec2{1, 0}});
    CHECK_THROWS_AS(oracle::mean_local_delay_given_pattern(pat, no_grid, 0, 1, 5.0),
                    std::invalid_argument);
    CHECK_NOTHROW(oracle::mean_local_delay_given_pattern(pat, no_grid, 0, 1));
}

TEST_CASE("mean point-to-point delay: quadrature against the closed form") {
    ModelParams p = base_model();
    p.noise = NoiseSpec::off();
    double value = oracle::mean_local_delay_poisson(1.0, p);
    // beta = 4, W off: E[L] = 4 exp(2 pi p lambda J), J from the power-tail integral
    double j_closed = power_tail_integral_closed_form(4.0, 0.5);
    double closed = 4.0 * std::exp(2.0 * M_PI * 0.5 * j_closed);
    CHECK(std::fabs(value - closed) / closed < 1e-8);
    CHECK(value == Catch::Approx(131.07).margin(0.05));

    // general beta against the same antiderivative
    for (double beta : {2.5, 3.0, 5.0}) {
        ModelParams q = p;
        q.pathloss_beta = beta;
        double got = oracle::mean_local_delay_poisson(1.3, q);
        double lr = q.pathloss(1.3);
        double j2 = q.threshold * lr * power_tail_integral_closed_form(beta, 0.5 * q.threshold * lr);
        double want = 4.0 * std::exp(2.0 * M_PI * 0.5 * j2);
        INFO("beta=" << beta);
        CHECK(std::fabs(got - want) / want < 1e-8);
    }
}

TEST_CASE("mean point-to-point delay: limits and monotonicity") {
    ModelParams p = base_model();
    p.noise = NoiseSpec::off();
    CHECK(oracle::mean_local_delay_poisson(0.0, p) == Catch::Approx(4.0).epsilon(1e-12));
    double prev = 0.0;
    for (double r : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        double v = oracle::mean_local_delay_poisson(r, p);
        CHECK(v >= prev);
        prev = v;
    }
    // constant noise scales the whole mean by 1/L_W(mu l(r) T)
    ModelParams noisy = base_model();
    double ratio = oracle::mean_local_delay_poisson(1.0, noisy) /
                   oracle::mean_local_delay_poisson(1.0, p);
    CHECK(ratio == Catch::Approx(std::exp(0.1)).epsilon(1e-9));

    ModelParams bad = p;
    bad.pathloss_beta = 1.5;
    CHECK_THROWS_AS(oracle::mean_local_delay_poisson(1.0, bad), std::invalid_argument);
}

TEST_CASE("campbell interference closed form") {
    ModelParams p = base_model();
    CHECK(oracle::campbell_interference(1.0, p) == Catch::Approx(M_PI / 2.0).epsilon(1e-12));
    // eps^(2-beta) scaling: doubling eps divides by 4 at beta = 4
    CHECK(oracle::campbell_interference(2.0, p) ==
          Catch::Approx(M_PI / 8.0).epsilon(1e-12));
    ModelParams thin = p;
    thin.aloha_p = 1e-9;
    CHECK(oracle::campbell_interference(1.0, thin) < 1e-8);
    CHECK_THROWS_AS(oracle::campbell_interference(0.0, p), std::invalid_argument);

    // quadrature route: p lambda E[F] * 2 pi Int_eps^inf r / l(r) dr
    auto integrand = [&](double u) {
        double r = 1.0 + u;
        return r / p.pathloss(r);
    };
    double quadrature = 2.0 * M_PI * p.aloha_p * p.lambda_m * (1.0 / p.fading_mu) *
                        integrate_semi_infinite(integrand, 1e-12);
    CHECK(std::fabs(quadrature - M_PI / 2.0) / (M_PI / 2.0) < 1e-8);
}

TEST_CASE("snr trial survival: conventions and the v_q / K components") {
    ModelParams p = base_model();
    CHECK(oracle::snr_trial_survival_exact(0.0, p) == 1.0);

    oracle::TailEntry e100 = oracle::snr_trial_survival(100.0, p);
    CHECK(oracle::snr_trial_constant_k(p) == Catch::Approx(0.1).epsilon(1e-14));
    // v_q = (log(q(1-p)))^(2/beta) / (A^2 (mu T w)^(2/beta))
    double vq = std::sqrt(std::log(50.0)) / std::sqrt(0.1);
    CHECK(e100.v_q == Catch::Approx(vq).epsilon(1e-12));
    CHECK(e100.v_q == Catch::Approx(6.2546).margin(1e-3));
    CHECK(e100.lower_bound ==
          Catch::Approx(std::exp(-M_PI * (vq + 10.0))).epsilon(1e-12));
    CHECK(e100.one_over_q == Catch::Approx(0.01));

    ModelParams off = p;
    off.noise = NoiseSpec::off();
    CHECK(oracle::snr_trial_survival_exact(0.5, off) == 1.0);
    CHECK(oracle::snr_trial_survival_exact(1.0, off) == 0.0);
    CHECK(oracle::snr_trial_survival(3.0, off).lower_bound == 0.0);

    ModelParams exp_noise = p;
    exp_noise.noise = NoiseSpec::exponential(0.1);
    CHECK_THROWS_AS(oracle::snr_trial_survival_exact(2.0, exp_noise), std::invalid_argument);
    ModelParams with_grid = p;
    with_grid.grid_step = 2.0;
    CHECK_THROWS_AS(oracle::snr_trial_survival_exact(2.0, with_grid), std::invalid_argument);
}

TEST_CASE("snr trial survival: both integral forms agree") {
    ModelParams p = base_model();
    for (double q : {1.0, 2.0, 5.0, 20.0, 50.0}) {
        double via_u = oracle::snr_trial_survival_exact(q, p);
        // pre-substitution form: exp(-2 pi lambda Int (1 - (1-f(v))^q) v dv)
        auto integrand = [&](double v) {
            double f = 0.5 * std::exp(-0.1 * v * v * v * v);
            return -std::expm1(q * std::log1p(-f)) * v;
        };
        double via_v = std::exp(-2.0 * M_PI * integrate_semi_infinite(integrand, 1e-12));
        INFO("q=" << q);
        CHECK(std::fabs(via_u - via_v) / via_v < 1e-8);
    }
}

TEST_CASE("snr trial survival is monotone in q, w and T") {
    ModelParams p = base_model();
    double prev = 1.0;
    for (double q : {1.0, 2.0, 4.0, 8.0, 32.0}) {
        double s = oracle::snr_trial_survival_exact(q, p);
        CHECK(s <= prev);
        prev = s;
    }
    double s_base = oracle::snr_trial_survival_exact(5.0, p);
    ModelParams louder = p;
    louder.noise = NoiseSpec::constant(0.2);
    CHECK(oracle::snr_trial_survival_exact(5.0, louder) > s_base);
    ModelParams stricter = p;
    stricter.threshold = 2.0;
    CHECK(oracle::snr_trial_survival_exact(5.0, stricter) > s_base);
}

TEST_CASE("asymptotic bound dominates 1/q beyond the located crossover") {
    ModelParams p = base_model();
    double log_q = oracle::snr_trial_crossover_log_q(p);
    // the crossover sits far out; beyond it bound >= 1/q, just below it not
    auto bound_at = [&](double lq) {
        oracle::TailEntry e = oracle::snr_trial_survival(std::exp(lq), p);
        return e.lower_bound;
    };
    CHECK(bound_at(log_q + 0.01) >= std::exp(-(log_q + 0.01)));
    CHECK(bound_at(log_q + 2.0) >= std::exp(-(log_q + 2.0)));
    CHECK(bound_at(log_q - 0.5) < std::exp(-(log_q - 0.5)));

    // and the exact curve in turn dominates the bound out there
    for (double lq : {log_q + 0.5, log_q + 2.0}) {
        double q = std::exp(lq);
        double exact = oracle::snr_trial_survival_exact(q, p);
        CHECK(exact >= oracle::snr_trial_survival(q, p).lower_bound);
    }
}
