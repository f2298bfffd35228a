#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stsinr/params.hpp"
#include "stsinr/point_pattern.hpp"
#include "stsinr/quadrature.hpp"

namespace stsinr {

// Closed-form and quadrature evaluators used as independent ground truth for
// the Monte Carlo estimators. Everything here assumes exponential fading and
// the power path loss l(r) = (A r)^beta; unsupported model combinations are
// rejected rather than silently approximated.
namespace oracle {

// Laplace transform of the thermal noise law, L_W(xi) = E[exp(-xi W)].
struct NoiseLaplace {
    NoiseSpec law;

    double operator()(double xi) const {
        if (xi < 0.0) throw std::invalid_argument("NoiseLaplace: xi must be >= 0");
        switch (law.kind) {
            case NoiseKind::off: return 1.0;
            case NoiseKind::constant: return std::exp(-xi * law.level);
            default: return 1.0 / (1.0 + xi * law.level);
        }
    }
};

// Laplace transform of e*F' where e is Bernoulli(p) and F' is exponential
// with mean 1: 1 - p + p/(1 + xi).
inline double laplace_ef(double xi, double p) { return 1.0 - p + p / (1.0 + xi); }

// Per-slot success probability of the direct channel i -> j given the whole
// pattern:
//   pi = p(1-p) * L_W(T mu l(d_ij)) * prod_{k != i,j} L_eF'(T l(d_ij)/l(d_kj)).
// This is the parameter of the conditional geometric law of the local delay.
inline double success_prob_given_pattern(const PointPattern& pattern, const ModelParams& params,
                                         int i, int j) {
    if (i == j) throw std::domain_error("success_prob_given_pattern: i and j must differ");
    params.validate();
    const double p = params.aloha_p;
    const double l_ij = params.pathloss(pattern.distance(i, j));
    NoiseLaplace lw{params.noise};
    double value = p * (1.0 - p) * lw(params.threshold * params.fading_mu * l_ij);
    const Vec2& pj = pattern.position(j);
    for (const auto& pt : pattern.points) {
        if (pt.id == i || pt.id == j) continue;
        double l_kj = params.pathloss_from_r2(pattern.window.distance_sq(pt.pos, pj));
        value *= laplace_ef(params.threshold * l_ij / l_kj, p);
    }
    return value;
}

// Tail constant of the shifted-grid interference bound,
//   C(s, beta) = (2 pi / s^2) Int_{sqrt(2) s}^inf (t + sqrt(2) s) t^-beta dt,
// evaluated by quadrature (the closed form serves as a cross-check in tests).
inline double grid_tail_constant(double s, double beta) {
    if (!(s > 0.0) || !(beta > 2.0))
        throw std::invalid_argument("grid_tail_constant: need s > 0 and beta > 2");
    const double a = std::sqrt(2.0) * s;
    // substitute t = a + u, u in [0, inf)
    auto f = [&](double u) { return (2.0 * a + u) * std::pow(a + u, -beta); };
    return (2.0 * M_PI / (s * s)) * integrate_semi_infinite(f, 1e-12);
}

struct ConditionalMeanDelay {
    double exact = 0.0;                  // 1 / pi_{i,j}(pattern)
    std::optional<double> upper_bound;   // grid-plus-Poisson envelope, when requested
};

// Conditional mean local delay given the pattern, with the closed-form upper
// bound available for Poisson+Grid patterns whose pair lies inside the ball
// of radius R around the origin. The bound multiplies four factors: the
// noise term at the worst-case distance 2R, the grid contribution (49 near
// grid points at worst-case attenuation plus the C(s,beta) tail), the
// Poisson points inside radius 2R, and the Poisson tail beyond 2R.
inline ConditionalMeanDelay mean_local_delay_given_pattern(const PointPattern& pattern,
                                                           const ModelParams& params, int i, int j,
                                                           std::optional<double> bound_radius = {}) {
    ConditionalMeanDelay out;
    out.exact = 1.0 / success_prob_given_pattern(pattern, params, i, j);
    if (!bound_radius) return out;

    if (!params.grid_step)
        throw std::invalid_argument("mean_local_delay bound: pattern has no grid component");
    const double R = *bound_radius;
    const Vec2 origin{0.0, 0.0};
    if (pattern.window.distance(pattern.position(i), origin) > R ||
        pattern.window.distance(pattern.position(j), origin) > R)
        throw std::invalid_argument("mean_local_delay bound: both points must lie within R");

    const double p = params.aloha_p;
    const double T = params.threshold;
    const double beta = params.pathloss_beta;
    const double two_r = 2.0 * R;
    NoiseLaplace lw{params.noise};
    double bound = 1.0 / (p * (1.0 - p) * lw(T * params.fading_mu * params.pathloss(two_r)));
    const double c_tail = grid_tail_constant(*params.grid_step, beta);
    bound *= std::exp(-49.0 * std::log1p(-p) + std::pow(two_r, beta) * p * T * c_tail);

    double far_sum = 0.0;
    std::int64_t near_poisson = 0;
    for (const auto& pt : pattern.points) {
        if (pt.id == i || pt.id == j || pt.origin == PointOrigin::grid) continue;
        double norm = pattern.window.distance(pt.pos, origin);
        if (norm <= two_r) {
            ++near_poisson;
        } else {
            double dr = std::pow(norm - R, beta);
            far_sum += std::log(1.0 - p + p * dr / (dr + T * std::pow(two_r, beta)));
        }
    }
    bound *= std::exp(-static_cast<double>(near_poisson) * std::log1p(-p));
    bound *= std::exp(-far_sum);
    out.upper_bound = bound;
    return out;
}

// Mean local delay between two Palm points of a Poisson pattern at distance
// r, averaged over the pattern:
//   E[L] = (p(1-p) L_W(mu l(r) T))^-1
//          * exp(2 pi p lambda Int_0^inf v T l(r) / (l(v) + (1-p) T l(r)) dv).
// The integral is evaluated after the substitution u = v^2, which turns the
// beta > 2 power tail into u^(-beta/2).
inline double mean_local_delay_poisson(double r, const ModelParams& params,
                                       double abs_tol = 1e-10) {
    params.validate();
    if (!(params.pathloss_beta > 2.0))
        throw std::invalid_argument("mean_local_delay_poisson: beta must exceed 2");
    const double p = params.aloha_p;
    const double T = params.threshold;
    const double lr = params.pathloss(r);
    NoiseLaplace lw{params.noise};
    double prefactor = 1.0 / (p * (1.0 - p) * lw(params.fading_mu * lr * T));
    if (lr == 0.0) return prefactor;

    const double a_beta = std::pow(params.pathloss_a, params.pathloss_beta);
    const double c = (1.0 - p) * T * lr;
    auto integrand = [&](double u) {
        return 0.5 * T * lr / (a_beta * std::pow(u, 0.5 * params.pathloss_beta) + c);
    };
    double integral = integrate_semi_infinite(integrand, abs_tol);
    return prefactor * std::exp(2.0 * M_PI * p * params.lambda_m * integral);
}

// Palm-mean interference at the typical node from transmitters beyond radius
// eps: 2 pi p lambda E[F] eps^(2-beta) / (A^beta (beta - 2)).
inline double campbell_interference(double eps, const ModelParams& params) {
    params.validate();
    if (!(eps > 0.0))
        throw std::invalid_argument("campbell_interference: the near field diverges, need eps > 0");
    const double beta = params.pathloss_beta;
    double mean_f = 1.0 / params.fading_mu;
    return 2.0 * M_PI * params.aloha_p * params.lambda_m * mean_f *
           std::pow(eps, 2.0 - beta) / (std::pow(params.pathloss_a, beta) * (beta - 2.0));
}

struct TailEntry {
    double q = 0.0;
    double exact = 1.0;              // exact survival P{snr_trials > q}
    double lower_bound = 0.0;        // exp(-pi lambda (v_q + 1/K)); 0 when undefined
    double v_q = 0.0;                // 0 when q(1-p) <= 1
    double one_over_q = 0.0;
};

struct TailCurve {
    std::vector<TailEntry> entries;
    double K = 0.0;                  // w mu T A^beta
    bool degenerate = false;         // noise off: one trial always suffices
};

namespace detail {

inline void require_snr_tail_model(const ModelParams& params) {
    params.validate();
    if (params.grid_step)
        throw std::invalid_argument("snr_trial_survival: closed form covers the pure Poisson model");
    if (params.noise.kind == NoiseKind::exponential)
        throw std::invalid_argument("snr_trial_survival: closed form requires constant noise");
}

}  // namespace detail

// Exact survival of the SNR-graph trial count at the typical node, for
// constant noise w:
//   P{T > q} = exp(-pi lambda Int_0^inf (1 - (1 - f(u))^q) du),
//   f(u) = (1-p) exp(-K u^(beta/2)),  K = w mu T A^beta.
// The integral starts from the area element 2 pi v dv; u = v^2 makes the
// integrand decay exponentially, which is what the doubling scheme wants.
inline double snr_trial_survival_exact(double q, const ModelParams& params,
                                       double abs_tol = 1e-10) {
    detail::require_snr_tail_model(params);
    if (q < 0.0) throw std::invalid_argument("snr_trial_survival: q must be >= 0");
    if (params.noise.is_off()) return q < 1.0 ? 1.0 : 0.0;
    if (q == 0.0) return 1.0;
    const double p = params.aloha_p;
    const double K = params.noise.level * params.fading_mu * params.threshold *
                     std::pow(params.pathloss_a, params.pathloss_beta);
    const double half_beta = 0.5 * params.pathloss_beta;
    auto integrand = [&](double u) {
        double f = (1.0 - p) * std::exp(-K * std::pow(u, half_beta));
        // 1 - (1-f)^q, stable for f down to the underflow threshold
        return -std::expm1(q * std::log1p(-f));
    };
    double integral = integrate_semi_infinite(integrand, abs_tol);
    return std::exp(-M_PI * params.lambda_m * integral);
}

inline double snr_trial_constant_k(const ModelParams& params) {
    return params.noise.level * params.fading_mu * params.threshold *
           std::pow(params.pathloss_a, params.pathloss_beta);
}

// v_q solves (1-p) exp(-K v^(beta/2)) = 1/q; defined once q(1-p) > 1.
inline double snr_trial_vq(double q, const ModelParams& params) {
    const double arg = std::log(q * (1.0 - params.aloha_p));
    if (!(arg > 0.0)) return 0.0;
    return std::pow(arg, 2.0 / params.pathloss_beta) /
           (params.pathloss_a * params.pathloss_a *
            std::pow(params.fading_mu * params.threshold * params.noise.level,
                     2.0 / params.pathloss_beta));
}

inline TailEntry snr_trial_survival(double q, const ModelParams& params, double abs_tol = 1e-10) {
    detail::require_snr_tail_model(params);
    TailEntry e;
    e.q = q;
    e.exact = snr_trial_survival_exact(q, params, abs_tol);
    e.one_over_q = q > 0.0 ? 1.0 / q : 0.0;
    if (!params.noise.is_off()) {
        double vq = snr_trial_vq(q, params);
        if (vq > 0.0) {
            e.v_q = vq;
            double k = snr_trial_constant_k(params);
            e.lower_bound = std::exp(-M_PI * params.lambda_m * (vq + 1.0 / k));
        }
    }
    return e;
}

inline TailCurve snr_trial_curve(const std::vector<double>& q_values, const ModelParams& params,
                                 double abs_tol = 1e-10) {
    detail::require_snr_tail_model(params);
    TailCurve curve;
    curve.degenerate = params.noise.is_off();
    curve.K = curve.degenerate ? 0.0 : snr_trial_constant_k(params);
    for (double q : q_values) curve.entries.push_back(snr_trial_survival(q, params, abs_tol));
    return curve;
}

// Smallest log(q) beyond which the asymptotic lower bound dominates 1/q,
// located numerically: g(x) = x - pi lambda (v_q(e^x) + 1/K) crosses zero
// from below and stays positive (x dominates x^(2/beta) for beta > 2).
inline double snr_trial_crossover_log_q(const ModelParams& params) {
    detail::require_snr_tail_model(params);
    if (params.noise.is_off())
        throw std::invalid_argument("snr_trial_crossover: noise is off, bound is degenerate");
    const double k = snr_trial_constant_k(params);
    const double n2_beta = 2.0 / params.pathloss_beta;
    const double scale = params.pathloss_a * params.pathloss_a *
                         std::pow(params.fading_mu * params.threshold * params.noise.level,
                                  n2_beta);
    auto g = [&](double x) {
        double arg = x + std::log1p(-params.aloha_p);
        double vq = arg > 0.0 ? std::pow(arg, n2_beta) / scale : 0.0;
        return x - M_PI * params.lambda_m * (vq + 1.0 / k);
    };
    double lo = std::max(1.0, -std::log1p(-params.aloha_p) + 1e-6);
    double hi = lo;
    for (int iter = 0; iter < 4096 && g(hi) <= 0.0; ++iter) {
        lo = hi;
        hi *= 2.0;
    }
    if (g(hi) <= 0.0) throw std::runtime_error("snr_trial_crossover: no crossover found");
    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace oracle
}  // namespace stsinr
