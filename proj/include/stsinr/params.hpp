#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "stsinr/geometry.hpp"

namespace stsinr {

enum class NoiseKind { off, constant, exponential };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::off;
    double level = 0.0;  // constant power w, or the mean of the exponential law

    static NoiseSpec off() { return {NoiseKind::off, 0.0}; }
    static NoiseSpec constant(double w) { return {NoiseKind::constant, w}; }
    static NoiseSpec exponential(double mean) { return {NoiseKind::exponential, mean}; }

    void validate() const {
        if (kind != NoiseKind::off && !(level > 0.0))
            throw std::invalid_argument("NoiseSpec: level must be positive");
    }

    bool is_off() const { return kind == NoiseKind::off; }
};

inline std::string to_string(const NoiseSpec& n) {
    switch (n.kind) {
        case NoiseKind::off: return "off";
        case NoiseKind::constant: return "constant(" + std::to_string(n.level) + ")";
        default: return "exponential(" + std::to_string(n.level) + ")";
    }
}

// All scalar model constants. Distances enter the SINR through the power
// path loss l(r) = (A r)^beta with beta > 2.
struct ModelParams {
    double lambda_m = 1.0;                    // Poisson intensity (points per unit area)
    std::optional<double> grid_step;          // grid edge length s; absent = no grid component
    double aloha_p = 0.5;                     // per-slot transmission probability
    double fading_mu = 1.0;                   // fading is exponential with mean 1/mu
    double threshold = 1.0;                   // SINR threshold T
    double pathloss_a = 1.0;                  // path-loss scale A
    double pathloss_beta = 4.0;               // path-loss exponent beta
    NoiseSpec noise = NoiseSpec::off();
    Window window;
    std::uint64_t seed = 0;

    void validate() const {
        window.validate();
        noise.validate();
        if (!(lambda_m > 0.0)) throw std::invalid_argument("ModelParams: lambda_m must be > 0");
        if (grid_step && !(*grid_step > 0.0))
            throw std::invalid_argument("ModelParams: grid_step must be > 0");
        if (!(aloha_p > 0.0 && aloha_p < 1.0))
            throw std::invalid_argument("ModelParams: aloha_p must lie strictly in (0,1)");
        if (!(fading_mu > 0.0)) throw std::invalid_argument("ModelParams: fading_mu must be > 0");
        if (!(threshold > 0.0)) throw std::invalid_argument("ModelParams: threshold must be > 0");
        if (!(pathloss_a > 0.0)) throw std::invalid_argument("ModelParams: pathloss_a must be > 0");
        if (!(pathloss_beta > 2.0))
            throw std::invalid_argument("ModelParams: pathloss_beta must be > 2");
    }

    // l(r) = (A r)^beta, evaluated from the squared distance so callers can
    // skip the square root. beta = 4 is the common case and avoids pow().
    double pathloss_from_r2(double r2) const {
        double q = pathloss_a * pathloss_a * r2;
        if (pathloss_beta == 4.0) return q * q;
        return std::pow(q, 0.5 * pathloss_beta);
    }

    double pathloss(double r) const { return pathloss_from_r2(r * r); }
};

}  // namespace stsinr
