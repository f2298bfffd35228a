#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stsinr/stats.hpp"

namespace stsinr {

// A Monte Carlo aggregate. `lower_bound` marks estimates whose sample
// contains censored values, so the number is a lower bound rather than a
// mean; pooling refuses to mix the two.
struct Estimate {
    std::string name;
    double value = 0.0;
    double se = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t censored = 0;
    bool lower_bound = false;
    std::string fingerprint;
};

inline Estimate make_estimate(const std::string& name, const std::vector<double>& xs,
                              std::uint64_t censored = 0, const std::string& fingerprint = "") {
    MeanSe ms = mean_se(xs);
    Estimate e;
    e.name = name;
    e.value = ms.mean;
    e.se = ms.se;
    e.samples = ms.n;
    e.censored = censored;
    e.lower_bound = censored > 0;
    e.fingerprint = fingerprint;
    return e;
}

inline Estimate aggregate(const std::vector<Estimate>& parts) {
    if (parts.empty()) throw std::invalid_argument("aggregate: nothing to pool");
    Estimate out = parts.front();
    if (parts.size() == 1) return out;
    double weighted = 0.0;
    double var_acc = 0.0;
    std::uint64_t n = 0;
    std::uint64_t censored = 0;
    for (const auto& e : parts) {
        if (e.name != out.name)
            throw std::invalid_argument("aggregate: mixed statistic names (" + out.name + " vs " +
                                        e.name + ")");
        if (e.lower_bound != out.lower_bound)
            throw std::invalid_argument(
                "aggregate: refusing to pool censored lower bounds with plain means");
        weighted += e.value * static_cast<double>(e.samples);
        double w = static_cast<double>(e.samples) * e.se;
        var_acc += w * w;
        n += e.samples;
        censored += e.censored;
    }
    if (n == 0) throw std::invalid_argument("aggregate: zero total samples");
    out.value = weighted / static_cast<double>(n);
    out.se = std::sqrt(var_acc) / static_cast<double>(n);
    out.samples = n;
    out.censored = censored;
    return out;
}

// Survival estimate at a threshold from possibly right-censored counts. A
// censored observation still decides `> q` whenever its lower bound already
// exceeds q; otherwise it is indeterminate and counted separately.
struct SurvivalPoint {
    double q = 0.0;
    double survival = 0.0;
    double se = 0.0;
    std::uint64_t exceed = 0;
    std::uint64_t indeterminate = 0;
    std::uint64_t n = 0;
};

inline SurvivalPoint survival_at(double q, const std::vector<std::int64_t>& values,
                                 const std::vector<std::uint8_t>& censored) {
    if (values.size() != censored.size() || values.empty())
        throw std::invalid_argument("survival_at: shape mismatch");
    SurvivalPoint pt;
    pt.q = q;
    pt.n = values.size();
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (static_cast<double>(values[k]) > q)
            ++pt.exceed;
        else if (censored[k])
            ++pt.indeterminate;
    }
    double n = static_cast<double>(pt.n);
    pt.survival = static_cast<double>(pt.exceed) / n;
    pt.se = std::sqrt(std::max(0.0, pt.survival * (1.0 - pt.survival)) / n);
    return pt;
}

}  // namespace stsinr
