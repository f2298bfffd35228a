#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stsinr/geometry.hpp"
#include "stsinr/random.hpp"

namespace stsinr {

enum class PointOrigin : std::uint8_t { poisson, grid, palm };

inline std::string to_string(PointOrigin o) {
    switch (o) {
        case PointOrigin::poisson: return "poisson";
        case PointOrigin::grid: return "grid";
        default: return "palm";
    }
}

struct PatternPoint {
    int id = 0;
    Vec2 pos;
    PointOrigin origin = PointOrigin::poisson;
};

// A finite realization of node locations. Ids are dense integers from 0 so
// they can key the mark streams and survive serialization. Immutable after
// construction; all samplers are pure functions of (params, seed).
struct PointPattern {
    std::vector<PatternPoint> points;
    Window window;

    std::size_t size() const { return points.size(); }
    const Vec2& position(int id) const { return points[static_cast<std::size_t>(id)].pos; }

    double distance(int i, int j) const {
        return window.distance(position(i), position(j));
    }

    // Nearest pattern point to an arbitrary location, ties broken by lowest id.
    int nearest(const Vec2& x) const {
        if (points.empty()) throw std::domain_error("PointPattern::nearest: empty pattern");
        int best = points.front().id;
        double best_d2 = window.distance_sq(points.front().pos, x);
        for (std::size_t k = 1; k < points.size(); ++k) {
            double d2 = window.distance_sq(points[k].pos, x);
            if (d2 < best_d2 || (d2 == best_d2 && points[k].id < best)) {
                best_d2 = d2;
                best = points[k].id;
            }
        }
        return best;
    }

    void check_invariants() const {
        for (std::size_t k = 0; k < points.size(); ++k) {
            if (points[k].id != static_cast<int>(k))
                throw std::invalid_argument("PointPattern: ids must be dense from 0");
            if (!window.contains(points[k].pos))
                throw std::invalid_argument("PointPattern: position outside window");
        }
    }
};

namespace tags {
inline constexpr std::uint64_t poisson_sampler = 0x706f697373ull;
inline constexpr std::uint64_t grid_sampler = 0x67726964ull;
}  // namespace tags

// Homogeneous Poisson sample: count ~ Poisson(intensity * area), positions
// i.i.d. uniform over the window.
inline PointPattern sample_poisson(double intensity, const Window& window, std::uint64_t seed) {
    window.validate();
    if (!(intensity > 0.0)) throw std::invalid_argument("sample_poisson: intensity must be > 0");
    UniformStream stream(seed, tags::poisson_sampler);
    std::uint64_t n = poisson_count(stream, intensity * window.area());
    PointPattern out;
    out.window = window;
    out.points.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) {
        Vec2 p{(stream.next() - 0.5) * window.width, (stream.next() - 0.5) * window.height};
        out.points.push_back({static_cast<int>(k), p, PointOrigin::poisson});
    }
    return out;
}

// Square grid s*Z^2 shifted by U_G uniform in [0,s)^2, intersected with the
// window. In torus mode the window must tile, which makes the count exactly
// area / s^2 for every seed.
inline PointPattern sample_shifted_grid(double step_s, const Window& window, std::uint64_t seed) {
    window.validate();
    if (!(step_s > 0.0)) throw std::invalid_argument("sample_shifted_grid: step must be > 0");
    if (window.boundary == BoundaryMode::torus) {
        double nx = window.width / step_s;
        double ny = window.height / step_s;
        if (std::fabs(nx - std::round(nx)) > 1e-9 || std::fabs(ny - std::round(ny)) > 1e-9)
            throw std::invalid_argument(
                "sample_shifted_grid: torus window dimensions must be integer multiples of the step");
    }
    UniformStream stream(seed, tags::grid_sampler);
    double ux = stream.next() * step_s;
    double uy = stream.next() * step_s;

    PointPattern out;
    out.window = window;
    auto emit_axis = [&](double extent, double shift, std::vector<double>& coords) {
        // lattice coordinates shift + s*k inside [-extent/2, extent/2)
        long k0 = static_cast<long>(std::ceil((-0.5 * extent - shift) / step_s - 1e-12));
        for (long k = k0;; ++k) {
            double c = shift + step_s * static_cast<double>(k);
            if (c < -0.5 * extent) continue;
            if (c >= 0.5 * extent) break;
            coords.push_back(c);
        }
    };
    std::vector<double> xs, ys;
    emit_axis(window.width, ux, xs);
    emit_axis(window.height, uy, ys);
    int id = 0;
    for (double y : ys)
        for (double x : xs) out.points.push_back({id++, Vec2{x, y}, PointOrigin::grid});
    return out;
}

// Union of two patterns on the same window; ids are reassigned contiguously
// (a's points first), origins preserved.
inline PointPattern superpose(const PointPattern& a, const PointPattern& b) {
    if (!(a.window.width == b.window.width && a.window.height == b.window.height &&
          a.window.boundary == b.window.boundary))
        throw std::invalid_argument("superpose: windows must match");
    PointPattern out;
    out.window = a.window;
    out.points.reserve(a.size() + b.size());
    int id = 0;
    for (const auto& p : a.points) out.points.push_back({id++, p.pos, p.origin});
    for (const auto& p : b.points) out.points.push_back({id++, p.pos, p.origin});
    return out;
}

// Palm conditioning: prepend the given locations as extra points with the
// lowest ids, so the "typical node" of a Palm experiment is always id 0.
// Existing points keep their order, shifted by the number of extras.
inline PointPattern palm_add(const PointPattern& pattern, const std::vector<Vec2>& extra) {
    PointPattern out;
    out.window = pattern.window;
    out.points.reserve(pattern.size() + extra.size());
    int id = 0;
    for (const auto& x : extra) {
        if (!pattern.window.contains(x))
            throw std::invalid_argument("palm_add: extra position outside window");
        for (const auto& q : out.points)
            if (q.pos == x) throw std::invalid_argument("palm_add: duplicate extra position");
        for (const auto& q : pattern.points)
            if (q.pos == x) throw std::invalid_argument("palm_add: extra duplicates existing point");
        out.points.push_back({id++, x, PointOrigin::palm});
    }
    for (const auto& p : pattern.points) out.points.push_back({id++, p.pos, p.origin});
    return out;
}

inline double distance(const Vec2& x, const Vec2& y, const Window& window) {
    return window.distance(x, y);
}

}  // namespace stsinr
