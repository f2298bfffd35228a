#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace stsinr {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }
};

enum class BoundaryMode { torus, plane_with_guard };

// Rectangular observation window centered at the origin, spanning
// [-width/2, width/2) x [-height/2, height/2). Torus mode wraps the metric;
// plane mode keeps the Euclidean metric and reserves a guard margin near the
// boundary for measurement points.
struct Window {
    double width = 0.0;
    double height = 0.0;
    BoundaryMode boundary = BoundaryMode::torus;
    double guard_margin = 0.0;

    void validate() const {
        if (!(width > 0.0) || !(height > 0.0))
            throw std::invalid_argument("Window: width and height must be positive");
        if (boundary == BoundaryMode::plane_with_guard) {
            if (!(guard_margin >= 0.0) || !(guard_margin < 0.5 * std::min(width, height)))
                throw std::invalid_argument(
                    "Window: guard margin must be in [0, min(width,height)/2)");
        }
    }

    double area() const { return width * height; }

    bool contains(const Vec2& p) const {
        return p.x >= -0.5 * width && p.x < 0.5 * width && p.y >= -0.5 * height &&
               p.y < 0.5 * height;
    }

    // True if p keeps at least the guard margin from the plane boundary.
    // On a torus every position qualifies.
    bool inside_guard(const Vec2& p) const {
        if (boundary == BoundaryMode::torus) return contains(p);
        return p.x >= -0.5 * width + guard_margin && p.x <= 0.5 * width - guard_margin &&
               p.y >= -0.5 * height + guard_margin && p.y <= 0.5 * height - guard_margin;
    }

    double wrap_delta(double d, double extent) const {
        d = std::fabs(d);
        return std::min(d, extent - d);
    }

    // Squared distance under the window metric. The hot loops work with
    // squared distances; the path-loss function takes them directly.
    double distance_sq(const Vec2& a, const Vec2& b) const {
        double dx = a.x - b.x;
        double dy = a.y - b.y;
        if (boundary == BoundaryMode::torus) {
            dx = wrap_delta(dx, width);
            dy = wrap_delta(dy, height);
        }
        return dx * dx + dy * dy;
    }

    double distance(const Vec2& a, const Vec2& b) const { return std::sqrt(distance_sq(a, b)); }
};

inline std::string to_string(BoundaryMode m) {
    return m == BoundaryMode::torus ? "torus" : "plane";
}

}  // namespace stsinr
