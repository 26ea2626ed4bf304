#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace scriptorium {

// Normalized image coordinates: x in [0,1] left to right, y in [0,1] top to
// bottom. y grows downward, so a positive angle rotates +x toward +y and a
// text line sloping visually down-right has a positive inclination.

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Angle {
    double radians = 0.0;
};

struct AxisBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    double left() const { return cx - w / 2.0; }
    double right() const { return cx + w / 2.0; }
    double top() const { return cy - h / 2.0; }
    double bottom() const { return cy + h / 2.0; }
};

// Corners in fixed order: top-left, top-right, bottom-right, bottom-left.
struct OrientedBox {
    std::array<Point, 4> corners{};

    const Point& top_left() const { return corners[0]; }
    const Point& top_right() const { return corners[1]; }
    const Point& bottom_right() const { return corners[2]; }
    const Point& bottom_left() const { return corners[3]; }
};

inline double area_axis(const AxisBox& b) { return b.w * b.h; }

// Shoelace area. With y-down coordinates and the fixed TL,TR,BR,BL corner
// order a valid box yields a positive value.
inline double signed_area(const OrientedBox& b) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Point& p = b.corners[i];
        const Point& q = b.corners[(i + 1) % 4];
        s += p.x * q.y - q.x * p.y;
    }
    return s / 2.0;
}

inline double area_oriented(const OrientedBox& b) {
    double a = signed_area(b);
    if (!(a > 0.0)) throw std::invalid_argument("oriented box has non-positive area");
    return a;
}

inline bool is_convex(const OrientedBox& b) {
    for (int i = 0; i < 4; ++i) {
        const Point& a = b.corners[i];
        const Point& c = b.corners[(i + 1) % 4];
        const Point& d = b.corners[(i + 2) % 4];
        double cross = (c.x - a.x) * (d.y - a.y) - (c.y - a.y) * (d.x - a.x);
        if (cross < 0.0) return false;
    }
    return true;
}

inline bool valid_oriented(const OrientedBox& b) {
    for (const Point& p : b.corners)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    if (!(b.top_left().x < b.top_right().x)) return false;
    if (!(b.bottom_left().x < b.bottom_right().x)) return false;
    if (!(signed_area(b) > 0.0)) return false;
    return is_convex(b);
}

inline double intersect_axis(const AxisBox& a, const AxisBox& b) {
    double w = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
    double h = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

inline double iou(const AxisBox& a, const AxisBox& b) {
    double inter = intersect_axis(a, b);
    double uni = area_axis(a) + area_axis(b) - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

namespace detail {

inline std::vector<Point> clip_against_half_plane(const std::vector<Point>& poly,
                                                  const Point& a, const Point& b) {
    auto side = [&](const Point& q) {
        return (b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x);
    };
    std::vector<Point> out;
    out.reserve(poly.size() + 1);
    for (size_t i = 0; i < poly.size(); ++i) {
        const Point& cur = poly[i];
        const Point& nxt = poly[(i + 1) % poly.size()];
        double sc = side(cur);
        double sn = side(nxt);
        if (sc >= 0.0) out.push_back(cur);
        if ((sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0)) {
            double t = sc / (sc - sn);
            out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
        }
    }
    return out;
}

inline double polygon_area(const std::vector<Point>& poly) {
    if (poly.size() < 3) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < poly.size(); ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % poly.size()];
        s += p.x * q.y - q.x * p.y;
    }
    return std::abs(s) / 2.0;
}

}  // namespace detail

// Area of rectangle w clipped against the convex quadrilateral l
// (Sutherland-Hodgman half-plane clipping). Non-convex boxes must be
// rejected before reaching this point.
inline double clip_axis_against_oriented(const AxisBox& w, const OrientedBox& l) {
    std::vector<Point> poly = {
        {w.left(), w.top()}, {w.right(), w.top()},
        {w.right(), w.bottom()}, {w.left(), w.bottom()}};
    for (int i = 0; i < 4; ++i) {
        poly = detail::clip_against_half_plane(poly, l.corners[i], l.corners[(i + 1) % 4]);
        if (poly.size() < 3) return 0.0;
    }
    return detail::polygon_area(poly);
}

inline double membership_ratio(const AxisBox& w, const OrientedBox& l) {
    return clip_axis_against_oriented(w, l) / area_axis(w);
}

// Inclination of the line's mean top/bottom direction vector. Two-argument
// arctangent keeps the quadrant right even for steep jitter.
inline Angle line_angle(const OrientedBox& l) {
    double xt = l.top_right().x - l.top_left().x;
    double yt = l.top_right().y - l.top_left().y;
    double xb = l.bottom_right().x - l.bottom_left().x;
    double yb = l.bottom_right().y - l.bottom_left().y;
    double x = xt + xb;
    double y = yt + yb;
    if (x == 0.0 && y == 0.0)
        throw std::invalid_argument("degenerate line: zero mean direction vector");
    return {std::atan2(y, x)};
}

inline Point rotate_point(const Point& p, const Point& center, Angle a) {
    double c = std::cos(a.radians);
    double s = std::sin(a.radians);
    double dx = p.x - center.x;
    double dy = p.y - center.y;
    return {center.x + c * dx - s * dy, center.y + s * dx + c * dy};
}

// Smallest axis-aligned box containing the corners, clamped to [0,1].
inline AxisBox envelope(const OrientedBox& l) {
    double x0 = l.corners[0].x, x1 = x0, y0 = l.corners[0].y, y1 = y0;
    for (const Point& p : l.corners) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    x0 = std::clamp(x0, 0.0, 1.0);
    x1 = std::clamp(x1, 0.0, 1.0);
    y0 = std::clamp(y0, 0.0, 1.0);
    y1 = std::clamp(y1, 0.0, 1.0);
    return {(x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0};
}

}  // namespace scriptorium
