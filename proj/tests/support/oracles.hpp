#pragma once

// Independent brute-force oracles used to cross-check the analytic
// implementations. These deliberately avoid sharing code with the library
// paths they verify.

#include <random>

#include "scriptorium/geometry.hpp"
#include "scriptorium/lexicon.hpp"

namespace scriptorium::testing {

inline bool point_in_axis(double x, double y, const AxisBox& b) {
    return x >= b.left() && x <= b.right() && y >= b.top() && y <= b.bottom();
}

inline bool point_in_quad(double x, double y, const OrientedBox& q) {
    for (int i = 0; i < 4; ++i) {
        const Point& a = q.corners[i];
        const Point& b = q.corners[(i + 1) % 4];
        double cross = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
        if (cross < 0.0) return false;
    }
    return true;
}

// Rasterized area on an N x N grid of cell centers over the unit square,
// restricted to a bounding window for speed. Returns area as a fraction of
// the unit square.
template <typename Member>
inline double raster_area(int grid, double x0, double x1, double y0, double y1, Member inside) {
    int i0 = std::max(0, static_cast<int>(std::floor(x0 * grid)) - 1);
    int i1 = std::min(grid - 1, static_cast<int>(std::ceil(x1 * grid)) + 1);
    int j0 = std::max(0, static_cast<int>(std::floor(y0 * grid)) - 1);
    int j1 = std::min(grid - 1, static_cast<int>(std::ceil(y1 * grid)) + 1);
    long count = 0;
    for (int j = j0; j <= j1; ++j) {
        double y = (j + 0.5) / grid;
        for (int i = i0; i <= i1; ++i) {
            if (inside((i + 0.5) / grid, y)) ++count;
        }
    }
    return static_cast<double>(count) / (static_cast<double>(grid) * grid);
}

inline double raster_area_axis(const AxisBox& b, int grid = 2000) {
    return raster_area(grid, b.left(), b.right(), b.top(), b.bottom(),
                       [&](double x, double y) { return point_in_axis(x, y, b); });
}

inline double raster_area_quad(const OrientedBox& q, int grid = 2000) {
    AxisBox env = envelope(q);
    return raster_area(grid, env.left(), env.right(), env.top(), env.bottom(),
                       [&](double x, double y) { return point_in_quad(x, y, q); });
}

inline double raster_intersect_axis(const AxisBox& a, const AxisBox& b, int grid = 2000) {
    return raster_area(grid, std::max(a.left(), b.left()), std::min(a.right(), b.right()),
                       std::max(a.top(), b.top()), std::min(a.bottom(), b.bottom()),
                       [&](double x, double y) {
                           return point_in_axis(x, y, a) && point_in_axis(x, y, b);
                       });
}

inline double raster_clip_axis_quad(const AxisBox& w, const OrientedBox& l, int grid = 2000) {
    return raster_area(grid, w.left(), w.right(), w.top(), w.bottom(),
                       [&](double x, double y) {
                           return point_in_axis(x, y, w) && point_in_quad(x, y, l);
                       });
}

inline double raster_union_axis(const AxisBox& a, const AxisBox& b, int grid = 2000) {
    return raster_area(grid, std::min(a.left(), b.left()), std::max(a.right(), b.right()),
                       std::min(a.top(), b.top()), std::max(a.bottom(), b.bottom()),
                       [&](double x, double y) {
                           return point_in_axis(x, y, a) || point_in_axis(x, y, b);
                       });
}

inline AxisBox random_axis_box(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> size(0.02, 0.3);
    double w = size(rng), h = size(rng);
    std::uniform_real_distribution<double> px(w / 2, 1.0 - w / 2);
    std::uniform_real_distribution<double> py(h / 2, 1.0 - h / 2);
    return {px(rng), py(rng), w, h};
}

// Random convex quadrilateral in the fixed corner order: an inclined band.
inline OrientedBox random_oriented_box(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(-0.4, 0.4);
    std::uniform_real_distribution<double> width(0.2, 0.6);
    std::uniform_real_distribution<double> height(0.05, 0.25);
    double a = angle(rng);
    double w = width(rng), h = height(rng);
    std::uniform_real_distribution<double> cx(0.25, 0.75), cy(0.25, 0.75);
    Point c{cx(rng), cy(rng)};
    double ca = std::cos(a), sa = std::sin(a);
    auto corner = [&](double dx, double dy) -> Point {
        return {c.x + dx * ca - dy * sa, c.y + dx * sa + dy * ca};
    };
    OrientedBox b;
    b.corners[0] = corner(-w / 2, -h / 2);
    b.corners[1] = corner(w / 2, -h / 2);
    b.corners[2] = corner(w / 2, h / 2);
    b.corners[3] = corner(-w / 2, h / 2);
    return b;
}

// Reference implementation of the length-constrained word distance, written
// directly from the rules rather than sharing the library's code path.
inline std::int64_t brute_modified_hamming(const Word& a, const Word& b) {
    constexpr std::int64_t kInf = -1;
    bool a_short = a.size() < 6, b_short = b.size() < 6;
    if (a_short != b_short) return kInf;
    std::int64_t diff = static_cast<std::int64_t>(a.size()) - static_cast<std::int64_t>(b.size());
    if (diff < 0) diff = -diff;
    if (diff > 2) return kInf;
    if (diff == 0) {
        std::int64_t d = 0;
        for (size_t i = 0; i < a.size(); ++i)
            if (a[i] != b[i]) ++d;
        return d;
    }
    if (diff == 2) return kInf;
    const Word& longer = a.size() > b.size() ? a : b;
    const Word& shorter = a.size() > b.size() ? b : a;
    for (size_t skip = 0; skip < longer.size(); ++skip) {
        Word reduced = longer.substr(0, skip) + longer.substr(skip + 1);
        if (reduced == shorter) return 1;
    }
    return kInf;
}

}  // namespace scriptorium::testing
