#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "scriptorium/geometry.hpp"

namespace scriptorium {

struct AxisDetection {
    AxisBox box;
    double confidence = 0.0;
    int class_id = 0;
};

struct OrientedDetection {
    OrientedBox box;
    double confidence = 0.0;
    int class_id = 0;
};

inline constexpr double kDefaultIouThreshold = 0.4;

// Greedy suppression in descending confidence (ties keep earlier input
// index). A detection survives iff its IoU with every survivor so far is
// below the threshold.
inline std::vector<AxisDetection> resolve_by_confidence(
    const std::vector<AxisDetection>& dets, double iou_threshold = kDefaultIouThreshold) {
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return dets[a].confidence > dets[b].confidence;
    });
    std::vector<AxisDetection> kept;
    for (size_t idx : order) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (iou(dets[idx].box, k.box) >= iou_threshold) { suppressed = true; break; }
        }
        if (!suppressed) kept.push_back(dets[idx]);
    }
    return kept;
}

// Oriented variant: IoU computed on axis-aligned envelopes.
inline std::vector<OrientedDetection> resolve_by_confidence(
    const std::vector<OrientedDetection>& dets, double iou_threshold = kDefaultIouThreshold) {
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return dets[a].confidence > dets[b].confidence;
    });
    std::vector<OrientedDetection> kept;
    for (size_t idx : order) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (iou(envelope(dets[idx].box), envelope(k.box)) >= iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(dets[idx]);
    }
    return kept;
}

inline AxisBox covering_box(const AxisBox& a, const AxisBox& b) {
    double l = std::min(a.left(), b.left());
    double r = std::max(a.right(), b.right());
    double t = std::min(a.top(), b.top());
    double bt = std::max(a.bottom(), b.bottom());
    return {(l + r) / 2.0, (t + bt) / 2.0, r - l, bt - t};
}

// Merge intersecting pairs into their smallest covering box until no pair
// reaches the threshold. Highest-IoU pair merges first; merged confidence is
// the max of the pair. Result ordered by ascending cx.
inline std::vector<AxisDetection> resolve_by_union(
    const std::vector<AxisDetection>& dets, double iou_threshold = kDefaultIouThreshold) {
    std::vector<AxisDetection> out = dets;
    for (;;) {
        double best = 0.0;
        size_t bi = 0, bj = 0;
        bool found = false;
        for (size_t i = 0; i < out.size(); ++i) {
            for (size_t j = i + 1; j < out.size(); ++j) {
                double v = iou(out[i].box, out[j].box);
                if (v >= iou_threshold && v > best) {
                    best = v;
                    bi = i;
                    bj = j;
                    found = true;
                }
            }
        }
        if (!found) break;
        AxisDetection merged{covering_box(out[bi].box, out[bj].box),
                             std::max(out[bi].confidence, out[bj].confidence),
                             out[bi].class_id};
        out.erase(out.begin() + bj);
        out[bi] = merged;
    }
    std::stable_sort(out.begin(), out.end(), [](const AxisDetection& a, const AxisDetection& b) {
        return a.box.cx < b.box.cx;
    });
    return out;
}

// Extend a line box to the left and right image edges while keeping its
// inclination; y-values clamp to [0,1].
inline OrientedBox extend_line(const OrientedBox& l) {
    double alpha = line_angle(l).radians;
    if (std::abs(alpha) >= M_PI / 4.0)
        throw std::invalid_argument("line inclination too steep to extend");
    double s = std::tan(alpha);
    auto cl = [](double y) { return std::clamp(y, 0.0, 1.0); };
    OrientedBox out;
    out.corners[0] = {0.0, cl(l.top_left().y - s * l.top_left().x)};
    out.corners[1] = {1.0, cl(l.top_right().y + s * (1.0 - l.top_right().x))};
    out.corners[2] = {1.0, cl(l.bottom_right().y + s * (1.0 - l.bottom_right().x))};
    out.corners[3] = {0.0, cl(l.bottom_left().y - s * l.bottom_left().x)};
    return out;
}

inline Point centroid(const OrientedBox& b) {
    double x = 0.0, y = 0.0;
    for (const Point& p : b.corners) { x += p.x; y += p.y; }
    return {x / 4.0, y / 4.0};
}

// Top-to-bottom reading order; ties left-to-right.
inline std::vector<OrientedDetection> sort_lines(std::vector<OrientedDetection> dets) {
    std::stable_sort(dets.begin(), dets.end(),
                     [](const OrientedDetection& a, const OrientedDetection& b) {
                         Point ca = centroid(a.box), cb = centroid(b.box);
                         if (ca.y != cb.y) return ca.y < cb.y;
                         return ca.x < cb.x;
                     });
    return dets;
}

// Left-to-right reading order; ties top-to-bottom.
inline std::vector<AxisDetection> sort_words(std::vector<AxisDetection> dets) {
    std::stable_sort(dets.begin(), dets.end(),
                     [](const AxisDetection& a, const AxisDetection& b) {
                         if (a.box.cx != b.box.cx) return a.box.cx < b.box.cx;
                         return a.box.cy < b.box.cy;
                     });
    return dets;
}

}  // namespace scriptorium
