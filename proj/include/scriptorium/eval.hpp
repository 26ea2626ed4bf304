#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "scriptorium/lexicon.hpp"
#include "scriptorium/postprocess.hpp"

namespace scriptorium {

struct MatchPair {
    size_t pred_index;
    size_t gt_index;
    double iou;
};

struct MatchResult {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::vector<MatchPair> pairs;
};

// Greedy matching: predictions in descending confidence, each takes the
// unmatched ground truth with the highest IoU at or above the threshold.
inline MatchResult match_detections(const std::vector<AxisDetection>& preds,
                                    const std::vector<AxisBox>& gts,
                                    double iou_threshold) {
    std::vector<size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return preds[a].confidence > preds[b].confidence;
    });
    std::vector<bool> gt_used(gts.size(), false);
    MatchResult m;
    for (size_t pi : order) {
        double best = iou_threshold;
        size_t best_gt = gts.size();
        for (size_t gi = 0; gi < gts.size(); ++gi) {
            if (gt_used[gi]) continue;
            double v = iou(preds[pi].box, gts[gi]);
            if (v >= best && (best_gt == gts.size() || v > best)) {
                best = v;
                best_gt = gi;
            }
        }
        if (best_gt < gts.size()) {
            gt_used[best_gt] = true;
            ++m.tp;
            m.pairs.push_back({pi, best_gt, best});
        } else {
            ++m.fp;
        }
    }
    m.fn = gts.size() - m.tp;
    return m;
}

// Vacuous conventions: no predictions and no ground truth count as perfect.
inline std::pair<double, double> precision_recall(const MatchResult& m) {
    double p;
    if (m.tp + m.fp == 0)
        p = (m.fn == 0) ? 1.0 : 0.0;
    else
        p = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    double r = (m.tp + m.fn == 0)
                   ? 1.0
                   : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    return {p, r};
}

struct CurvePoint {
    double confidence;
    double precision;
    double recall;
    double f1;
};

struct SweepResult {
    std::vector<CurvePoint> points;
    double best_f1_confidence = 0.0;
    double best_f1 = 0.0;
};

inline SweepResult sweep_curves(const std::vector<AxisDetection>& preds,
                                const std::vector<AxisBox>& gts,
                                double iou_threshold, int steps) {
    if (steps < 2) throw std::invalid_argument("steps must be >= 2");
    SweepResult out;
    for (int i = 0; i < steps; ++i) {
        double cutoff = static_cast<double>(i) / (steps - 1);
        std::vector<AxisDetection> kept;
        for (const auto& d : preds)
            if (d.confidence >= cutoff) kept.push_back(d);
        auto [p, r] = precision_recall(match_detections(kept, gts, iou_threshold));
        double f1 = (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
        out.points.push_back({cutoff, p, r, f1});
        if (f1 > out.best_f1) {
            out.best_f1 = f1;
            out.best_f1_confidence = cutoff;
        }
    }
    return out;
}

// Area under the precision-recall curve with monotone (non-increasing)
// precision interpolation, predictions ranked by descending confidence.
inline double average_precision(const std::vector<AxisDetection>& preds,
                                const std::vector<AxisBox>& gts,
                                double iou_threshold) {
    if (gts.empty()) return preds.empty() ? 1.0 : 0.0;
    std::vector<size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return preds[a].confidence > preds[b].confidence;
    });
    std::vector<bool> gt_used(gts.size(), false);
    std::vector<bool> is_tp;
    is_tp.reserve(order.size());
    for (size_t pi : order) {
        double best = iou_threshold;
        size_t best_gt = gts.size();
        for (size_t gi = 0; gi < gts.size(); ++gi) {
            if (gt_used[gi]) continue;
            double v = iou(preds[pi].box, gts[gi]);
            if (v >= best && (best_gt == gts.size() || v > best)) {
                best = v;
                best_gt = gi;
            }
        }
        if (best_gt < gts.size()) {
            gt_used[best_gt] = true;
            is_tp.push_back(true);
        } else {
            is_tp.push_back(false);
        }
    }
    std::vector<double> precisions, recalls;
    std::uint64_t tp = 0, fp = 0;
    for (bool t : is_tp) {
        t ? ++tp : ++fp;
        precisions.push_back(static_cast<double>(tp) / (tp + fp));
        recalls.push_back(static_cast<double>(tp) / gts.size());
    }
    // Make precision non-increasing from the right, then integrate over
    // recall steps.
    for (size_t i = precisions.size(); i-- > 1;)
        precisions[i - 1] = std::max(precisions[i - 1], precisions[i]);
    double ap = 0.0;
    double prev_r = 0.0;
    for (size_t i = 0; i < precisions.size(); ++i) {
        ap += (recalls[i] - prev_r) * precisions[i];
        prev_r = recalls[i];
    }
    return ap;
}

struct MapResult {
    double map50;
    double map5095;
};

// map50 at IoU 0.5; map5095 is the mean over thresholds 0.50:0.05:0.95.
inline MapResult map_range(const std::vector<AxisDetection>& preds,
                           const std::vector<AxisBox>& gts) {
    double map50 = average_precision(preds, gts, 0.5);
    double sum = 0.0;
    for (int i = 0; i < 10; ++i) sum += average_precision(preds, gts, 0.5 + 0.05 * i);
    return {map50, sum / 10.0};
}

// [[tp, fp], [fn, -]]; the background-background cell is undefined.
struct ConfusionTable {
    std::uint64_t tp;
    std::uint64_t fp;
    std::uint64_t fn;
};

inline ConfusionTable confusion_counts(const MatchResult& m) { return {m.tp, m.fp, m.fn}; }

inline double mean_string_distance(const std::vector<Word>& preds,
                                   const std::vector<Word>& gts) {
    if (preds.size() != gts.size())
        throw std::invalid_argument("prediction/ground-truth length mismatch");
    if (preds.empty()) throw std::invalid_argument("empty word lists");
    double total = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) total += levenshtein(preds[i], gts[i]);
    return total / preds.size();
}

}  // namespace scriptorium
