#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "scriptorium/eval.hpp"
#include "support/oracles.hpp"

using namespace scriptorium;
namespace st = scriptorium::testing;

TEST_CASE("match_detections basic cases", "[eval]") {
    std::vector<AxisBox> gts = {{0.2, 0.2, 0.1, 0.1}, {0.6, 0.6, 0.1, 0.1}};
    std::vector<AxisDetection> perfect = {{gts[0], 0.9, 0}, {gts[1], 0.8, 0}};
    MatchResult m = match_detections(perfect, gts, 0.5);
    CHECK(m.tp == 2);
    CHECK(m.fp == 0);
    CHECK(m.fn == 0);

    MatchResult none = match_detections({}, gts, 0.5);
    CHECK(none.tp == 0);
    CHECK(none.fn == 2);

    // Crafted 3-pred / 2-gt overlap: the strongest prediction takes the
    // best gt, the next takes the remaining one, the third is fp.
    std::vector<AxisDetection> crowd = {{{0.21, 0.2, 0.1, 0.1}, 0.95, 0},
                                        {{0.2, 0.2, 0.1, 0.1}, 0.90, 0},
                                        {{0.61, 0.6, 0.1, 0.1}, 0.85, 0}};
    MatchResult cm = match_detections(crowd, gts, 0.3);
    CHECK(cm.tp == 2);
    CHECK(cm.fp == 1);
    CHECK(cm.fn == 0);
    // The 0.95 prediction is matched to gt 0 even though the 0.90 one
    // overlaps better.
    bool top_matched_gt0 = false;
    for (const auto& p : cm.pairs)
        if (p.pred_index == 0 && p.gt_index == 0) top_matched_gt0 = true;
    CHECK(top_matched_gt0);
}

TEST_CASE("match bookkeeping invariants", "[eval]") {
    std::mt19937_64 rng(113);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<AxisBox> gts;
        for (int i = 0; i < 10; ++i) gts.push_back(st::random_axis_box(rng));
        std::vector<AxisDetection> preds;
        for (int i = 0; i < 15; ++i) preds.push_back({st::random_axis_box(rng), conf(rng), 0});
        std::uint64_t prev_tp = gts.size() + 1;
        for (double thr : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            MatchResult m = match_detections(preds, gts, thr);
            CHECK(m.tp + m.fn == gts.size());
            CHECK(m.tp + m.fp == preds.size());
            CHECK(m.tp <= prev_tp);  // raising the threshold never adds tp
            prev_tp = m.tp;
        }
    }
}

TEST_CASE("precision and recall from the reported confusion counts", "[eval]") {
    MatchResult lines{115, 6, 6, {}};
    auto [lp, lr] = precision_recall(lines);
    CHECK(lp == Catch::Approx(115.0 / 121.0).epsilon(1e-6));
    CHECK(lr == Catch::Approx(115.0 / 121.0).epsilon(1e-6));

    MatchResult words{750, 170, 207, {}};
    auto [wp, wr] = precision_recall(words);
    CHECK(wp == Catch::Approx(750.0 / 920.0).epsilon(1e-6));
    CHECK(wr == Catch::Approx(750.0 / 957.0).epsilon(1e-6));

    auto [ep, er] = precision_recall(MatchResult{});
    CHECK(ep == 1.0);
    CHECK(er == 1.0);

    auto [zp, zr] = precision_recall(MatchResult{0, 0, 3, {}});
    CHECK(zp == 0.0);
    CHECK(zr == 0.0);
}

TEST_CASE("confusion table layout", "[eval]") {
    ConfusionTable t = confusion_counts(MatchResult{115, 6, 6, {}});
    CHECK(t.tp == 115);
    CHECK(t.fp == 6);
    CHECK(t.fn == 6);
    ConfusionTable w = confusion_counts(MatchResult{750, 170, 207, {}});
    CHECK(w.tp == 750);
    CHECK(w.fp == 170);
    CHECK(w.fn == 207);
    ConfusionTable e = confusion_counts(MatchResult{});
    CHECK(e.tp == 0);
    CHECK(e.fp == 0);
    CHECK(e.fn == 0);
}

TEST_CASE("sweep curves", "[eval]") {
    std::vector<AxisBox> gts = {{0.2, 0.2, 0.1, 0.1}, {0.6, 0.6, 0.1, 0.1}};
    std::vector<AxisDetection> perfect = {{gts[0], 1.0, 0}, {gts[1], 1.0, 0}};
    SweepResult sr = sweep_curves(perfect, gts, 0.5, 11);
    REQUIRE(sr.points.size() == 11);
    for (const auto& pt : sr.points) {
        CHECK(pt.precision == 1.0);
        CHECK(pt.recall == 1.0);
        CHECK(pt.f1 == 1.0);
    }
    CHECK(sr.points.back().confidence == 1.0);

    CHECK_THROWS_AS(sweep_curves(perfect, gts, 0.5, 1), std::invalid_argument);

    // Per-cutoff recomputation oracle on a scored scene.
    std::mt19937_64 rng(127);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    std::vector<AxisBox> rgts;
    for (int i = 0; i < 8; ++i) rgts.push_back(st::random_axis_box(rng));
    std::vector<AxisDetection> rpreds;
    for (int i = 0; i < 8; ++i) rpreds.push_back({rgts[i], conf(rng), 0});
    for (int i = 0; i < 4; ++i) rpreds.push_back({st::random_axis_box(rng), conf(rng), 0});
    SweepResult rs = sweep_curves(rpreds, rgts, 0.5, 21);
    for (const auto& pt : rs.points) {
        std::vector<AxisDetection> kept;
        for (const auto& p : rpreds)
            if (p.confidence >= pt.confidence) kept.push_back(p);
        auto [p, r] = precision_recall(match_detections(kept, rgts, 0.5));
        CHECK(pt.precision == p);
        CHECK(pt.recall == r);
    }
}

TEST_CASE("average precision", "[eval]") {
    std::vector<AxisBox> gts = {{0.2, 0.2, 0.1, 0.1}, {0.6, 0.6, 0.1, 0.1}};
    std::vector<AxisDetection> perfect = {{gts[0], 1.0, 0}, {gts[1], 1.0, 0}};
    CHECK(average_precision(perfect, gts, 0.5) == 1.0);

    std::vector<AxisDetection> miss = {{{0.9, 0.9, 0.05, 0.05}, 0.9, 0}};
    CHECK(average_precision(miss, gts, 0.5) == 0.0);

    // 5-prediction case with hand-computed step areas: ranks are
    // tp, fp, tp, fp, fp over 2 ground truths.
    std::vector<AxisBox> g2 = {{0.2, 0.2, 0.1, 0.1}, {0.6, 0.6, 0.1, 0.1}};
    std::vector<AxisDetection> mixed = {
        {g2[0], 0.95, 0},
        {{0.9, 0.9, 0.05, 0.05}, 0.9, 0},
        {g2[1], 0.85, 0},
        {{0.4, 0.9, 0.05, 0.05}, 0.8, 0},
        {{0.9, 0.4, 0.05, 0.05}, 0.75, 0}};
    // precision at recalls 0.5 and 1.0: 1.0 and 2/3.
    double expect = 0.5 * 1.0 + 0.5 * (2.0 / 3.0);
    CHECK(average_precision(mixed, g2, 0.5) == Catch::Approx(expect));

    MapResult maps = map_range(mixed, g2);
    CHECK(maps.map50 == Catch::Approx(expect));
    CHECK(maps.map5095 <= maps.map50 + 1e-12);
    CHECK(maps.map50 >= 0.0);
    CHECK(maps.map50 <= 1.0);
}

TEST_CASE("mean string distance", "[eval]") {
    CHECK(mean_string_distance({"et", "amen"}, {"et", "amen"}) == 0.0);
    CHECK(mean_string_distance({"nostre"}, {"nostrae"}) == 1.0);
    CHECK(mean_string_distance({"et", "amen"}, {"et", "amicus"}) == Catch::Approx(2.0));
    CHECK_THROWS_AS(mean_string_distance({"et"}, {"et", "amen"}), std::invalid_argument);
    CHECK_THROWS_AS(mean_string_distance({}, {}), std::invalid_argument);
}
