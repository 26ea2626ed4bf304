#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "scriptorium/postprocess.hpp"
#include "support/oracles.hpp"

using namespace scriptorium;
namespace st = scriptorium::testing;

namespace {

std::vector<AxisDetection> crowded_scene(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> conf(0.1, 1.0);
    std::vector<AxisDetection> dets;
    for (int i = 0; i < n; ++i) dets.push_back({st::random_axis_box(rng), conf(rng), 0});
    return dets;
}

}  // namespace

TEST_CASE("resolve_by_confidence pairwise rule", "[postprocess]") {
    AxisDetection strong{{0.5, 0.5, 0.2, 0.2}, 0.9, 0};
    AxisDetection weak{{0.53, 0.5, 0.2, 0.2}, 0.7, 0};
    REQUIRE(iou(strong.box, weak.box) >= 0.4);
    auto kept = resolve_by_confidence({weak, strong});
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].confidence == 0.9);

    AxisDetection far{{0.8, 0.5, 0.2, 0.2}, 0.5, 0};
    CHECK(resolve_by_confidence({strong, far}).size() == 2);

    // Three mutually overlapping boxes: only the best survives.
    AxisDetection mid{{0.51, 0.51, 0.2, 0.2}, 0.8, 0};
    auto three = resolve_by_confidence({weak, mid, strong});
    REQUIRE(three.size() == 1);
    CHECK(three[0].confidence == 0.9);
}

TEST_CASE("resolve_by_confidence invariants on crowded scenes", "[postprocess]") {
    std::mt19937_64 rng(61);
    for (int scene = 0; scene < 50; ++scene) {
        auto dets = crowded_scene(rng, 30);
        auto kept = resolve_by_confidence(dets);
        for (size_t i = 0; i < kept.size(); ++i)
            for (size_t j = i + 1; j < kept.size(); ++j)
                CHECK(iou(kept[i].box, kept[j].box) < 0.4);
        // Output is a subset of the input, boxes unmodified.
        for (const auto& k : kept) {
            bool found = false;
            for (const auto& d : dets)
                if (d.box.cx == k.box.cx && d.box.cy == k.box.cy && d.confidence == k.confidence)
                    found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("resolve_by_union merges overlapping pairs", "[postprocess]") {
    AxisDetection a{{0.5, 0.5, 0.2, 0.2}, 0.9, 0};
    AxisDetection b{{0.53, 0.5, 0.2, 0.2}, 0.7, 0};
    auto merged = resolve_by_union({a, b});
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].confidence == 0.9);
    CHECK(merged[0].box.left() == Catch::Approx(0.4));
    CHECK(merged[0].box.right() == Catch::Approx(0.63));

    AxisDetection far{{0.1, 0.5, 0.1, 0.1}, 0.5, 0};
    auto separate = resolve_by_union({a, far});
    REQUIRE(separate.size() == 2);
    CHECK(separate[0].box.cx < separate[1].box.cx);
}

TEST_CASE("resolve_by_union chain converges and is idempotent", "[postprocess]") {
    AxisDetection a{{0.40, 0.5, 0.2, 0.2}, 0.9, 0};
    AxisDetection b{{0.46, 0.5, 0.2, 0.2}, 0.8, 0};
    AxisDetection c{{0.52, 0.5, 0.2, 0.2}, 0.7, 0};
    auto merged = resolve_by_union({a, b, c});
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].box.left() <= 0.31);
    CHECK(merged[0].box.right() >= 0.61);
    auto again = resolve_by_union(merged);
    REQUIRE(again.size() == 1);
    CHECK(again[0].box.cx == merged[0].box.cx);
}

TEST_CASE("resolve_by_union covering and idempotence on crowded scenes", "[postprocess]") {
    std::mt19937_64 rng(67);
    for (int scene = 0; scene < 50; ++scene) {
        auto dets = crowded_scene(rng, 25);
        auto merged = resolve_by_union(dets);
        // Fixpoint: a second application changes nothing.
        auto again = resolve_by_union(merged);
        REQUIRE(again.size() == merged.size());
        for (size_t i = 0; i < merged.size(); ++i) {
            CHECK(again[i].box.cx == merged[i].box.cx);
            CHECK(again[i].box.w == merged[i].box.w);
        }
        // Every input box is inside some output box.
        for (const auto& d : dets) {
            bool covered = false;
            for (const auto& m : merged) {
                if (d.box.left() >= m.box.left() - 1e-9 && d.box.right() <= m.box.right() + 1e-9 &&
                    d.box.top() >= m.box.top() - 1e-9 && d.box.bottom() <= m.box.bottom() + 1e-9) {
                    covered = true;
                    break;
                }
            }
            CHECK(covered);
        }
    }
}

TEST_CASE("extend_line", "[postprocess]") {
    OrientedBox full;
    full.corners = {Point{0.0, 0.10}, {1.0, 0.10}, {1.0, 0.20}, {0.0, 0.20}};
    OrientedBox same = extend_line(full);
    for (int i = 0; i < 4; ++i) {
        CHECK(same.corners[i].x == Catch::Approx(full.corners[i].x));
        CHECK(same.corners[i].y == Catch::Approx(full.corners[i].y));
    }

    OrientedBox partial;
    partial.corners = {Point{0.2, 0.10}, {0.8, 0.10}, {0.8, 0.20}, {0.2, 0.20}};
    OrientedBox ext = extend_line(partial);
    CHECK(ext.top_left().x == 0.0);
    CHECK(ext.top_right().x == 1.0);
    CHECK(ext.top_left().y == Catch::Approx(0.10));
    CHECK(ext.bottom_right().y == Catch::Approx(0.20));

    // Slope 0.1: top-left (0.2, 0.30) extrapolates to (0, 0.28).
    double s = 0.1;
    OrientedBox sloped;
    sloped.corners = {Point{0.2, 0.30}, {0.8, 0.30 + 0.6 * s}, {0.8, 0.40 + 0.6 * s},
                      {0.2, 0.40}};
    OrientedBox sext = extend_line(sloped);
    CHECK(sext.top_left().y == Catch::Approx(0.28));

    OrientedBox steep;
    steep.corners = {Point{0.2, 0.1}, {0.5, 0.5}, {0.45, 0.6}, {0.15, 0.2}};
    CHECK_THROWS_AS(extend_line(steep), std::invalid_argument);
}

TEST_CASE("extend_line preserves inclination", "[postprocess]") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> slope(-0.15, 0.15);
    for (int i = 0; i < 100; ++i) {
        double s = slope(rng);
        OrientedBox l;
        l.corners = {Point{0.3, 0.45}, {0.7, 0.45 + 0.4 * s}, {0.7, 0.55 + 0.4 * s},
                     {0.3, 0.55}};
        OrientedBox ext = extend_line(l);
        CHECK(line_angle(ext).radians == Catch::Approx(line_angle(l).radians).margin(1e-6));
    }
}

TEST_CASE("sort_lines and sort_words", "[postprocess]") {
    auto make_line = [](double y) {
        OrientedBox b;
        b.corners = {Point{0.0, y}, {1.0, y}, {1.0, y + 0.05}, {0.0, y + 0.05}};
        return OrientedDetection{b, 0.9, 0};
    };
    std::vector<OrientedDetection> lines = {make_line(0.7), make_line(0.1), make_line(0.4)};
    auto sorted = sort_lines(lines);
    CHECK(centroid(sorted[0].box).y < centroid(sorted[1].box).y);
    CHECK(centroid(sorted[1].box).y < centroid(sorted[2].box).y);
    auto resorted = sort_lines(sorted);
    for (size_t i = 0; i < sorted.size(); ++i)
        CHECK(centroid(resorted[i].box).y == centroid(sorted[i].box).y);

    std::vector<AxisDetection> words = {{{0.8, 0.5, 0.1, 0.1}, 0.9, 0},
                                        {{0.2, 0.5, 0.1, 0.1}, 0.9, 0},
                                        {{0.2, 0.3, 0.1, 0.1}, 0.9, 0}};
    auto ws = sort_words(words);
    CHECK(ws[0].box.cy == 0.3);  // same cx tie: lower cy first
    CHECK(ws[1].box.cy == 0.5);
    CHECK(ws[2].box.cx == 0.8);

    // Totality under random permutations.
    std::mt19937_64 rng(73);
    std::vector<AxisDetection> scene = crowded_scene(rng, 20);
    auto sorted_scene = sort_words(scene);
    REQUIRE(sorted_scene.size() == scene.size());
    for (size_t i = 1; i < sorted_scene.size(); ++i)
        CHECK(sorted_scene[i - 1].box.cx <= sorted_scene[i].box.cx);
}
