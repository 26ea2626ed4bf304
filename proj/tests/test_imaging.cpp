#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "scriptorium/corpus.hpp"
#include "scriptorium/png_io.hpp"
#include "scriptorium/raster.hpp"

using namespace scriptorium;

namespace {

Raster gradient_image(int w, int h) {
    Raster img(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) = static_cast<std::uint8_t>((x * 2 + y) % 256);
    return img;
}

}  // namespace

TEST_CASE("to_pixel_rect", "[imaging]") {
    PixelRect full = to_pixel_rect({0.5, 0.5, 1.0, 1.0}, 100, 100);
    CHECK(full.x0 == 0);
    CHECK(full.y0 == 0);
    CHECK(full.w == 100);
    CHECK(full.h == 100);

    PixelRect r = to_pixel_rect({0.5, 0.5, 0.5, 0.5}, 200, 100);
    CHECK(r.x0 == 50);
    CHECK(r.y0 == 25);
    CHECK(r.w == 100);
    CHECK(r.h == 50);

    PixelRect thin = to_pixel_rect({0.5, 0.5, 0.001, 0.001}, 100, 100);
    CHECK(thin.w >= 1);
    CHECK(thin.h >= 1);

    CHECK_THROWS_AS(to_pixel_rect({2.0, 2.0, 0.1, 0.1}, 100, 100), std::invalid_argument);
}

TEST_CASE("crop", "[imaging]") {
    Raster img = gradient_image(40, 30);
    Raster full = crop(img, {0, 0, 40, 30});
    CHECK(full.pixels == img.pixels);

    Raster one = crop(img, {7, 9, 1, 1});
    CHECK(one.at(0, 0) == img.at(7, 9));

    // Overhang by 3 columns fills white.
    Raster over = crop(img, {38, 0, 5, 30});
    for (int y = 0; y < 30; ++y) {
        CHECK(over.at(0, y) == img.at(38, y));
        for (int x = 2; x < 5; ++x) CHECK(over.at(x, y) == 255);
    }

    // Cropping the full rect of a crop is idempotent.
    Raster again = crop(full, {0, 0, full.width, full.height});
    CHECK(again.pixels == full.pixels);
}

TEST_CASE("rotate_about_center identity and invariants", "[imaging]") {
    Raster img = gradient_image(50, 40);
    Raster same = rotate_about_center(img, {0.0});
    CHECK(same.pixels == img.pixels);

    // Corners of a rotated uniform image blend with the white fill, but the
    // interior stays untouched and nothing gets darker.
    Raster uniform(30, 30, 1, 128);
    Raster rot = rotate_about_center(uniform, {0.5});
    CHECK(rot.width == 30);
    CHECK(rot.height == 30);
    for (auto p : rot.pixels) CHECK(p >= 128);
    for (int y = 12; y < 18; ++y)
        for (int x = 12; x < 18; ++x) CHECK(rot.at(x, y) == 128);
}

TEST_CASE("rotate round trip on smooth gradient", "[imaging]") {
    Raster img(64, 64, 1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            img.at(x, y) = static_cast<std::uint8_t>((x + y) * 2);
    Raster fwd = rotate_about_center(img, {0.2});
    Raster back = rotate_about_center(fwd, {-0.2});
    // Compare away from the borders where the white fill intrudes.
    double total = 0.0;
    int count = 0;
    for (int y = 16; y < 48; ++y) {
        for (int x = 16; x < 48; ++x) {
            total += std::abs(static_cast<int>(back.at(x, y)) - static_cast<int>(img.at(x, y)));
            ++count;
        }
    }
    CHECK(total / count < 3.0);
}

TEST_CASE("deskew flattens an inclined top edge", "[imaging]") {
    // Synthetic inclined line region; after rotating by the negative line
    // angle, the transformed top corners end up at the same height.
    OrientedBox line;
    double s = std::tan(0.08);
    line.corners = {Point{0.1, 0.3}, {0.9, 0.3 + 0.8 * s}, {0.9, 0.42 + 0.8 * s}, {0.1, 0.42}};
    CHECK(line_angle(line).radians == Catch::Approx(0.08).margin(1e-9));

    // The deskew uses the rendered-space angle; on this 1000x800 page it
    // differs from the normalized-coordinate angle.
    int page_w = 1000, page_h = 800;
    double alpha = deskew_angle(line, page_w, page_h).radians;
    PixelRect rect = to_pixel_rect(envelope(line), page_w, page_h);
    Point center{(rect.w - 1) / 2.0, (rect.h - 1) / 2.0};
    auto to_crop_px = [&](const Point& p) -> Point {
        return {p.x * page_w - rect.x0, p.y * page_h - rect.y0};
    };
    Point tl = rotate_point(to_crop_px(line.top_left()), center, {-alpha});
    Point tr = rotate_point(to_crop_px(line.top_right()), center, {-alpha});
    CHECK(std::abs(tl.y - tr.y) < 1.5);
}

TEST_CASE("png round trip", "[imaging]") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "scriptorium_png_test";
    fs::create_directories(dir);

    Raster gray = gradient_image(33, 21);
    save_png(gray, (dir / "gray.png").string());
    Raster gray2 = load_png((dir / "gray.png").string());
    CHECK(gray2.channels == 1);
    CHECK(gray2.pixels == gray.pixels);

    Raster rgb(17, 13, 3);
    for (int y = 0; y < 13; ++y)
        for (int x = 0; x < 17; ++x)
            for (int c = 0; c < 3; ++c)
                rgb.at(x, y, c) = static_cast<std::uint8_t>((x * 3 + y * 7 + c * 11) % 256);
    save_png(rgb, (dir / "rgb.png").string());
    Raster rgb2 = load_png((dir / "rgb.png").string());
    CHECK(rgb2.channels == 3);
    CHECK(rgb2.pixels == rgb.pixels);

    CHECK_THROWS(load_png((dir / "missing.png").string()));
}
