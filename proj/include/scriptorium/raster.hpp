#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "scriptorium/geometry.hpp"

namespace scriptorium {

// 8-bit row-major raster, 1 (gray) or 3 (RGB) channels.
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    Raster() = default;
    Raster(int w, int h, int c, std::uint8_t fill = 255)
        : width(w), height(h), channels(c),
          pixels(static_cast<size_t>(w) * h * c, fill) {
        if (w < 1 || h < 1 || (c != 1 && c != 3))
            throw std::invalid_argument("bad raster dimensions");
    }

    std::uint8_t& at(int x, int y, int c = 0) {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int w = 1;
    int h = 1;
};

// Normalized box to pixel rectangle: round edges, clamp to the image,
// guarantee at least one pixel.
inline PixelRect to_pixel_rect(const AxisBox& b, int image_w, int image_h) {
    double l = b.left() * image_w;
    double r = b.right() * image_w;
    double t = b.top() * image_h;
    double bt = b.bottom() * image_h;
    if (r <= 0.0 || l >= image_w || bt <= 0.0 || t >= image_h)
        throw std::invalid_argument("box entirely outside image");
    int x0 = std::clamp(static_cast<int>(std::lround(l)), 0, image_w - 1);
    int x1 = std::clamp(static_cast<int>(std::lround(r)), x0 + 1, image_w);
    int y0 = std::clamp(static_cast<int>(std::lround(t)), 0, image_h - 1);
    int y1 = std::clamp(static_cast<int>(std::lround(bt)), y0 + 1, image_h);
    return {x0, y0, x1 - x0, y1 - y0};
}

// Crop; regions outside the source fill with white.
inline Raster crop(const Raster& img, const PixelRect& r) {
    if (r.w < 1 || r.h < 1) throw std::invalid_argument("empty crop rect");
    Raster out(r.w, r.h, img.channels, 255);
    for (int y = 0; y < r.h; ++y) {
        int sy = r.y0 + y;
        if (sy < 0 || sy >= img.height) continue;
        for (int x = 0; x < r.w; ++x) {
            int sx = r.x0 + x;
            if (sx < 0 || sx >= img.width) continue;
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

namespace detail {

inline double bilinear_sample(const Raster& img, double x, double y, int c) {
    // Pixel centers at integer coordinates; outside samples are white.
    if (x < -0.5 || y < -0.5 || x > img.width - 0.5 || y > img.height - 0.5) return 255.0;
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double fx = x - x0;
    double fy = y - y0;
    auto px = [&](int xi, int yi) -> double {
        if (xi < 0 || yi < 0 || xi >= img.width || yi >= img.height) return 255.0;
        return img.at(xi, yi, c);
    };
    double top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
    double bot = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

}  // namespace detail

// Rotate about the image center, bilinear sampling, white fill. Output has
// the same dimensions as the input.
inline Raster rotate_about_center(const Raster& img, Angle a) {
    if (a.radians == 0.0) return img;
    Raster out(img.width, img.height, img.channels);
    double cx = (img.width - 1) / 2.0;
    double cy = (img.height - 1) / 2.0;
    double c = std::cos(a.radians);
    double s = std::sin(a.radians);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            // Inverse rotation of the output coordinate.
            double dx = x - cx;
            double dy = y - cy;
            double sx = cx + c * dx + s * dy;
            double sy = cy - s * dx + c * dy;
            for (int ch = 0; ch < img.channels; ++ch) {
                double v = detail::bilinear_sample(img, sx, sy, ch);
                out.at(x, y, ch) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

}  // namespace scriptorium
