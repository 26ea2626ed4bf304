#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scriptorium/backends.hpp"
#include "scriptorium/postprocess.hpp"
#include "scriptorium/raster.hpp"
#include "scriptorium/vectorstore.hpp"

namespace scriptorium {

struct PipelineConfig {
    double line_iou_threshold = 0.4;
    double word_iou_threshold = 0.4;
    double membership_threshold = 0.5;
    double classifier_confidence_floor = 0.5;
    size_t fallback_k = 5;
    size_t embedding_dim = kDefaultEmbeddingDim;
    double max_line_angle = M_PI / 4.0;
    int worker_count = 1;
};

struct WordResult {
    AxisBox box;  // page coordinates
    std::optional<Word> label;
    double confidence = 0.0;
    std::vector<std::pair<Word, double>> candidates;  // fallback neighbors (label, distance)
    std::string source = "classifier";
};

struct LineResult {
    OrientedBox box;  // extended line, page coordinates
    std::vector<WordResult> words;
};

struct PipelineOutput {
    std::string image_id;
    std::vector<LineResult> lines;
    std::string flat_text;
    std::vector<std::string> errors;
};

struct PipelineBackends {
    LineDetectorInterface* lines = nullptr;
    WordDetectorInterface* words = nullptr;
    ClassifierInterface* classifier = nullptr;
    EmbedderInterface* embedder = nullptr;
};

// Full page transcription: detect lines, resolve overlaps by confidence,
// extend to the image edges, deskew, detect words per line, merge by union,
// order, classify with embedding fallback, and map word boxes back to page
// coordinates. Backend failures abort the affected line only.
inline PipelineOutput transcribe(const Raster& page, const std::string& image_id,
                                 const PipelineBackends& backends,
                                 const EmbeddingStore* store, const PipelineConfig& cfg) {
    PipelineOutput out;
    out.image_id = image_id;

    std::vector<OrientedDetection> detected = backends.lines->detect_lines(page, image_id);
    std::vector<OrientedDetection> resolved =
        resolve_by_confidence(detected, cfg.line_iou_threshold);

    std::vector<OrientedDetection> extended;
    for (const auto& d : resolved) {
        double alpha = line_angle(d.box).radians;
        if (std::abs(alpha) >= cfg.max_line_angle) {
            out.errors.push_back(image_id + ": dropped implausibly steep line");
            continue;
        }
        extended.push_back({extend_line(d.box), d.confidence, d.class_id});
    }
    std::vector<OrientedDetection> ordered = sort_lines(std::move(extended));

    std::vector<std::string> flat;
    for (const auto& line_det : ordered) {
        LineResult lr;
        lr.box = line_det.box;
        try {
            double alpha = deskew_angle(line_det.box, page.width, page.height).radians;
            PixelRect rect = to_pixel_rect(envelope(line_det.box), page.width, page.height);
            Raster line_crop = rotate_about_center(crop(page, rect), Angle{-alpha});
            CropContext ctx{image_id, rect, alpha};

            std::vector<AxisDetection> words = backends.words->detect_words(line_crop, ctx.encode());
            words = resolve_by_union(words, cfg.word_iou_threshold);
            words = sort_words(std::move(words));

            Point center{(rect.w - 1) / 2.0, (rect.h - 1) / 2.0};
            for (const auto& wd : words) {
                WordResult wr;
                PixelRect wrect = to_pixel_rect(wd.box, line_crop.width, line_crop.height);
                Raster word_crop = crop(line_crop, wrect);

                std::vector<Candidate> cands = backends.classifier->classify(word_crop);
                if (cands.empty()) {
                    out.errors.push_back(image_id + ": classifier returned no candidates");
                    continue;
                }
                if (cands[0].confidence >= cfg.classifier_confidence_floor || !store ||
                    store->size() == 0) {
                    wr.label = cands[0].label;
                    wr.confidence = cands[0].confidence;
                    wr.source = "classifier";
                } else {
                    std::vector<double> vec = backends.embedder->embed(word_crop);
                    for (const auto& nb : store->knn(vec, cfg.fallback_k))
                        wr.candidates.emplace_back(nb.label, nb.distance);
                    wr.label = wr.candidates.front().first;
                    wr.confidence = cands[0].confidence;
                    wr.source = "fallback";
                }

                // Invert the deskew rotation to express the box on the page.
                AxisBox local_px{wd.box.cx * rect.w, wd.box.cy * rect.h,
                                 wd.box.w * rect.w, wd.box.h * rect.h};
                AxisBox page_px = deskew_word_box(local_px, center, Angle{alpha});
                wr.box = {(page_px.cx + rect.x0) / page.width,
                          (page_px.cy + rect.y0) / page.height,
                          page_px.w / page.width, page_px.h / page.height};
                if (wr.label) flat.push_back(*wr.label);
                lr.words.push_back(std::move(wr));
            }
        } catch (const std::exception& e) {
            out.errors.push_back(image_id + ": line aborted: " + e.what());
            lr.words.clear();
        }
        out.lines.push_back(std::move(lr));
    }

    for (size_t i = 0; i < flat.size(); ++i) {
        if (i) out.flat_text += ' ';
        out.flat_text += flat[i];
    }
    return out;
}

inline nlohmann::ordered_json to_json(const PipelineOutput& out) {
    nlohmann::ordered_json j;
    j["image_id"] = out.image_id;
    j["lines"] = nlohmann::ordered_json::array();
    for (const auto& line : out.lines) {
        nlohmann::ordered_json lj;
        std::vector<double> obb;
        for (const Point& p : line.box.corners) {
            obb.push_back(p.x);
            obb.push_back(p.y);
        }
        lj["obb"] = obb;
        lj["words"] = nlohmann::ordered_json::array();
        for (const auto& w : line.words) {
            nlohmann::ordered_json wj;
            wj["box"] = {w.box.cx, w.box.cy, w.box.w, w.box.h};
            if (w.label)
                wj["label"] = *w.label;
            else
                wj["label"] = nullptr;
            wj["conf"] = w.confidence;
            wj["source"] = w.source;
            wj["candidates"] = nlohmann::ordered_json::array();
            for (const auto& [label, dist] : w.candidates)
                wj["candidates"].push_back({{"label", label}, {"dist", dist}});
            lj["words"].push_back(std::move(wj));
        }
        j["lines"].push_back(std::move(lj));
    }
    j["flat_text"] = out.flat_text;
    return j;
}

namespace detail {

// 3x5 bitmap glyphs for a-z, 0-9; anything else renders as a filled block.
inline const std::uint16_t* glyph_rows(char c) {
    static const std::uint16_t font[37][5] = {
        {0b010, 0b101, 0b111, 0b101, 0b101},  // a
        {0b110, 0b101, 0b110, 0b101, 0b110},  // b
        {0b011, 0b100, 0b100, 0b100, 0b011},  // c
        {0b110, 0b101, 0b101, 0b101, 0b110},  // d
        {0b111, 0b100, 0b110, 0b100, 0b111},  // e
        {0b111, 0b100, 0b110, 0b100, 0b100},  // f
        {0b011, 0b100, 0b101, 0b101, 0b011},  // g
        {0b101, 0b101, 0b111, 0b101, 0b101},  // h
        {0b111, 0b010, 0b010, 0b010, 0b111},  // i
        {0b001, 0b001, 0b001, 0b101, 0b010},  // j
        {0b101, 0b110, 0b100, 0b110, 0b101},  // k
        {0b100, 0b100, 0b100, 0b100, 0b111},  // l
        {0b101, 0b111, 0b111, 0b101, 0b101},  // m
        {0b101, 0b111, 0b111, 0b111, 0b101},  // n
        {0b010, 0b101, 0b101, 0b101, 0b010},  // o
        {0b110, 0b101, 0b110, 0b100, 0b100},  // p
        {0b010, 0b101, 0b101, 0b110, 0b011},  // q
        {0b110, 0b101, 0b110, 0b110, 0b101},  // r
        {0b011, 0b100, 0b010, 0b001, 0b110},  // s
        {0b111, 0b010, 0b010, 0b010, 0b010},  // t
        {0b101, 0b101, 0b101, 0b101, 0b011},  // u
        {0b101, 0b101, 0b101, 0b010, 0b010},  // v
        {0b101, 0b101, 0b111, 0b111, 0b101},  // w
        {0b101, 0b010, 0b010, 0b010, 0b101},  // x
        {0b101, 0b101, 0b010, 0b010, 0b010},  // y
        {0b111, 0b001, 0b010, 0b100, 0b111},  // z
        {0b111, 0b101, 0b101, 0b101, 0b111},  // 0
        {0b010, 0b110, 0b010, 0b010, 0b111},  // 1
        {0b110, 0b001, 0b010, 0b100, 0b111},  // 2
        {0b110, 0b001, 0b010, 0b001, 0b110},  // 3
        {0b101, 0b101, 0b111, 0b001, 0b001},  // 4
        {0b111, 0b100, 0b110, 0b001, 0b110},  // 5
        {0b011, 0b100, 0b110, 0b101, 0b010},  // 6
        {0b111, 0b001, 0b010, 0b010, 0b010},  // 7
        {0b010, 0b101, 0b010, 0b101, 0b010},  // 8
        {0b010, 0b101, 0b011, 0b001, 0b110},  // 9
        {0b111, 0b111, 0b111, 0b111, 0b111},  // fallback block
    };
    if (c >= 'a' && c <= 'z') return font[c - 'a'];
    if (c >= '0' && c <= '9') return font[26 + (c - '0')];
    return font[36];
}

inline void set_rgb(Raster& img, int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    img.at(x, y, 0) = r;
    img.at(x, y, 1) = g;
    img.at(x, y, 2) = b;
}

inline void draw_segment(Raster& img, Point a, Point b, std::uint8_t r, std::uint8_t g,
                         std::uint8_t bl) {
    double len = std::hypot(b.x - a.x, b.y - a.y);
    int steps = std::max(1, static_cast<int>(std::ceil(len)));
    for (int i = 0; i <= steps; ++i) {
        double t = static_cast<double>(i) / steps;
        set_rgb(img, static_cast<int>(std::lround(a.x + t * (b.x - a.x))),
                static_cast<int>(std::lround(a.y + t * (b.y - a.y))), r, g, bl);
    }
}

inline void draw_text(Raster& img, int x, int y, const std::string& text, std::uint8_t r,
                      std::uint8_t g, std::uint8_t b) {
    for (size_t i = 0; i < text.size(); ++i) {
        const std::uint16_t* rows = glyph_rows(text[i]);
        for (int ry = 0; ry < 5; ++ry)
            for (int rx = 0; rx < 3; ++rx)
                if (rows[ry] & (1 << (2 - rx)))
                    set_rgb(img, x + static_cast<int>(i) * 4 + rx, y + ry, r, g, b);
    }
}

}  // namespace detail

// Page copy with line boxes (green), word boxes (blue) and labels (red)
// drawn. Deterministic for fixed inputs.
inline Raster render_overlay(const Raster& page, const PipelineOutput& out) {
    Raster img(page.width, page.height, 3);
    for (int y = 0; y < page.height; ++y) {
        for (int x = 0; x < page.width; ++x) {
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = page.at(x, y, page.channels == 1 ? 0 : c);
        }
    }
    auto px = [&](const Point& p) -> Point {
        return {p.x * page.width, p.y * page.height};
    };
    for (const auto& line : out.lines) {
        for (int i = 0; i < 4; ++i)
            detail::draw_segment(img, px(line.box.corners[i]), px(line.box.corners[(i + 1) % 4]),
                                 0, 180, 0);
        for (const auto& w : line.words) {
            Point tl = px({w.box.left(), w.box.top()});
            Point tr = px({w.box.right(), w.box.top()});
            Point br = px({w.box.right(), w.box.bottom()});
            Point bl = px({w.box.left(), w.box.bottom()});
            detail::draw_segment(img, tl, tr, 0, 0, 220);
            detail::draw_segment(img, tr, br, 0, 0, 220);
            detail::draw_segment(img, br, bl, 0, 0, 220);
            detail::draw_segment(img, bl, tl, 0, 0, 220);
            if (w.label)
                detail::draw_text(img, static_cast<int>(tl.x),
                                  std::max(0, static_cast<int>(tl.y) - 6), *w.label, 200, 0, 0);
        }
    }
    return img;
}

}  // namespace scriptorium
