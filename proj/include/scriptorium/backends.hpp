#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scriptorium/corpus.hpp"
#include "scriptorium/geometry.hpp"
#include "scriptorium/lexicon.hpp"
#include "scriptorium/postprocess.hpp"
#include "scriptorium/raster.hpp"

namespace scriptorium {

class LineDetectorInterface {
public:
    virtual ~LineDetectorInterface() = default;
    virtual std::vector<OrientedDetection> detect_lines(const Raster& page,
                                                        const std::string& image_id) = 0;
};

class WordDetectorInterface {
public:
    virtual ~WordDetectorInterface() = default;
    // Detections in crop-local normalized coordinates.
    virtual std::vector<AxisDetection> detect_words(const Raster& line_crop,
                                                    const std::string& context_id) = 0;
};

struct Candidate {
    Word label;
    double confidence;
};

class ClassifierInterface {
public:
    virtual ~ClassifierInterface() = default;
    // Ranked candidates, confidences non-increasing, summing to at most 1.
    virtual std::vector<Candidate> classify(const Raster& word_crop) = 0;
};

class EmbedderInterface {
public:
    virtual ~EmbedderInterface() = default;
    virtual size_t dimension() const = 0;
    virtual std::vector<double> embed(const Raster& word_crop) = 0;
};

inline constexpr size_t kDefaultEmbeddingDim = 64;

// Context string used by the pipeline for word detection: identifies the
// crop region and deskew angle on the source page.
struct CropContext {
    std::string image_id;
    PixelRect region;
    double angle = 0.0;

    std::string encode() const {
        std::ostringstream out;
        out << image_id << ";" << region.x0 << ";" << region.y0 << ";"
            << region.w << ";" << region.h << ";" << angle;
        return out.str();
    }

    static CropContext decode(const std::string& s) {
        CropContext c;
        std::istringstream in(s);
        std::string part;
        std::vector<std::string> parts;
        while (std::getline(in, part, ';')) parts.push_back(part);
        if (parts.size() != 6) throw std::runtime_error("bad crop context: " + s);
        c.image_id = parts[0];
        c.region = {std::stoi(parts[1]), std::stoi(parts[2]), std::stoi(parts[3]),
                    std::stoi(parts[4])};
        c.angle = std::stod(parts[5]);
        return c;
    }
};

// ---------------------------------------------------------------------------
// File backend: replays precomputed responses from a JSONL file keyed by
// image_id / context_id.
// ---------------------------------------------------------------------------

class FileBackend : public LineDetectorInterface,
                    public WordDetectorInterface,
                    public ClassifierInterface,
                    public EmbedderInterface {
public:
    explicit FileBackend(const std::string& path, size_t dim = kDefaultEmbeddingDim)
        : dim_(dim) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
            }
            if (!j.contains("key"))
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": record missing \"key\"");
            std::string key = j["key"].get<std::string>();
            if (j.contains("detections")) {
                parse_detections(j, key, path, line_no);
            } else if (j.contains("candidates")) {
                std::vector<Candidate> cands;
                for (const auto& c : j["candidates"]) {
                    double conf = c.at("conf").get<double>();
                    check_conf(conf, path, line_no);
                    cands.push_back({c.at("label").get<std::string>(), conf});
                }
                candidates_[key] = cands;
            } else if (j.contains("vector")) {
                std::vector<double> v = j["vector"].get<std::vector<double>>();
                if (v.size() != dim_)
                    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                             ": vector dimension mismatch");
                vectors_[key] = v;
            } else {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": unrecognized record");
            }
        }
    }

    const std::vector<std::string>& warnings() const { return warnings_; }

    std::vector<OrientedDetection> detect_lines(const Raster&,
                                                const std::string& image_id) override {
        auto it = line_dets_.find(image_id);
        if (it == line_dets_.end()) {
            warnings_.push_back("no line detections for key " + image_id);
            return {};
        }
        return it->second;
    }

    std::vector<AxisDetection> detect_words(const Raster&,
                                            const std::string& context_id) override {
        auto it = word_dets_.find(context_id);
        if (it == word_dets_.end()) {
            warnings_.push_back("no word detections for key " + context_id);
            return {};
        }
        return it->second;
    }

    std::vector<Candidate> classify_key(const std::string& key) {
        auto it = candidates_.find(key);
        if (it == candidates_.end()) {
            warnings_.push_back("no classification for key " + key);
            return {};
        }
        return it->second;
    }

    std::vector<Candidate> classify(const Raster&) override {
        throw std::runtime_error("file backend classification requires a key; use classify_key");
    }

    size_t dimension() const override { return dim_; }

    std::vector<double> embed(const Raster&) override {
        throw std::runtime_error("file backend embedding requires a key; use embed_key");
    }

    std::vector<double> embed_key(const std::string& key) {
        auto it = vectors_.find(key);
        if (it == vectors_.end()) {
            warnings_.push_back("no embedding for key " + key);
            return {};
        }
        return it->second;
    }

private:
    static void check_conf(double conf, const std::string& path, int line_no) {
        if (!(conf >= 0.0 && conf <= 1.0))
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": confidence out of [0,1]");
    }

    void parse_detections(const nlohmann::json& j, const std::string& key,
                          const std::string& path, int line_no) {
        for (const auto& d : j["detections"]) {
            double conf = d.at("conf").get<double>();
            check_conf(conf, path, line_no);
            if (d.contains("obb")) {
                auto v = d["obb"].get<std::vector<double>>();
                if (v.size() != 8)
                    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                             ": obb needs 8 values");
                OrientedBox b;
                for (int i = 0; i < 4; ++i) b.corners[i] = {v[2 * i], v[2 * i + 1]};
                line_dets_[key].push_back({b, conf, 0});
            } else {
                auto v = d.at("box").get<std::vector<double>>();
                if (v.size() != 4)
                    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                             ": box needs 4 values");
                word_dets_[key].push_back({{v[0], v[1], v[2], v[3]}, conf, 0});
            }
        }
    }

    size_t dim_;
    std::map<std::string, std::vector<OrientedDetection>> line_dets_;
    std::map<std::string, std::vector<AxisDetection>> word_dets_;
    std::map<std::string, std::vector<Candidate>> candidates_;
    std::map<std::string, std::vector<double>> vectors_;
    std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------------------
// Oracle backend: answers from ground-truth annotations, optionally
// perturbed. Enables end-to-end tests without trained models.
// ---------------------------------------------------------------------------

struct OracleConfig {
    double jitter_px = 0.0;
    double drop_rate = 0.0;  // in [0, 1)
    double confidence_floor = 0.9;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline Raster thumbnail(const Raster& img, int tw, int th) {
    Raster out(tw, th, 1);
    for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
            double sx = (x + 0.5) * img.width / tw - 0.5;
            double sy = (y + 0.5) * img.height / th - 0.5;
            double v = 0.0;
            if (img.channels == 1) {
                v = bilinear_sample(img, sx, sy, 0);
            } else {
                for (int c = 0; c < img.channels; ++c) v += bilinear_sample(img, sx, sy, c);
                v /= img.channels;
            }
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }
    return out;
}

inline double thumb_l1(const Raster& a, const Raster& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i)
        s += std::abs(static_cast<int>(a.pixels[i]) - static_cast<int>(b.pixels[i]));
    return s / a.pixels.size();
}

}  // namespace detail

// Deterministic label-hash embedding: labels in the same similarity class
// share a base vector (distance <= 0.4 apart), labels in different classes
// land at distance >= 2. Holds for chain-free vocabularies: a transitive
// class containing a non-similar pair cannot satisfy both bounds at once.
class OracleEmbedder : public EmbedderInterface {
public:
    OracleEmbedder(const std::set<Word>& vocab, size_t dim = kDefaultEmbeddingDim)
        : dim_(dim), classes_(merge_similar(vocab)) {}

    size_t dimension() const override { return dim_; }

    std::vector<double> embed_label(const Word& label) const {
        auto it = classes_.find(label);
        const Word& rep = it != classes_.end() ? it->second : label;
        std::vector<double> v = unit_vector(rep, 0x9e3779b97f4a7c15ull);
        for (double& x : v) x *= 3.0;
        std::vector<double> offset = unit_vector(label, 0xc2b2ae3d27d4eb4full);
        for (size_t i = 0; i < dim_; ++i) v[i] += 0.2 * offset[i];
        return v;
    }

    std::vector<double> embed(const Raster&) override {
        throw std::runtime_error("oracle embedder needs a label; use embed_label");
    }

private:
    std::vector<double> unit_vector(const Word& label, std::uint64_t salt) const {
        std::mt19937_64 rng(detail::fnv1a(label) ^ salt);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> v(dim_);
        double norm = 0.0;
        for (double& x : v) {
            x = gauss(rng);
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        return v;
    }

    size_t dim_;
    MergeClasses classes_;
};

class OracleBackend : public LineDetectorInterface,
                      public WordDetectorInterface,
                      public ClassifierInterface,
                      public EmbedderInterface {
public:
    struct Document {
        DocumentAnnotation annotation;
        Raster page;
    };

    OracleBackend(std::vector<Document> docs, const OracleConfig& line_cfg,
                  const OracleConfig& word_cfg, size_t dim = kDefaultEmbeddingDim)
        : line_cfg_(line_cfg), word_cfg_(word_cfg), docs_(std::move(docs)) {
        if (line_cfg.drop_rate >= 1.0 || word_cfg.drop_rate >= 1.0)
            throw std::invalid_argument("drop_rate must be below 1");
        std::set<Word> vocab;
        for (const auto& d : docs_) {
            by_id_[d.annotation.image_id] = &d;
            auto aligned = align_tokens(d.annotation);
            auto samples = build_line_samples(d.annotation, d.page);
            std::map<size_t, std::pair<const LineSample*, size_t>> locate;
            for (const auto& s : samples)
                for (size_t k = 0; k < s.word_indices.size(); ++k)
                    locate[s.word_indices[k]] = {&s, k};
            for (const auto& at : aligned) {
                vocab.insert(at.token.word);
                auto it = locate.find(at.word_index);
                if (it == locate.end()) continue;
                const LineSample& s = *it->second.first;
                PixelRect r = to_pixel_rect(s.words[it->second.second], s.crop.width,
                                            s.crop.height);
                templates_.push_back(
                    {detail::thumbnail(crop(s.crop, r), kThumbW, kThumbH), at.token.word});
            }
        }
        if (templates_.empty()) throw std::runtime_error("oracle backend: empty aligned corpus");
        embedder_ = std::make_unique<OracleEmbedder>(vocab, dim);
    }

    OracleBackend(std::vector<Document> docs, const OracleConfig& cfg,
                  size_t dim = kDefaultEmbeddingDim)
        : OracleBackend(std::move(docs), cfg, cfg, dim) {}

    std::vector<OrientedDetection> detect_lines(const Raster&,
                                                const std::string& image_id) override {
        const Document* doc = find(image_id);
        if (!doc) return {};
        std::mt19937_64 rng(line_cfg_.seed ^ detail::fnv1a("lines:" + image_id));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_real_distribution<double> conf(line_cfg_.confidence_floor, 1.0);
        double jx = line_cfg_.jitter_px / doc->annotation.image_w;
        double jy = line_cfg_.jitter_px / doc->annotation.image_h;
        std::uniform_real_distribution<double> dx(-jx, jx), dy(-jy, jy);
        std::vector<OrientedDetection> out;
        for (const OrientedBox& line : doc->annotation.lines) {
            // Draw all variates up front so dropping keeps the stream aligned.
            OrientedBox b = line;
            for (Point& p : b.corners) {
                p.x = std::clamp(p.x + dx(rng), 0.0, 1.0);
                p.y = std::clamp(p.y + dy(rng), 0.0, 1.0);
            }
            double c = conf(rng);
            bool dropped = unit(rng) < line_cfg_.drop_rate;
            if (!dropped) out.push_back({b, c, 0});
        }
        return out;
    }

    std::vector<AxisDetection> detect_words(const Raster&,
                                            const std::string& context_id) override {
        CropContext ctx = CropContext::decode(context_id);
        const Document* doc = find(ctx.image_id);
        if (!doc) return {};
        const DocumentAnnotation& ann = doc->annotation;
        LineAssignment assignment = assign_words_to_lines(ann);

        // The crop was taken from some detected line; recover the ground
        // truth line it corresponds to by envelope overlap.
        AxisBox crop_box{(ctx.region.x0 + ctx.region.w / 2.0) / ann.image_w,
                         (ctx.region.y0 + ctx.region.h / 2.0) / ann.image_h,
                         static_cast<double>(ctx.region.w) / ann.image_w,
                         static_cast<double>(ctx.region.h) / ann.image_h};
        double best = 0.0;
        size_t best_line = ann.lines.size();
        for (size_t li = 0; li < ann.lines.size(); ++li) {
            double v = iou(crop_box, envelope(extended_or_raw(ann.lines[li])));
            if (v > best) {
                best = v;
                best_line = li;
            }
        }
        if (best_line == ann.lines.size()) return {};

        std::mt19937_64 rng(word_cfg_.seed ^ detail::fnv1a("words:" + context_id));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_real_distribution<double> conf(word_cfg_.confidence_floor, 1.0);
        double jpx = word_cfg_.jitter_px;
        std::uniform_real_distribution<double> jit(-jpx, jpx);

        Point center{(ctx.region.w - 1) / 2.0, (ctx.region.h - 1) / 2.0};
        std::vector<AxisDetection> out;
        for (size_t wi : assignment.line_words[best_line]) {
            const AxisBox& b = ann.words[wi].box;
            AxisBox px{b.cx * ann.image_w - ctx.region.x0, b.cy * ann.image_h - ctx.region.y0,
                       b.w * ann.image_w, b.h * ann.image_h};
            AxisBox deskewed = deskew_word_box(px, center, Angle{-ctx.angle});
            deskewed.cx += jit(rng);
            deskewed.cy += jit(rng);
            double c = conf(rng);
            bool dropped = unit(rng) < word_cfg_.drop_rate;
            if (dropped) continue;
            out.push_back({{deskewed.cx / ctx.region.w, deskewed.cy / ctx.region.h,
                            deskewed.w / ctx.region.w, deskewed.h / ctx.region.h},
                           c, 0});
        }
        return out;
    }

    // Nearest stored template by mean absolute pixel difference on a small
    // grayscale thumbnail. Exact for replayed ground-truth crops.
    std::vector<Candidate> classify(const Raster& word_crop) override {
        return {{nearest_label(word_crop), 1.0}};
    }

    size_t dimension() const override { return embedder_->dimension(); }

    std::vector<double> embed(const Raster& word_crop) override {
        return embedder_->embed_label(nearest_label(word_crop));
    }

    const OracleEmbedder& embedder() const { return *embedder_; }

private:
    static constexpr int kThumbW = 48;
    static constexpr int kThumbH = 24;

    const Document* find(const std::string& image_id) const {
        auto it = by_id_.find(image_id);
        return it == by_id_.end() ? nullptr : it->second;
    }

    static OrientedBox extended_or_raw(const OrientedBox& line) {
        try {
            return extend_line(line);
        } catch (const std::invalid_argument&) {
            return line;
        }
    }

    Word nearest_label(const Raster& word_crop) const {
        Raster thumb = detail::thumbnail(word_crop, kThumbW, kThumbH);
        double best = std::numeric_limits<double>::infinity();
        const Word* label = nullptr;
        for (const auto& t : templates_) {
            double d = detail::thumb_l1(thumb, t.first);
            if (d < best) {
                best = d;
                label = &t.second;
            }
        }
        return *label;
    }

    OracleConfig line_cfg_;
    OracleConfig word_cfg_;
    std::vector<Document> docs_;
    std::map<std::string, const Document*> by_id_;
    std::vector<std::pair<Raster, Word>> templates_;
    std::unique_ptr<OracleEmbedder> embedder_;
};

}  // namespace scriptorium
