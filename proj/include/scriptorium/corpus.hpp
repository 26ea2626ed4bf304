#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scriptorium/geometry.hpp"
#include "scriptorium/lexicon.hpp"
#include "scriptorium/raster.hpp"

namespace scriptorium {

struct TranscriptToken {
    Word word;
    bool damaged = false;
    bool carry = false;
};

struct AnnotatedWord {
    AxisBox box;
    int class_id = 0;
};

struct DocumentAnnotation {
    std::string image_id;
    int image_w = 0;
    int image_h = 0;
    std::vector<AnnotatedWord> words;
    std::vector<OrientedBox> lines;
    std::vector<TranscriptToken> transcript;
    std::vector<std::string> warnings;
};

// Only class 0 ("word") participates in line assignment and alignment.
inline constexpr int kWordClass = 0;

namespace detail {

inline double parse_field(const std::string& token, const std::string& file, int line_no,
                          const char* field) {
    try {
        size_t pos = 0;
        double v = std::stod(token, &pos);
        if (pos != token.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(file + ":" + std::to_string(line_no) +
                                 ": malformed field '" + field + "': " + token);
    }
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

}  // namespace detail

// Word annotation file: one record per line, `class cx cy w h`, normalized.
inline void parse_word_file(const std::string& path, DocumentAnnotation& doc) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    int line_no = 0;
    static const char* fields[] = {"class", "cx", "cy", "w", "h"};
    while (std::getline(in, line)) {
        ++line_no;
        auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() != 5)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 5 fields, got " + std::to_string(toks.size()));
        double v[5];
        for (int i = 0; i < 5; ++i) v[i] = detail::parse_field(toks[i], path, line_no, fields[i]);
        AxisBox b{v[1], v[2], v[3], v[4]};
        if (!(b.w > 0.0) || !(b.h > 0.0))
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": non-positive box extent");
        // Clamp edges into [0,1], preserving the opposite edge.
        bool clamped = false;
        double l = b.left(), r = b.right(), t = b.top(), bo = b.bottom();
        if (l < 0.0) { l = 0.0; clamped = true; }
        if (r > 1.0) { r = 1.0; clamped = true; }
        if (t < 0.0) { t = 0.0; clamped = true; }
        if (bo > 1.0) { bo = 1.0; clamped = true; }
        if (clamped) {
            doc.warnings.push_back(path + ":" + std::to_string(line_no) +
                                   ": box clamped to image bounds");
            b = {(l + r) / 2.0, (t + bo) / 2.0, r - l, bo - t};
        }
        doc.words.push_back({b, static_cast<int>(v[0])});
    }
}

// Line annotation file: `class x1 y1 x2 y2 x3 y3 x4 y4`, corners in the
// fixed order top-left, top-right, bottom-right, bottom-left.
inline void parse_line_file(const std::string& path, DocumentAnnotation& doc) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() != 9)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 9 fields, got " + std::to_string(toks.size()));
        OrientedBox b;
        for (int i = 0; i < 4; ++i) {
            b.corners[i].x = detail::parse_field(toks[1 + 2 * i], path, line_no, "x");
            b.corners[i].y = detail::parse_field(toks[2 + 2 * i], path, line_no, "y");
        }
        for (Point& p : b.corners) {
            p.x = std::clamp(p.x, 0.0, 1.0);
            p.y = std::clamp(p.y, 0.0, 1.0);
        }
        if (!valid_oriented(b))
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": degenerate or non-convex oriented box");
        doc.lines.push_back(b);
    }
}

// Transcript file: whitespace-separated tokens in reading order. `[token]`
// marks a damaged word; a trailing `~` marks the first half of a carried
// word and a leading `~` its continuation.
inline void parse_transcript_file(const std::string& path, DocumentAnnotation& doc) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string tok;
    int index = 0;
    while (in >> tok) {
        ++index;
        TranscriptToken t;
        if (tok.size() >= 2 && tok.front() == '[' && tok.back() == ']') {
            t.damaged = true;
            tok = tok.substr(1, tok.size() - 2);
        }
        if (!tok.empty() && tok.back() == '~') {
            t.carry = true;
            tok.pop_back();
        }
        if (!tok.empty() && tok.front() == '~') {
            t.carry = true;
            tok.erase(tok.begin());
        }
        if (tok.empty())
            throw std::runtime_error(path + ": empty token at position " + std::to_string(index));
        t.word = tok;
        doc.transcript.push_back(t);
    }
}

inline DocumentAnnotation parse_annotations(const std::string& word_file,
                                            const std::string& line_file,
                                            const std::string& transcript_file,
                                            const std::string& image_id,
                                            int image_w, int image_h) {
    DocumentAnnotation doc;
    doc.image_id = image_id;
    doc.image_w = image_w;
    doc.image_h = image_h;
    parse_word_file(word_file, doc);
    parse_line_file(line_file, doc);
    parse_transcript_file(transcript_file, doc);
    return doc;
}

struct LineAssignment {
    std::vector<std::vector<size_t>> line_words;  // per line, word indices in reading order
    std::vector<size_t> unassigned;               // class-0 words below threshold everywhere
};

inline constexpr double kMembershipThreshold = 0.5;

// Word i goes to the line with the highest membership ratio at or above the
// threshold; ties take the lower line index. Within a line, words order by
// their center's projection onto the line direction (left to right after
// deskewing).
inline LineAssignment assign_words_to_lines(const DocumentAnnotation& doc,
                                            double threshold = kMembershipThreshold) {
    LineAssignment out;
    out.line_words.resize(doc.lines.size());
    for (size_t wi = 0; wi < doc.words.size(); ++wi) {
        if (doc.words[wi].class_id != kWordClass) continue;
        double best = 0.0;
        size_t best_line = doc.lines.size();
        for (size_t li = 0; li < doc.lines.size(); ++li) {
            double r = membership_ratio(doc.words[wi].box, doc.lines[li]);
            if (r >= threshold && r > best) {
                best = r;
                best_line = li;
            }
        }
        if (best_line < doc.lines.size())
            out.line_words[best_line].push_back(wi);
        else
            out.unassigned.push_back(wi);
    }
    for (size_t li = 0; li < doc.lines.size(); ++li) {
        double alpha = line_angle(doc.lines[li]).radians;
        double c = std::cos(alpha), s = std::sin(alpha);
        auto& idx = out.line_words[li];
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            const AxisBox& ba = doc.words[a].box;
            const AxisBox& bb = doc.words[b].box;
            return ba.cx * c + ba.cy * s < bb.cx * c + bb.cy * s;
        });
    }
    return out;
}

// Inclination of a line as rendered, i.e. with the normalized corners scaled
// by the image dimensions. Equals line_angle on square images; on any other
// aspect ratio the normalized-coordinate angle would not flatten the crop.
inline Angle deskew_angle(const OrientedBox& line, int image_w, int image_h) {
    OrientedBox px = line;
    for (Point& p : px.corners) {
        p.x *= image_w;
        p.y *= image_h;
    }
    return line_angle(px);
}

struct LineSample {
    Raster crop;
    Angle angle;                      // inclination removed by the deskew
    PixelRect region;                 // crop region on the source page
    std::vector<AxisBox> words;       // crop-local normalized, deskewed
    std::vector<size_t> word_indices; // into doc.words, reading order
    std::string image_id;
    size_t line_index = 0;
};

// Rotate a box center about a pixel-space point, width and height untouched.
inline AxisBox deskew_word_box(const AxisBox& box_px, const Point& center_px, Angle a) {
    Point c = rotate_point({box_px.cx, box_px.cy}, center_px, a);
    return {c.x, c.y, box_px.w, box_px.h};
}

inline LineSample build_line_sample(const DocumentAnnotation& doc, const Raster& page,
                                    size_t line_index, const std::vector<size_t>& word_indices) {
    const OrientedBox& line = doc.lines[line_index];
    double alpha = deskew_angle(line, page.width, page.height).radians;
    PixelRect rect = to_pixel_rect(envelope(line), page.width, page.height);
    Raster cropped = crop(page, rect);
    LineSample sample;
    sample.crop = rotate_about_center(cropped, Angle{-alpha});
    sample.angle = {alpha};
    sample.region = rect;
    sample.image_id = doc.image_id;
    sample.line_index = line_index;
    Point center{(rect.w - 1) / 2.0, (rect.h - 1) / 2.0};
    for (size_t wi : word_indices) {
        const AxisBox& b = doc.words[wi].box;
        AxisBox px{b.cx * page.width - rect.x0, b.cy * page.height - rect.y0,
                   b.w * page.width, b.h * page.height};
        AxisBox deskewed = deskew_word_box(px, center, Angle{-alpha});
        sample.words.push_back({deskewed.cx / rect.w, deskewed.cy / rect.h,
                                deskewed.w / rect.w, deskewed.h / rect.h});
        sample.word_indices.push_back(wi);
    }
    return sample;
}

// Lines ordered by ascending centroid y; degenerate lines are skipped with a
// warning appended to `warnings`.
inline std::vector<LineSample> build_line_samples(const DocumentAnnotation& doc,
                                                  const Raster& page,
                                                  std::vector<std::string>* warnings = nullptr) {
    LineAssignment assignment = assign_words_to_lines(doc);
    std::vector<size_t> order(doc.lines.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        double ya = 0.0, yb = 0.0;
        for (const Point& p : doc.lines[a].corners) ya += p.y;
        for (const Point& p : doc.lines[b].corners) yb += p.y;
        return ya < yb;
    });
    std::vector<LineSample> samples;
    for (size_t li : order) {
        if (signed_area(doc.lines[li]) <= 0.0) {
            if (warnings)
                warnings->push_back(doc.image_id + ": skipping degenerate line " +
                                    std::to_string(li));
            continue;
        }
        samples.push_back(build_line_sample(doc, page, li, assignment.line_words[li]));
    }
    return samples;
}

struct AlignedToken {
    size_t word_index;
    TranscriptToken token;
};

// Positional 1:1 zip of class-0 words in reading order against the
// transcript. The caller filters damaged/carry tokens for classification.
inline std::vector<AlignedToken> align_tokens(const DocumentAnnotation& doc) {
    LineAssignment assignment = assign_words_to_lines(doc);
    std::vector<size_t> order(doc.lines.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        double ya = 0.0, yb = 0.0;
        for (const Point& p : doc.lines[a].corners) ya += p.y;
        for (const Point& p : doc.lines[b].corners) yb += p.y;
        return ya < yb;
    });
    std::vector<size_t> reading;
    for (size_t li : order)
        for (size_t wi : assignment.line_words[li]) reading.push_back(wi);
    if (reading.size() != doc.transcript.size()) {
        throw std::runtime_error(doc.image_id + ": word/token count mismatch: " +
                                 std::to_string(reading.size()) + " words vs " +
                                 std::to_string(doc.transcript.size()) + " tokens");
    }
    std::vector<AlignedToken> out;
    out.reserve(reading.size());
    for (size_t i = 0; i < reading.size(); ++i)
        out.push_back({reading[i], doc.transcript[i]});
    return out;
}

struct ClassificationPair {
    Raster word_image;
    Word label;
    std::string image_id;
    size_t word_index = 0;
};

struct ClassificationDataset {
    std::vector<ClassificationPair> pairs;
    OccurrenceTable occurrences;
    std::vector<std::string> warnings;
};

// One pair per clean aligned token; crops cut from the deskewed line
// samples so they match pipeline-time crops.
inline void build_classification_pairs(const DocumentAnnotation& doc, const Raster& page,
                                       ClassificationDataset& out) {
    std::vector<AlignedToken> aligned = align_tokens(doc);
    std::vector<LineSample> samples = build_line_samples(doc, page, &out.warnings);
    std::map<size_t, std::pair<const LineSample*, size_t>> locate;
    for (const auto& s : samples)
        for (size_t k = 0; k < s.word_indices.size(); ++k)
            locate[s.word_indices[k]] = {&s, k};
    size_t emitted = 0;
    for (const auto& at : aligned) {
        if (at.token.damaged || at.token.carry) continue;
        auto it = locate.find(at.word_index);
        if (it == locate.end()) continue;
        const LineSample& s = *it->second.first;
        const AxisBox& local = s.words[it->second.second];
        PixelRect r = to_pixel_rect(local, s.crop.width, s.crop.height);
        out.pairs.push_back({crop(s.crop, r), at.token.word, doc.image_id, at.word_index});
        out.occurrences[at.token.word] += 1;
        ++emitted;
    }
    if (emitted == 0)
        out.warnings.push_back(doc.image_id + ": no classification pairs (all tokens excluded)");
}

struct SplitResult {
    std::vector<size_t> train;
    std::vector<size_t> val;
};

// Deterministic under seed. Labels with a single pair always land in train;
// a label never appears in val without also appearing in train.
inline SplitResult train_val_split(const std::vector<ClassificationPair>& pairs,
                                   double val_fraction, std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 0.5))
        throw std::invalid_argument("val_fraction must be in (0, 0.5)");
    std::map<Word, std::uint64_t> label_count;
    for (const auto& p : pairs) label_count[p.label] += 1;

    SplitResult out;
    std::vector<size_t> movable;
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (label_count[pairs[i].label] == 1)
            out.train.push_back(i);
        else
            movable.push_back(i);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(movable.begin(), movable.end(), rng);
    size_t val_target = static_cast<size_t>(val_fraction * pairs.size());
    std::map<Word, std::uint64_t> remaining = label_count;
    for (size_t i : movable) {
        // Keep at least one instance of every label in train.
        if (out.val.size() < val_target && remaining[pairs[i].label] > 1) {
            out.val.push_back(i);
            remaining[pairs[i].label] -= 1;
        } else {
            out.train.push_back(i);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    return out;
}

struct TripletIndices {
    size_t anchor;
    size_t positive;
    size_t negative;
};

// Anchor/positive labels at modified Hamming distance <= 1 (distinct
// images), anchor/negative labels above 1. Deterministic under seed; samples
// with replacement.
inline std::vector<TripletIndices> sample_triplets(const std::vector<ClassificationPair>& pairs,
                                                   size_t n, std::uint64_t seed) {
    std::set<Word> vocab;
    for (const auto& p : pairs) vocab.insert(p.label);
    std::map<Word, std::vector<size_t>> by_label;
    for (size_t i = 0; i < pairs.size(); ++i) by_label[pairs[i].label].push_back(i);

    std::map<Word, std::vector<Word>> similar_labels;
    std::map<Word, std::vector<Word>> dissimilar_labels;
    for (const Word& a : vocab) {
        for (const Word& b : vocab) {
            if (a == b) continue;
            (similar(a, b) ? similar_labels[a] : dissimilar_labels[a]).push_back(b);
        }
    }

    std::vector<size_t> anchors;
    for (size_t i = 0; i < pairs.size(); ++i) {
        const Word& l = pairs[i].label;
        bool has_positive = by_label[l].size() > 1 || !similar_labels[l].empty();
        bool has_negative = !dissimilar_labels[l].empty();
        if (has_positive && has_negative) anchors.push_back(i);
    }
    if (anchors.empty()) throw std::runtime_error("no admissible triplet anchor in dataset");

    std::mt19937_64 rng(seed);
    auto pick = [&rng](size_t count) {
        return std::uniform_int_distribution<size_t>(0, count - 1)(rng);
    };
    std::vector<TripletIndices> out;
    out.reserve(n);
    while (out.size() < n) {
        size_t a = anchors[pick(anchors.size())];
        const Word& la = pairs[a].label;
        std::vector<size_t> positives;
        for (size_t i : by_label[la])
            if (i != a) positives.push_back(i);
        for (const Word& l : similar_labels[la])
            for (size_t i : by_label[l]) positives.push_back(i);
        size_t p = positives[pick(positives.size())];
        const Word& ln = dissimilar_labels[la][pick(dissimilar_labels[la].size())];
        size_t neg = by_label[ln][pick(by_label[ln].size())];
        out.push_back({a, p, neg});
    }
    return out;
}

}  // namespace scriptorium
