// Command line front end for the transcription toolkit: dataset
// construction, corpus statistics, page transcription, evaluation and
// vector store lookups.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scriptorium/backends.hpp"
#include "scriptorium/corpus_io.hpp"
#include "scriptorium/eval.hpp"
#include "scriptorium/pipeline.hpp"
#include "scriptorium/process_backend.hpp"
#include "scriptorium/vectorstore.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace scriptorium;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitBackend = 2;

json histogram_json(const std::vector<HistogramBin>& bins) {
    json out = json::array();
    for (const auto& b : bins) {
        json bin;
        bin["lo"] = b.lo;
        if (b.hi) bin["hi"] = b.hi;
        bin["count"] = b.count;
        out.push_back(bin);
    }
    return out;
}

int cmd_stats(const std::string& corpus_dir, const std::string& out_path) {
    auto docs = load_corpus(corpus_dir);
    ClassificationDataset dataset;
    for (const auto& d : docs) build_classification_pairs(d.annotation, d.page, dataset);

    std::set<Word> vocab;
    for (const auto& [word, count] : dataset.occurrences) vocab.insert(word);
    auto pairs = similarity_pairs(vocab);
    auto classes = merge_similar(vocab);

    OccurrenceTable merged;
    for (const auto& [word, count] : dataset.occurrences) merged[classes.at(word)] += count;

    ordered_json report;
    report["documents"] = docs.size();
    report["classification_pairs"] = dataset.pairs.size();
    report["vocabulary_size"] = vocab.size();
    report["similar_pair_count"] = pairs.size();
    report["merged_vocabulary_size"] = merged.size();
    report["occurrence_histogram"] = histogram_json(occurrence_histogram(dataset.occurrences));
    report["merged_occurrence_histogram"] = histogram_json(occurrence_histogram(merged));
    report["warnings"] = dataset.warnings;

    std::cout << "documents:            " << docs.size() << "\n"
              << "classification pairs: " << dataset.pairs.size() << "\n"
              << "vocabulary size:      " << vocab.size() << "\n"
              << "similar word pairs:   " << pairs.size() << "\n"
              << "merged vocabulary:    " << merged.size() << "\n";
    auto print_hist = [](const char* title, const std::vector<HistogramBin>& bins) {
        std::cout << title << "\n";
        for (const auto& b : bins) {
            std::cout << "  " << b.lo << (b.hi ? "-" + std::to_string(b.hi) : "+") << ": "
                      << b.count << "\n";
        }
    };
    print_hist("occurrence histogram:", occurrence_histogram(dataset.occurrences));
    print_hist("merged occurrence histogram:", occurrence_histogram(merged));

    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << report.dump(2) << "\n";
    }
    return 0;
}

int cmd_build_dataset(const std::string& corpus_dir, const std::string& out_dir,
                      double val_fraction, std::uint64_t seed, size_t triplet_count) {
    auto docs = load_corpus(corpus_dir);
    fs::create_directories(out_dir + "/lines");
    fs::create_directories(out_dir + "/words");

    ordered_json line_manifest = ordered_json::array();
    for (const auto& d : docs) {
        std::vector<std::string> warnings;
        auto samples = build_line_samples(d.annotation, d.page, &warnings);
        for (const auto& s : samples) {
            std::string rel = "lines/" + s.image_id + "_" + std::to_string(s.line_index) + ".png";
            save_png(s.crop, out_dir + "/" + rel);
            ordered_json rec;
            rec["image"] = rel;
            rec["source_image"] = s.image_id;
            rec["line_index"] = s.line_index;
            rec["angle"] = s.angle.radians;
            rec["words"] = ordered_json::array();
            for (const auto& w : s.words) rec["words"].push_back({w.cx, w.cy, w.w, w.h});
            line_manifest.push_back(rec);
        }
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    }
    std::ofstream(out_dir + "/lines.json") << line_manifest.dump(2) << "\n";

    ClassificationDataset dataset;
    for (const auto& d : docs) build_classification_pairs(d.annotation, d.page, dataset);
    for (const auto& w : dataset.warnings) std::cerr << "warning: " << w << "\n";

    ordered_json cls_manifest = ordered_json::array();
    for (size_t i = 0; i < dataset.pairs.size(); ++i) {
        const auto& p = dataset.pairs[i];
        std::string rel = "words/" + p.image_id + "_" + std::to_string(p.word_index) + ".png";
        save_png(p.word_image, out_dir + "/" + rel);
        cls_manifest.push_back({{"image", rel}, {"label", p.label}});
    }
    std::ofstream(out_dir + "/classification.json") << cls_manifest.dump(2) << "\n";

    ordered_json occ;
    for (const auto& [word, count] : dataset.occurrences) occ[word] = count;
    std::ofstream(out_dir + "/occurrences.json") << occ.dump(2) << "\n";

    SplitResult split = train_val_split(dataset.pairs, val_fraction, seed);
    ordered_json split_json;
    split_json["seed"] = seed;
    split_json["val_fraction"] = val_fraction;
    split_json["train"] = split.train;
    split_json["val"] = split.val;
    std::ofstream(out_dir + "/split.json") << split_json.dump(2) << "\n";

    auto triplets = sample_triplets(dataset.pairs, triplet_count, seed);
    ordered_json trip_json = ordered_json::array();
    for (const auto& t : triplets)
        trip_json.push_back({{"anchor", t.anchor}, {"positive", t.positive},
                             {"negative", t.negative}});
    std::ofstream(out_dir + "/triplets.json") << trip_json.dump(2) << "\n";

    std::cout << "wrote " << line_manifest.size() << " line crops, " << dataset.pairs.size()
              << " word crops, " << triplets.size() << " triplets to " << out_dir << "\n";
    return 0;
}

int cmd_triplets(const std::string& corpus_dir, size_t count, std::uint64_t seed) {
    auto docs = load_corpus(corpus_dir);
    ClassificationDataset dataset;
    for (const auto& d : docs) build_classification_pairs(d.annotation, d.page, dataset);
    auto triplets = sample_triplets(dataset.pairs, count, seed);
    ordered_json out = ordered_json::array();
    for (const auto& t : triplets) {
        out.push_back({{"anchor", t.anchor},
                       {"anchor_label", dataset.pairs[t.anchor].label},
                       {"positive", t.positive},
                       {"positive_label", dataset.pairs[t.positive].label},
                       {"negative", t.negative},
                       {"negative_label", dataset.pairs[t.negative].label}});
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

struct BackendBundle {
    PipelineBackends ifaces;
    std::unique_ptr<OracleBackend> oracle;
    std::unique_ptr<FileBackend> file;
    std::unique_ptr<ProcessBackend> process;
};

BackendBundle make_backends(const std::string& spec, std::uint64_t seed) {
    BackendBundle b;
    auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::runtime_error("backend must be file:<path>, oracle:<corpus> or proc:<cmd>");
    std::string kind = spec.substr(0, colon);
    std::string arg = spec.substr(colon + 1);
    if (kind == "file") {
        b.file = std::make_unique<FileBackend>(arg);
        b.ifaces = {b.file.get(), b.file.get(), b.file.get(), b.file.get()};
    } else if (kind == "oracle") {
        auto docs = load_corpus(arg);
        std::vector<OracleBackend::Document> odocs;
        for (auto& d : docs) odocs.push_back({std::move(d.annotation), std::move(d.page)});
        OracleConfig cfg;
        cfg.seed = seed;
        b.oracle = std::make_unique<OracleBackend>(std::move(odocs), cfg);
        b.ifaces = {b.oracle.get(), b.oracle.get(), b.oracle.get(), b.oracle.get()};
    } else if (kind == "proc") {
        b.process = std::make_unique<ProcessBackend>(arg);
        b.ifaces = {b.process.get(), b.process.get(), b.process.get(), b.process.get()};
    } else {
        throw std::runtime_error("unknown backend kind: " + kind);
    }
    return b;
}

int cmd_transcribe(const std::string& image_path, const std::string& backend_spec,
                   const std::string& store_path, const std::string& overlay_path,
                   const std::string& out_path, const PipelineConfig& cfg, std::uint64_t seed) {
    Raster page = load_png(image_path);
    std::string image_id = fs::path(image_path).stem().string();
    BackendBundle backends = make_backends(backend_spec, seed);

    std::unique_ptr<EmbeddingStore> store;
    if (!store_path.empty()) store = std::make_unique<EmbeddingStore>(load_store(store_path));

    PipelineOutput out = transcribe(page, image_id, backends.ifaces, store.get(), cfg);
    std::string dumped = to_json(out).dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << dumped;
    } else {
        std::ofstream(out_path) << dumped;
    }
    if (!overlay_path.empty()) save_png(render_overlay(page, out), overlay_path);
    for (const auto& e : out.errors) std::cerr << "warning: " << e << "\n";
    return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gt_dir,
                 const std::string& out_path) {
    std::ifstream in(pred_path);
    if (!in) throw std::runtime_error("cannot open " + pred_path);
    json pred;
    in >> pred;

    auto docs = load_corpus(gt_dir);
    const CorpusDocument* gt = nullptr;
    std::string image_id = pred.at("image_id").get<std::string>();
    for (const auto& d : docs)
        if (d.annotation.image_id == image_id) gt = &d;
    if (!gt) throw std::runtime_error("no ground truth for image_id " + image_id);

    std::vector<AxisDetection> line_preds;
    std::vector<AxisDetection> word_preds;
    std::vector<Word> pred_words;
    for (const auto& lj : pred.at("lines")) {
        auto obb = lj.at("obb").get<std::vector<double>>();
        OrientedBox b;
        for (int i = 0; i < 4; ++i) b.corners[i] = {obb[2 * i], obb[2 * i + 1]};
        line_preds.push_back({envelope(b), 1.0, 0});
        for (const auto& wj : lj.at("words")) {
            auto box = wj.at("box").get<std::vector<double>>();
            word_preds.push_back(
                {{box[0], box[1], box[2], box[3]}, wj.at("conf").get<double>(), 0});
            if (!wj.at("label").is_null()) pred_words.push_back(wj["label"].get<std::string>());
        }
    }

    std::vector<AxisBox> line_gts;
    for (const auto& l : gt->annotation.lines) line_gts.push_back(envelope(l));
    std::vector<AxisBox> word_gts;
    for (const auto& w : gt->annotation.words)
        if (w.class_id == kWordClass) word_gts.push_back(w.box);

    ordered_json report;
    auto detection_report = [](const std::vector<AxisDetection>& preds,
                               const std::vector<AxisBox>& gts) {
        MatchResult m = match_detections(preds, gts, 0.5);
        auto [p, r] = precision_recall(m);
        MapResult maps = map_range(preds, gts);
        SweepResult sweep = sweep_curves(preds, gts, 0.5, 21);
        ordered_json out;
        out["precision"] = p;
        out["recall"] = r;
        out["map50"] = maps.map50;
        out["map5095"] = maps.map5095;
        out["confusion"] = {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}};
        out["best_f1_confidence"] = sweep.best_f1_confidence;
        out["curve"] = ordered_json::array();
        for (const auto& pt : sweep.points)
            out["curve"].push_back({{"confidence", pt.confidence},
                                    {"precision", pt.precision},
                                    {"recall", pt.recall},
                                    {"f1", pt.f1}});
        return out;
    };
    report["lines"] = detection_report(line_preds, line_gts);
    report["words"] = detection_report(word_preds, word_gts);

    std::vector<Word> gt_words;
    for (const auto& t : gt->annotation.transcript) gt_words.push_back(t.word);
    ordered_json recognition;
    recognition["predicted_word_count"] = pred_words.size();
    recognition["ground_truth_word_count"] = gt_words.size();
    if (!pred_words.empty() && pred_words.size() == gt_words.size())
        recognition["mean_string_distance"] = mean_string_distance(pred_words, gt_words);
    else
        recognition["mean_string_distance"] = nullptr;
    report["recognition"] = recognition;

    std::string dumped = report.dump(2) + "\n";
    if (out_path.empty())
        std::cout << dumped;
    else
        std::ofstream(out_path) << dumped;
    return 0;
}

int cmd_knn(const std::string& store_path, const std::string& query_json, size_t k) {
    EmbeddingStore store = load_store(store_path);
    std::vector<double> query = json::parse(query_json).get<std::vector<double>>();
    ordered_json out = ordered_json::array();
    for (const auto& nb : store.knn(query, k))
        out.push_back({{"label", nb.label}, {"dist", nb.distance}});
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transcription toolkit for handwritten medieval Latin documents"};
    app.require_subcommand(1);

    std::string corpus_dir, out_dir, out_path, image_path, backend_spec, store_path;
    std::string overlay_path, pred_path, gt_dir, query_json;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    size_t count = 400;
    size_t k = 5;
    PipelineConfig cfg;

    auto* build = app.add_subcommand("build-dataset", "Build training datasets from a corpus");
    build->add_option("corpus-dir", corpus_dir)->required();
    build->add_option("--out", out_dir)->required();
    build->add_option("--val-fraction", val_fraction);
    build->add_option("--seed", seed);
    build->add_option("--triplets", count);

    auto* stats = app.add_subcommand("stats", "Corpus statistics report");
    stats->add_option("corpus-dir", corpus_dir)->required();
    stats->add_option("--out", out_path);

    auto* trans = app.add_subcommand("transcribe", "Transcribe a page image");
    trans->add_option("image", image_path)->required();
    trans->add_option("--backend", backend_spec, "file:<path> | oracle:<corpus> | proc:<cmd>")
        ->required();
    trans->add_option("--store", store_path);
    trans->add_option("--overlay", overlay_path);
    trans->add_option("--out", out_path);
    trans->add_option("--seed", seed);
    trans->add_option("--confidence-floor", cfg.classifier_confidence_floor);
    trans->add_option("--fallback-k", cfg.fallback_k);
    trans->add_option("--line-iou", cfg.line_iou_threshold);
    trans->add_option("--word-iou", cfg.word_iou_threshold);

    auto* ev = app.add_subcommand("evaluate", "Evaluate a transcription against ground truth");
    ev->add_option("--pred", pred_path)->required();
    ev->add_option("--gt", gt_dir)->required();
    ev->add_option("--out", out_path);

    auto* knn_cmd = app.add_subcommand("knn", "Nearest neighbor lookup in a vector store");
    knn_cmd->add_option("--store", store_path)->required();
    knn_cmd->add_option("--query", query_json)->required();
    knn_cmd->add_option("-k", k);

    auto* trip = app.add_subcommand("triplets", "Sample embedding training triplets");
    trip->add_option("corpus-dir", corpus_dir)->required();
    trip->add_option("-n", count);
    trip->add_option("--seed", seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed())
            return cmd_build_dataset(corpus_dir, out_dir, val_fraction, seed, count);
        if (stats->parsed()) return cmd_stats(corpus_dir, out_path);
        if (trans->parsed())
            return cmd_transcribe(image_path, backend_spec, store_path, overlay_path, out_path,
                                  cfg, seed);
        if (ev->parsed()) return cmd_evaluate(pred_path, gt_dir, out_path);
        if (knn_cmd->parsed()) return cmd_knn(store_path, query_json, k);
        if (trip->parsed()) return cmd_triplets(corpus_dir, count, seed);
    } catch (const ProtocolError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return 0;
}
