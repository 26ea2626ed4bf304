#pragma once

#include <algorithm>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "scriptorium/corpus.hpp"
#include "scriptorium/png_io.hpp"

namespace scriptorium {

struct CorpusDocument {
    DocumentAnnotation annotation;
    Raster page;
};

// A corpus directory holds, per page:
//   <image_id>.png  <image_id>.words.txt  <image_id>.lines.txt  <image_id>.tokens.txt
inline std::vector<CorpusDocument> load_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::runtime_error(dir + " is not a directory");
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        const std::string suffix = ".words.txt";
        if (name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw std::runtime_error("no *.words.txt annotations in " + dir);

    std::vector<CorpusDocument> docs;
    for (const std::string& id : ids) {
        std::string base = dir + "/" + id;
        CorpusDocument doc;
        doc.page = load_png(base + ".png");
        doc.annotation = parse_annotations(base + ".words.txt", base + ".lines.txt",
                                           base + ".tokens.txt", id, doc.page.width,
                                           doc.page.height);
        docs.push_back(std::move(doc));
    }
    return docs;
}

}  // namespace scriptorium
