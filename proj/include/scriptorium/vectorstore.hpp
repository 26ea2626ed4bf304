#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scriptorium/lexicon.hpp"

namespace scriptorium {

struct EmbeddingEntry {
    Word label;
    std::vector<double> vector;
    std::uint64_t insert_ordinal = 0;
};

struct Neighbor {
    Word label;
    double distance = 0.0;
    std::uint64_t ordinal = 0;
};

// Append-only labeled vector store with exact brute-force Euclidean k-NN.
// Ties break by insertion ordinal, so lookups are fully deterministic.
class EmbeddingStore {
public:
    explicit EmbeddingStore(size_t dimension) : dim_(dimension) {
        if (dimension == 0) throw std::invalid_argument("dimension must be positive");
    }

    size_t dimension() const { return dim_; }
    size_t size() const { return entries_.size(); }
    const std::vector<EmbeddingEntry>& entries() const { return entries_; }

    void add(const Word& label, const std::vector<double>& vector) {
        if (vector.size() != dim_) throw std::invalid_argument("embedding dimension mismatch");
        for (double v : vector)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite embedding component");
        entries_.push_back({label, vector, next_ordinal_++});
    }

    std::vector<Neighbor> knn(const std::vector<double>& query, size_t k) const {
        if (entries_.empty()) throw std::runtime_error("knn on empty store");
        if (k < 1) throw std::invalid_argument("k must be >= 1");
        if (query.size() != dim_) throw std::invalid_argument("query dimension mismatch");
        std::vector<Neighbor> all;
        all.reserve(entries_.size());
        for (const auto& e : entries_) {
            double s = 0.0;
            for (size_t i = 0; i < dim_; ++i) {
                double d = query[i] - e.vector[i];
                s += d * d;
            }
            all.push_back({e.label, std::sqrt(s), e.insert_ordinal});
        }
        size_t n = std::min(k, all.size());
        std::partial_sort(all.begin(), all.begin() + n, all.end(),
                          [](const Neighbor& a, const Neighbor& b) {
                              if (a.distance != b.distance) return a.distance < b.distance;
                              return a.ordinal < b.ordinal;
                          });
        all.resize(n);
        return all;
    }

private:
    size_t dim_;
    std::vector<EmbeddingEntry> entries_;
    std::uint64_t next_ordinal_ = 0;
};

// Fraction of correct neighbors over the k nearest of every query. A
// neighbor is correct when its label is the true label or a similar word
// (modified Hamming distance <= 1); exact_match restricts to equality.
inline double modified_precision(const EmbeddingStore& store,
                                 const std::vector<std::pair<std::vector<double>, Word>>& queries,
                                 size_t k, bool exact_match = false) {
    if (queries.empty()) throw std::invalid_argument("no queries");
    std::uint64_t correct = 0;
    for (const auto& [vec, truth] : queries) {
        for (const auto& nb : store.knn(vec, k)) {
            bool ok = exact_match ? nb.label == truth : similar(nb.label, truth);
            if (ok) ++correct;
        }
    }
    return static_cast<double>(correct) / (static_cast<double>(k) * queries.size());
}

namespace detail {

inline std::string format_g9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace detail

// Vectors serialize as decimals with 9 significant digits; one save/load
// round-trip is a fixpoint.
inline void save_store(const EmbeddingStore& store, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "{\"version\": 1, \"dim\": " << store.dimension() << ", \"entries\": [";
    bool first = true;
    for (const auto& e : store.entries()) {
        if (!first) out << ", ";
        first = false;
        out << "{\"label\": " << nlohmann::json(e.label).dump()
            << ", \"ord\": " << e.insert_ordinal << ", \"vec\": [";
        for (size_t i = 0; i < e.vector.size(); ++i) {
            if (i) out << ", ";
            out << detail::format_g9(e.vector[i]);
        }
        out << "]}";
    }
    out << "]}\n";
}

inline EmbeddingStore load_store(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("store format error in " + path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("version") || !j.contains("dim") || !j.contains("entries"))
        throw std::runtime_error("store format error in " + path);
    if (j["version"].get<int>() != 1)
        throw std::runtime_error("unsupported store version in " + path);
    size_t dim = j["dim"].get<size_t>();
    EmbeddingStore store(dim);
    for (const auto& e : j["entries"]) {
        std::vector<double> vec = e.at("vec").get<std::vector<double>>();
        if (vec.size() != dim)
            throw std::runtime_error("entry dimension mismatch in " + path);
        store.add(e.at("label").get<std::string>(), vec);
    }
    return store;
}

}  // namespace scriptorium
