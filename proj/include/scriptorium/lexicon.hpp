#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace scriptorium {

// A vocabulary word: non-empty, lowercased, no internal whitespace.
// Comparisons operate on raw bytes (Unicode scalar values as encoded); any
// diacritic normalization is the caller's concern.
using Word = std::string;

// Non-negative word distance with an explicit infinity.
struct Distance {
    static constexpr std::uint32_t kInfinite = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t value = kInfinite;

    static Distance infinite() { return {kInfinite}; }
    static Distance finite(std::uint32_t v) { return {v}; }
    bool is_infinite() const { return value == kInfinite; }
    bool operator==(const Distance&) const = default;
    bool operator<=(std::uint32_t v) const { return !is_infinite() && value <= v; }
};

// Length-constrained word similarity. Rules, in order:
//   1. exactly one word shorter than six characters -> infinite
//   2. length difference above 2 -> infinite
//   3. equal lengths -> positional mismatch count
//   4. lengths differ by 1 -> 1 if deleting one character from the longer
//      word yields the shorter, else infinite
//   5. lengths differ by 2 -> infinite
inline Distance modified_hamming(const Word& a, const Word& b) {
    size_t la = a.size(), lb = b.size();
    if ((la < 6) != (lb < 6)) return Distance::infinite();
    size_t diff = la > lb ? la - lb : lb - la;
    if (diff > 2) return Distance::infinite();
    if (diff == 0) {
        std::uint32_t d = 0;
        for (size_t i = 0; i < la; ++i)
            if (a[i] != b[i]) ++d;
        return Distance::finite(d);
    }
    if (diff == 1) {
        const Word& longer = la > lb ? a : b;
        const Word& shorter = la > lb ? b : a;
        for (size_t skip = 0; skip < longer.size(); ++skip) {
            bool match = true;
            for (size_t i = 0, j = 0; i < longer.size(); ++i) {
                if (i == skip) continue;
                if (longer[i] != shorter[j++]) { match = false; break; }
            }
            if (match) return Distance::finite(1);
        }
        return Distance::infinite();
    }
    return Distance::infinite();
}

inline bool similar(const Word& a, const Word& b) {
    return modified_hamming(a, b) <= 1;
}

using WordPair = std::pair<Word, Word>;

// All unordered pairs at modified Hamming distance <= 1.
inline std::set<WordPair> similarity_pairs(const std::set<Word>& vocab) {
    std::set<WordPair> pairs;
    for (auto i = vocab.begin(); i != vocab.end(); ++i) {
        auto j = i;
        for (++j; j != vocab.end(); ++j) {
            if (similar(*i, *j)) pairs.emplace(*i, *j);
        }
    }
    return pairs;
}

// Union-find closure over similarity pairs; representative is the
// lexicographically smallest member of each class.
using MergeClasses = std::map<Word, Word>;

inline MergeClasses merge_similar(const std::set<Word>& vocab) {
    std::vector<Word> words(vocab.begin(), vocab.end());
    std::map<Word, size_t> index;
    for (size_t i = 0; i < words.size(); ++i) index[words[i]] = i;

    std::vector<size_t> parent(words.size());
    for (size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    auto find = [&](size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    for (const auto& [a, b] : similarity_pairs(vocab)) {
        size_t ra = find(index[a]);
        size_t rb = find(index[b]);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }

    // words is sorted, so the root with the smallest index is also the
    // lexicographically smallest member.
    MergeClasses out;
    for (size_t i = 0; i < words.size(); ++i) out[words[i]] = words[find(i)];
    return out;
}

using OccurrenceTable = std::map<Word, std::uint64_t>;

struct HistogramBin {
    std::uint64_t lo;  // inclusive
    std::uint64_t hi;  // inclusive; 0 means unbounded
    std::uint64_t count;
};

// Bin edges: [1,2], (2,5], (5,10], (10,25], (25,50], (50,100], (100,500], (500,inf)
inline std::vector<HistogramBin> occurrence_histogram(const OccurrenceTable& table) {
    if (table.empty()) throw std::invalid_argument("empty occurrence table");
    std::vector<HistogramBin> bins = {
        {1, 2, 0}, {3, 5, 0}, {6, 10, 0}, {11, 25, 0},
        {26, 50, 0}, {51, 100, 0}, {101, 500, 0}, {501, 0, 0}};
    for (const auto& [word, count] : table) {
        (void)word;
        for (auto& bin : bins) {
            if (count >= bin.lo && (bin.hi == 0 || count <= bin.hi)) {
                ++bin.count;
                break;
            }
        }
    }
    return bins;
}

// Inverse-frequency class weights: weight(w) = 1 / count(w).
inline std::map<Word, double> class_weights(const OccurrenceTable& table) {
    std::map<Word, double> weights;
    for (const auto& [word, count] : table) weights[word] = 1.0 / static_cast<double>(count);
    return weights;
}

// Standard edit distance, unit costs.
inline std::uint32_t levenshtein(const Word& a, const Word& b) {
    const size_t n = b.size();
    std::vector<std::uint32_t> row(n + 1);
    for (size_t j = 0; j <= n; ++j) row[j] = static_cast<std::uint32_t>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
        std::uint32_t diag = row[0];
        row[0] = static_cast<std::uint32_t>(i);
        for (size_t j = 1; j <= n; ++j) {
            std::uint32_t save = row[j];
            std::uint32_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
            diag = save;
        }
    }
    return row[n];
}

}  // namespace scriptorium
