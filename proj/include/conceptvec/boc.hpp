#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "conceptvec/common.hpp"
#include "conceptvec/corpus.hpp"

namespace conceptvec {

struct boc_entry {
    std::string concept_id;
    double weight;
    bool operator==(const boc_entry&) const = default;
};

// Sparse bag-of-concepts vector: unique concept ids with strictly positive
// weights, ordered by descending weight (ties by ascending id).
class sparse_boc {
public:
    sparse_boc() = default;

    static sparse_boc from_entries(std::vector<boc_entry> entries) {
        for (const auto& e : entries) {
            if (!(e.weight > 0.0) || !std::isfinite(e.weight))
                throw format_error("BOC weight must be positive and finite for concept '" +
                                   e.concept_id + "'");
            if (e.concept_id.empty()) throw format_error("empty concept id in BOC");
        }
        std::sort(entries.begin(), entries.end(), order);
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (entries[i].concept_id == entries[i - 1].concept_id)
                throw format_error("duplicate concept id in BOC: " + entries[i].concept_id);
        sparse_boc b;
        b.entries_ = std::move(entries);
        return b;
    }

    const std::vector<boc_entry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    // Top-n entries under the canonical order; n past the end keeps everything.
    sparse_boc truncated(std::size_t n) const {
        sparse_boc b;
        b.entries_.assign(entries_.begin(),
                          entries_.begin() + static_cast<std::ptrdiff_t>(std::min(n, entries_.size())));
        return b;
    }

    double weight_norm() const {
        double s = 0.0;
        for (const auto& e : entries_) s += e.weight * e.weight;
        return std::sqrt(s);
    }

    // Id-ascending view for merge-style intersection.
    std::vector<boc_entry> by_id() const {
        auto sorted = entries_;
        std::sort(sorted.begin(), sorted.end(),
                  [](const boc_entry& a, const boc_entry& b) { return a.concept_id < b.concept_id; });
        return sorted;
    }

private:
    static bool order(const boc_entry& a, const boc_entry& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.concept_id < b.concept_id;
    }

    std::vector<boc_entry> entries_;
};

inline sparse_boc truncate(const sparse_boc& v, std::size_t n) {
    if (n < 1) throw format_error("truncation size must be >= 1");
    return v.truncated(n);
}

// Exact-match cosine over the shared concept ids, by sorted merge.
inline double sparse_cosine(const sparse_boc& u, const sparse_boc& v) {
    if (u.empty() || v.empty()) throw domain_error("empty BOC");
    const auto a = u.by_id();
    const auto b = v.by_id();
    double dot = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const int cmp = a[i].concept_id.compare(b[j].concept_id);
        if (cmp == 0) {
            dot += a[i].weight * b[j].weight;
            ++i;
            ++j;
        } else if (cmp < 0) {
            ++i;
        } else {
            ++j;
        }
    }
    return dot / (u.weight_norm() * v.weight_norm());
}

// ---------------------------------------------------------------------------
// Concept index: each input document is the text of one concept (doc_id = the
// concept id). Term-concept association is TF-IDF with log-normalized TF:
// f(c,t) = (1 + log tf(t,c)) * log(N / df(t)), and 0 when tf = 0.
// ---------------------------------------------------------------------------

class concept_index {
public:
    class builder {
    public:
        void add(const annotated_document& doc) {
            if (!ids_.emplace(doc.doc_id, static_cast<std::int32_t>(concepts_.size())).second)
                throw format_error("duplicate concept document id: " + doc.doc_id);
            concepts_.push_back(doc.doc_id);
            std::unordered_map<std::string, std::uint64_t> tf;
            for (const auto& t : doc.tokens)
                if (!t.is_concept()) ++tf[t.text];
            const std::int32_t c = static_cast<std::int32_t>(concepts_.size() - 1);
            for (const auto& [term, count] : tf) raw_[term].emplace_back(c, count);
        }

        concept_index build() {
            concept_index idx;
            idx.concepts_ = std::move(concepts_);
            idx.ids_ = std::move(ids_);
            const double n_docs = static_cast<double>(idx.concepts_.size());
            for (auto& [term, postings] : raw_) {
                const double idf = std::log(n_docs / static_cast<double>(postings.size()));
                if (idf <= 0.0) continue;  // term occurs in every concept document
                std::vector<std::pair<std::int32_t, double>> scored;
                scored.reserve(postings.size());
                for (const auto& [c, tf] : postings)
                    scored.emplace_back(c, (1.0 + std::log(static_cast<double>(tf))) * idf);
                std::sort(scored.begin(), scored.end());
                idx.postings_.emplace(term, std::move(scored));
            }
            raw_.clear();
            return idx;
        }

    private:
        std::vector<std::string> concepts_;
        std::unordered_map<std::string, std::int32_t> ids_;
        std::unordered_map<std::string, std::vector<std::pair<std::int32_t, std::uint64_t>>> raw_;
    };

    std::size_t concept_count() const { return concepts_.size(); }
    const std::string& concept_id(std::int32_t idx) const {
        return concepts_[static_cast<std::size_t>(idx)];
    }

    double score(const std::string& concept_id, const std::string& term) const {
        auto cit = ids_.find(concept_id);
        auto tit = postings_.find(term);
        if (cit == ids_.end() || tit == postings_.end()) return 0.0;
        for (const auto& [c, s] : tit->second)
            if (c == cit->second) return s;
        return 0.0;
    }

    // Sums f(c, t_j) over every token occurrence of `text` and keeps the
    // top_n heaviest concepts. May be empty when nothing scores.
    sparse_boc build_boc(const std::string& text, std::size_t top_n) const {
        if (top_n < 1) throw format_error("top_n must be >= 1");
        std::vector<double> weights(concepts_.size(), 0.0);
        for (const auto& piece : split_whitespace(text)) {
            const std::string term = normalize_word(piece);
            if (term.empty()) continue;
            auto it = postings_.find(term);
            if (it == postings_.end()) continue;
            for (const auto& [c, s] : it->second) weights[static_cast<std::size_t>(c)] += s;
        }
        std::vector<boc_entry> entries;
        for (std::size_t c = 0; c < weights.size(); ++c)
            if (weights[c] > 0.0) entries.push_back({concepts_[c], weights[c]});
        auto boc = sparse_boc::from_entries(std::move(entries));
        return boc.truncated(top_n);
    }

private:
    std::vector<std::string> concepts_;
    std::unordered_map<std::string, std::int32_t> ids_;
    std::unordered_map<std::string, std::vector<std::pair<std::int32_t, double>>> postings_;
};

template <typename DocRange>
concept_index build_index(const DocRange& docs) {
    concept_index::builder b;
    for (const auto& doc : docs) b.add(doc);
    return b.build();
}

inline sparse_boc build_boc(const std::string& text, const concept_index& index,
                            std::size_t top_n) {
    return index.build_boc(text, top_n);
}

// ---------------------------------------------------------------------------
// BOC file: one record per line,
//   <record_id> TAB <concept_id>:<weight> <concept_id>:<weight> ...
// Weights split on the last ':' of each pair.
// ---------------------------------------------------------------------------

struct boc_record {
    std::string id;
    sparse_boc boc;
};

inline std::vector<boc_record> load_boc_records(std::istream& in) {
    std::vector<boc_record> records;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw format_error("BOC line " + std::to_string(lineno) +
                               ": expected '<record_id><TAB><pairs>'");
        boc_record rec;
        rec.id = line.substr(0, tab);
        if (!seen.insert(rec.id).second)
            throw format_error("BOC line " + std::to_string(lineno) + ": duplicate record id '" +
                               rec.id + "'");
        std::vector<boc_entry> entries;
        for (const auto& pair : split_whitespace(line.substr(tab + 1))) {
            const std::size_t colon = pair.rfind(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == pair.size())
                throw format_error("BOC line " + std::to_string(lineno) + ": bad pair '" + pair +
                                   "'");
            double w;
            try {
                w = std::stod(pair.substr(colon + 1));
            } catch (const std::exception&) {
                throw format_error("BOC line " + std::to_string(lineno) + ": bad weight in '" +
                                   pair + "'");
            }
            entries.push_back({pair.substr(0, colon), w});
        }
        try {
            rec.boc = sparse_boc::from_entries(std::move(entries));
        } catch (const format_error& e) {
            throw format_error("BOC line " + std::to_string(lineno) + ": " + e.what());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<boc_record> load_boc_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw format_error("cannot open BOC file: " + path);
    return load_boc_records(in);
}

inline void save_boc_records(std::ostream& out, const std::vector<boc_record>& records) {
    char buf[64];
    for (const auto& rec : records) {
        out << rec.id << '\t';
        bool first = true;
        for (const auto& e : rec.boc.entries()) {
            std::snprintf(buf, sizeof buf, "%.12g", e.weight);
            out << (first ? "" : " ") << e.concept_id << ':' << buf;
            first = false;
        }
        out << '\n';
    }
}

inline void save_boc_file(const std::string& path, const std::vector<boc_record>& records) {
    std::ofstream out(path);
    if (!out) throw format_error("cannot write BOC file: " + path);
    save_boc_records(out, records);
}

}  // namespace conceptvec
