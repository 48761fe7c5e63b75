#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "conceptvec/common.hpp"
#include "conceptvec/corpus.hpp"

namespace conceptvec {

enum class vocab_filter { all, concepts_only };

struct vocab_entry {
    token_kind kind;
    std::string key;
    std::uint64_t count;
};

// Serialized key form: concepts carry a "c:" prefix, words are written raw.
// Used by the vocabulary TSV and the embedding file formats.
inline std::string serialized_key(token_kind kind, const std::string& key) {
    return kind == token_kind::concept_mention ? "c:" + key : key;
}

inline std::pair<token_kind, std::string> parse_serialized_key(const std::string& s) {
    if (s.size() >= 2 && s[0] == 'c' && s[1] == ':')
        return {token_kind::concept_mention, s.substr(2)};
    return {token_kind::word, s};
}

// Dense id-indexed lexicon over words and concepts. Ids are contiguous from 0,
// assigned by descending count, ties by key then kind (word first).
class vocabulary {
public:
    vocabulary() = default;

    std::size_t size() const { return entries_.size(); }
    const vocab_entry& at(std::int32_t id) const { return entries_.at(static_cast<std::size_t>(id)); }
    const std::vector<vocab_entry>& entries() const { return entries_; }

    // -1 when absent.
    std::int32_t id_of(token_kind kind, const std::string& key) const {
        const auto& m = kind == token_kind::word ? words_ : concepts_;
        auto it = m.find(key);
        return it == m.end() ? -1 : it->second;
    }

    std::int32_t id_of(const token& t) const { return id_of(t.kind, t.text); }

    std::uint64_t total_count() const { return total_count_; }

    // Unigram distribution raised to `exponent` and normalized. All retained
    // entries get strictly positive probability.
    std::vector<double> noise_distribution(double exponent = 0.75) const {
        std::vector<double> probs(entries_.size());
        double z = 0.0;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            probs[i] = std::pow(static_cast<double>(entries_[i].count), exponent);
            z += probs[i];
        }
        for (double& p : probs) p /= z;
        return probs;
    }

    void save_tsv(std::ostream& out) const {
        for (std::size_t id = 0; id < entries_.size(); ++id) {
            const auto& e = entries_[id];
            out << id << '\t' << (e.kind == token_kind::word ? "word" : "concept") << '\t'
                << serialized_key(e.kind, e.key) << '\t' << e.count << '\n';
        }
    }

    void save_tsv_file(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw format_error("cannot write vocabulary file: " + path);
        save_tsv(out);
    }

    static vocabulary load_tsv(std::istream& in) {
        vocabulary v;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto cols = split(line, '\t');
            if (cols.size() != 4)
                throw format_error("vocabulary line " + std::to_string(lineno) +
                                   ": expected 4 tab-separated columns");
            if (std::stoll(cols[0]) != static_cast<long long>(v.entries_.size()))
                throw format_error("vocabulary line " + std::to_string(lineno) +
                                   ": ids must be dense and sorted");
            token_kind kind;
            if (cols[1] == "word")
                kind = token_kind::word;
            else if (cols[1] == "concept")
                kind = token_kind::concept_mention;
            else
                throw format_error("vocabulary line " + std::to_string(lineno) +
                                   ": unknown kind '" + cols[1] + "'");
            auto [parsed_kind, key] = parse_serialized_key(cols[2]);
            if (kind == token_kind::concept_mention && parsed_kind != token_kind::concept_mention)
                throw format_error("vocabulary line " + std::to_string(lineno) +
                                   ": concept key must carry the 'c:' prefix");
            if (kind == token_kind::word) key = cols[2];
            std::uint64_t count = std::stoull(cols[3]);
            v.append(kind, key, count);
        }
        if (v.entries_.empty()) throw domain_error("empty vocabulary");
        return v;
    }

    static vocabulary load_tsv_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw format_error("cannot open vocabulary file: " + path);
        return load_tsv(in);
    }

private:
    friend class vocab_builder;

    void append(token_kind kind, std::string key, std::uint64_t count) {
        auto& m = kind == token_kind::word ? words_ : concepts_;
        auto [it, inserted] = m.emplace(key, static_cast<std::int32_t>(entries_.size()));
        if (!inserted) throw format_error("duplicate vocabulary key: " + key);
        entries_.push_back({kind, std::move(key), count});
        total_count_ += count;
    }

    std::vector<vocab_entry> entries_;
    std::unordered_map<std::string, std::int32_t> words_;
    std::unordered_map<std::string, std::int32_t> concepts_;
    std::uint64_t total_count_ = 0;
};

struct vocab_options {
    std::uint64_t min_count_word = 5;
    std::uint64_t min_count_concept = 1;
    vocab_filter filter = vocab_filter::all;
};

// Accumulates counts from any number of token streams, then produces the
// pruned, deterministically re-indexed vocabulary.
class vocab_builder {
public:
    explicit vocab_builder(vocab_options opts = {}) : opts_(opts) {}

    void add(const token_stream& stream) {
        for (const auto& t : stream) {
            if (opts_.filter == vocab_filter::concepts_only && !t.is_concept()) continue;
            auto& m = t.is_concept() ? concept_counts_ : word_counts_;
            ++m[t.text];
        }
    }

    vocabulary build() const {
        std::vector<vocab_entry> kept;
        for (const auto& [key, count] : word_counts_)
            if (count >= opts_.min_count_word) kept.push_back({token_kind::word, key, count});
        for (const auto& [key, count] : concept_counts_)
            if (count >= opts_.min_count_concept) kept.push_back({token_kind::concept_mention, key, count});
        if (kept.empty()) throw domain_error("empty vocabulary");

        std::sort(kept.begin(), kept.end(), [](const vocab_entry& a, const vocab_entry& b) {
            if (a.count != b.count) return a.count > b.count;
            if (a.key != b.key) return a.key < b.key;
            return a.kind < b.kind;  // word before concept
        });

        vocabulary v;
        for (auto& e : kept) v.append(e.kind, std::move(e.key), e.count);
        return v;
    }

private:
    vocab_options opts_;
    std::unordered_map<std::string, std::uint64_t> word_counts_;
    std::unordered_map<std::string, std::uint64_t> concept_counts_;
};

}  // namespace conceptvec
