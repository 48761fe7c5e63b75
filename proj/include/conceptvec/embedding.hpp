#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "conceptvec/common.hpp"
#include "conceptvec/vocabulary.hpp"

namespace conceptvec {

enum class embedding_format { text, binary };

namespace detail {

constexpr char kBinaryMagic[5] = {'C', 'V', 'E', 'C', '1'};

inline void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, 8);
}

inline std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, 4);
}

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace detail

// On-disk embedding table: serialized keys plus a row-major float matrix.
// Text: header `V dim`, then `key v1 .. vdim` per row, 6 significant digits.
// Binary: magic CVEC1, u64 V, u64 dim, length-prefixed UTF-8 keys, then
// V*dim little-endian 32-bit floats.
struct embedding_file {
    std::vector<std::string> keys;
    std::size_t dim = 0;
    std::vector<float> data;  // keys.size() * dim

    void save(const std::string& path, embedding_format format) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw format_error("cannot write embedding file: " + path);
        if (format == embedding_format::binary) {
            out.write(detail::kBinaryMagic, 5);
            detail::write_u64(out, keys.size());
            detail::write_u64(out, dim);
            for (const auto& key : keys) {
                detail::write_u32(out, static_cast<std::uint32_t>(key.size()));
                out.write(key.data(), static_cast<std::streamsize>(key.size()));
            }
            out.write(reinterpret_cast<const char*>(data.data()),
                      static_cast<std::streamsize>(data.size() * sizeof(float)));
        } else {
            out << keys.size() << ' ' << dim << '\n';
            char buf[64];
            for (std::size_t r = 0; r < keys.size(); ++r) {
                out << keys[r];
                for (std::size_t d = 0; d < dim; ++d) {
                    std::snprintf(buf, sizeof buf, " %.6g", static_cast<double>(data[r * dim + d]));
                    out << buf;
                }
                out << '\n';
            }
        }
        if (!out) throw format_error("write failed: " + path);
    }

    static embedding_file load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw format_error("cannot open embedding file: " + path);
        char magic[5] = {};
        in.read(magic, 5);
        if (in.gcount() == 5 && std::memcmp(magic, detail::kBinaryMagic, 5) == 0)
            return load_binary(in, path);
        in.clear();
        in.seekg(0);
        return load_text(in, path);
    }

private:
    static embedding_file load_binary(std::istream& in, const std::string& path) {
        embedding_file f;
        std::uint64_t rows = detail::read_u64(in);
        f.dim = static_cast<std::size_t>(detail::read_u64(in));
        if (!in) throw format_error("truncated embedding header: " + path);
        f.keys.reserve(rows);
        for (std::uint64_t r = 0; r < rows; ++r) {
            std::uint32_t len = detail::read_u32(in);
            std::string key(len, '\0');
            in.read(key.data(), len);
            if (!in) throw format_error("truncated key table: " + path);
            f.keys.push_back(std::move(key));
        }
        f.data.resize(static_cast<std::size_t>(rows) * f.dim);
        in.read(reinterpret_cast<char*>(f.data.data()),
                static_cast<std::streamsize>(f.data.size() * sizeof(float)));
        if (static_cast<std::size_t>(in.gcount()) != f.data.size() * sizeof(float))
            throw format_error("truncated embedding matrix: " + path);
        return f;
    }

    static embedding_file load_text(std::istream& in, const std::string& path) {
        embedding_file f;
        std::string line;
        if (!std::getline(in, line)) throw format_error("empty embedding file: " + path);
        std::size_t rows = 0;
        {
            auto head = split_whitespace(line);
            if (head.size() != 2) throw format_error("bad embedding header: " + path);
            rows = std::stoull(head[0]);
            f.dim = std::stoull(head[1]);
        }
        f.keys.reserve(rows);
        f.data.reserve(rows * f.dim);
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto parts = split_whitespace(line);
            if (parts.size() != f.dim + 1)
                throw format_error(path + " line " + std::to_string(lineno) +
                                   ": expected key + " + std::to_string(f.dim) + " values");
            f.keys.push_back(parts[0]);
            for (std::size_t d = 1; d < parts.size(); ++d) f.data.push_back(std::stof(parts[d]));
        }
        if (f.keys.size() != rows)
            throw format_error(path + ": header says " + std::to_string(rows) + " rows, found " +
                               std::to_string(f.keys.size()));
        return f;
    }
};

// Input/output parameter matrices over a token id space. The input rows are
// the published vectors. Templated on the scalar so tests can run the same
// code paths in double precision; the shipped stores use float.
template <typename Real>
class basic_embedding_store {
public:
    basic_embedding_store() = default;

    // Fresh store for training: input rows uniform in [-0.5/dim, 0.5/dim],
    // output rows zero.
    static basic_embedding_store random_init(const vocabulary& vocab, std::size_t dim,
                                             std::uint64_t seed) {
        basic_embedding_store s;
        s.dim_ = dim;
        s.keys_.reserve(vocab.size());
        for (const auto& e : vocab.entries()) s.push_key(e.kind, e.key);
        s.input_.resize(vocab.size() * dim);
        s.output_.assign(vocab.size() * dim, Real(0));
        rng_t rng(seed);
        const double half = 0.5 / static_cast<double>(dim);
        for (auto& x : s.input_) x = static_cast<Real>(uniform(rng, -half, half));
        return s;
    }

    std::size_t size() const { return keys_.size(); }
    std::size_t dim() const { return dim_; }

    std::int32_t row_of(token_kind kind, const std::string& key) const {
        const auto& m = kind == token_kind::word ? words_ : concepts_;
        auto it = m.find(key);
        return it == m.end() ? -1 : it->second;
    }

    token_kind kind_of(std::int32_t id) const { return keys_[static_cast<std::size_t>(id)].first; }
    const std::string& key_of(std::int32_t id) const {
        return keys_[static_cast<std::size_t>(id)].second;
    }

    // Published vector of a row. Metered: every call counts one row read.
    std::span<const Real> row(std::int32_t id) const {
        std::atomic_ref<std::uint64_t>(row_reads_).fetch_add(1, std::memory_order_relaxed);
        return {input_.data() + static_cast<std::size_t>(id) * dim_, dim_};
    }

    std::uint64_t row_reads() const {
        return std::atomic_ref<std::uint64_t>(row_reads_).load(std::memory_order_relaxed);
    }
    void reset_row_reads() const {
        std::atomic_ref<std::uint64_t>(row_reads_).store(0, std::memory_order_relaxed);
    }

    // Unmetered raw access for the training loop.
    Real* input_row(std::int32_t id) { return input_.data() + static_cast<std::size_t>(id) * dim_; }
    Real* output_row(std::int32_t id) { return output_.data() + static_cast<std::size_t>(id) * dim_; }
    const Real* input_row(std::int32_t id) const {
        return input_.data() + static_cast<std::size_t>(id) * dim_;
    }
    const Real* output_row(std::int32_t id) const {
        return output_.data() + static_cast<std::size_t>(id) * dim_;
    }

    std::vector<Real>& input() { return input_; }
    std::vector<Real>& output() { return output_; }
    const std::vector<Real>& input() const { return input_; }
    const std::vector<Real>& output() const { return output_; }

    bool all_finite() const {
        for (const Real& x : input_)
            if (!std::isfinite(x)) return false;
        for (const Real& x : output_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    void save(const std::string& path, embedding_format format) const {
        embedding_file f;
        f.dim = dim_;
        f.keys.reserve(keys_.size());
        for (const auto& [kind, key] : keys_) f.keys.push_back(serialized_key(kind, key));
        f.data.reserve(input_.size());
        for (const Real& x : input_) f.data.push_back(static_cast<float>(x));
        f.save(path, format);
    }

    // Rebuilds a store from a saved file. Only the published (input) matrix is
    // on disk; the output matrix comes back zeroed.
    static basic_embedding_store load(const std::string& path) {
        embedding_file f = embedding_file::load(path);
        basic_embedding_store s;
        s.dim_ = f.dim;
        for (const auto& k : f.keys) {
            auto [kind, key] = parse_serialized_key(k);
            s.push_key(kind, key);
        }
        s.input_.reserve(f.data.size());
        for (float x : f.data) s.input_.push_back(static_cast<Real>(x));
        s.output_.assign(f.data.size(), Real(0));
        return s;
    }

private:
    void push_key(token_kind kind, const std::string& key) {
        auto& m = kind == token_kind::word ? words_ : concepts_;
        auto [it, inserted] = m.emplace(key, static_cast<std::int32_t>(keys_.size()));
        if (!inserted) throw format_error("duplicate embedding key: " + serialized_key(kind, key));
        keys_.emplace_back(kind, key);
    }

    std::size_t dim_ = 0;
    std::vector<std::pair<token_kind, std::string>> keys_;
    std::unordered_map<std::string, std::int32_t> words_;
    std::unordered_map<std::string, std::int32_t> concepts_;
    std::vector<Real> input_;
    std::vector<Real> output_;
    mutable std::uint64_t row_reads_ = 0;
};

using embedding_store = basic_embedding_store<float>;

}  // namespace conceptvec
