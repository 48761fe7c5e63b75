#pragma once

#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "conceptvec/common.hpp"

namespace conceptvec {

enum class token_kind { word, concept_mention };

// One corpus token: either a normalized word or a concept mention reduced to
// its canonical concept id. Mention surface text is not retained.
struct token {
    token_kind kind;
    std::string text;  // word surface or concept id, per kind

    static token word(std::string w) { return {token_kind::word, std::move(w)}; }
    static token mention(std::string id) { return {token_kind::concept_mention, std::move(id)}; }

    bool is_concept() const { return kind == token_kind::concept_mention; }
    bool operator==(const token&) const = default;
};

using token_stream = std::vector<token>;

struct annotated_document {
    std::string doc_id;
    std::vector<token> tokens;
};

// ---------------------------------------------------------------------------
// Redirects: alias concept id -> canonical id. Chains are collapsed when the
// map is built, so resolution is a single lookup. A cycle has no canonical
// member; we break it deterministically at the lexicographically smallest id.
// ---------------------------------------------------------------------------

class redirect_map {
public:
    redirect_map() = default;

    explicit redirect_map(std::unordered_map<std::string, std::string> raw) {
        for (const auto& [alias, target] : raw) {
            if (mapping_.count(alias)) continue;
            resolve_chain(alias, raw);
        }
        // Drop identity entries so canonical ids are simply absent.
        for (auto it = mapping_.begin(); it != mapping_.end();) {
            if (it->first == it->second)
                it = mapping_.erase(it);
            else
                ++it;
        }
    }

    const std::string& resolve(const std::string& id) const {
        auto it = mapping_.find(id);
        return it == mapping_.end() ? id : it->second;
    }

    std::size_t size() const { return mapping_.size(); }

    // TSV, two columns: alias <TAB> canonical.
    static redirect_map load_tsv(std::istream& in) {
        std::unordered_map<std::string, std::string> raw;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto cols = split(line, '\t');
            if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
                throw format_error("redirects line " + std::to_string(lineno) +
                                   ": expected 'alias<TAB>canonical'");
            auto [it, inserted] = raw.emplace(cols[0], cols[1]);
            if (!inserted && it->second != cols[1])
                throw format_error("redirects line " + std::to_string(lineno) +
                                   ": conflicting targets for alias '" + cols[0] + "'");
        }
        return redirect_map(std::move(raw));
    }

    static redirect_map load_tsv_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw format_error("cannot open redirect file: " + path);
        return load_tsv(in);
    }

private:
    // Walks alias -> ... -> canonical, memoizing every node on the way.
    void resolve_chain(const std::string& start,
                       const std::unordered_map<std::string, std::string>& raw) {
        std::vector<std::string> path;
        std::unordered_set<std::string> on_path;
        std::string cur = start;
        std::string terminal;
        while (true) {
            auto memo = mapping_.find(cur);
            if (memo != mapping_.end()) {
                terminal = memo->second;
                break;
            }
            auto next = raw.find(cur);
            if (next == raw.end()) {
                terminal = cur;  // canonical
                break;
            }
            if (on_path.count(cur)) {
                // Cycle: everyone in it maps to its smallest member.
                terminal = cur;
                for (std::size_t k = path.size(); k-- > 0 && path[k] != cur;)
                    if (path[k] < terminal) terminal = path[k];
                break;
            }
            path.push_back(cur);
            on_path.insert(cur);
            cur = next->second;
        }
        for (const auto& node : path) mapping_[node] = terminal;
    }

    std::unordered_map<std::string, std::string> mapping_;
};

// ---------------------------------------------------------------------------
// Corpus format: UTF-8 text, one document per line group separated by a blank
// line. The first line of a group is `#doc <doc_id>`; concept mentions appear
// inline as `[[<concept_id>|<surface text>]]`. A literal `[` is escaped as
// `\[` (so literal `[[` is `\[\[`). Mentions must close on the line they open.
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_doc_header(std::string_view line) {
    return line.size() >= 5 && line.substr(0, 5) == "#doc ";
}

// Tokenizes a body line into `out`, resolving mentions through `redirects`.
inline void parse_body_line(std::string_view line, std::size_t lineno,
                            const redirect_map& redirects, std::vector<token>& out) {
    std::string plain;  // unescaped text between mentions, pending tokenization
    const auto flush_plain = [&] {
        for (const auto& piece : split_whitespace(plain)) {
            std::string w = normalize_word(piece);
            if (!w.empty()) out.push_back(token::word(std::move(w)));
        }
        plain.clear();
    };

    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == '\\' && i + 1 < line.size() && line[i + 1] == '[') {
            plain += '[';
            i += 2;
            continue;
        }
        if (line[i] == '[' && i + 1 < line.size() && line[i + 1] == '[') {
            std::size_t close = line.find("]]", i + 2);
            if (close == std::string_view::npos)
                throw format_error("line " + std::to_string(lineno) +
                                   ": unterminated concept mention '[['");
            std::string_view inner = line.substr(i + 2, close - (i + 2));
            std::size_t bar = inner.find('|');
            std::string_view id = bar == std::string_view::npos ? inner : inner.substr(0, bar);
            if (id.empty())
                throw format_error("line " + std::to_string(lineno) +
                                   ": concept mention with empty id");
            for (char c : id)
                if (static_cast<unsigned char>(c) <= ' ')
                    throw format_error("line " + std::to_string(lineno) +
                                       ": whitespace in concept id '" + std::string(id) + "'");
            flush_plain();
            out.push_back(token::mention(redirects.resolve(std::string(id))));
            i = close + 2;
            continue;
        }
        plain += line[i];
        ++i;
    }
    flush_plain();
}

}  // namespace detail

// Streaming parser. next() yields documents in file order; empty documents are
// skipped and counted. Malformed input throws format_error with line numbers.
class corpus_reader {
public:
    corpus_reader(std::istream& in, const redirect_map& redirects)
        : in_(in), redirects_(redirects) {}
    // the map is held by reference and must outlive the reader
    corpus_reader(std::istream&, redirect_map&&) = delete;

    std::optional<annotated_document> next() {
        std::string line;
        while (true) {
            annotated_document doc;
            // Find the next header, tolerating runs of blank lines.
            while (true) {
                if (!std::getline(in_, line)) return std::nullopt;
                ++lineno_;
                strip_cr(line);
                if (line.empty()) continue;
                if (!detail::is_doc_header(line))
                    throw format_error("line " + std::to_string(lineno_) +
                                       ": expected '#doc <id>' header, got: " + line);
                doc.doc_id = line.substr(5);
                if (doc.doc_id.empty())
                    throw format_error("line " + std::to_string(lineno_) + ": empty doc id");
                break;
            }
            // Body runs until a blank line or EOF.
            while (std::getline(in_, line)) {
                ++lineno_;
                strip_cr(line);
                if (line.empty()) break;
                if (detail::is_doc_header(line))
                    throw format_error("line " + std::to_string(lineno_) +
                                       ": '#doc' inside a document (missing blank separator?)");
                detail::parse_body_line(line, lineno_, redirects_, doc.tokens);
            }
            if (doc.tokens.empty()) {
                ++skipped_empty_;
                continue;
            }
            return doc;
        }
    }

    std::size_t skipped_empty() const { return skipped_empty_; }

private:
    static void strip_cr(std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    }

    std::istream& in_;
    const redirect_map& redirects_;
    std::size_t lineno_ = 0;
    std::size_t skipped_empty_ = 0;
};

// Parses a whole corpus file, invoking fn per document. Returns the number of
// empty documents skipped.
inline std::size_t for_each_document(const std::string& path, const redirect_map& redirects,
                                     const std::function<void(annotated_document&&)>& fn) {
    std::ifstream in(path);
    if (!in) throw format_error("cannot open corpus file: " + path);
    corpus_reader reader(in, redirects);
    while (auto doc = reader.next()) fn(std::move(*doc));
    return reader.skipped_empty();
}

// Inverse of parsing: one `#doc` header plus a single body line. `[` in word
// tokens is re-escaped, so write -> parse reproduces the token sequence.
inline void write_document(std::ostream& out, const annotated_document& doc) {
    out << "#doc " << doc.doc_id << "\n";
    bool first = true;
    for (const auto& t : doc.tokens) {
        if (!first) out << ' ';
        first = false;
        if (t.is_concept()) {
            out << "[[" << t.text << "|" << t.text << "]]";
        } else {
            for (char c : t.text) {
                if (c == '[') out << '\\';
                out << c;
            }
        }
    }
    out << "\n\n";
}

// ---------------------------------------------------------------------------
// Token streams for the two training regimes: the mixed word+concept stream,
// and the concept-only stream.
// ---------------------------------------------------------------------------

inline token_stream crc_stream(const annotated_document& doc) { return doc.tokens; }

inline token_stream threec_stream(const annotated_document& doc) {
    token_stream out;
    for (const auto& t : doc.tokens)
        if (t.is_concept()) out.push_back(t);
    return out;
}

}  // namespace conceptvec
