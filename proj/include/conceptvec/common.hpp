#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace conceptvec {

// Input that does not conform to a file format or CLI contract.
// The CLI maps this to exit code 2.
class format_error : public std::runtime_error {
public:
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Well-formed input that cannot be processed (empty vocabulary, nothing to
// train on, no embeddable concepts). The CLI maps this to exit code 1.
class domain_error : public std::runtime_error {
public:
    explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// RNG. All randomized code paths use mt19937_64 plus the explicit mappings
// below so that seeded runs are reproducible independent of the standard
// library's distribution implementations.
// ---------------------------------------------------------------------------

using rng_t = std::mt19937_64;

// Uniform double in [0, 1).
inline double uniform01(rng_t& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double uniform(rng_t& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n). Unbiased via rejection.
inline std::uint64_t uniform_index(rng_t& rng, std::uint64_t n) {
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// ---------------------------------------------------------------------------
// Tokenization: split on whitespace, strip surrounding punctuation, lowercase.
// Whitespace covers ASCII plus the common Unicode space code points; case
// folding and punctuation stripping are ASCII-only.
// ---------------------------------------------------------------------------

namespace detail {

// Decodes the UTF-8 code point starting at s[i]; advances i past it.
// Malformed bytes are consumed one at a time and returned as-is.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) { i += 1; return b0; }
    std::size_t len = (b0 >= 0xF0) ? 4 : (b0 >= 0xE0) ? 3 : (b0 >= 0xC0) ? 2 : 1;
    if (len == 1 || i + len > s.size()) { i += 1; return b0; }
    char32_t cp = b0 & (0x7F >> len);
    for (std::size_t k = 1; k < len; ++k) {
        unsigned char bk = byte(i + k);
        if ((bk & 0xC0) != 0x80) { i += 1; return b0; }
        cp = (cp << 6) | (bk & 0x3F);
    }
    i += len;
    return cp;
}

inline bool is_space_cp(char32_t cp) {
    switch (cp) {
        case U'\t': case U'\n': case U'\v': case U'\f': case U'\r': case U' ':
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

}  // namespace detail

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
    return out;
}

// Splits on whitespace (see above); does not otherwise transform the pieces.
inline std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0, start = 0;
    bool in_token = false;
    while (i < text.size()) {
        std::size_t at = i;
        char32_t cp = detail::decode_utf8(text, i);
        if (detail::is_space_cp(cp)) {
            if (in_token) {
                out.emplace_back(text.substr(start, at - start));
                in_token = false;
            }
        } else if (!in_token) {
            start = at;
            in_token = true;
        }
    }
    if (in_token) out.emplace_back(text.substr(start));
    return out;
}

// Normalizes one whitespace-delimited piece into a word token: strips
// surrounding ASCII punctuation and lowercases. Returns "" if nothing is left.
inline std::string normalize_word(std::string_view raw) {
    std::size_t b = 0, e = raw.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1]))) --e;
    return ascii_lower(raw.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Logging. Verbosity comes from CONCEPTVEC_LOG (quiet|warn|info|debug),
// default info. Output goes to stderr.
// ---------------------------------------------------------------------------

enum class log_level { quiet = 0, warn = 1, info = 2, debug = 3 };

inline log_level& current_log_level() {
    static log_level level = [] {
        const char* env = std::getenv("CONCEPTVEC_LOG");
        if (!env) return log_level::info;
        std::string v = ascii_lower(env);
        if (v == "quiet" || v == "0") return log_level::quiet;
        if (v == "warn" || v == "1") return log_level::warn;
        if (v == "debug" || v == "3") return log_level::debug;
        return log_level::info;
    }();
    return level;
}

inline void log_msg(log_level level, const std::string& msg) {
    if (static_cast<int>(level) > static_cast<int>(current_log_level())) return;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    const char* tag = level == log_level::warn ? "warn" : level == log_level::debug ? "debug" : "info";
    std::cerr << "[" << tag << "] " << msg << "\n";
}

inline void log_info(const std::string& msg) { log_msg(log_level::info, msg); }
inline void log_warn(const std::string& msg) { log_msg(log_level::warn, msg); }
inline void log_debug(const std::string& msg) { log_msg(log_level::debug, msg); }

}  // namespace conceptvec
