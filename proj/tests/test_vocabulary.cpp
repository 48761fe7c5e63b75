#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "conceptvec/vocabulary.hpp"
#include "support/generators.hpp"

using namespace conceptvec;

namespace {

token_stream words(std::initializer_list<const char*> ws) {
    token_stream s;
    for (const char* w : ws) s.push_back(token::word(w));
    return s;
}

vocabulary build_from(const token_stream& stream, vocab_options opts = {}) {
    vocab_builder b(opts);
    b.add(stream);
    return b.build();
}

}  // namespace

TEST_CASE("min_count prunes and ids stay dense") {
    vocab_options opts;
    opts.min_count_word = 2;
    const auto v = build_from(words({"a", "a", "a", "b"}), opts);
    REQUIRE(v.size() == 1);
    CHECK(v.at(0).key == "a");
    CHECK(v.at(0).count == 3);
    CHECK(v.id_of(token_kind::word, "b") == -1);
}

TEST_CASE("vocabulary with no survivors is an error") {
    vocab_options opts;
    opts.min_count_word = 10;
    vocab_builder b(opts);
    b.add(words({"a", "b", "a"}));
    CHECK_THROWS_AS(b.build(), domain_error);
}

TEST_CASE("noise distribution: symmetric counts split evenly") {
    vocab_options opts;
    opts.min_count_word = 1;
    const auto v = build_from(words({"a", "b", "a", "b"}), opts);
    const auto p = v.noise_distribution(0.75);
    REQUIRE(p.size() == 2);
    CHECK(p[0] == Catch::Approx(0.5).margin(1e-12));
    CHECK(p[1] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("noise distribution follows count^0.75") {
    token_stream s;
    for (int i = 0; i < 16; ++i) s.push_back(token::word("a"));
    s.push_back(token::word("b"));
    vocab_options opts;
    opts.min_count_word = 1;
    const auto v = build_from(s, opts);
    const auto p = v.noise_distribution(0.75);
    // 16^0.75 = 8, so the split is 8/9 vs 1/9
    const std::int32_t a = v.id_of(token_kind::word, "a");
    const std::int32_t b = v.id_of(token_kind::word, "b");
    CHECK(p[static_cast<std::size_t>(a)] == Catch::Approx(8.0 / 9.0).epsilon(1e-12));
    CHECK(p[static_cast<std::size_t>(b)] == Catch::Approx(1.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("noise distribution invariants hold on random streams") {
    rng_t rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        token_stream s;
        const std::size_t n = 20 + uniform_index(rng, 300);
        for (std::size_t i = 0; i < n; ++i) s.push_back(testgen::random_token(rng));
        vocab_options opts;
        opts.min_count_word = 1;
        const auto v = build_from(s, opts);
        const auto p = v.noise_distribution();
        double sum = 0.0;
        for (double x : p) {
            CHECK(x > 0.0);
            sum += x;
        }
        CHECK(sum == Catch::Approx(1.0).margin(1e-9));
        // monotone in raw count
        for (std::size_t i = 0; i + 1 < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j)
                if (v.at(static_cast<std::int32_t>(i)).count >
                    v.at(static_cast<std::int32_t>(j)).count)
                    CHECK(p[i] > p[j]);
    }
}

TEST_CASE("re-indexing orders by count, then key, then kind") {
    token_stream s = words({"bb", "bb", "aa", "aa", "zz", "zz", "zz", "cc"});
    s.push_back(token::mention("aa"));  // concept sharing a word's key
    s.push_back(token::mention("aa"));
    vocab_options opts;
    opts.min_count_word = 1;
    const auto v = build_from(s, opts);
    REQUIRE(v.size() == 5);
    CHECK(v.at(0).key == "zz");  // count 3
    CHECK(v.at(1).key == "aa");  // count 2, word before concept
    CHECK(v.at(1).kind == token_kind::word);
    CHECK(v.at(2).key == "aa");
    CHECK(v.at(2).kind == token_kind::concept_mention);
    CHECK(v.at(3).key == "bb");
    CHECK(v.at(4).key == "cc");  // count 1
}

TEST_CASE("lookups by key and id are inverse bijections") {
    rng_t rng(9);
    token_stream s;
    for (int i = 0; i < 500; ++i) s.push_back(testgen::random_token(rng));
    vocab_options opts;
    opts.min_count_word = 1;
    const auto v = build_from(s, opts);
    for (std::size_t id = 0; id < v.size(); ++id) {
        const auto& e = v.at(static_cast<std::int32_t>(id));
        CHECK(v.id_of(e.kind, e.key) == static_cast<std::int32_t>(id));
    }
}

TEST_CASE("concepts_only filter drops words") {
    vocab_options opts;
    opts.filter = vocab_filter::concepts_only;
    vocab_builder b(opts);
    b.add({token::word("w"), token::mention("C1"), token::word("w")});
    const auto v = b.build();
    REQUIRE(v.size() == 1);
    CHECK(v.at(0).kind == token_kind::concept_mention);
}

TEST_CASE("tsv round-trips and prefixes concept keys") {
    token_stream s = words({"apple", "apple", "apple", "apple", "apple", "pear", "pear",
                            "pear", "pear", "pear"});
    for (int i = 0; i < 7; ++i) s.push_back(token::mention("42"));
    const auto v = build_from(s);
    std::ostringstream out;
    v.save_tsv(out);
    CHECK(out.str().find("concept\tc:42\t7") != std::string::npos);

    std::istringstream in(out.str());
    const auto loaded = vocabulary::load_tsv(in);
    REQUIRE(loaded.size() == v.size());
    for (std::size_t id = 0; id < v.size(); ++id) {
        const auto& a = v.at(static_cast<std::int32_t>(id));
        const auto& b = loaded.at(static_cast<std::int32_t>(id));
        CHECK(a.kind == b.kind);
        CHECK(a.key == b.key);
        CHECK(a.count == b.count);
    }
}

TEST_CASE("tsv loader rejects malformed rows") {
    {
        std::istringstream in("0\tword\ta\n");  // missing count column
        CHECK_THROWS_AS(vocabulary::load_tsv(in), format_error);
    }
    {
        std::istringstream in("1\tword\ta\t3\n");  // ids must start at 0
        CHECK_THROWS_AS(vocabulary::load_tsv(in), format_error);
    }
    {
        std::istringstream in("0\tconcept\tnoprefix\t3\n");
        CHECK_THROWS_AS(vocabulary::load_tsv(in), format_error);
    }
    {
        std::istringstream in("0\tverb\ta\t3\n");
        CHECK_THROWS_AS(vocabulary::load_tsv(in), format_error);
    }
}

TEST_CASE("builds are deterministic across merge order") {
    rng_t rng(77);
    std::vector<token_stream> streams;
    for (int i = 0; i < 10; ++i) {
        token_stream s;
        for (int k = 0; k < 100; ++k) s.push_back(testgen::random_token(rng));
        streams.push_back(std::move(s));
    }
    vocab_options opts;
    opts.min_count_word = 2;
    vocab_builder forward(opts), backward(opts);
    for (const auto& s : streams) forward.add(s);
    for (auto it = streams.rbegin(); it != streams.rend(); ++it) backward.add(*it);
    const auto a = forward.build();
    const auto b = backward.build();
    REQUIRE(a.size() == b.size());
    for (std::size_t id = 0; id < a.size(); ++id) {
        CHECK(a.at(static_cast<std::int32_t>(id)).key == b.at(static_cast<std::int32_t>(id)).key);
        CHECK(a.at(static_cast<std::int32_t>(id)).count ==
              b.at(static_cast<std::int32_t>(id)).count);
    }
}
