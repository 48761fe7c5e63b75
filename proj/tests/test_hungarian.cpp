#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "conceptvec/hungarian.hpp"
#include "support/generators.hpp"

using namespace conceptvec;

namespace {

// Exhaustive assignment optimum: pads to square and tries every permutation.
double brute_force_total(const std::vector<std::vector<double>>& weight) {
    const std::size_t rows = weight.size();
    const std::size_t cols = rows == 0 ? 0 : weight[0].size();
    const std::size_t n = std::max(rows, cols);
    if (n == 0) return 0.0;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1.0;
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < rows; ++i)
            if (perm[i] < cols) total += weight[i][perm[i]];
        if (total > best) best = total;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::vector<std::vector<double>> random_matrix(rng_t& rng, std::size_t rows, std::size_t cols,
                                               bool dyadic) {
    std::vector<std::vector<double>> m(rows, std::vector<double>(cols));
    for (auto& row : m)
        for (auto& x : row)
            x = dyadic ? static_cast<double>(uniform_index(rng, 1025)) / 1024.0 : uniform01(rng);
    return m;
}

}  // namespace

TEST_CASE("two-by-two picks the diagonal") {
    const std::vector<std::vector<double>> sims = {{0.9, 0.2}, {0.3, 0.8}};
    const auto result = max_assignment(sims);
    CHECK(result.match_of_row == std::vector<std::int32_t>{0, 1});
    CHECK(result.total == Catch::Approx(1.7).epsilon(1e-15));
}

TEST_CASE("degenerate shapes") {
    CHECK(max_assignment({}).total == 0.0);
    const auto one = max_assignment({{0.4}});
    CHECK(one.match_of_row == std::vector<std::int32_t>{0});
    CHECK(one.total == 0.4);
}

TEST_CASE("ragged input is rejected") {
    CHECK_THROWS_AS(max_assignment({{1.0, 2.0}, {3.0}}), format_error);
}

TEST_CASE("matching total equals the exhaustive optimum on grid values") {
    rng_t rng(7);
    for (std::size_t n = 1; n <= 6; ++n) {
        for (int trial = 0; trial < 40; ++trial) {
            const auto m = random_matrix(rng, n, n, true);
            CHECK(max_assignment(m).total == brute_force_total(m));
        }
    }
}

TEST_CASE("matching total equals the exhaustive optimum on continuous values") {
    rng_t rng(11);
    for (std::size_t n = 1; n <= 6; ++n) {
        for (int trial = 0; trial < 40; ++trial) {
            const auto m = random_matrix(rng, n, n, false);
            CHECK(max_assignment(m).total == Catch::Approx(brute_force_total(m)).margin(1e-12));
        }
    }
}

TEST_CASE("rectangular matrices leave the surplus side unmatched") {
    rng_t rng(13);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t rows = 1 + uniform_index(rng, 5);
        const std::size_t cols = 1 + uniform_index(rng, 5);
        const auto m = random_matrix(rng, rows, cols, true);
        const auto result = max_assignment(m);
        CHECK(result.total == brute_force_total(m));

        std::set<std::int32_t> used;
        std::size_t matched = 0;
        for (std::int32_t j : result.match_of_row) {
            if (j < 0) continue;
            ++matched;
            CHECK(j < static_cast<std::int32_t>(cols));
            CHECK(used.insert(j).second);  // one-to-one
        }
        CHECK(matched <= std::min(rows, cols));
    }
}

TEST_CASE("zero matrices are worth zero") {
    const std::vector<std::vector<double>> m(3, std::vector<double>(5, 0.0));
    CHECK(max_assignment(m).total == 0.0);
}
