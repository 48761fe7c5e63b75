#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "conceptvec/common.hpp"

namespace conceptvec {

struct assignment_result {
    // match_of_row[i] = matched column of row i, or -1 when row i is unmatched
    // (rectangular inputs leave the surplus side unmatched).
    std::vector<std::int32_t> match_of_row;
    double total = 0.0;  // sum of weight[i][match_of_row[i]] over matched rows
};

// Maximum-total-weight one-to-one assignment on a rectangular matrix
// (Kuhn-Munkres with potentials, O(n^3)). The smaller side is padded with
// zero-weight dummies internally; dummy matches are reported as -1 and do not
// enter the total.
inline assignment_result max_assignment(const std::vector<std::vector<double>>& weight) {
    const std::size_t rows = weight.size();
    const std::size_t cols = rows == 0 ? 0 : weight[0].size();
    for (const auto& r : weight)
        if (r.size() != cols) throw format_error("assignment matrix is ragged");
    assignment_result result;
    result.match_of_row.assign(rows, -1);
    if (rows == 0 || cols == 0) return result;

    const std::size_t n = std::max(rows, cols);
    const double inf = std::numeric_limits<double>::infinity();
    const auto cost = [&](std::size_t i, std::size_t j) {
        return i < rows && j < cols ? -weight[i][j] : 0.0;
    };

    // 1-based potentials; p[j] = row assigned to column j.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = p[j];
        if (i >= 1 && i <= rows && j <= cols)
            result.match_of_row[i - 1] = static_cast<std::int32_t>(j - 1);
    }
    // Total recomputed from the input in row order, independent of the
    // solver's internal arithmetic.
    for (std::size_t i = 0; i < rows; ++i)
        if (result.match_of_row[i] >= 0)
            result.total += weight[i][static_cast<std::size_t>(result.match_of_row[i])];
    return result;
}

}  // namespace conceptvec
