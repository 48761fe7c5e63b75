#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "conceptvec/boc.hpp"
#include "conceptvec/common.hpp"
#include "conceptvec/embedding.hpp"
#include "conceptvec/hungarian.hpp"

namespace conceptvec {

using dense_vector = std::vector<double>;

struct alignment_config {
    double tau = 0.85;  // pairwise concept similarities below tau count as 0

    void validate() const {
        if (!(tau >= 0.0 && tau <= 1.0)) throw format_error("tau must lie in [0, 1]");
    }
};

// ---------------------------------------------------------------------------
// Weighted-average densification: one embedding-row read per BOC entry, one
// normalization. Concepts without an embedding are skipped and the weights
// renormalized over the ones present.
// ---------------------------------------------------------------------------

template <typename Real>
dense_vector densify(const sparse_boc& boc, const basic_embedding_store<Real>& store,
                     std::size_t* skipped_out = nullptr) {
    if (boc.empty()) throw domain_error("empty BOC");
    std::vector<std::pair<double, std::int32_t>> present;  // (weight, row id)
    present.reserve(boc.size());
    // Weight normalization runs in extended precision: a common factor on all
    // weights cancels in the coefficients, so rescaled inputs densify to the
    // same vector.
    long double weight_sum = 0.0L;
    std::size_t skipped = 0;
    for (const auto& e : boc.entries()) {
        const std::int32_t id = store.row_of(token_kind::concept_mention, e.concept_id);
        if (id < 0) {
            ++skipped;
            continue;
        }
        present.emplace_back(e.weight, id);
        weight_sum += static_cast<long double>(e.weight);
    }
    if (skipped_out) *skipped_out = skipped;
    if (present.empty())
        throw domain_error("no embeddable concepts (skipped " + std::to_string(skipped) + ")");
    dense_vector acc(store.dim(), 0.0);
    for (const auto& [weight, id] : present) {
        const double coef = static_cast<double>(static_cast<long double>(weight) / weight_sum);
        const auto row = store.row(id);
        for (std::size_t d = 0; d < acc.size(); ++d)
            acc[d] += coef * static_cast<double>(row[d]);
    }
    return acc;
}

inline double dense_cosine(const dense_vector& a, const dense_vector& b) {
    if (a.size() != b.size()) throw format_error("dense vector dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        dot += a[d] * b[d];
        na += a[d] * a[d];
        nb += b[d] * b[d];
    }
    if (na == 0.0 || nb == 0.0) throw domain_error("cosine of zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

template <typename Real>
struct batch_densify_result {
    std::vector<std::optional<dense_vector>> vectors;            // index-aligned with input
    std::vector<std::pair<std::size_t, std::string>> errors;     // (record index, message)
    std::size_t skipped_concepts = 0;
};

// Batch form of densify: element-wise identical results, per-record errors
// collected instead of aborting the batch. Records are independent, so the
// batch may fan out over threads; the result is ordered by record index
// either way.
template <typename Real>
batch_densify_result<Real> matrix_densify(const std::vector<sparse_boc>& records,
                                          const basic_embedding_store<Real>& store,
                                          int workers = 1) {
    batch_densify_result<Real> result;
    result.vectors.resize(records.size());
    std::vector<std::optional<std::string>> failures(records.size());
    std::vector<std::size_t> skips(records.size(), 0);

    const auto run_range = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < records.size(); i += step) {
            try {
                result.vectors[i] = densify(records[i], store, &skips[i]);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    if (workers <= 1) {
        run_range(0, 1);
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < workers; ++w)
            threads.emplace_back(run_range, static_cast<std::size_t>(w),
                                 static_cast<std::size_t>(workers));
        for (auto& t : threads) t.join();
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (failures[i]) result.errors.emplace_back(i, *failures[i]);
        result.skipped_concepts += skips[i];
    }
    return result;
}

// ---------------------------------------------------------------------------
// Alignment-based similarity baselines. All three skip concepts without an
// embedding (error when a side has none left), compute pairwise cosines of
// concept embeddings, zero those below tau, and weight by the BOC weights.
// ---------------------------------------------------------------------------

namespace detail {

template <typename Real>
struct embedded_side {
    std::vector<double> weights;
    std::vector<std::span<const Real>> rows;
    std::vector<double> inv_norms;  // 0 for zero-norm rows
    double weight_norm = 0.0;       // L2 over the present weights
    double weight_sum = 0.0;
};

template <typename Real>
embedded_side<Real> embed_side(const sparse_boc& boc, const basic_embedding_store<Real>& store) {
    if (boc.empty()) throw domain_error("empty BOC");
    embedded_side<Real> side;
    std::size_t skipped = 0;
    double sq = 0.0;
    for (const auto& e : boc.entries()) {
        const std::int32_t id = store.row_of(token_kind::concept_mention, e.concept_id);
        if (id < 0) {
            ++skipped;
            continue;
        }
        const auto row = store.row(id);
        double nn = 0.0;
        for (const Real& x : row) nn += static_cast<double>(x) * static_cast<double>(x);
        side.weights.push_back(e.weight);
        side.rows.push_back(row);
        side.inv_norms.push_back(nn > 0.0 ? 1.0 / std::sqrt(nn) : 0.0);
        side.weight_sum += e.weight;
        sq += e.weight * e.weight;
    }
    if (side.weights.empty())
        throw domain_error("no embeddable concepts (skipped " + std::to_string(skipped) + ")");
    side.weight_norm = std::sqrt(sq);
    return side;
}

template <typename Real>
double pairwise_sim(const embedded_side<Real>& a, std::size_t i, const embedded_side<Real>& b,
                    std::size_t j, double tau) {
    double dot = 0.0;
    const auto& ra = a.rows[i];
    const auto& rb = b.rows[j];
    for (std::size_t d = 0; d < ra.size(); ++d)
        dot += static_cast<double>(ra[d]) * static_cast<double>(rb[d]);
    const double sim = dot * a.inv_norms[i] * b.inv_norms[j];
    return sim < tau ? 0.0 : sim;
}

}  // namespace detail

// Mean of all pairwise similarities, weighted by the weight products.
template <typename Real>
double sim_many_to_many(const sparse_boc& u, const sparse_boc& v,
                        const basic_embedding_store<Real>& store, const alignment_config& cfg) {
    cfg.validate();
    const auto a = detail::embed_side(u, store);
    const auto b = detail::embed_side(v, store);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.weights.size(); ++i)
        for (std::size_t j = 0; j < b.weights.size(); ++j)
            acc += a.weights[i] * b.weights[j] * detail::pairwise_sim(a, i, b, j, cfg.tau);
    return acc / (a.weight_sum * b.weight_sum);
}

// Each concept of u aligned with its best match in v (ties to the earliest
// entry of v under the canonical BOC order).
template <typename Real>
double sim_max_align(const sparse_boc& u, const sparse_boc& v,
                     const basic_embedding_store<Real>& store, const alignment_config& cfg) {
    cfg.validate();
    const auto a = detail::embed_side(u, store);
    const auto b = detail::embed_side(v, store);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
        double best = -1.0;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < b.weights.size(); ++j) {
            const double sim = detail::pairwise_sim(a, i, b, j, cfg.tau);
            if (sim > best) {
                best = sim;
                best_j = j;
            }
        }
        if (best > 0.0) acc += a.weights[i] * b.weights[best_j] * best;
    }
    return acc / (a.weight_norm * b.weight_norm);
}

// One-to-one alignment: the matching maximizes total pairwise similarity
// over the thresholded matrix; the matched pairs are then scored with the
// BOC weights.
template <typename Real>
double sim_hungarian(const sparse_boc& u, const sparse_boc& v,
                     const basic_embedding_store<Real>& store, const alignment_config& cfg) {
    cfg.validate();
    const auto a = detail::embed_side(u, store);
    const auto b = detail::embed_side(v, store);
    std::vector<std::vector<double>> sims(a.weights.size(), std::vector<double>(b.weights.size()));
    for (std::size_t i = 0; i < a.weights.size(); ++i)
        for (std::size_t j = 0; j < b.weights.size(); ++j)
            sims[i][j] = detail::pairwise_sim(a, i, b, j, cfg.tau);
    const auto matching = max_assignment(sims);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
        const std::int32_t j = matching.match_of_row[i];
        if (j >= 0) acc += a.weights[i] * b.weights[static_cast<std::size_t>(j)] *
                           sims[i][static_cast<std::size_t>(j)];
    }
    return acc / (a.weight_norm * b.weight_norm);
}

}  // namespace conceptvec
