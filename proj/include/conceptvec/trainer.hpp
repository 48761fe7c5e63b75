#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "conceptvec/common.hpp"
#include "conceptvec/corpus.hpp"
#include "conceptvec/embedding.hpp"
#include "conceptvec/vocabulary.hpp"

namespace conceptvec {

enum class model_kind { crc, threec };

inline const char* model_name(model_kind m) { return m == model_kind::crc ? "crc" : "3c"; }

struct train_config {
    std::size_t dim = 500;
    int window = 9;
    int negatives = 5;
    int epochs = 10;
    double initial_lr = 0.025;
    double min_lr = 1e-4;
    std::uint64_t seed = 1;
    int workers = 1;
    model_kind model = model_kind::crc;
    // Frequent-token subsampling threshold; 0 disables (the default).
    double subsample = 0.0;

    void validate() const {
        if (dim < 1) throw format_error("dim must be >= 1");
        if (window < 1) throw format_error("window must be >= 1");
        if (negatives < 1) throw format_error("negatives must be >= 1");
        if (epochs < 1) throw format_error("epochs must be >= 1");
        if (!(min_lr > 0.0) || min_lr > initial_lr)
            throw format_error("learning rates must satisfy 0 < min_lr <= initial_lr");
        if (workers < 1) throw format_error("workers must be >= 1");
        if (subsample < 0.0) throw format_error("subsample must be >= 0");
    }
};

struct context_pair {
    std::int32_t target;
    std::int32_t context;
    bool operator==(const context_pair&) const = default;
};

// ---------------------------------------------------------------------------
// Context windows. Streams are filtered to vocabulary members first, so
// out-of-vocabulary tokens do not occupy window slots.
// ---------------------------------------------------------------------------

inline std::vector<std::int32_t> to_id_stream(const token_stream& stream, const vocabulary& vocab) {
    std::vector<std::int32_t> ids;
    ids.reserve(stream.size());
    for (const auto& t : stream) {
        std::int32_t id = vocab.id_of(t);
        if (id >= 0) ids.push_back(id);
    }
    return ids;
}

template <typename Fn>
inline void for_each_context(std::span<const std::int32_t> ids, int window, Fn&& fn) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(ids.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + window);
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
            if (j == i) continue;
            fn(context_pair{ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]});
        }
    }
}

inline std::vector<context_pair> generate_contexts(const token_stream& stream,
                                                   const vocabulary& vocab, int window) {
    std::vector<context_pair> pairs;
    auto ids = to_id_stream(stream, vocab);
    for_each_context(ids, window, [&](context_pair p) { pairs.push_back(p); });
    return pairs;
}

// Pair count of a filtered stream of the given length.
inline std::uint64_t count_context_pairs(std::size_t length, int window) {
    std::uint64_t total = 0;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(length);
    const std::ptrdiff_t s = window;
    for (std::ptrdiff_t i = 0; i < n; ++i)
        total += static_cast<std::uint64_t>(std::min(i, s) + std::min(n - 1 - i, s));
    return total;
}

// ---------------------------------------------------------------------------
// Noise sampling: Walker alias table over the vocabulary noise distribution.
// Sampling probabilities are exact; construction is deterministic.
// ---------------------------------------------------------------------------

class alias_table {
public:
    explicit alias_table(const std::vector<double>& probs)
        : prob_(probs.size()), alias_(probs.size(), 0) {
        const std::size_t n = probs.size();
        std::vector<double> scaled(n);
        std::vector<std::int32_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = probs[i] * static_cast<double>(n);
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::int32_t>(i));
        }
        while (!small.empty() && !large.empty()) {
            const std::int32_t s = small.back();
            small.pop_back();
            const std::int32_t l = large.back();
            prob_[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
            alias_[static_cast<std::size_t>(s)] = l;
            scaled[static_cast<std::size_t>(l)] -= 1.0 - scaled[static_cast<std::size_t>(s)];
            if (scaled[static_cast<std::size_t>(l)] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        // Leftovers are 1.0 up to rounding.
        for (std::int32_t i : large) prob_[static_cast<std::size_t>(i)] = 1.0;
        for (std::int32_t i : small) prob_[static_cast<std::size_t>(i)] = 1.0;
    }

    std::int32_t sample(rng_t& rng) const {
        const std::size_t i = static_cast<std::size_t>(uniform_index(rng, prob_.size()));
        return uniform01(rng) < prob_[i] ? static_cast<std::int32_t>(i) : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<std::int32_t> alias_;
};

// ---------------------------------------------------------------------------
// Negative-sampling objective and its gradient. The per-pair objective (to be
// maximized) is log sigmoid(v_c . u_t) plus log sigmoid(-v_n . u_t) summed
// over the drawn negatives. Gradients are evaluated at the current parameters
// without mutating them; repeated rows in the slot list contribute
// independently per slot.
// ---------------------------------------------------------------------------

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) without overflow for large |x|.
inline double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <typename Real>
struct gradient_record {
    std::vector<Real> d_input_target;                   // w.r.t. the target's input row
    std::vector<Real> d_output_context;                 // w.r.t. the context's output row
    std::vector<std::vector<Real>> d_output_negatives;  // one per drawn negative, in order
};

template <typename Real>
inline double dot_rows(const Real* a, const Real* b, std::size_t dim) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d)
        acc += static_cast<double>(a[d]) * static_cast<double>(b[d]);
    return acc;
}

template <typename Real>
double ns_pair_objective(const basic_embedding_store<Real>& store, std::int32_t target,
                         std::int32_t context, std::span<const std::int32_t> negatives) {
    const std::size_t dim = store.dim();
    const Real* u = store.input_row(target);
    double obj = log_sigmoid(dot_rows(store.output_row(context), u, dim));
    for (std::int32_t n : negatives) obj += log_sigmoid(-dot_rows(store.output_row(n), u, dim));
    return obj;
}

template <typename Real>
gradient_record<Real> ns_step_gradient(const basic_embedding_store<Real>& store,
                                       std::int32_t target, std::int32_t context,
                                       std::span<const std::int32_t> negatives) {
    const std::size_t dim = store.dim();
    const Real* u = store.input_row(target);

    gradient_record<Real> g;
    g.d_output_context.resize(dim);
    g.d_output_negatives.reserve(negatives.size());
    std::vector<double> du(dim, 0.0);

    const auto accumulate = [&](const Real* v, double coef, std::vector<Real>& dv) {
        for (std::size_t d = 0; d < dim; ++d) {
            dv[d] = static_cast<Real>(coef * static_cast<double>(u[d]));
            du[d] += coef * static_cast<double>(v[d]);
        }
    };

    const Real* vc = store.output_row(context);
    accumulate(vc, 1.0 - sigmoid(dot_rows(vc, u, dim)), g.d_output_context);
    for (std::int32_t n : negatives) {
        const Real* vn = store.output_row(n);
        g.d_output_negatives.emplace_back(dim);
        accumulate(vn, -sigmoid(dot_rows(vn, u, dim)), g.d_output_negatives.back());
    }
    g.d_input_target.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) g.d_input_target[d] = static_cast<Real>(du[d]);
    return g;
}

// ---------------------------------------------------------------------------
// Full-vocabulary softmax cross-entropy, max-shifted. Desk-scale verification
// only; the training loop never calls this.
// ---------------------------------------------------------------------------

template <typename Real>
double exact_softmax_loss(const basic_embedding_store<Real>& store, std::int32_t target,
                          std::int32_t context) {
    const std::size_t dim = store.dim();
    const Real* u = store.input_row(target);
    std::vector<double> logits(store.size());
    for (std::size_t w = 0; w < store.size(); ++w)
        logits[w] = dot_rows(store.output_row(static_cast<std::int32_t>(w)), u, dim);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    return -(logits[static_cast<std::size_t>(context)] - mx - std::log(z));
}

// ---------------------------------------------------------------------------
// SGD training. The learning rate decays linearly over the total pair budget:
// the pair claiming global index p (0-based) steps with
// max(min_lr, initial_lr * (1 - p / total_pairs)).
//
// Workers share the parameter matrices without locks and partition the
// streams round-robin; overlapping updates may lose individual element
// writes. Runs are bit-reproducible at workers = 1.
// ---------------------------------------------------------------------------

inline double learning_rate_at(std::uint64_t pair_index, std::uint64_t total_pairs,
                               const train_config& cfg) {
    const double f = static_cast<double>(pair_index) / static_cast<double>(total_pairs);
    return std::max(cfg.min_lr, cfg.initial_lr * (1.0 - f));
}

namespace detail {

template <typename Real>
inline Real load_px(const Real* p, std::size_t i) {
    return std::atomic_ref<const Real>(p[i]).load(std::memory_order_relaxed);
}

template <typename Real>
inline void add_px(Real* p, std::size_t i, Real delta) {
    std::atomic_ref<Real> ref(p[i]);
    ref.store(ref.load(std::memory_order_relaxed) + delta, std::memory_order_relaxed);
}

template <typename Real>
struct sgd_worker {
    basic_embedding_store<Real>* store;
    const alias_table* noise;
    const train_config* cfg;
    std::span<const std::vector<std::int32_t>> streams;
    std::atomic<std::uint64_t>* pairs_done;
    std::uint64_t total_pairs;
    int worker_index;

    // One pass over this worker's share of the streams.
    void run_epoch(int epoch) {
        const std::size_t dim = store->dim();
        const int k = cfg->negatives;
        rng_t rng(cfg->seed * 0x9E3779B97F4A7C15ULL +
                  static_cast<std::uint64_t>(worker_index) * 0x100000001B3ULL +
                  static_cast<std::uint64_t>(epoch));
        std::vector<std::int32_t> slot_ids(static_cast<std::size_t>(k) + 1);
        std::vector<double> slot_coef(static_cast<std::size_t>(k) + 1);
        std::vector<double> u_grad(dim);
        std::vector<double> u_local(dim);

        for (std::size_t s = static_cast<std::size_t>(worker_index); s < streams.size();
             s += static_cast<std::size_t>(cfg->workers)) {
            const auto& ids = streams[s];
            for_each_context(ids, cfg->window, [&](context_pair p) {
                const std::uint64_t pair_no = pairs_done->fetch_add(1, std::memory_order_relaxed);
                const double lr = learning_rate_at(pair_no, total_pairs, *cfg);

                Real* u = store->input_row(p.target);
                for (std::size_t d = 0; d < dim; ++d)
                    u_local[d] = static_cast<double>(load_px(u, d));

                slot_ids[0] = p.context;
                for (int n = 0; n < k; ++n)
                    slot_ids[static_cast<std::size_t>(n) + 1] = noise->sample(rng);

                // All gradients are evaluated before any row is touched, so
                // repeated rows in the slot list contribute additively.
                std::fill(u_grad.begin(), u_grad.end(), 0.0);
                for (std::size_t slot = 0; slot < slot_ids.size(); ++slot) {
                    const Real* v = store->output_row(slot_ids[slot]);
                    double x = 0.0;
                    for (std::size_t d = 0; d < dim; ++d)
                        x += static_cast<double>(load_px(v, d)) * u_local[d];
                    const double label = slot == 0 ? 1.0 : 0.0;
                    const double coef = label - sigmoid(x);
                    slot_coef[slot] = coef;
                    for (std::size_t d = 0; d < dim; ++d)
                        u_grad[d] += coef * static_cast<double>(load_px(v, d));
                }
                for (std::size_t slot = 0; slot < slot_ids.size(); ++slot) {
                    Real* v = store->output_row(slot_ids[slot]);
                    const double step = lr * slot_coef[slot];
                    for (std::size_t d = 0; d < dim; ++d)
                        add_px(v, d, static_cast<Real>(step * u_local[d]));
                }
                for (std::size_t d = 0; d < dim; ++d)
                    add_px(u, d, static_cast<Real>(lr * u_grad[d]));
            });
        }
    }
};

}  // namespace detail

// Applies frequent-token subsampling in place; a token with corpus frequency
// f is kept with probability min(1, sqrt(t/f)).
inline void subsample_stream(std::vector<std::int32_t>& ids, const vocabulary& vocab,
                             double threshold, rng_t& rng) {
    if (threshold <= 0.0) return;
    const double total = static_cast<double>(vocab.total_count());
    std::size_t w = 0;
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const double f = static_cast<double>(vocab.at(ids[r]).count) / total;
        const double keep = f > threshold ? std::sqrt(threshold / f) : 1.0;
        if (keep >= 1.0 || uniform01(rng) < keep) ids[w++] = ids[r];
    }
    ids.resize(w);
}

template <typename Real = float>
basic_embedding_store<Real> train(const std::vector<token_stream>& streams,
                                  const vocabulary& vocab, const train_config& cfg) {
    cfg.validate();

    std::vector<std::vector<std::int32_t>> id_streams;
    id_streams.reserve(streams.size());
    rng_t subsample_rng(cfg.seed ^ 0xA02E1B5D93C4770FULL);
    std::uint64_t tokens = 0, pairs_per_epoch = 0;
    for (const auto& s : streams) {
        auto ids = to_id_stream(s, vocab);
        subsample_stream(ids, vocab, cfg.subsample, subsample_rng);
        if (ids.size() < 2) continue;
        tokens += ids.size();
        pairs_per_epoch += count_context_pairs(ids.size(), cfg.window);
        id_streams.push_back(std::move(ids));
    }
    if (pairs_per_epoch == 0) throw domain_error("nothing to train on");
    const std::uint64_t total_pairs = pairs_per_epoch * static_cast<std::uint64_t>(cfg.epochs);

    auto store = basic_embedding_store<Real>::random_init(vocab, cfg.dim, cfg.seed);
    const alias_table noise(vocab.noise_distribution());
    std::atomic<std::uint64_t> pairs_done{0};

    log_info("training " + std::string(model_name(cfg.model)) +
             ": V=" + std::to_string(vocab.size()) + " tokens=" + std::to_string(tokens) +
             " pairs/epoch=" + std::to_string(pairs_per_epoch) + " dim=" + std::to_string(cfg.dim) +
             " window=" + std::to_string(cfg.window) + " negatives=" + std::to_string(cfg.negatives) +
             " epochs=" + std::to_string(cfg.epochs) + " workers=" + std::to_string(cfg.workers));

    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.workers == 1) {
            detail::sgd_worker<Real> w{&store, &noise, &cfg, id_streams,
                                       &pairs_done, total_pairs, 0};
            w.run_epoch(epoch);
        } else {
            std::vector<std::thread> threads;
            std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.workers));
            for (int i = 0; i < cfg.workers; ++i) {
                threads.emplace_back([&, i] {
                    try {
                        detail::sgd_worker<Real> w{&store,      &noise,      &cfg, id_streams,
                                                   &pairs_done, total_pairs, i};
                        w.run_epoch(epoch);
                    } catch (...) {
                        errors[static_cast<std::size_t>(i)] = std::current_exception();
                    }
                });
            }
            for (auto& t : threads) t.join();
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
        }
        if (!store.all_finite())
            throw domain_error("non-finite parameter after epoch " + std::to_string(epoch + 1));
        log_debug("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.epochs) +
                  " done, lr=" +
                  std::to_string(learning_rate_at(pairs_done.load(), total_pairs, cfg)));
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();

    const double token_rate =
        secs > 0.0 ? static_cast<double>(tokens) * cfg.epochs / secs : 0.0;
    log_info("trained " + std::to_string(total_pairs) + " pairs in " + std::to_string(secs) +
             "s (" + std::to_string(static_cast<std::uint64_t>(token_rate)) + " tokens/s)");
    return store;
}

}  // namespace conceptvec
