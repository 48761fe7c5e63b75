#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "conceptvec/boc.hpp"
#include "conceptvec/common.hpp"
#include "conceptvec/densify.hpp"
#include "conceptvec/embedding.hpp"

namespace conceptvec {

// ---------------------------------------------------------------------------
// Entity relatedness ranking: candidates ordered by cosine to the query
// entity, scored with binary-gain nDCG@k and MAP.
// ---------------------------------------------------------------------------

struct relatedness_query {
    std::string query_id;
    std::vector<std::pair<std::string, int>> candidates;  // (concept id, related 0|1)
};

// TSV rows: query_id <TAB> candidate_id <TAB> label(0|1), grouped by query.
inline std::vector<relatedness_query> load_relatedness_tsv(std::istream& in) {
    std::vector<relatedness_query> queries;
    std::unordered_map<std::string, std::size_t> index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 3 || cols[0].empty() || cols[1].empty())
            throw format_error("relatedness line " + std::to_string(lineno) +
                               ": expected 'query<TAB>candidate<TAB>label'");
        int label;
        if (cols[2] == "0")
            label = 0;
        else if (cols[2] == "1")
            label = 1;
        else
            throw format_error("relatedness line " + std::to_string(lineno) +
                               ": label must be 0 or 1, got '" + cols[2] + "'");
        auto [it, inserted] = index.emplace(cols[0], queries.size());
        if (inserted) queries.push_back({cols[0], {}});
        queries[it->second].candidates.emplace_back(cols[1], label);
    }
    return queries;
}

inline std::vector<relatedness_query> load_relatedness_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw format_error("cannot open relatedness dataset: " + path);
    return load_relatedness_tsv(in);
}

struct ranked_candidate {
    std::string concept_id;
    double score;
    int related;
};

// Candidates by descending cosine to the query entity; candidates without an
// embedding score -1 and sink to the bottom. Ties break by ascending id.
template <typename Real>
std::vector<ranked_candidate> rank_candidates(const relatedness_query& q,
                                              const basic_embedding_store<Real>& store) {
    const std::int32_t qid = store.row_of(token_kind::concept_mention, q.query_id);
    if (qid < 0) throw domain_error("query entity has no embedding: " + q.query_id);
    const auto qrow = store.row(qid);
    double qn = 0.0;
    for (const Real& x : qrow) qn += static_cast<double>(x) * static_cast<double>(x);
    qn = std::sqrt(qn);

    std::vector<ranked_candidate> ranked;
    ranked.reserve(q.candidates.size());
    for (const auto& [cid, label] : q.candidates) {
        const std::int32_t id = store.row_of(token_kind::concept_mention, cid);
        double score = -1.0;
        if (id >= 0 && qn > 0.0) {
            const auto row = store.row(id);
            double dot = 0.0, nn = 0.0;
            for (std::size_t d = 0; d < row.size(); ++d) {
                dot += static_cast<double>(row[d]) * static_cast<double>(qrow[d]);
                nn += static_cast<double>(row[d]) * static_cast<double>(row[d]);
            }
            score = nn > 0.0 ? dot / (qn * std::sqrt(nn)) : 0.0;
        }
        ranked.push_back({cid, score, label});
    }
    std::sort(ranked.begin(), ranked.end(), [](const ranked_candidate& a, const ranked_candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.concept_id < b.concept_id;
    });
    return ranked;
}

// Binary-gain nDCG@k of a ranked 0/1 relevance list.
inline double ndcg_at_k(const std::vector<int>& ranked_labels, int k) {
    if (k < 1) throw format_error("k must be >= 1");
    const std::size_t total_related =
        static_cast<std::size_t>(std::count(ranked_labels.begin(), ranked_labels.end(), 1));
    if (total_related == 0) throw domain_error("no related candidates");
    const std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranked_labels.size());
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i)
        if (ranked_labels[i]) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    double ideal = 0.0;
    for (std::size_t i = 0; i < std::min(depth, total_related); ++i)
        ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return dcg / ideal;
}

// Average precision: mean of precision@rank over the related items.
inline double average_precision(const std::vector<int>& ranked_labels) {
    std::size_t related_seen = 0;
    double acc = 0.0;
    for (std::size_t i = 0; i < ranked_labels.size(); ++i) {
        if (!ranked_labels[i]) continue;
        ++related_seen;
        acc += static_cast<double>(related_seen) / static_cast<double>(i + 1);
    }
    if (related_seen == 0) throw domain_error("no related candidates");
    return acc / static_cast<double>(related_seen);
}

struct relatedness_report {
    double ndcg1 = 0.0, ndcg5 = 0.0, ndcg10 = 0.0, map = 0.0;
    std::size_t queries_scored = 0;
    std::size_t skipped_missing_query = 0;  // query entity had no embedding
    std::size_t skipped_no_related = 0;     // query had no related candidate
};

template <typename Real>
relatedness_report eval_relatedness(const std::vector<relatedness_query>& queries,
                                    const basic_embedding_store<Real>& store) {
    relatedness_report report;
    for (const auto& q : queries) {
        if (store.row_of(token_kind::concept_mention, q.query_id) < 0) {
            ++report.skipped_missing_query;
            continue;
        }
        bool any_related = false;
        for (const auto& [cid, label] : q.candidates) any_related |= label == 1;
        if (!any_related) {
            ++report.skipped_no_related;
            continue;
        }
        const auto ranked = rank_candidates(q, store);
        std::vector<int> labels;
        labels.reserve(ranked.size());
        for (const auto& r : ranked) labels.push_back(r.related);
        report.ndcg1 += ndcg_at_k(labels, 1);
        report.ndcg5 += ndcg_at_k(labels, 5);
        report.ndcg10 += ndcg_at_k(labels, 10);
        report.map += average_precision(labels);
        ++report.queries_scored;
    }
    if (report.queries_scored == 0) throw domain_error("no scoreable queries");
    const double n = static_cast<double>(report.queries_scored);
    report.ndcg1 /= n;
    report.ndcg5 /= n;
    report.ndcg10 /= n;
    report.map /= n;
    return report;
}

// ---------------------------------------------------------------------------
// Dataless classification: every instance goes to the most similar label
// under a pluggable similarity strategy. Micro-averaged F1 over single-label
// assignment equals plain accuracy; the report carries it under both names.
// ---------------------------------------------------------------------------

struct dataless_task {
    std::vector<std::string> label_names;
    std::vector<sparse_boc> label_bocs;
    struct instance {
        std::string id;
        sparse_boc boc;
        std::size_t gold;
    };
    std::vector<instance> instances;
};

inline std::unordered_map<std::string, std::string> load_category_map_file(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw format_error("cannot open category map: " + path);
    std::unordered_map<std::string, std::string> map;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
            throw format_error("category map line " + std::to_string(lineno) +
                               ": expected 'fine<TAB>coarse'");
        if (!map.emplace(cols[0], cols[1]).second)
            throw format_error("category map line " + std::to_string(lineno) +
                               ": duplicate fine label '" + cols[0] + "'");
    }
    return map;
}

// Labels and instances come from BOC files; gold is instance_id -> label
// name. When a category map is given (fine -> coarse), gold names are mapped
// through it before resolving against the label set.
inline dataless_task load_dataless_task(const std::string& labels_path,
                                        const std::string& instances_path,
                                        const std::string& gold_path,
                                        const std::string& category_map_path = "") {
    dataless_task task;
    for (auto& rec : load_boc_file(labels_path)) {
        if (rec.boc.empty())
            throw format_error("label '" + rec.id + "' has an empty BOC");
        task.label_names.push_back(rec.id);
        task.label_bocs.push_back(std::move(rec.boc));
    }
    if (task.label_names.size() < 2) throw format_error("need at least 2 labels");

    std::unordered_map<std::string, std::string> category_map;
    if (!category_map_path.empty()) category_map = load_category_map_file(category_map_path);

    std::unordered_map<std::string, std::size_t> label_index;
    for (std::size_t i = 0; i < task.label_names.size(); ++i)
        label_index.emplace(task.label_names[i], i);

    std::unordered_map<std::string, std::string> gold;
    {
        std::ifstream in(gold_path);
        if (!in) throw format_error("cannot open gold file: " + gold_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto cols = split(line, '\t');
            if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
                throw format_error("gold line " + std::to_string(lineno) +
                                   ": expected 'instance_id<TAB>label'");
            gold[cols[0]] = cols[1];
        }
    }

    for (auto& rec : load_boc_file(instances_path)) {
        auto git = gold.find(rec.id);
        if (git == gold.end())
            throw format_error("no gold label for instance '" + rec.id + "'");
        std::string name = git->second;
        if (auto mit = category_map.find(name); mit != category_map.end()) name = mit->second;
        auto lit = label_index.find(name);
        if (lit == label_index.end())
            throw format_error("gold label '" + name + "' of instance '" + rec.id +
                               "' is not in the label set");
        task.instances.push_back({std::move(rec.id), std::move(rec.boc), lit->second});
    }
    return task;
}

// Similarity of an instance against every label. prepare() is called once per
// label set, so strategies can do per-label work (densification) up front.
class similarity_strategy {
public:
    virtual ~similarity_strategy() = default;
    virtual std::string name() const = 0;
    virtual void prepare(const std::vector<sparse_boc>& labels) = 0;
    virtual std::vector<double> score_all(const sparse_boc& instance) const = 0;
};

class sparse_cosine_strategy final : public similarity_strategy {
public:
    std::string name() const override { return "sparse"; }
    void prepare(const std::vector<sparse_boc>& labels) override { labels_ = labels; }
    std::vector<double> score_all(const sparse_boc& instance) const override {
        std::vector<double> scores;
        scores.reserve(labels_.size());
        for (const auto& l : labels_) scores.push_back(sparse_cosine(instance, l));
        return scores;
    }

private:
    std::vector<sparse_boc> labels_;
};

template <typename Real>
class densified_strategy final : public similarity_strategy {
public:
    explicit densified_strategy(const basic_embedding_store<Real>& store) : store_(store) {}
    std::string name() const override { return "dense"; }
    void prepare(const std::vector<sparse_boc>& labels) override {
        dense_labels_.clear();
        for (const auto& l : labels) dense_labels_.push_back(densify(l, store_));
    }
    std::vector<double> score_all(const sparse_boc& instance) const override {
        const dense_vector inst = densify(instance, store_);
        std::vector<double> scores;
        scores.reserve(dense_labels_.size());
        for (const auto& l : dense_labels_) scores.push_back(dense_cosine(inst, l));
        return scores;
    }

private:
    const basic_embedding_store<Real>& store_;
    std::vector<dense_vector> dense_labels_;
};

enum class alignment_mechanism { many_to_many, max_align, hungarian };

template <typename Real>
class alignment_strategy final : public similarity_strategy {
public:
    alignment_strategy(const basic_embedding_store<Real>& store, alignment_mechanism mechanism,
                       alignment_config cfg)
        : store_(store), mechanism_(mechanism), cfg_(cfg) {}
    std::string name() const override {
        switch (mechanism_) {
            case alignment_mechanism::many_to_many: return "many";
            case alignment_mechanism::max_align: return "max";
            default: return "hungarian";
        }
    }
    void prepare(const std::vector<sparse_boc>& labels) override { labels_ = labels; }
    std::vector<double> score_all(const sparse_boc& instance) const override {
        std::vector<double> scores;
        scores.reserve(labels_.size());
        for (const auto& l : labels_) {
            switch (mechanism_) {
                case alignment_mechanism::many_to_many:
                    scores.push_back(sim_many_to_many(instance, l, store_, cfg_));
                    break;
                case alignment_mechanism::max_align:
                    scores.push_back(sim_max_align(instance, l, store_, cfg_));
                    break;
                default:
                    scores.push_back(sim_hungarian(instance, l, store_, cfg_));
            }
        }
        return scores;
    }

private:
    const basic_embedding_store<Real>& store_;
    std::vector<sparse_boc> labels_;
    alignment_mechanism mechanism_;
    alignment_config cfg_;
};

struct dataless_report {
    double micro_f1 = 0.0;  // equals accuracy: single-label multi-class assignment
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t failed = 0;  // empty BOC or similarity error; counted misclassified
};

inline dataless_report classify_dataless(const dataless_task& task,
                                         similarity_strategy& strategy) {
    if (task.instances.empty()) throw domain_error("no instances to classify");
    strategy.prepare(task.label_bocs);
    dataless_report report;
    report.total = task.instances.size();
    for (const auto& inst : task.instances) {
        std::vector<double> scores;
        try {
            scores = strategy.score_all(inst.boc);
        } catch (const std::exception&) {
            ++report.failed;
            continue;
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < scores.size(); ++i)
            if (scores[i] > scores[best]) best = i;
        if (best == inst.gold) ++report.correct;
    }
    report.micro_f1 = static_cast<double>(report.correct) / static_cast<double>(report.total);
    return report;
}

struct sweep_point {
    std::size_t n;
    double micro_f1;
};

struct sweep_result {
    std::vector<sweep_point> series;
    std::size_t best_n = 0;
    double best_f1 = -1.0;
};

// Truncates every label and instance BOC to its top-n entries before
// classifying; n beyond a vector's size keeps the whole vector.
inline sweep_result dimension_sweep(const dataless_task& task, similarity_strategy& strategy,
                                    const std::vector<std::size_t>& dims) {
    if (dims.empty()) throw format_error("empty sweep dimension list");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        if (dims[i] >= dims[i + 1]) throw format_error("sweep dimensions must be ascending");
    if (dims.front() < 1) throw format_error("sweep dimensions must be >= 1");

    sweep_result result;
    for (std::size_t n : dims) {
        dataless_task cut;
        cut.label_names = task.label_names;
        for (const auto& l : task.label_bocs) cut.label_bocs.push_back(l.truncated(n));
        for (const auto& inst : task.instances)
            cut.instances.push_back({inst.id, inst.boc.truncated(n), inst.gold});
        const auto report = classify_dataless(cut, strategy);
        result.series.push_back({n, report.micro_f1});
        if (report.micro_f1 > result.best_f1) {
            result.best_f1 = report.micro_f1;
            result.best_n = n;
        }
    }
    return result;
}

}  // namespace conceptvec
