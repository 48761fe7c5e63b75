// conceptvec: vocabulary building, CRC/3C embedding training, BOC
// densification, similarity queries, and the two evaluation protocols,
// behind one binary with subcommands.
//
// Exit codes: 0 success, 1 domain error (empty vocabulary, nothing to train
// on, no embeddable concepts), 2 usage or input-format error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conceptvec/conceptvec.hpp"

namespace cv = conceptvec;

namespace {

struct vocab_args {
    std::string corpus, redirects, out;
    std::uint64_t min_count = 5;
    std::uint64_t min_count_concepts = 1;
    std::string mode = "crc";
};

struct train_args {
    std::string corpus, vocab, redirects, out;
    std::string model = "crc";
    std::string format = "bin";
    cv::train_config cfg;
};

struct densify_args {
    std::string boc, embeddings, out;
    std::string format = "text";
};

struct sim_args {
    std::string embeddings, a, b, boc_file, boc_a, boc_b;
    std::string mechanism = "dense";
    double tau = 0.85;
};

struct relatedness_args {
    std::string dataset, embeddings, csv;
};

struct dataless_args {
    std::string labels, instances, gold, category_map, embeddings, out;
    std::string strategy = "dense";
    std::string sweep;
    double tau = 0.85;
};

cv::redirect_map load_redirects(const std::string& path) {
    if (path.empty()) return {};
    return cv::redirect_map::load_tsv_file(path);
}

cv::model_kind parse_model(const std::string& s) {
    if (s == "crc") return cv::model_kind::crc;
    if (s == "3c") return cv::model_kind::threec;
    throw cv::format_error("unknown model '" + s + "' (expected crc or 3c)");
}

std::vector<cv::token_stream> read_streams(const std::string& corpus_path,
                                           const cv::redirect_map& redirects,
                                           cv::model_kind model) {
    std::vector<cv::token_stream> streams;
    const std::size_t skipped =
        cv::for_each_document(corpus_path, redirects, [&](cv::annotated_document&& doc) {
            streams.push_back(model == cv::model_kind::crc ? cv::crc_stream(doc)
                                                           : cv::threec_stream(doc));
        });
    if (skipped) cv::log_warn(std::to_string(skipped) + " empty documents skipped");
    return streams;
}

int cmd_build_vocab(const vocab_args& a) {
    cv::log_info("build-vocab: corpus=" + a.corpus + " mode=" + a.mode +
                 " min-count=" + std::to_string(a.min_count) +
                 " min-count-concepts=" + std::to_string(a.min_count_concepts));
    const auto redirects = load_redirects(a.redirects);
    const cv::model_kind model = parse_model(a.mode);
    cv::vocab_options opts;
    opts.min_count_word = a.min_count;
    opts.min_count_concept = a.min_count_concepts;
    opts.filter =
        model == cv::model_kind::threec ? cv::vocab_filter::concepts_only : cv::vocab_filter::all;
    cv::vocab_builder builder(opts);
    for (const auto& stream : read_streams(a.corpus, redirects, model)) builder.add(stream);
    const auto vocab = builder.build();
    vocab.save_tsv_file(a.out);
    cv::log_info("vocabulary of " + std::to_string(vocab.size()) + " entries -> " + a.out);
    return 0;
}

int cmd_train(const train_args& a) {
    cv::train_config cfg = a.cfg;
    cfg.model = parse_model(a.model);
    cv::log_info("train: model=" + a.model + " dim=" + std::to_string(cfg.dim) +
                 " window=" + std::to_string(cfg.window) +
                 " negatives=" + std::to_string(cfg.negatives) +
                 " epochs=" + std::to_string(cfg.epochs) + " lr=" + std::to_string(cfg.initial_lr) +
                 " min-lr=" + std::to_string(cfg.min_lr) +
                 " subsample=" + std::to_string(cfg.subsample) +
                 " workers=" + std::to_string(cfg.workers) + " seed=" + std::to_string(cfg.seed));
    cfg.validate();
    const auto redirects = load_redirects(a.redirects);
    const auto vocab = cv::vocabulary::load_tsv_file(a.vocab);
    const auto streams = read_streams(a.corpus, redirects, cfg.model);
    const auto store = cv::train<float>(streams, vocab, cfg);
    store.save(a.out, a.format == "text" ? cv::embedding_format::text
                                         : cv::embedding_format::binary);
    cv::log_info("embeddings (" + std::to_string(store.size()) + " x " +
                 std::to_string(store.dim()) + ") -> " + a.out);
    return 0;
}

int cmd_densify(const densify_args& a) {
    cv::log_info("densify: boc=" + a.boc + " embeddings=" + a.embeddings);
    const auto store = cv::embedding_store::load(a.embeddings);
    const auto records = cv::load_boc_file(a.boc);
    std::vector<cv::sparse_boc> bocs;
    bocs.reserve(records.size());
    for (const auto& r : records) bocs.push_back(r.boc);
    const auto batch = cv::matrix_densify(bocs, store);
    for (const auto& [idx, msg] : batch.errors)
        cv::log_warn("record '" + records[idx].id + "': " + msg);
    if (batch.skipped_concepts)
        cv::log_warn(std::to_string(batch.skipped_concepts) +
                     " concepts without embeddings skipped");

    cv::embedding_file out;
    out.dim = store.dim();
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!batch.vectors[i]) continue;
        out.keys.push_back(records[i].id);
        for (double x : *batch.vectors[i]) out.data.push_back(static_cast<float>(x));
    }
    if (out.keys.empty()) throw cv::domain_error("no record could be densified");
    out.save(a.out, a.format == "bin" ? cv::embedding_format::binary
                                      : cv::embedding_format::text);
    cv::log_info(std::to_string(out.keys.size()) + "/" + std::to_string(records.size()) +
                 " records densified -> " + a.out);
    return 0;
}

const cv::sparse_boc& find_record(const std::vector<cv::boc_record>& records,
                                  const std::string& id) {
    for (const auto& r : records)
        if (r.id == id) return r.boc;
    throw cv::domain_error("record '" + id + "' not found in BOC file");
}

int cmd_sim(const sim_args& a) {
    cv::log_info("sim: mechanism=" + a.mechanism + " tau=" + std::to_string(a.tau));
    const bool key_mode = !a.a.empty() || !a.b.empty();
    const bool boc_mode = !a.boc_a.empty() || !a.boc_b.empty();
    if (key_mode == boc_mode)
        throw cv::format_error("use either --a/--b keys or --boc-a/--boc-b records");

    double sim = 0.0;
    if (key_mode) {
        if (a.a.empty() || a.b.empty()) throw cv::format_error("--a and --b are both required");
        if (a.mechanism != "dense")
            throw cv::format_error("key mode supports --mechanism dense only");
        if (a.embeddings.empty()) throw cv::format_error("--embeddings is required");
        const auto store = cv::embedding_store::load(a.embeddings);
        const auto lookup = [&](const std::string& key) {
            auto [kind, raw] = cv::parse_serialized_key(key);
            const std::int32_t id = store.row_of(kind, raw);
            if (id < 0) throw cv::domain_error("key '" + key + "' not in embeddings");
            const auto row = store.row(id);
            return cv::dense_vector(row.begin(), row.end());
        };
        sim = cv::dense_cosine(lookup(a.a), lookup(a.b));
    } else {
        if (a.boc_a.empty() || a.boc_b.empty())
            throw cv::format_error("--boc-a and --boc-b are both required");
        if (a.boc_file.empty()) throw cv::format_error("--boc-file is required");
        const auto records = cv::load_boc_file(a.boc_file);
        const auto& u = find_record(records, a.boc_a);
        const auto& v = find_record(records, a.boc_b);
        if (a.mechanism == "sparse") {
            sim = cv::sparse_cosine(u, v);
        } else {
            if (a.embeddings.empty())
                throw cv::format_error("--embeddings is required for mechanism " + a.mechanism);
            const auto store = cv::embedding_store::load(a.embeddings);
            const cv::alignment_config cfg{a.tau};
            if (a.mechanism == "dense")
                sim = cv::dense_cosine(cv::densify(u, store), cv::densify(v, store));
            else if (a.mechanism == "many")
                sim = cv::sim_many_to_many(u, v, store, cfg);
            else if (a.mechanism == "max")
                sim = cv::sim_max_align(u, v, store, cfg);
            else if (a.mechanism == "hungarian")
                sim = cv::sim_hungarian(u, v, store, cfg);
            else
                throw cv::format_error("unknown mechanism '" + a.mechanism + "'");
        }
    }
    std::printf("%.6f\n", sim);
    return 0;
}

void write_csv_row(std::ostream& out, const std::string& metric, const std::string& strategy,
                   const std::string& n, double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    out << metric << ',' << strategy << ',' << n << ',' << buf << '\n';
}

int cmd_eval_relatedness(const relatedness_args& a) {
    cv::log_info("eval-relatedness: dataset=" + a.dataset + " embeddings=" + a.embeddings);
    const auto store = cv::embedding_store::load(a.embeddings);
    const auto queries = cv::load_relatedness_file(a.dataset);
    const auto report = cv::eval_relatedness(queries, store);

    std::printf("queries scored: %zu (skipped: %zu without embedding, %zu without related)\n",
                report.queries_scored, report.skipped_missing_query, report.skipped_no_related);
    std::printf("%-8s %-8s %-8s %-8s\n", "nDCG@1", "nDCG@5", "nDCG@10", "MAP");
    std::printf("%-8.4f %-8.4f %-8.4f %-8.4f\n", report.ndcg1, report.ndcg5, report.ndcg10,
                report.map);
    if (!a.csv.empty()) {
        std::ofstream out(a.csv);
        if (!out) throw cv::format_error("cannot write CSV: " + a.csv);
        out << "metric,strategy,n,value\n";
        write_csv_row(out, "ndcg@1", "cosine", "", report.ndcg1);
        write_csv_row(out, "ndcg@5", "cosine", "", report.ndcg5);
        write_csv_row(out, "ndcg@10", "cosine", "", report.ndcg10);
        write_csv_row(out, "map", "cosine", "", report.map);
    }
    return 0;
}

std::unique_ptr<cv::similarity_strategy> make_strategy(const std::string& name,
                                                       const cv::embedding_store* store,
                                                       double tau) {
    const cv::alignment_config cfg{tau};
    if (name == "sparse") return std::make_unique<cv::sparse_cosine_strategy>();
    if (!store)
        throw cv::format_error("--embeddings is required for strategy " + name);
    if (name == "dense") return std::make_unique<cv::densified_strategy<float>>(*store);
    if (name == "many")
        return std::make_unique<cv::alignment_strategy<float>>(
            *store, cv::alignment_mechanism::many_to_many, cfg);
    if (name == "max")
        return std::make_unique<cv::alignment_strategy<float>>(
            *store, cv::alignment_mechanism::max_align, cfg);
    if (name == "hungarian")
        return std::make_unique<cv::alignment_strategy<float>>(
            *store, cv::alignment_mechanism::hungarian, cfg);
    throw cv::format_error("unknown strategy '" + name + "'");
}

std::vector<std::size_t> parse_sweep(const std::string& s) {
    std::vector<std::size_t> dims;
    for (const auto& part : cv::split(s, ',')) {
        if (part.empty()) throw cv::format_error("bad --sweep list");
        dims.push_back(std::stoull(part));
    }
    return dims;
}

int cmd_eval_dataless(const dataless_args& a) {
    cv::log_info("eval-dataless: strategy=" + a.strategy + " labels=" + a.labels +
                 " instances=" + a.instances + " tau=" + std::to_string(a.tau) +
                 (a.sweep.empty() ? "" : " sweep=" + a.sweep));
    std::optional<cv::embedding_store> store;
    if (!a.embeddings.empty()) store = cv::embedding_store::load(a.embeddings);
    auto strategy = make_strategy(a.strategy, store ? &*store : nullptr, a.tau);
    const auto task = cv::load_dataless_task(a.labels, a.instances, a.gold, a.category_map);

    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file) throw cv::format_error("cannot write CSV: " + a.out);
    }
    std::ostream& out = a.out.empty() ? std::cout : file;
    out << "metric,strategy,n,value\n";
    if (a.sweep.empty()) {
        const auto report = cv::classify_dataless(task, *strategy);
        // micro-F1 of single-label assignment over all instances = accuracy
        cv::log_info("micro-F1 (=accuracy): " + std::to_string(report.micro_f1) + " on " +
                     std::to_string(report.total) + " instances, " +
                     std::to_string(report.failed) + " failed");
        write_csv_row(out, "micro_f1", strategy->name(), "", report.micro_f1);
    } else {
        const auto sweep = cv::dimension_sweep(task, *strategy, parse_sweep(a.sweep));
        for (const auto& pt : sweep.series) {
            write_csv_row(out, "micro_f1", strategy->name(), std::to_string(pt.n), pt.micro_f1);
            char line[64];
            std::snprintf(line, sizeof line, "  n=%-6zu micro-F1 %.4f", pt.n, pt.micro_f1);
            cv::log_info(line);
        }
        cv::log_info("best micro-F1 " + std::to_string(sweep.best_f1) + " @ n=" +
                     std::to_string(sweep.best_n));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"concept embedding toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file; flags win");

    vocab_args va;
    auto* sv = app.add_subcommand("build-vocab", "count tokens and write a vocabulary TSV");
    sv->add_option("--corpus", va.corpus, "annotated corpus file")->required();
    sv->add_option("--redirects", va.redirects, "alias redirect TSV");
    sv->add_option("--out", va.out, "output vocabulary TSV")->required();
    sv->add_option("--min-count", va.min_count, "minimum word count");
    sv->add_option("--min-count-concepts", va.min_count_concepts, "minimum concept count");
    sv->add_option("--mode", va.mode, "crc (words+concepts) or 3c (concepts only)");

    train_args ta;
    auto* st = app.add_subcommand("train", "train embeddings with skip-gram negative sampling");
    st->add_option("--corpus", ta.corpus, "annotated corpus file")->required();
    st->add_option("--vocab", ta.vocab, "vocabulary TSV")->required();
    st->add_option("--redirects", ta.redirects, "alias redirect TSV");
    st->add_option("--out", ta.out, "output embedding file")->required();
    st->add_option("--model", ta.model, "crc or 3c");
    st->add_option("--dim", ta.cfg.dim, "vector dimensions");
    st->add_option("--window", ta.cfg.window, "context window size (each side)");
    st->add_option("--negatives", ta.cfg.negatives, "negative samples per pair");
    st->add_option("--epochs", ta.cfg.epochs, "passes over the corpus");
    st->add_option("--lr", ta.cfg.initial_lr, "initial learning rate");
    st->add_option("--min-lr", ta.cfg.min_lr, "learning rate floor");
    st->add_option("--subsample", ta.cfg.subsample, "frequent-token subsampling threshold");
    st->add_option("--workers", ta.cfg.workers, "training threads");
    st->add_option("--seed", ta.cfg.seed, "RNG seed");
    st->add_option("--format", ta.format, "bin or text");

    densify_args da;
    auto* sd = app.add_subcommand("densify", "densify BOC records into dense vectors");
    sd->add_option("--boc", da.boc, "BOC records file")->required();
    sd->add_option("--embeddings", da.embeddings, "embedding file")->required();
    sd->add_option("--out", da.out, "output dense vector file")->required();
    sd->add_option("--format", da.format, "text or bin");

    sim_args sa;
    auto* ss = app.add_subcommand("sim", "similarity between keys or BOC records");
    ss->add_option("--embeddings", sa.embeddings, "embedding file");
    ss->add_option("--a", sa.a, "first key (concepts as c:<id>)");
    ss->add_option("--b", sa.b, "second key");
    ss->add_option("--boc-file", sa.boc_file, "BOC records file");
    ss->add_option("--boc-a", sa.boc_a, "first record id");
    ss->add_option("--boc-b", sa.boc_b, "second record id");
    ss->add_option("--mechanism", sa.mechanism, "dense|sparse|many|max|hungarian");
    ss->add_option("--tau", sa.tau, "alignment similarity threshold");

    relatedness_args ra;
    auto* sr = app.add_subcommand("eval-relatedness", "rank candidates, report nDCG@k and MAP");
    sr->add_option("--dataset", ra.dataset, "relatedness TSV")->required();
    sr->add_option("--embeddings", ra.embeddings, "embedding file")->required();
    sr->add_option("--csv", ra.csv, "also write metrics as CSV");

    dataless_args la;
    auto* sl = app.add_subcommand("eval-dataless", "classify instances by label similarity");
    sl->add_option("--labels", la.labels, "label BOC file")->required();
    sl->add_option("--instances", la.instances, "instance BOC file")->required();
    sl->add_option("--gold", la.gold, "gold TSV (instance_id<TAB>label)")->required();
    sl->add_option("--category-map", la.category_map, "fine->coarse label map TSV");
    sl->add_option("--embeddings", la.embeddings, "embedding file (not needed for sparse)");
    sl->add_option("--strategy", la.strategy, "sparse|dense|many|max|hungarian");
    sl->add_option("--sweep", la.sweep, "comma-separated truncation sizes");
    sl->add_option("--tau", la.tau, "alignment similarity threshold");
    sl->add_option("--out", la.out, "CSV output path (default stdout)");

    try {
        app.parse(argc, argv);
        if (sv->parsed()) return cmd_build_vocab(va);
        if (st->parsed()) return cmd_train(ta);
        if (sd->parsed()) return cmd_densify(da);
        if (ss->parsed()) return cmd_sim(sa);
        if (sr->parsed()) return cmd_eval_relatedness(ra);
        if (sl->parsed()) return cmd_eval_dataless(la);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    } catch (const cv::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const cv::format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
