// corpusgen: writes topic-clustered synthetic annotated corpora plus the
// matching redirect, label, instance, and gold files. Used to build the
// bundled mini corpus and handy for benchmarks.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "conceptvec/synthetic.hpp"

namespace cv = conceptvec;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw cv::format_error("cannot write: " + path);
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic annotated-corpus generator"};
    cv::synthetic_spec spec;
    std::string out, redirects, labels, instances, gold;
    int label_concepts = 5, instances_per_topic = 20, concepts_per_instance = 6;
    std::uint64_t task_seed = 7;
    bool overlap_labels = false;

    app.add_option("--out", out, "corpus output path")->required();
    app.add_option("--topics", spec.topics, "number of topic clusters");
    app.add_option("--concepts-per-topic", spec.concepts_per_topic, "concepts per topic");
    app.add_option("--docs", spec.docs, "number of documents");
    app.add_option("--sentences-per-doc", spec.sentences_per_doc, "sentences per document");
    app.add_option("--words-per-topic", spec.words_per_topic, "topical word-pool size");
    app.add_option("--concept-prob", spec.concept_prob, "chance a token is a concept mention");
    app.add_option("--alias-fraction", spec.alias_fraction,
                   "fraction of mentions written via alias ids");
    app.add_option("--seed", spec.seed, "corpus RNG seed");
    app.add_option("--redirects", redirects, "write alias redirect TSV here");
    app.add_option("--labels", labels, "write label BOC file here");
    app.add_option("--instances", instances, "write instance BOC file here");
    app.add_option("--gold", gold, "write gold TSV here");
    app.add_option("--label-concepts", label_concepts, "concepts per label BOC");
    app.add_option("--instances-per-topic", instances_per_topic, "instances per topic");
    app.add_option("--concepts-per-instance", concepts_per_instance, "concepts per instance BOC");
    app.add_option("--task-seed", task_seed, "dataless task RNG seed");
    app.add_flag("--overlap-labels", overlap_labels, "let instances reuse label concepts");

    try {
        app.parse(argc, argv);
        const auto corpus = cv::make_synthetic_corpus(spec);
        write_file(out, corpus.text);
        std::cerr << "corpus: " << corpus.text.size() << " bytes, " << spec.docs << " docs -> "
                  << out << "\n";
        if (!redirects.empty()) {
            std::string tsv;
            for (const auto& [alias, canonical] : corpus.redirects)
                tsv += alias + "\t" + canonical + "\n";
            write_file(redirects, tsv);
        }
        if (!labels.empty() || !instances.empty() || !gold.empty()) {
            const auto task = cv::make_synthetic_dataless(
                corpus, label_concepts, instances_per_topic, concepts_per_instance, task_seed,
                !overlap_labels);
            if (!labels.empty()) write_file(labels, task.labels);
            if (!instances.empty()) write_file(instances, task.instances);
            if (!gold.empty()) write_file(gold, task.gold);
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
