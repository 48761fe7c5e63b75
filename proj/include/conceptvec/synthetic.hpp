#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "conceptvec/boc.hpp"
#include "conceptvec/common.hpp"

namespace conceptvec {

// Deterministic generator for topic-clustered annotated corpora. Documents
// stick to one topic: its concepts co-occur with each other and with the
// topic's word pool, never with other topics. Handy for tests, benchmarks,
// and demo pipelines.

struct synthetic_spec {
    int topics = 3;
    int concepts_per_topic = 10;
    int docs = 400;
    int sentences_per_doc = 8;
    int words_per_topic = 30;
    int sentence_len_min = 8;
    int sentence_len_max = 16;
    double concept_prob = 0.4;    // chance a slot is a concept mention
    double alias_fraction = 0.0;  // fraction of mentions written via an alias id
    std::uint64_t seed = 42;
};

struct synthetic_corpus {
    std::string text;  // corpus file content
    std::vector<std::pair<std::string, std::string>> redirects;  // alias -> canonical
    std::vector<int> doc_topic;
    std::vector<std::vector<std::string>> topic_concepts;  // canonical ids per topic
};

namespace detail {

inline const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> words = {
        "the",  "a",    "of",    "to",      "and",  "in",    "is",    "was",  "for",  "on",
        "with", "as",   "by",    "at",      "from", "or",    "an",    "be",   "this", "that",
        "it",   "not",  "are",   "were",    "has",  "have",  "had",   "but",  "its",  "also",
        "into", "than", "then",  "over",    "after", "about", "under", "while", "where", "when",
        "which", "who", "more",  "most",    "some", "such",  "only",  "same", "so",   "now"};
    return words;
}

}  // namespace detail

inline synthetic_corpus make_synthetic_corpus(const synthetic_spec& spec) {
    if (spec.topics < 1 || spec.concepts_per_topic < 1 || spec.docs < 1)
        throw format_error("synthetic corpus needs at least one topic, concept, and document");
    synthetic_corpus out;
    out.topic_concepts.resize(static_cast<std::size_t>(spec.topics));
    std::vector<std::vector<std::string>> aliases(static_cast<std::size_t>(spec.topics));
    char buf[64];
    for (int t = 0; t < spec.topics; ++t) {
        for (int c = 0; c < spec.concepts_per_topic; ++c) {
            std::snprintf(buf, sizeof buf, "t%dc%02d", t, c);
            out.topic_concepts[static_cast<std::size_t>(t)].emplace_back(buf);
            if (spec.alias_fraction > 0.0) {
                std::string alias = std::string(buf) + "_alt";
                aliases[static_cast<std::size_t>(t)].push_back(alias);
                out.redirects.emplace_back(alias, buf);
            }
        }
    }

    rng_t rng(spec.seed);
    std::ostringstream text;
    const auto& filler = detail::filler_words();
    for (int d = 0; d < spec.docs; ++d) {
        const int topic = d % spec.topics;
        out.doc_topic.push_back(topic);
        const auto& concepts = out.topic_concepts[static_cast<std::size_t>(topic)];
        std::snprintf(buf, sizeof buf, "d%05d", d);
        text << "#doc " << buf << "\n";
        for (int s = 0; s < spec.sentences_per_doc; ++s) {
            const int len = spec.sentence_len_min +
                            static_cast<int>(uniform_index(
                                rng, static_cast<std::uint64_t>(spec.sentence_len_max -
                                                                spec.sentence_len_min + 1)));
            for (int p = 0; p < len; ++p) {
                if (p > 0) text << ' ';
                if (uniform01(rng) < spec.concept_prob) {
                    const std::size_t c =
                        static_cast<std::size_t>(uniform_index(rng, concepts.size()));
                    const bool use_alias =
                        spec.alias_fraction > 0.0 && uniform01(rng) < spec.alias_fraction;
                    const std::string& id =
                        use_alias ? aliases[static_cast<std::size_t>(topic)][c] : concepts[c];
                    text << "[[" << id << "|" << concepts[c] << "]]";
                } else if (uniform01(rng) < 0.55) {
                    std::snprintf(buf, sizeof buf, "t%dw%02d", topic,
                                  static_cast<int>(uniform_index(
                                      rng, static_cast<std::uint64_t>(spec.words_per_topic))));
                    text << buf;
                    if (uniform01(rng) < 0.08) text << ',';
                } else {
                    text << filler[static_cast<std::size_t>(uniform_index(rng, filler.size()))];
                }
            }
            text << (uniform01(rng) < 0.5 ? "." : "") << "\n";
        }
        text << "\n";
    }
    out.text = text.str();
    return out;
}

// Dataless-task files over a synthetic corpus: one label per topic built from
// the first label_concepts concepts, instances drawn from the rest (or from
// the whole pool when the label prefix is not excluded).
struct synthetic_dataless {
    std::string labels;     // BOC file content
    std::string instances;  // BOC file content
    std::string gold;       // TSV content
};

inline synthetic_dataless make_synthetic_dataless(const synthetic_corpus& corpus,
                                                  int label_concepts, int instances_per_topic,
                                                  int concepts_per_instance, std::uint64_t seed,
                                                  bool instances_disjoint_from_labels = true) {
    synthetic_dataless out;
    rng_t rng(seed);
    std::ostringstream labels, instances, gold;
    char buf[64];
    for (std::size_t t = 0; t < corpus.topic_concepts.size(); ++t) {
        const auto& pool = corpus.topic_concepts[t];
        const int lc = std::min<int>(label_concepts, static_cast<int>(pool.size()));
        labels << "topic" << t << '\t';
        for (int i = 0; i < lc; ++i)
            labels << (i ? " " : "") << pool[static_cast<std::size_t>(i)] << ':' << (lc - i);
        labels << '\n';

        const std::size_t lo =
            instances_disjoint_from_labels ? static_cast<std::size_t>(lc) : 0;
        if (lo >= pool.size())
            throw format_error("not enough concepts per topic for disjoint instances");
        std::vector<std::size_t> avail;
        for (std::size_t c = lo; c < pool.size(); ++c) avail.push_back(c);
        for (int k = 0; k < instances_per_topic; ++k) {
            std::snprintf(buf, sizeof buf, "x%zu_%03d", t, k);
            instances << buf << '\t';
            // Distinct concepts per instance: draw without replacement.
            const std::size_t take =
                std::min<std::size_t>(static_cast<std::size_t>(concepts_per_instance),
                                      avail.size());
            for (std::size_t j = 0; j < take; ++j) {
                const std::size_t pick =
                    j + static_cast<std::size_t>(uniform_index(rng, avail.size() - j));
                std::swap(avail[j], avail[pick]);
                if (j) instances << ' ';
                char wbuf[32];
                std::snprintf(wbuf, sizeof wbuf, "%.4f", 0.5 + 1.5 * uniform01(rng));
                instances << pool[avail[j]] << ':' << wbuf;
            }
            instances << '\n';
            gold << buf << "\ttopic" << t << '\n';
        }
    }
    out.labels = labels.str();
    out.instances = instances.str();
    out.gold = gold.str();
    return out;
}

}  // namespace conceptvec
