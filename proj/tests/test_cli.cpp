#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "conceptvec/embedding.hpp"
#include "conceptvec/synthetic.hpp"
#include "support/tempfile.hpp"

using namespace conceptvec;

namespace {

struct cmd_result {
    int code;
    std::string out;
    std::string err;
};

cmd_result run_cli(const std::string& args) {
    static int counter = 0;
    static testgen::temp_dir io("conceptvec_cli_io");
    const std::string out_path = io.file("out" + std::to_string(counter));
    const std::string err_path = io.file("err" + std::to_string(counter));
    ++counter;
    const std::string cmd =
        std::string(CONCEPTVEC_BIN) + " " + args + " >" + out_path + " 2>" + err_path;
    const int raw = std::system(cmd.c_str());
    cmd_result result;
    result.code = WEXITSTATUS(raw);
    result.out = testgen::read_bytes(out_path);
    result.err = testgen::read_bytes(err_path);
    return result;
}

// Small corpus + task files shared by the CLI tests.
struct cli_fixture {
    testgen::temp_dir tmp;
    std::string corpus, redirects, labels, instances, gold;

    cli_fixture() {
        synthetic_spec spec;
        spec.topics = 2;
        spec.concepts_per_topic = 8;
        spec.docs = 80;
        spec.sentences_per_doc = 5;
        spec.concept_prob = 0.5;
        spec.alias_fraction = 0.2;
        spec.seed = 5;
        const auto c = make_synthetic_corpus(spec);
        corpus = tmp.file("corpus.txt");
        testgen::write_text(corpus, c.text);
        redirects = tmp.file("redirects.tsv");
        std::string tsv;
        for (const auto& [a, b] : c.redirects) tsv += a + "\t" + b + "\n";
        testgen::write_text(redirects, tsv);
        const auto task = make_synthetic_dataless(c, 3, 10, 4, 9);
        labels = tmp.file("labels.boc");
        instances = tmp.file("instances.boc");
        gold = tmp.file("gold.tsv");
        testgen::write_text(labels, task.labels);
        testgen::write_text(instances, task.instances);
        testgen::write_text(gold, task.gold);
    }
};

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("build-vocab in 3c mode keeps only concept keys") {
    cli_fixture fx;
    const auto vocab_path = fx.tmp.file("vocab3c.tsv");
    const auto r = run_cli("build-vocab --corpus " + fx.corpus + " --redirects " + fx.redirects +
                           " --out " + vocab_path + " --mode 3c");
    REQUIRE(r.code == 0);
    std::ifstream in(vocab_path);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.find("\tconcept\tc:") != std::string::npos);
        CHECK(line.find("_alt") == std::string::npos);  // aliases normalized away
    }
    CHECK(rows == 16);
}

TEST_CASE("build-vocab with an unreachable min count exits 1") {
    cli_fixture fx;
    const auto r = run_cli("build-vocab --corpus " + fx.corpus + " --out " +
                           fx.tmp.file("v.tsv") + " --min-count 100000 --mode crc" +
                           " --min-count-concepts 100000");
    CHECK(r.code == 1);
    CHECK(r.err.find("empty vocabulary") != std::string::npos);
}

TEST_CASE("build-vocab twice produces byte-identical files") {
    cli_fixture fx;
    const auto v1 = fx.tmp.file("v1.tsv");
    const auto v2 = fx.tmp.file("v2.tsv");
    REQUIRE(run_cli("build-vocab --corpus " + fx.corpus + " --out " + v1 + " --mode crc").code == 0);
    REQUIRE(run_cli("build-vocab --corpus " + fx.corpus + " --out " + v2 + " --mode crc").code == 0);
    CHECK(testgen::read_bytes(v1) == testgen::read_bytes(v2));
    CHECK(!testgen::read_bytes(v1).empty());
}

TEST_CASE("unreadable inputs exit 2") {
    const auto r = run_cli("build-vocab --corpus /nonexistent/x.txt --out /tmp/v.tsv");
    CHECK(r.code == 2);
}

TEST_CASE("unknown flags exit 2") {
    CHECK(run_cli("build-vocab --no-such-flag").code == 2);
}

TEST_CASE("train echoes its defaults and is seed-reproducible") {
    cli_fixture fx;
    const auto vocab_path = fx.tmp.file("vocab.tsv");
    REQUIRE(run_cli("build-vocab --corpus " + fx.corpus + " --redirects " + fx.redirects +
                    " --out " + vocab_path + " --mode crc --min-count 1")
                .code == 0);

    const auto e1 = fx.tmp.file("e1.cvec");
    const auto r1 = run_cli("train --corpus " + fx.corpus + " --redirects " + fx.redirects +
                            " --vocab " + vocab_path + " --out " + e1 +
                            " --model crc --workers 1 --seed 7");
    REQUIRE(r1.code == 0);
    CHECK(r1.err.find("dim=500") != std::string::npos);
    CHECK(r1.err.find("window=9") != std::string::npos);
    CHECK(r1.err.find("epochs=10") != std::string::npos);
    CHECK(r1.err.find("tokens/s") != std::string::npos);

    const auto e2 = fx.tmp.file("e2.cvec");
    REQUIRE(run_cli("train --corpus " + fx.corpus + " --redirects " + fx.redirects + " --vocab " +
                    vocab_path + " --out " + e2 + " --model crc --workers 1 --seed 7")
                .code == 0);
    CHECK(testgen::read_bytes(e1) == testgen::read_bytes(e2));
}

TEST_CASE("3c training runs the full pipeline and loads back") {
    cli_fixture fx;
    const auto vocab_path = fx.tmp.file("vocab3c.tsv");
    REQUIRE(run_cli("build-vocab --corpus " + fx.corpus + " --redirects " + fx.redirects +
                    " --out " + vocab_path + " --mode 3c")
                .code == 0);
    const auto emb = fx.tmp.file("emb3c.cvec");
    const auto r = run_cli("train --corpus " + fx.corpus + " --redirects " + fx.redirects +
                           " --vocab " + vocab_path + " --out " + emb +
                           " --model 3c --dim 16 --window 3 --epochs 2 --seed 3");
    REQUIRE(r.code == 0);
    const auto store = embedding_store::load(emb);
    CHECK(store.dim() == 16);
    CHECK(store.size() == 16);
    CHECK(store.row_of(token_kind::concept_mention, "t0c00") >= 0);
}

TEST_CASE("training a vocabulary that misses the corpus exits 1") {
    cli_fixture fx;
    const auto vocab_path = fx.tmp.file("foreign.tsv");
    testgen::write_text(vocab_path, "0\tword\tzzzzz\t10\n");
    const auto r = run_cli("train --corpus " + fx.corpus + " --vocab " + vocab_path + " --out " +
                           fx.tmp.file("e.cvec") + " --dim 4 --epochs 1");
    CHECK(r.code == 1);
    CHECK(r.err.find("nothing to train on") != std::string::npos);
}

namespace {

// Trains a small 3c model once for the downstream command tests.
struct trained_fixture : cli_fixture {
    std::string emb;

    trained_fixture() {
        const auto vocab_path = tmp.file("vocab3c.tsv");
        REQUIRE(run_cli("build-vocab --corpus " + corpus + " --redirects " + redirects +
                        " --out " + vocab_path + " --mode 3c")
                    .code == 0);
        emb = tmp.file("emb3c.cvec");
        REQUIRE(run_cli("train --corpus " + corpus + " --redirects " + redirects + " --vocab " +
                        vocab_path + " --out " + emb +
                        " --model 3c --dim 16 --window 4 --epochs 6 --seed 3")
                    .code == 0);
    }
};

}  // namespace

TEST_CASE("densify writes one dense row per embeddable record") {
    trained_fixture fx;
    const auto out = fx.tmp.file("dense.txt");
    const auto r = run_cli("densify --boc " + fx.instances + " --embeddings " + fx.emb +
                           " --out " + out + " --format text");
    REQUIRE(r.code == 0);
    const auto dense = embedding_file::load(out);
    CHECK(dense.dim == 16);
    CHECK(dense.keys.size() == 20);  // 10 instances per topic, 2 topics

    const auto ghost_boc = fx.tmp.file("ghost.boc");
    testgen::write_text(ghost_boc, "g1\tnope:1.0\n");
    CHECK(run_cli("densify --boc " + ghost_boc + " --embeddings " + fx.emb + " --out " +
                  fx.tmp.file("g.txt"))
              .code == 1);
}

TEST_CASE("sim prints 1 for a key against itself") {
    trained_fixture fx;
    const auto r = run_cli("sim --embeddings " + fx.emb + " --a c:t0c00 --b c:t0c00");
    REQUIRE(r.code == 0);
    CHECK(std::stod(r.out) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("sim works across all mechanisms on boc records") {
    trained_fixture fx;
    for (const std::string mech : {"dense", "sparse", "max", "hungarian"}) {
        const auto r = run_cli("sim --embeddings " + fx.emb + " --boc-file " + fx.labels +
                               " --boc-a topic0 --boc-b topic0 --mechanism " + mech);
        REQUIRE(r.code == 0);
        CHECK(std::stod(r.out) == Catch::Approx(1.0).margin(1e-5));
    }
    // self-similarity under many-to-many averages all cross pairs, so it
    // lands below 1 but stays high for a tight cluster
    const auto many = run_cli("sim --embeddings " + fx.emb + " --boc-file " + fx.labels +
                              " --boc-a topic0 --boc-b topic0 --mechanism many");
    REQUIRE(many.code == 0);
    CHECK(std::stod(many.out) > 0.5);
    CHECK(std::stod(many.out) <= 1.0);
    // sparse needs no embeddings at all
    const auto r = run_cli("sim --boc-file " + fx.labels +
                           " --boc-a topic0 --boc-b topic1 --mechanism sparse");
    REQUIRE(r.code == 0);
    CHECK(std::stod(r.out) == 0.0);
}

TEST_CASE("sim usage errors exit 2, missing keys exit 1") {
    trained_fixture fx;
    CHECK(run_cli("sim --embeddings " + fx.emb + " --a c:t0c00 --boc-a topic0").code == 2);
    CHECK(run_cli("sim --embeddings " + fx.emb).code == 2);
    CHECK(run_cli("sim --embeddings " + fx.emb + " --a c:t0c00 --b c:ghost").code == 1);
}

TEST_CASE("eval-relatedness reproduces hand-computed metrics") {
    testgen::temp_dir tmp;
    // embeddings chosen so q1 ranks [a, b] and q2 ranks [d, c]
    const auto emb = tmp.file("emb.txt");
    testgen::write_text(emb,
                        "6 2\nc:q1 1 0\nc:a 1 0\nc:b 0 1\nc:q2 0 1\nc:c 0.9 0.45\nc:d 0.1 1\n");
    const auto dataset = tmp.file("rel.tsv");
    testgen::write_text(dataset, "q1\ta\t1\nq1\tb\t0\nq2\tc\t1\nq2\td\t0\n");
    const auto csv = tmp.file("rel.csv");
    const auto r = run_cli("eval-relatedness --dataset " + dataset + " --embeddings " + emb +
                           " --csv " + csv);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("0.5000") != std::string::npos);   // nDCG@1 = (1+0)/2
    CHECK(r.out.find("0.7500") != std::string::npos);   // MAP = (1+0.5)/2
    const auto csv_text = testgen::read_bytes(csv);
    CHECK(csv_text.find("metric,strategy,n,value\n") == 0);
    CHECK(csv_text.find("ndcg@1,cosine,,0.500000") != std::string::npos);
    CHECK(csv_text.find("map,cosine,,0.750000") != std::string::npos);
}

TEST_CASE("eval-dataless sweep emits one row per dimension") {
    trained_fixture fx;
    const auto r = run_cli("eval-dataless --labels " + fx.labels + " --instances " +
                           fx.instances + " --gold " + fx.gold +
                           " --strategy sparse --sweep 1,5,10");
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "metric,strategy,n,value");
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        CHECK(line.rfind("micro_f1,sparse,", 0) == 0);
        const double value = std::stod(line.substr(line.rfind(',') + 1));
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);
    }
    CHECK(rows == 3);
    CHECK(count_lines(r.out) == 4);
}

TEST_CASE("eval-dataless with the densified strategy beats chance on clustered data") {
    trained_fixture fx;
    const auto out = fx.tmp.file("dataless.csv");
    const auto r = run_cli("eval-dataless --labels " + fx.labels + " --instances " +
                           fx.instances + " --gold " + fx.gold + " --embeddings " + fx.emb +
                           " --strategy dense --out " + out);
    REQUIRE(r.code == 0);
    const auto csv = testgen::read_bytes(out);
    REQUIRE(csv.rfind("metric,strategy,n,value\nmicro_f1,dense,,", 0) == 0);
    const double f1 = std::stod(csv.substr(csv.rfind(',') + 1));
    CHECK(f1 >= 0.9);  // labels and instances draw from disjoint same-cluster concepts
}

TEST_CASE("strategies that need embeddings reject their absence") {
    cli_fixture fx;
    const auto r = run_cli("eval-dataless --labels " + fx.labels + " --instances " +
                           fx.instances + " --gold " + fx.gold + " --strategy dense");
    CHECK(r.code == 2);
}

TEST_CASE("CONCEPTVEC_LOG=quiet silences informational output") {
    cli_fixture fx;
    const auto vocab_path = fx.tmp.file("vq.tsv");
    const auto r = run_cli("build-vocab --corpus " + fx.corpus + " --out " + vocab_path +
                           " --mode 3c");
    CHECK(r.err.find("[info]") != std::string::npos);
    const std::string quiet_cmd = "CONCEPTVEC_LOG=quiet " + std::string(CONCEPTVEC_BIN) +
                                  " build-vocab --corpus " + fx.corpus + " --out " + vocab_path +
                                  " --mode 3c 2>&1 >/dev/null";
    FILE* pipe = popen(quiet_cmd.c_str(), "r");
    REQUIRE(pipe);
    char buf[256];
    std::string err;
    while (fgets(buf, sizeof buf, pipe)) err += buf;
    CHECK(pclose(pipe) == 0);
    CHECK(err.find("[info]") == std::string::npos);
}

TEST_CASE("invalid training parameters exit 2") {
    cli_fixture fx;
    const auto vocab_path = fx.tmp.file("v.tsv");
    REQUIRE(run_cli("build-vocab --corpus " + fx.corpus + " --out " + vocab_path +
                    " --mode 3c")
                .code == 0);
    const std::string base = "train --corpus " + fx.corpus + " --vocab " + vocab_path +
                             " --out " + fx.tmp.file("e.cvec") + " --model 3c";
    CHECK(run_cli(base + " --lr 0").code == 2);
    CHECK(run_cli(base + " --dim 0").code == 2);
    CHECK(run_cli(base + " --window 0").code == 2);
    CHECK(run_cli(base + " --model nope").code == 2);
}

TEST_CASE("densify writes loadable binary output too") {
    trained_fixture fx;
    const auto out = fx.tmp.file("dense.cvec");
    REQUIRE(run_cli("densify --boc " + fx.labels + " --embeddings " + fx.emb + " --out " + out +
                    " --format bin")
                .code == 0);
    const auto dense = embedding_file::load(out);
    CHECK(dense.keys.size() == 2);
    CHECK(dense.dim == 16);
    CHECK(dense.keys[0] == "topic0");
}

TEST_CASE("config file values apply and flags win") {
    cli_fixture fx;
    const auto vocab_path = fx.tmp.file("vocab.tsv");
    REQUIRE(run_cli("build-vocab --corpus " + fx.corpus + " --out " + vocab_path +
                    " --mode crc --min-count 1")
                .code == 0);
    const auto cfg = fx.tmp.file("run.conf");
    testgen::write_text(cfg, "[train]\ndim=12\nepochs=1\nwindow=2\n");
    const auto r1 = run_cli("--config " + cfg + " train --corpus " + fx.corpus + " --vocab " +
                            vocab_path + " --out " + fx.tmp.file("c1.cvec"));
    REQUIRE(r1.code == 0);
    CHECK(r1.err.find("dim=12") != std::string::npos);
    const auto r2 = run_cli("--config " + cfg + " train --corpus " + fx.corpus + " --vocab " +
                            vocab_path + " --out " + fx.tmp.file("c2.cvec") + " --dim 6");
    REQUIRE(r2.code == 0);
    CHECK(r2.err.find("dim=6") != std::string::npos);
}
