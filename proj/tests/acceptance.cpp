// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Invoked as: acceptance <cli-binary> <work-dir>.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "covec/predict.hpp"
#include "covec/query.hpp"
#include "covec/synth.hpp"
#include "covec/trainer.hpp"
#include "grad_check.hpp"

using namespace covec;

namespace {

int failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail) {
    std::printf("%s %2d %-22s %s\n", ok ? "PASS" : "FAIL", idx, name,
                detail.c_str());
    std::fflush(stdout);
    failures += !ok;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

std::string fmt(const char* f, ...) {
    va_list args;
    va_start(args, f);
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

// --- 1: analytic gradients vs central finite differences -------------------

void check_gradients() {
    auto start = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t vocab_size = 2 + rng.next_below(9); // <= 10
        std::size_t dim = 2 + rng.next_below(7);        // <= 8
        auto model = gradcheck::random_tiny_model(rng, vocab_size, dim);
        auto pair = gradcheck::random_pair(rng, vocab_size);
        if (trial % 2 == 0) {
            auto grads = sgns_gradients(model, pair.target, pair.context,
                                        pair.negatives);
            worst = std::max(
                worst, gradcheck::max_gradient_error(
                           model, grads, [&](const EmbeddingModel& m) {
                               return sgns_loss(m, pair.target, pair.context,
                                                pair.negatives);
                           }));
        } else {
            auto grads = cbow_gradients(model, pair.target, pair.cbow_context,
                                        pair.negatives);
            worst = std::max(
                worst, gradcheck::max_gradient_error(
                           model, grads, [&](const EmbeddingModel& m) {
                               return cbow_loss(m, pair.target,
                                                pair.cbow_context,
                                                pair.negatives);
                           }));
        }
    }
    double elapsed = seconds_since(start);
    report(1, "gradient-check", worst < 1e-5 && elapsed < 10.0,
           fmt("max_rel_err=%.3g limit=1e-5 (%.1fs, limit 10s)", worst,
               elapsed));
}

// --- 2: zero-vector loss closed form ---------------------------------------

void check_zero_loss() {
    Rng rng(7);
    auto model = gradcheck::random_tiny_model(rng, 6, 4);
    std::fill(model.target_vectors.begin(), model.target_vectors.end(), 0.0f);
    std::fill(model.context_vectors.begin(), model.context_vectors.end(), 0.0f);
    double worst = 0.0;
    for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{5},
                          std::size_t{20}}) {
        std::vector<std::uint32_t> negatives(n, 2);
        double loss = sgns_loss(model, 0, 1, negatives);
        double expected = (static_cast<double>(n) + 1.0) * std::log(2.0);
        worst = std::max(worst, std::abs(loss - expected));
    }
    report(2, "zero-vector-loss", worst < 1e-9,
           fmt("max_abs_err=%.3g limit=1e-9", worst));
}

// --- 3: empirical negative-sampler frequencies -----------------------------

void check_sampler() {
    auto start = std::chrono::steady_clock::now();
    EntityVocabulary vocab;
    std::vector<std::uint64_t> counts{50, 40, 30, 20, 10};
    for (std::size_t i = 0; i < counts.size(); ++i) {
        std::string id = "e" + std::to_string(i);
        vocab.index.emplace(id, static_cast<std::uint32_t>(i));
        vocab.entities.push_back(std::move(id));
        vocab.counts.push_back(counts[i]);
    }
    SamplerTable table(vocab, 0.75);
    const std::size_t draws = 1000000;
    std::vector<std::size_t> hits(counts.size(), 0);
    Rng rng(33);
    for (std::size_t i = 0; i < draws; ++i)
        ++hits[table.sample(rng)];
    double worst = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        double p = table.prob(i);
        if (p < 0.01)
            continue;
        double empirical =
            static_cast<double>(hits[i]) / static_cast<double>(draws);
        worst = std::max(worst, std::abs(empirical - p) / p);
    }
    double elapsed = seconds_since(start);
    report(3, "sampler-fidelity", worst < 0.01 && elapsed < 5.0,
           fmt("max_rel_err=%.4f limit=0.01 (%.1fs, limit 5s)", worst,
               elapsed));
}

// --- shared training helper -------------------------------------------------

struct TrainedBenchmark {
    SynthData data;
    EmbeddingModel model;
    double train_seconds = 0.0;
};

TrainedBenchmark train_preset(const SynthConfig& config) {
    TrainedBenchmark out;
    out.data = generate(config);
    auto vocab = select_entities(compute_popularity(out.data.graph), 1);
    auto corpus = build_contexts(out.data.graph, vocab);
    out.model = init_model(std::move(vocab), benchmark_train_config());
    auto start = std::chrono::steady_clock::now();
    train(out.model, corpus);
    out.train_seconds = seconds_since(start);
    return out;
}

// --- 4 + 5: community recovery and oracle agreement -------------------------

void check_recovery_and_oracle() {
    auto bench = train_preset(default_benchmark());
    auto rec = evaluate_recovery(bench.model, bench.data);
    double sep = rec.intra_cosine - rec.inter_cosine;
    report(4, "community-recovery",
           sep >= 0.3 && rec.top3_in_community >= 0.9 &&
               bench.train_seconds < 60.0,
           fmt("intra-inter=%.3f (>=0.3) top3=%.3f (>=0.9) (%.1fs, limit 60s)",
               sep, rec.top3_in_community, bench.train_seconds));

    PpmiOracle oracle(bench.data.graph, bench.model.vocab);
    std::size_t agree = 0, total = 0;
    for (const auto& id : bench.model.vocab.entities) {
        auto trained = nearest(bench.model, id, 1);
        auto counted = oracle.neighbors(id, 1);
        if (trained.empty() || counted.empty())
            continue;
        ++total;
        agree += trained[0].id == counted[0].id;
    }
    double rate = total ? static_cast<double>(agree) /
                              static_cast<double>(total)
                        : 0.0;
    report(5, "oracle-agreement", rate >= 0.6,
           fmt("top1_agreement=%.3f (>=0.6, n=%zu)", rate, total));
}

// --- 6: planted polarity -----------------------------------------------------

void check_polarity() {
    auto bench = train_preset(polarity_benchmark());
    auto rec = evaluate_recovery(bench.model, bench.data);
    report(6, "political-polarity",
           rec.polarity_sign_accuracy >= 0.95 && rec.spectrum_spearman >= 0.9,
           fmt("sign_acc=%.3f (>=0.95) spectrum_spearman=%.3f (>=0.9)",
               rec.polarity_sign_accuracy, rec.spectrum_spearman));
}

// --- 7: trait prediction and permutation control -----------------------------

LabeledUserDataset dataset_from(const SynthData& data) {
    LabeledUserDataset ds;
    const auto& truth = data.truth;
    for (std::size_t u = 0; u < truth.user_ids.size(); ++u) {
        LabeledUser row;
        row.user = truth.user_ids[u];
        const auto& followed = data.graph.edges.at(truth.user_ids[u]);
        if (followed.empty())
            continue;
        row.follows.assign(followed.begin(), followed.end());
        std::sort(row.follows.begin(), row.follows.end());
        for (const auto& [trait, labels] : truth.trait_labels)
            row.labels[trait] = labels[u];
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

void check_traits() {
    auto bench = train_preset(trait_benchmark());
    auto rec = evaluate_recovery(bench.model, bench.data);
    double auc = rec.trait_auc.at("planted");

    auto ds = dataset_from(bench.data);
    double lo = 1.0, hi = 0.0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        auto permuted = ds;
        Rng rng(mix_seed(1234, s));
        for (std::size_t i = permuted.rows.size() - 1; i > 0; --i) {
            std::size_t j = rng.next_below(i + 1);
            std::swap(permuted.rows[i].labels.at("planted"),
                      permuted.rows[j].labels.at("planted"));
        }
        auto split = split_dataset(permuted, "planted", 0.8, s);
        auto clf = train_classifier(permuted, split.train, "planted",
                                    bench.model);
        double perm_auc =
            evaluate_auc(clf, permuted, split.test, "planted", bench.model).auc;
        lo = std::min(lo, perm_auc);
        hi = std::max(hi, perm_auc);
    }
    report(7, "trait-prediction",
           auc >= 0.9 && lo >= 0.4 && hi <= 0.6,
           fmt("auc=%.3f (>=0.9) permuted range [%.3f, %.3f] (within [0.4, "
               "0.6] over 10 seeds)",
               auc, lo, hi));
}

// --- 8: PMI equals an independent counting oracle ----------------------------

void check_pmi_exactness() {
    Rng rng(55);
    bool all_equal = true;
    std::size_t compared = 0;
    for (int trial = 0; trial < 50; ++trial) {
        LabeledUserDataset ds;
        std::size_t users = 10 + rng.next_below(91); // <= 100
        std::size_t entities = 3 + rng.next_below(12);
        for (std::size_t u = 0; u < users; ++u) {
            LabeledUser row;
            row.user = "u" + std::to_string(u);
            for (std::size_t e = 0; e < entities; ++e)
                if (rng.next_double() < 0.3)
                    row.follows.push_back("e" + std::to_string(e));
            if (row.follows.empty())
                row.follows.push_back("e0");
            std::sort(row.follows.begin(), row.follows.end());
            row.labels["t"] = rng.next_below(2) == 0 ? 0 : 1;
            ds.rows.push_back(std::move(row));
        }
        ds.rows[0].labels["t"] = 0; // both classes always present
        ds.rows[1].labels["t"] = 1;
        for (std::size_t e = 0; e < entities; ++e) {
            std::string id = "e" + std::to_string(e);
            for (int value : {0, 1}) {
                double n = 0, n_e = 0, n_c = 0, n_ec = 0;
                for (const auto& row : ds.rows) {
                    ++n;
                    bool follows = std::binary_search(row.follows.begin(),
                                                      row.follows.end(), id);
                    bool in_class = row.labels.at("t") == value;
                    n_e += follows;
                    n_c += in_class;
                    n_ec += follows && in_class;
                }
                if (n_e < 1)
                    continue;
                double expected =
                    n_ec == 0 ? kNeverCoOccurs
                              : std::log(n_ec * n / (n_e * n_c));
                ++compared;
                all_equal &= pmi(id, "t", value, ds, 1) == expected;
            }
        }
    }
    report(8, "pmi-exactness", all_equal,
           fmt("%zu entity/class pairs across 50 datasets, exact match: %s",
               compared, all_equal ? "yes" : "no"));
}

// --- 9: spearman unit values -------------------------------------------------

void check_spearman_units() {
    double a = spearman({1, 2, 3}, {10, 20, 30});
    double b = spearman({1, 2, 3}, {30, 20, 10});
    double c = spearman({1, 2, 3}, {2, 1, 3});
    bool ok = std::abs(a - 1.0) < 1e-12 && std::abs(b + 1.0) < 1e-12 &&
              std::abs(c - 0.5) < 1e-12;
    report(9, "spearman-units", ok,
           fmt("identical=%.3f reversed=%.3f swapped=%.3f", a, b, c));
}

// --- 10: bitwise-reproducible CLI pipeline -----------------------------------

void check_determinism(const std::string& cli, const std::string& work) {
    auto run_pipeline = [&](const std::string& dir) {
        std::filesystem::create_directories(dir + "/data");
        std::vector<std::string> commands{
            cli + " synth-gen --out " + dir + "/data --preset polarity --seed 7"
                " > " + dir + "/synth.txt 2>/dev/null",
            cli + " build-vocab --edges " + dir + "/data/edges.tsv --out " +
                dir + "/vocab.tsv --threshold 1 > /dev/null 2>&1",
            cli + " build-corpus --edges " + dir + "/data/edges.tsv --vocab " +
                dir + "/vocab.tsv --out " + dir + "/corpus.bin > /dev/null 2>&1",
            cli + " train --corpus " + dir + "/corpus.bin --vocab " + dir +
                "/vocab.tsv --out " + dir + "/emb.bin --format binary"
                " --dim 16 --epochs 2 --negatives 5 --downsample 0 --seed 9"
                " --workers 1 > /dev/null 2>&1",
            cli + " bench --preset default --seed 7 --workers 1 > " + dir +
                "/bench.txt 2>/dev/null",
        };
        for (const auto& cmd : commands)
            if (std::system(cmd.c_str()) != 0)
                return false;
        return true;
    };
    bool ran = run_pipeline(work + "/r1") && run_pipeline(work + "/r2");
    bool identical = ran;
    // synth.txt is excluded: it echoes the differing output directory.
    const char* files[] = {"/data/edges.tsv", "/vocab.tsv", "/corpus.bin",
                           "/emb.bin", "/bench.txt"};
    if (ran)
        for (const char* f : files)
            identical &= read_file(work + "/r1" + f) ==
                         read_file(work + "/r2" + f);
    report(10, "pipeline-determinism", identical,
           ran ? (identical ? std::string("two runs byte-identical "
                                          "(edges, vocab, corpus, embeddings, "
                                          "bench report)")
                            : std::string("runs differ"))
               : std::string("pipeline command failed"));
}

// --- 11: throughput and multi-worker scaling ---------------------------------

void check_performance() {
    // Part A: single-worker pair-update throughput at dim=100.
    auto data = generate(default_benchmark());
    auto vocab = select_entities(compute_popularity(data.graph), 1);
    auto corpus = build_contexts(data.graph, vocab);
    TrainConfig config; // library defaults: dim=100, 20 negatives
    config.downsample_t = 0.0;
    config.epochs = 1;
    config.seed = 7;
    auto model = init_model(std::move(vocab), config);
    auto result = train(model, corpus);
    double single_rate = static_cast<double>(result.updates) / result.seconds;

    // Part B: 4-worker scaling on the default benchmark at 20k users.
    SynthConfig scaled = default_benchmark();
    for (auto& c : scaled.communities)
        c.num_users = 5000;
    auto scaled_data = generate(scaled);
    auto scaled_vocab = select_entities(compute_popularity(scaled_data.graph), 1);
    auto scaled_corpus = build_contexts(scaled_data.graph, scaled_vocab);
    auto bench_config = benchmark_train_config();
    bench_config.epochs = 1;
    double rates[2] = {0.0, 0.0};
    std::size_t workers[2] = {1, 4};
    for (int i = 0; i < 2; ++i) {
        auto cfg = bench_config;
        cfg.workers = workers[i];
        auto m = init_model(scaled_vocab, cfg);
        auto r = train(m, scaled_corpus);
        rates[i] = static_cast<double>(r.updates) / r.seconds;
    }
    double speedup = rates[1] / rates[0];
    bool ok = single_rate >= 200000.0 && speedup >= 2.5;
    report(11, "throughput", ok,
           fmt("single=%.0f pair-updates/s (>=200k) 4-worker speedup=%.2fx "
               "(>=2.5x, %u cores detected)",
               single_rate, speedup, std::thread::hardware_concurrency()));
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: acceptance <cli-binary> <work-dir>\n");
        return 2;
    }
    std::string cli = argv[1];
    std::string work = argv[2];
    std::filesystem::create_directories(work);

    check_gradients();
    check_zero_loss();
    check_sampler();
    check_recovery_and_oracle();
    check_polarity();
    check_traits();
    check_pmi_exactness();
    check_spearman_units();
    check_determinism(cli, work);
    check_performance();

    std::printf("%s: %d of 11 criteria failed\n",
                failures ? "FAILED" : "OK", failures);
    return failures ? 1 : 0;
}
