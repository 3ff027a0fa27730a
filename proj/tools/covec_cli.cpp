// covec command line: end-to-end pipeline from follower edge lists to
// trained entity embeddings, queries, and evaluation reports.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covec/corpus.hpp"
#include "covec/graph.hpp"
#include "covec/predict.hpp"
#include "covec/query.hpp"
#include "covec/synth.hpp"
#include "covec/trainer.hpp"

namespace {

covec::EmbFormat parse_format(const std::string& s) {
    if (s == "text")
        return covec::EmbFormat::Text;
    if (s == "binary")
        return covec::EmbFormat::Binary;
    throw covec::ConfigError("unknown embedding format: " + s);
}

covec::TrainMode parse_mode(const std::string& s) {
    if (s == "sgns")
        return covec::TrainMode::Sgns;
    if (s == "cbow")
        return covec::TrainMode::Cbow;
    throw covec::ConfigError("unknown training mode: " + s);
}

covec::SynthConfig parse_preset(const std::string& s) {
    if (s == "default")
        return covec::default_benchmark();
    if (s == "polarity")
        return covec::polarity_benchmark();
    if (s == "traits")
        return covec::trait_benchmark();
    throw covec::ConfigError("unknown synth preset: " + s);
}

struct TrainFlags {
    std::size_t dim = 100;
    std::size_t negatives = 20;
    float initial_lr = 0.03f;
    float min_lr = 0.0007f;
    double downsample_t = 1e-5;
    std::size_t epochs = 5;
    std::string mode = "sgns";
    double power = 0.75;
    std::uint64_t seed = 1;
    std::size_t workers = 1;

    covec::TrainConfig to_config() const {
        covec::TrainConfig cfg;
        cfg.dim = dim;
        cfg.negatives = negatives;
        cfg.initial_lr = initial_lr;
        cfg.min_lr = min_lr;
        cfg.downsample_t = downsample_t;
        cfg.epochs = epochs;
        cfg.mode = parse_mode(mode);
        cfg.sampling_power = power;
        cfg.seed = seed;
        cfg.workers = workers;
        return cfg;
    }
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--dim", f.dim, "Embedding dimension");
    cmd->add_option("--negatives", f.negatives, "Negative samples per pair");
    cmd->add_option("--lr", f.initial_lr, "Initial learning rate");
    cmd->add_option("--min-lr", f.min_lr, "Final learning rate");
    cmd->add_option("--downsample", f.downsample_t,
                    "Frequency downsampling threshold (0 disables)");
    cmd->add_option("--epochs", f.epochs, "Training epochs");
    cmd->add_option("--mode", f.mode, "sgns or cbow");
    cmd->add_option("--power", f.power, "Negative-sampling distribution power");
    cmd->add_option("--seed", f.seed, "Random seed");
    cmd->add_option("--workers", f.workers, "Training threads");
}

void print_recovery(const covec::RecoveryReport& report) {
    std::printf("intra_cosine        %.4f\n", report.intra_cosine);
    std::printf("inter_cosine        %.4f\n", report.inter_cosine);
    std::printf("intra_minus_inter   %.4f\n",
                report.intra_cosine - report.inter_cosine);
    std::printf("top3_in_community   %.4f\n", report.top3_in_community);
    if (report.has_polarity) {
        std::printf("polarity_sign_acc   %.4f\n",
                    report.polarity_sign_accuracy);
        std::printf("spectrum_spearman   %.4f\n", report.spectrum_spearman);
    }
    for (const auto& [trait, auc] : report.trait_auc)
        std::printf("trait_auc %-10s %.4f\n", trait.c_str(), auc);
}

int run(int argc, char** argv) {
    CLI::App app{"Social entity embeddings from follower graphs"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value file");

    // build-vocab
    auto* build_vocab = app.add_subcommand(
        "build-vocab", "Select popular accounts as entities");
    std::string bv_edges, bv_out;
    std::uint64_t bv_threshold = 350;
    bool bv_strict = false;
    build_vocab->add_option("--edges", bv_edges, "Edge list (user<TAB>account)")
        ->required();
    build_vocab->add_option("--out", bv_out, "Output vocabulary TSV")->required();
    build_vocab->add_option("--threshold", bv_threshold,
                            "Follower-count threshold K");
    build_vocab->add_flag("--strict", bv_strict,
                          "Require count > K instead of count >= K");

    // build-corpus
    auto* build_corpus = app.add_subcommand(
        "build-corpus", "Convert the follow graph to anonymous entity contexts");
    std::string bc_edges, bc_vocab, bc_out;
    std::size_t bc_min = 2, bc_max = 0;
    build_corpus->add_option("--edges", bc_edges, "Edge list")->required();
    build_corpus->add_option("--vocab", bc_vocab, "Vocabulary TSV")->required();
    build_corpus->add_option("--out", bc_out, "Output corpus file")->required();
    build_corpus->add_option("--min-entities", bc_min,
                             "Drop users following fewer entities");
    build_corpus->add_option("--max-entities", bc_max,
                             "Cap context length (0 = unlimited)");

    // stats
    auto* stats = app.add_subcommand("stats", "Print corpus statistics");
    std::string st_corpus;
    stats->add_option("--corpus", st_corpus, "Corpus file")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Learn entity embeddings");
    std::string tr_corpus, tr_vocab, tr_out, tr_format = "text";
    TrainFlags tr_flags;
    train_cmd->add_option("--corpus", tr_corpus, "Corpus file")->required();
    train_cmd->add_option("--vocab", tr_vocab, "Vocabulary TSV")->required();
    train_cmd->add_option("--out", tr_out, "Output embeddings")->required();
    train_cmd->add_option("--format", tr_format, "text or binary");
    add_train_flags(train_cmd, tr_flags);

    // shared query flags
    std::string q_embeddings, q_format = "text";
    auto add_emb_flags = [&](CLI::App* cmd) {
        cmd->add_option("--embeddings", q_embeddings, "Embeddings file")
            ->required();
        cmd->add_option("--format", q_format, "text or binary");
    };

    // nearest
    auto* nearest_cmd = app.add_subcommand("nearest", "Top-k similar entities");
    std::string nn_query;
    std::size_t nn_k = 10;
    nearest_cmd->add_option("id", nn_query, "Query entity")->required();
    nearest_cmd->add_option("-k", nn_k, "Number of neighbors");
    add_emb_flags(nearest_cmd);

    // analogy
    auto* analogy_cmd =
        app.add_subcommand("analogy", "a : b :: c : ? vector arithmetic");
    std::string an_a, an_b, an_c;
    std::size_t an_k = 10;
    analogy_cmd->add_option("a", an_a)->required();
    analogy_cmd->add_option("b", an_b)->required();
    analogy_cmd->add_option("c", an_c)->required();
    analogy_cmd->add_option("-k", an_k, "Number of results");
    add_emb_flags(analogy_cmd);

    // bias
    auto* bias_cmd =
        app.add_subcommand("bias", "Political-orientation score of an entity");
    std::string b_id, b_rep, b_dem;
    bias_cmd->add_option("id", b_id, "Entity to score")->required();
    bias_cmd->add_option("--rep", b_rep, "Republican anchor")->required();
    bias_cmd->add_option("--dem", b_dem, "Democratic anchor")->required();
    add_emb_flags(bias_cmd);

    // rank-bias
    auto* rank_bias = app.add_subcommand(
        "rank-bias", "Rank sources by political orientation vs ground truth");
    std::string rb_sources, rb_truth, rb_rep, rb_dem;
    rank_bias->add_option("--sources", rb_sources,
                          "Optional file with one entity id per line");
    rank_bias->add_option("--truth", rb_truth, "CSV account_id,score")
        ->required();
    rank_bias->add_option("--rep", rb_rep, "Republican anchor")->required();
    rank_bias->add_option("--dem", rb_dem, "Democratic anchor")->required();
    add_emb_flags(rank_bias);

    // predict-traits
    auto* predict_cmd = app.add_subcommand(
        "predict-traits", "Train and evaluate per-trait classifiers");
    std::string pt_data, pt_follows;
    double pt_fraction = 0.8;
    std::uint64_t pt_seed = 17;
    predict_cmd->add_option("--data", pt_data, "Labels CSV user_id,trait,label")
        ->required();
    predict_cmd->add_option("--follows", pt_follows, "Follows edge list")
        ->required();
    predict_cmd->add_option("--train-fraction", pt_fraction, "Train share");
    predict_cmd->add_option("--seed", pt_seed, "Split seed");
    add_emb_flags(predict_cmd);

    // pmi
    auto* pmi_cmd = app.add_subcommand(
        "pmi", "Most distinctive accounts for a trait class");
    std::string pm_data, pm_follows, pm_trait;
    int pm_value = 1;
    std::size_t pm_k = 10;
    std::uint64_t pm_support = 5;
    pmi_cmd->add_option("--data", pm_data, "Labels CSV")->required();
    pmi_cmd->add_option("--follows", pm_follows, "Follows edge list")->required();
    pmi_cmd->add_option("--trait", pm_trait, "Trait name")->required();
    pmi_cmd->add_option("--value", pm_value, "Class value (0 or 1)");
    pmi_cmd->add_option("-k", pm_k, "Number of entities");
    pmi_cmd->add_option("--min-support", pm_support, "Minimum follower support");

    // synth-gen
    auto* synth_cmd = app.add_subcommand(
        "synth-gen", "Generate a synthetic benchmark with planted structure");
    std::string sg_out, sg_preset = "default";
    std::uint64_t sg_seed = 7;
    synth_cmd->add_option("--out", sg_out, "Output directory")->required();
    synth_cmd->add_option("--preset", sg_preset, "default | polarity | traits");
    synth_cmd->add_option("--seed", sg_seed, "Generation seed");

    // bench
    auto* bench_cmd = app.add_subcommand(
        "bench", "Generate, train, and report planted-structure recovery");
    std::string be_preset = "default";
    std::uint64_t be_seed = 7;
    std::size_t be_workers = 1, be_dim = 32, be_epochs = 5;
    std::size_t be_negatives = 0;
    float be_lr = 0.0f;
    bench_cmd->add_option("--preset", be_preset, "default | polarity | traits");
    bench_cmd->add_option("--seed", be_seed, "Seed for generation and training");
    bench_cmd->add_option("--workers", be_workers, "Training threads");
    bench_cmd->add_option("--dim", be_dim, "Embedding dimension");
    bench_cmd->add_option("--epochs", be_epochs, "Training epochs");
    bench_cmd->add_option("--negatives", be_negatives,
                          "Override negative samples per pair");
    bench_cmd->add_option("--lr", be_lr, "Override initial learning rate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help() << '\n';
        return 2;
    }

    if (build_vocab->parsed()) {
        auto graph = covec::load_edges(bv_edges);
        auto pop = covec::compute_popularity(graph);
        auto vocab = covec::select_entities(pop, bv_threshold, !bv_strict);
        covec::save_vocabulary(vocab, bv_out);
        std::printf("accounts %zu entities %zu threshold %llu (%s)\n",
                    pop.counts.size(), vocab.size(),
                    static_cast<unsigned long long>(bv_threshold),
                    bv_strict ? "count > K" : "count >= K");
    } else if (build_corpus->parsed()) {
        auto graph = covec::load_edges(bc_edges);
        auto vocab = covec::load_vocabulary(bc_vocab);
        auto corpus = covec::build_contexts(graph, vocab, bc_min, bc_max);
        covec::save_corpus(corpus, bc_out);
        std::printf("contexts %zu dropped %llu tokens %llu\n",
                    corpus.contexts.size(),
                    static_cast<unsigned long long>(corpus.num_dropped),
                    static_cast<unsigned long long>(corpus.total_tokens));
    } else if (stats->parsed()) {
        auto corpus = covec::load_corpus(st_corpus);
        auto s = covec::corpus_stats(corpus);
        std::printf("contexts  %llu\n", static_cast<unsigned long long>(s.retained));
        std::printf("dropped   %llu\n", static_cast<unsigned long long>(s.dropped));
        std::printf("mean      %.2f\n", s.mean);
        std::printf("median    %.2f\n", s.median);
        std::printf("stddev    %.2f\n", s.stddev);
    } else if (train_cmd->parsed()) {
        auto vocab = covec::load_vocabulary(tr_vocab);
        auto corpus = covec::load_corpus(tr_corpus);
        auto model = covec::init_model(std::move(vocab), tr_flags.to_config());
        auto result = covec::train(model, corpus);
        for (std::size_t e = 0; e < result.epoch_mean_loss.size(); ++e)
            std::fprintf(stderr, "epoch %zu mean loss %.6f\n", e + 1,
                         result.epoch_mean_loss[e]);
        std::fprintf(stderr, "%llu updates in %.1fs (%.0f/s)\n",
                     static_cast<unsigned long long>(result.updates),
                     result.seconds, result.updates / result.seconds);
        covec::save_embeddings(model, tr_out, parse_format(tr_format));
        std::printf("saved %zu x %zu embeddings to %s\n", model.vocab.size(),
                    model.dim(), tr_out.c_str());
    } else if (nearest_cmd->parsed()) {
        auto model = covec::load_embeddings(q_embeddings, parse_format(q_format));
        for (const auto& n : covec::nearest(model, nn_query, nn_k))
            std::printf("%s\t%.6f\n", n.id.c_str(), n.similarity);
    } else if (analogy_cmd->parsed()) {
        auto model = covec::load_embeddings(q_embeddings, parse_format(q_format));
        for (const auto& n : covec::analogy(model, an_a, an_b, an_c, an_k))
            std::printf("%s\t%.6f\n", n.id.c_str(), n.similarity);
    } else if (bias_cmd->parsed()) {
        auto model = covec::load_embeddings(q_embeddings, parse_format(q_format));
        covec::PoliticalAnchors anchors{b_rep, b_dem};
        std::printf("%s\t%.6f\n", b_id.c_str(),
                    covec::political_orientation(model, b_id, anchors));
    } else if (rank_bias->parsed()) {
        auto model = covec::load_embeddings(q_embeddings, parse_format(q_format));
        covec::PoliticalAnchors anchors{rb_rep, rb_dem};
        auto truth = covec::load_poll(rb_truth);
        std::vector<std::string> sources;
        if (!rb_sources.empty()) {
            std::ifstream in(rb_sources);
            if (!in)
                throw covec::ParseError("cannot open sources: " + rb_sources);
            std::string line;
            while (std::getline(in, line))
                if (!line.empty())
                    sources.push_back(line);
        } else {
            for (const auto& [id, score] : truth.rows)
                sources.push_back(id);
        }
        auto ranked = covec::rank_sources(model, sources, anchors);
        std::unordered_map<std::string, double> po;
        for (const auto& r : ranked) {
            std::printf("%s\t%.6f\n", r.id.c_str(), r.po);
            po[r.id] = r.po;
        }
        std::vector<double> po_scores, truth_scores;
        for (const auto& [id, score] : truth.rows) {
            auto it = po.find(id);
            if (it == po.end())
                continue;
            po_scores.push_back(it->second);
            truth_scores.push_back(score);
        }
        std::printf("spearman\t%.4f\n", covec::spearman(po_scores, truth_scores));
        std::printf("binary_accuracy\t%.4f\n",
                    covec::binary_polarity_accuracy(po, truth));
    } else if (predict_cmd->parsed()) {
        auto model = covec::load_embeddings(q_embeddings, parse_format(q_format));
        auto dataset = covec::load_labeled_dataset(pt_data, pt_follows);
        std::vector<std::size_t> all(dataset.rows.size());
        std::printf("%-12s %8s %8s %10s\n", "trait", "auc", "test_n",
                    "uncovered");
        for (const auto& trait : dataset.traits) {
            auto split =
                covec::split_dataset(dataset, trait, pt_fraction, pt_seed);
            auto clf = covec::train_classifier(dataset, split.train, trait, model);
            auto report =
                covec::evaluate_auc(clf, dataset, split.test, trait, model);
            std::printf("%-12s %8.4f %8zu %10zu\n", trait.c_str(), report.auc,
                        report.evaluated, report.uncovered);
        }
    } else if (pmi_cmd->parsed()) {
        auto dataset = covec::load_labeled_dataset(pm_data, pm_follows);
        auto top = covec::top_distinctive(pm_trait, pm_value, dataset, pm_k,
                                          pm_support);
        for (const auto& e : top)
            std::printf("%s\t%.4f\t%llu\n", e.id.c_str(), e.pmi,
                        static_cast<unsigned long long>(e.support));
    } else if (synth_cmd->parsed()) {
        auto config = parse_preset(sg_preset);
        config.seed = sg_seed;
        auto data = covec::generate(config);
        std::filesystem::create_directories(sg_out);
        covec::write_synth(data, sg_out);
        std::printf("users %zu entities %zu edges %llu -> %s\n",
                    data.truth.user_ids.size(),
                    data.truth.entity_ids.size() +
                        data.truth.source_order.size(),
                    static_cast<unsigned long long>(data.graph.num_edges),
                    sg_out.c_str());
    } else if (bench_cmd->parsed()) {
        auto config = parse_preset(be_preset);
        config.seed = be_seed;
        auto data = covec::generate(config);
        auto pop = covec::compute_popularity(data.graph);
        auto vocab = covec::select_entities(pop, 1);
        auto corpus = covec::build_contexts(data.graph, vocab);
        auto train_config = covec::benchmark_train_config();
        train_config.seed = be_seed;
        train_config.workers = be_workers;
        train_config.dim = be_dim;
        train_config.epochs = be_epochs;
        if (be_negatives > 0)
            train_config.negatives = be_negatives;
        if (be_lr > 0.0f)
            train_config.initial_lr = be_lr;
        auto model = covec::init_model(std::move(vocab), train_config);
        auto result = covec::train(model, corpus);
        std::fprintf(stderr, "%llu updates in %.1fs (%.0f/s)\n",
                     static_cast<unsigned long long>(result.updates),
                     result.seconds, result.updates / result.seconds);
        print_recovery(covec::evaluate_recovery(model, data));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const covec::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
