#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "covec/common.hpp"
#include "covec/corpus.hpp"
#include "covec/graph.hpp"
#include "covec/predict.hpp"
#include "covec/query.hpp"
#include "covec/rng.hpp"
#include "covec/trainer.hpp"

namespace covec {

enum class Polarity { None, R, D };

inline const char* polarity_name(Polarity p) {
    switch (p) {
    case Polarity::R: return "R";
    case Polarity::D: return "D";
    default: return "-";
    }
}

struct CommunitySpec {
    std::size_t num_entities = 0;
    std::size_t num_users = 0;
};

/// Assigns polarities to communities and plants a spectrum of "source"
/// entities whose followers mix both sides in known proportions.
struct PolaritySpec {
    std::vector<Polarity> community_polarity; // one per community
    std::size_t num_sources = 10;
    double source_base_p = 0.3;
};

/// Label-1 users follow the entities of `community` with probability raised
/// by `shift` over the baseline.
struct TraitSpec {
    std::string name;
    std::size_t community = 0;
    double shift = 0.2;
};

struct SynthConfig {
    std::vector<CommunitySpec> communities;
    double p_in = 0.6;
    double p_out = 0.05;
    std::optional<PolaritySpec> polarity;
    std::vector<TraitSpec> traits;
    std::uint64_t seed = 7;

    std::size_t num_users() const {
        std::size_t n = 0;
        for (const auto& c : communities)
            n += c.num_users;
        return n;
    }

    std::size_t num_community_entities() const {
        std::size_t n = 0;
        for (const auto& c : communities)
            n += c.num_entities;
        return n;
    }

    void validate() const {
        if (communities.empty())
            throw ConfigError("at least one community required");
        if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0))
            throw ConfigError("require 0 <= p_out < p_in <= 1");
        if (polarity) {
            if (polarity->community_polarity.size() != communities.size())
                throw ConfigError("polarity assignment must cover every community");
            bool has_r = false, has_d = false;
            for (auto p : polarity->community_polarity) {
                has_r |= p == Polarity::R;
                has_d |= p == Polarity::D;
            }
            if (!has_r || !has_d)
                throw ConfigError("polarity needs at least one R and one D community");
            if (polarity->source_base_p <= 0.0 || polarity->source_base_p > 1.0)
                throw ConfigError("source_base_p must be in (0, 1]");
        }
        for (const auto& t : traits) {
            if (t.community >= communities.size())
                throw ConfigError("trait community out of range: " + t.name);
            if (t.shift <= 0.0 || t.shift > 1.0)
                throw ConfigError("trait shift must be in (0, 1]: " + t.name);
        }
    }
};

struct GroundTruth {
    std::vector<std::string> entity_ids;          // community entities
    std::vector<std::size_t> entity_community;
    std::string anchor_r, anchor_d;               // empty when no polarity
    std::vector<std::string> source_order;        // most conservative first
    std::vector<double> source_mixing;            // matches source_order
    std::vector<std::string> user_ids;
    std::vector<std::size_t> user_community;
    std::map<std::string, std::vector<int>> trait_labels; // trait -> per user

    Polarity community_polarity(std::size_t c) const {
        return c < community_polarity_.size() ? community_polarity_[c]
                                              : Polarity::None;
    }

    std::vector<Polarity> community_polarity_;
};

struct SynthData {
    FollowGraph graph;
    GroundTruth truth;
};

namespace detail {

inline std::string format_id(const char* fmt, std::size_t a, std::size_t b = 0) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, a, b);
    return buf;
}

} // namespace detail

/// Draw every user-entity edge independently per the planted structure.
/// Deterministic per seed.
inline SynthData generate(const SynthConfig& config) {
    config.validate();
    SynthData data;
    GroundTruth& truth = data.truth;
    if (config.polarity)
        truth.community_polarity_ = config.polarity->community_polarity;

    for (std::size_t c = 0; c < config.communities.size(); ++c) {
        for (std::size_t e = 0; e < config.communities[c].num_entities; ++e) {
            truth.entity_ids.push_back(detail::format_id("c%zu_e%03zu", c, e));
            truth.entity_community.push_back(c);
        }
    }
    if (config.polarity) {
        // Anchors: first entity of the first R and first D community.
        for (std::size_t c = 0; c < config.communities.size(); ++c) {
            Polarity p = config.polarity->community_polarity[c];
            if (p == Polarity::R && truth.anchor_r.empty())
                truth.anchor_r = detail::format_id("c%zu_e%03zu", c, 0);
            if (p == Polarity::D && truth.anchor_d.empty())
                truth.anchor_d = detail::format_id("c%zu_e%03zu", c, 0);
        }
    }

    std::size_t num_sources = config.polarity ? config.polarity->num_sources : 0;
    std::vector<std::string> source_ids(num_sources);
    std::vector<double> mixing(num_sources);
    for (std::size_t j = 0; j < num_sources; ++j) {
        source_ids[j] = detail::format_id("src%02zu", j);
        mixing[j] = (static_cast<double>(j) + 0.5) /
                    static_cast<double>(num_sources);
    }
    // Planted order: most conservative (highest R mixing) first.
    for (std::size_t j = num_sources; j > 0; --j) {
        truth.source_order.push_back(source_ids[j - 1]);
        truth.source_mixing.push_back(mixing[j - 1]);
    }

    std::size_t user_index = 0;
    for (std::size_t c = 0; c < config.communities.size(); ++c)
        for (std::size_t u = 0; u < config.communities[c].num_users; ++u) {
            truth.user_ids.push_back(detail::format_id("u%06zu", user_index++));
            truth.user_community.push_back(c);
        }

    Rng rng(config.seed);
    for (const auto& t : config.traits) {
        auto& labels = truth.trait_labels[t.name];
        labels.reserve(truth.user_ids.size());
        for (std::size_t u = 0; u < truth.user_ids.size(); ++u)
            labels.push_back(rng.next_double() < 0.5 ? 1 : 0);
    }

    FollowGraph& g = data.graph;
    for (std::size_t u = 0; u < truth.user_ids.size(); ++u) {
        std::size_t uc = truth.user_community[u];
        Polarity up = truth.community_polarity(uc);
        auto [it, fresh] = g.edges.try_emplace(truth.user_ids[u]);
        g.users.push_back(it->first);
        auto& followed = it->second;
        for (std::size_t e = 0; e < truth.entity_ids.size(); ++e) {
            std::size_t ec = truth.entity_community[e];
            double p = ec == uc ? config.p_in : config.p_out;
            for (const auto& t : config.traits)
                if (t.community == ec && truth.trait_labels.at(t.name)[u] == 1)
                    p = std::min(1.0, p + t.shift);
            if (rng.next_double() < p) {
                followed.insert(truth.entity_ids[e]);
                ++g.num_edges;
            }
        }
        for (std::size_t j = 0; j < num_sources; ++j) {
            double mix = up == Polarity::R   ? mixing[j]
                         : up == Polarity::D ? 1.0 - mixing[j]
                                             : 0.5;
            double p = config.polarity->source_base_p * mix;
            if (rng.next_double() < p) {
                followed.insert(source_ids[j]);
                ++g.num_edges;
            }
        }
    }
    return data;
}

/// Write the generated benchmark in the formats the rest of the pipeline
/// consumes: edges.tsv, entities.tsv, users.tsv, sources.tsv, anchors.tsv,
/// labels.csv.
inline void write_synth(const SynthData& data, const std::string& dir) {
    auto open = [&](const char* name) {
        std::ofstream out(dir + "/" + name, std::ios::binary);
        if (!out)
            throw ParseError(std::string("cannot write ") + dir + "/" + name);
        return out;
    };
    {
        auto out = open("edges.tsv");
        for (const auto& user : data.graph.users) {
            const auto& followed = data.graph.edges.at(user);
            std::vector<std::string> sorted(followed.begin(), followed.end());
            std::sort(sorted.begin(), sorted.end());
            for (const auto& account : sorted)
                out << user << '\t' << account << '\n';
        }
    }
    {
        auto out = open("entities.tsv");
        const auto& t = data.truth;
        for (std::size_t e = 0; e < t.entity_ids.size(); ++e)
            out << t.entity_ids[e] << '\t' << t.entity_community[e] << '\t'
                << polarity_name(t.community_polarity(t.entity_community[e]))
                << '\n';
    }
    {
        auto out = open("users.tsv");
        const auto& t = data.truth;
        for (std::size_t u = 0; u < t.user_ids.size(); ++u)
            out << t.user_ids[u] << '\t' << t.user_community[u] << '\t'
                << polarity_name(t.community_polarity(t.user_community[u]))
                << '\n';
    }
    {
        auto out = open("sources.tsv");
        const auto& t = data.truth;
        for (std::size_t j = 0; j < t.source_order.size(); ++j)
            out << t.source_order[j] << '\t' << t.source_mixing[j] << '\n';
    }
    {
        auto out = open("anchors.tsv");
        if (!data.truth.anchor_r.empty())
            out << "republican\t" << data.truth.anchor_r << '\n'
                << "democratic\t" << data.truth.anchor_d << '\n';
    }
    {
        auto out = open("labels.csv");
        const auto& t = data.truth;
        for (const auto& [trait, labels] : t.trait_labels)
            for (std::size_t u = 0; u < t.user_ids.size(); ++u)
                out << t.user_ids[u] << ',' << trait << ',' << labels[u] << '\n';
    }
}

/// Training-free neighbor oracle: rows of the positive-PMI co-follow matrix
/// compared by cosine. Counts only, shares no code with the trainer.
class PpmiOracle {
  public:
    PpmiOracle(const FollowGraph& graph, const EntityVocabulary& vocab)
        : vocab_(&vocab), n_(vocab.size()), rows_(n_ * n_, 0.0) {
        std::vector<double> co(n_ * n_, 0.0);
        for (const auto& user : graph.users) {
            std::vector<std::uint32_t> ctx;
            for (const auto& account : graph.edges.at(user)) {
                auto it = vocab.index.find(account);
                if (it != vocab.index.end())
                    ctx.push_back(it->second);
            }
            for (std::size_t i = 0; i < ctx.size(); ++i)
                for (std::size_t j = 0; j < ctx.size(); ++j)
                    if (i != j)
                        co[static_cast<std::size_t>(ctx[i]) * n_ + ctx[j]] += 1.0;
        }
        std::vector<double> marginal(n_, 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) {
                marginal[i] += co[i * n_ + j];
                total += co[i * n_ + j];
            }
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) {
                double cij = co[i * n_ + j];
                if (cij <= 0.0 || marginal[i] <= 0.0 || marginal[j] <= 0.0)
                    continue;
                double v = std::log(cij * total / (marginal[i] * marginal[j]));
                if (v > 0.0)
                    rows_[i * n_ + j] = v;
            }
    }

    std::vector<Neighbor> neighbors(const std::string& query,
                                    std::size_t k) const {
        std::uint32_t q = vocab_->dense_id(query);
        std::vector<Neighbor> all;
        all.reserve(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            if (i == q)
                continue;
            double sim;
            try {
                sim = detail_cosine(q, i);
            } catch (const DomainError&) {
                continue; // all-zero PPMI row
            }
            all.push_back({vocab_->entities[i], sim});
        }
        detail::sort_neighbors(all);
        if (all.size() > k)
            all.resize(k);
        return all;
    }

  private:
    double detail_cosine(std::size_t a, std::size_t b) const {
        const double* ra = rows_.data() + a * n_;
        const double* rb = rows_.data() + b * n_;
        double na = 0.0, nb = 0.0, dp = 0.0;
        for (std::size_t d = 0; d < n_; ++d) {
            na += ra[d] * ra[d];
            nb += rb[d] * rb[d];
            dp += ra[d] * rb[d];
        }
        if (na == 0.0 || nb == 0.0)
            throw DomainError("zero PPMI row");
        return dp / std::sqrt(na * nb);
    }

    const EntityVocabulary* vocab_;
    std::size_t n_;
    std::vector<double> rows_;
};

inline std::vector<Neighbor> oracle_neighbors(const FollowGraph& graph,
                                              const EntityVocabulary& vocab,
                                              const std::string& query,
                                              std::size_t k) {
    return PpmiOracle(graph, vocab).neighbors(query, k);
}

struct RecoveryReport {
    double intra_cosine = 0.0;
    double inter_cosine = 0.0;
    double top3_in_community = 0.0; // fraction with all top-3 in-community
    bool has_polarity = false;
    double polarity_sign_accuracy = 0.0;
    double spectrum_spearman = 0.0;
    std::map<std::string, double> trait_auc;
};

/// Compute every planted-structure recovery metric in one pass.
inline RecoveryReport evaluate_recovery(const EmbeddingModel& model,
                                        const SynthData& data,
                                        std::uint64_t eval_seed = 17) {
    const GroundTruth& truth = data.truth;
    for (const auto& id : truth.entity_ids)
        if (!model.vocab.contains(id))
            throw LookupError("ground-truth entity missing from model: " + id);

    RecoveryReport report;
    std::size_t n = truth.entity_ids.size();
    std::vector<std::uint32_t> dense(n);
    for (std::size_t i = 0; i < n; ++i)
        dense[i] = model.vocab.dense_id(truth.entity_ids[i]);

    double intra = 0.0, inter = 0.0;
    std::size_t n_intra = 0, n_inter = 0;
    std::size_t dim = model.dim();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double c = detail::cosine_rows(model.target_row(dense[i]),
                                           model.target_row(dense[j]), dim);
            if (truth.entity_community[i] == truth.entity_community[j]) {
                intra += c;
                ++n_intra;
            } else {
                inter += c;
                ++n_inter;
            }
        }
    report.intra_cosine = n_intra ? intra / static_cast<double>(n_intra) : 0.0;
    report.inter_cosine = n_inter ? inter / static_cast<double>(n_inter) : 0.0;

    // Top-3 neighbors restricted to planted community entities.
    std::unordered_map<std::string, std::size_t> ent_index;
    for (std::size_t i = 0; i < n; ++i)
        ent_index[truth.entity_ids[i]] = i;
    std::size_t all_in = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Neighbor> sims;
        sims.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j)
                continue;
            sims.push_back({truth.entity_ids[j],
                            detail::cosine_rows(model.target_row(dense[i]),
                                                model.target_row(dense[j]),
                                                dim)});
        }
        detail::sort_neighbors(sims);
        std::size_t top = std::min<std::size_t>(3, sims.size());
        bool ok = true;
        for (std::size_t r = 0; r < top; ++r) {
            std::size_t idx = ent_index.at(sims[r].id);
            ok &= truth.entity_community[idx] == truth.entity_community[i];
        }
        all_in += ok;
    }
    report.top3_in_community =
        n ? static_cast<double>(all_in) / static_cast<double>(n) : 0.0;

    if (!truth.anchor_r.empty()) {
        report.has_polarity = true;
        PoliticalAnchors anchors{truth.anchor_r, truth.anchor_d};
        std::size_t correct = 0, considered = 0;
        for (std::size_t i = 0; i < n; ++i) {
            Polarity p = truth.community_polarity(truth.entity_community[i]);
            if (p == Polarity::None || truth.entity_ids[i] == truth.anchor_r ||
                truth.entity_ids[i] == truth.anchor_d)
                continue;
            double po = political_orientation(model, truth.entity_ids[i], anchors);
            ++considered;
            correct += (p == Polarity::R) == (po >= 0.0);
        }
        report.polarity_sign_accuracy =
            considered ? static_cast<double>(correct) /
                             static_cast<double>(considered)
                       : 0.0;
        if (truth.source_order.size() >= 2) {
            auto ranked = rank_sources(model, truth.source_order, anchors);
            std::vector<std::string> po_order;
            po_order.reserve(ranked.size());
            for (const auto& r : ranked)
                po_order.push_back(r.id);
            report.spectrum_spearman =
                spearman_orders(truth.source_order, po_order);
        }
    }

    if (!truth.trait_labels.empty()) {
        LabeledUserDataset ds;
        for (std::size_t u = 0; u < truth.user_ids.size(); ++u) {
            LabeledUser row;
            row.user = truth.user_ids[u];
            const auto& followed = data.graph.edges.at(truth.user_ids[u]);
            row.follows.assign(followed.begin(), followed.end());
            std::sort(row.follows.begin(), row.follows.end());
            if (row.follows.empty())
                continue;
            for (const auto& [trait, labels] : truth.trait_labels)
                row.labels[trait] = labels[u];
            ds.rows.push_back(std::move(row));
        }
        for (const auto& [trait, labels] : truth.trait_labels) {
            DatasetSplit split = split_dataset(ds, trait, 0.8, eval_seed);
            TraitClassifier clf =
                train_classifier(ds, split.train, trait, model);
            report.trait_auc[trait] =
                evaluate_auc(clf, ds, split.test, trait, model).auc;
        }
    }
    return report;
}

/// Fixed in-repo benchmark configs so reported numbers are stable.
inline SynthConfig default_benchmark() {
    SynthConfig config;
    config.communities.assign(4, CommunitySpec{50, 500});
    config.p_in = 0.6;
    config.p_out = 0.05;
    config.seed = 7;
    return config;
}

inline SynthConfig polarity_benchmark() {
    SynthConfig config;
    config.communities.assign(2, CommunitySpec{50, 1000});
    config.p_in = 0.6;
    config.p_out = 0.05;
    config.seed = 7;
    PolaritySpec polarity;
    polarity.community_polarity = {Polarity::R, Polarity::D};
    config.polarity = polarity;
    return config;
}

inline SynthConfig trait_benchmark() {
    SynthConfig config = default_benchmark();
    // Dedicated entity block followed at p_out baseline, shifted for label-1.
    config.communities.push_back(CommunitySpec{50, 0});
    config.traits.push_back(TraitSpec{"planted", config.communities.size() - 1,
                                      0.2});
    return config;
}

/// Benchmark TrainConfig used by `bench` and the acceptance run. Downsampling
/// is disabled: synthetic entity frequencies are ~5e-3, so t=1e-5 would
/// discard nearly every token at this scale. The small negative count and
/// gentle learning rate keep the shared "background" component of the
/// vectors low, which is what separates intra- from inter-community cosine
/// in only five epochs.
inline TrainConfig benchmark_train_config() {
    TrainConfig config;
    config.dim = 32;
    config.negatives = 2;
    config.initial_lr = 0.005f;
    config.epochs = 5;
    config.downsample_t = 0.0;
    config.seed = 7;
    return config;
}

} // namespace covec
