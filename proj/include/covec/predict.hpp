#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "covec/common.hpp"
#include "covec/graph.hpp"
#include "covec/query.hpp"
#include "covec/rng.hpp"
#include "covec/trainer.hpp"

namespace covec {

struct LabeledUser {
    std::string user;
    std::vector<std::string> follows; // deduplicated
    std::map<std::string, int> labels; // trait name -> 0/1
};

struct LabeledUserDataset {
    std::vector<LabeledUser> rows;
    std::vector<std::string> traits;
};

/// Labels CSV `user_id,trait,label` (label 0/1, optional header) combined
/// with a follows file in the edge-list format.
inline LabeledUserDataset load_labeled_dataset(const std::string& labels_path,
                                               const std::string& follows_path) {
    FollowGraph follows = load_edges(follows_path);
    std::ifstream in(labels_path);
    if (!in)
        throw ParseError("cannot open labels file: " + labels_path);

    LabeledUserDataset ds;
    std::unordered_map<std::string, std::size_t> row_of;
    std::unordered_set<std::string> seen_traits;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        if (line.back() == '\r')
            line.pop_back();
        auto c1 = line.find(',');
        auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos || c1 == 0)
            throw ParseError("malformed label line " + std::to_string(lineno));
        std::string user = line.substr(0, c1);
        if (lineno == 1 && user == "user_id")
            continue;
        std::string trait = line.substr(c1 + 1, c2 - c1 - 1);
        std::string label_str = line.substr(c2 + 1);
        if (label_str != "0" && label_str != "1")
            throw ParseError("label must be 0 or 1 at line " +
                             std::to_string(lineno));
        auto [it, fresh] = row_of.try_emplace(user, ds.rows.size());
        if (fresh) {
            auto fit = follows.edges.find(user);
            if (fit == follows.edges.end() || fit->second.empty())
                throw ParseError("labeled user has no follows: " + user);
            LabeledUser row;
            row.user = user;
            row.follows.assign(fit->second.begin(), fit->second.end());
            std::sort(row.follows.begin(), row.follows.end());
            ds.rows.push_back(std::move(row));
        }
        ds.rows[it->second].labels[trait] = label_str == "1";
        if (seen_traits.insert(trait).second)
            ds.traits.push_back(trait);
    }
    return ds;
}

struct UserVector {
    std::vector<float> values;
    std::size_t covered = 0; // followed accounts found in the vocabulary

    bool is_covered() const { return covered > 0; }
};

/// Mean of the target vectors of the followed accounts found in the
/// vocabulary. Follows are deduplicated before averaging.
inline UserVector user_vector(const std::vector<std::string>& followed,
                              const EmbeddingModel& model) {
    UserVector uv;
    uv.values.assign(model.dim(), 0.0f);
    std::unordered_set<std::string> seen;
    for (const auto& account : followed) {
        if (!seen.insert(account).second)
            continue;
        auto it = model.vocab.index.find(account);
        if (it == model.vocab.index.end())
            continue;
        const float* row = model.target_row(it->second);
        for (std::size_t d = 0; d < model.dim(); ++d)
            uv.values[d] += row[d];
        ++uv.covered;
    }
    if (uv.covered > 0) {
        float inv = 1.0f / static_cast<float>(uv.covered);
        for (auto& v : uv.values)
            v *= inv;
    }
    return uv;
}

struct DatasetSplit {
    std::vector<std::size_t> train; // row indices
    std::vector<std::size_t> test;
};

/// Stratified train/test split over the rows labeled for `trait`.
/// Per-class train share is round(fraction * class size), clamped so both
/// sides keep at least one example per class.
inline DatasetSplit split_dataset(const LabeledUserDataset& dataset,
                                  const std::string& trait,
                                  double train_fraction, std::uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw ConfigError("train_fraction must be in (0, 1)");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
        auto it = dataset.rows[i].labels.find(trait);
        if (it != dataset.rows[i].labels.end())
            by_class[it->second].push_back(i);
    }
    if (by_class[0].size() < 2 || by_class[1].size() < 2)
        throw DomainError("trait '" + trait +
                          "' needs at least 2 examples per class");
    DatasetSplit split;
    Rng rng(mix_seed(seed, std::hash<std::string>{}(trait)));
    for (int c = 0; c < 2; ++c) {
        auto& idx = by_class[c];
        for (std::size_t i = idx.size() - 1; i > 0; --i)
            std::swap(idx[i], idx[rng.next_below(i + 1)]);
        auto n = static_cast<double>(idx.size());
        auto train_n = static_cast<std::size_t>(
            std::llround(train_fraction * n));
        train_n = std::clamp<std::size_t>(train_n, 1, idx.size() - 1);
        split.train.insert(split.train.end(), idx.begin(), idx.begin() + train_n);
        split.test.insert(split.test.end(), idx.begin() + train_n, idx.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

struct TraitClassifier {
    std::string trait;
    std::vector<double> weights;
    double bias = 0.0;

    double score(const std::vector<float>& x) const {
        double z = bias;
        for (std::size_t d = 0; d < weights.size(); ++d)
            z += weights[d] * x[d];
        return 1.0 / (1.0 + std::exp(-z));
    }
};

struct ClassifierHyper {
    double lr = 0.5;
    std::size_t max_epochs = 5000;
    double l2 = 1e-4;
    double grad_tol = 1e-6;
};

/// Full-batch gradient descent on L2-regularized mean logistic loss.
/// Runs until the gradient norm drops below grad_tol or the epoch cap.
inline TraitClassifier fit_logistic(const std::vector<std::vector<float>>& X,
                                    const std::vector<int>& y,
                                    const ClassifierHyper& hyper = {}) {
    if (X.empty() || X.size() != y.size())
        throw DomainError("empty or mismatched training data");
    std::size_t dim = X[0].size();
    TraitClassifier clf;
    clf.weights.assign(dim, 0.0);
    std::vector<double> grad(dim);
    double inv_n = 1.0 / static_cast<double>(X.size());
    for (std::size_t epoch = 0; epoch < hyper.max_epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i) {
            double err = clf.score(X[i]) - static_cast<double>(y[i]);
            for (std::size_t d = 0; d < dim; ++d)
                grad[d] += err * X[i][d];
            grad_b += err;
        }
        double norm2 = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            grad[d] = grad[d] * inv_n + hyper.l2 * clf.weights[d];
            norm2 += grad[d] * grad[d];
        }
        grad_b *= inv_n;
        norm2 += grad_b * grad_b;
        if (std::sqrt(norm2) < hyper.grad_tol)
            break;
        for (std::size_t d = 0; d < dim; ++d)
            clf.weights[d] -= hyper.lr * grad[d];
        clf.bias -= hyper.lr * grad_b;
    }
    return clf;
}

struct TraitFeatures {
    std::vector<std::vector<float>> X;
    std::vector<int> y;
    std::size_t uncovered = 0; // rows dropped for having no known entity
};

inline TraitFeatures build_features(const LabeledUserDataset& dataset,
                                    const std::vector<std::size_t>& indices,
                                    const std::string& trait,
                                    const EmbeddingModel& model) {
    TraitFeatures f;
    for (auto i : indices) {
        const auto& row = dataset.rows[i];
        auto lit = row.labels.find(trait);
        if (lit == row.labels.end())
            continue;
        UserVector uv = user_vector(row.follows, model);
        if (!uv.is_covered()) {
            ++f.uncovered;
            continue;
        }
        f.X.push_back(std::move(uv.values));
        f.y.push_back(lit->second);
    }
    return f;
}

inline TraitClassifier train_classifier(const LabeledUserDataset& dataset,
                                        const std::vector<std::size_t>& train_indices,
                                        const std::string& trait,
                                        const EmbeddingModel& model,
                                        const ClassifierHyper& hyper = {}) {
    TraitFeatures f = build_features(dataset, train_indices, trait, model);
    if (f.X.empty())
        throw DomainError("no covered training users for trait: " + trait);
    TraitClassifier clf = fit_logistic(f.X, f.y, hyper);
    clf.trait = trait;
    return clf;
}

/// Rank-based ROC AUC (Mann-Whitney), average ranks for tied scores.
inline double roc_auc(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw DomainError("empty or mismatched AUC inputs");
    std::size_t n_pos = 0;
    for (auto l : labels)
        n_pos += l != 0;
    std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DomainError("AUC requires both classes");
    auto ranks = detail::average_ranks(scores);
    double pos_rank_sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (labels[i] != 0)
            pos_rank_sum += ranks[i];
    double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

struct AucReport {
    double auc = 0.0;
    std::size_t evaluated = 0;
    std::size_t uncovered = 0;
};

inline AucReport evaluate_auc(const TraitClassifier& clf,
                              const LabeledUserDataset& dataset,
                              const std::vector<std::size_t>& test_indices,
                              const std::string& trait,
                              const EmbeddingModel& model) {
    TraitFeatures f = build_features(dataset, test_indices, trait, model);
    if (f.X.empty())
        throw DomainError("no covered test users for trait: " + trait);
    std::vector<double> scores;
    scores.reserve(f.X.size());
    for (const auto& x : f.X)
        scores.push_back(clf.score(x));
    AucReport report;
    report.auc = roc_auc(scores, f.y);
    report.evaluated = f.X.size();
    report.uncovered = f.uncovered;
    return report;
}

inline constexpr double kNeverCoOccurs = -std::numeric_limits<double>::infinity();

namespace detail {

struct PmiCounts {
    std::uint64_t n = 0;    // labeled users
    std::uint64_t n_e = 0;  // following the entity
    std::uint64_t n_c = 0;  // in the class
    std::uint64_t n_ec = 0; // both
};

inline PmiCounts pmi_counts(const std::string& entity,
                            const std::string& trait, int value,
                            const LabeledUserDataset& dataset) {
    PmiCounts counts;
    for (const auto& row : dataset.rows) {
        auto lit = row.labels.find(trait);
        if (lit == row.labels.end())
            continue;
        ++counts.n;
        bool follows = std::binary_search(row.follows.begin(),
                                          row.follows.end(), entity);
        bool in_class = lit->second == value;
        counts.n_e += follows;
        counts.n_c += in_class;
        counts.n_ec += follows && in_class;
    }
    return counts;
}

} // namespace detail

/// PMI between following `entity` and having label `value` for `trait`,
/// probabilities as dataset proportions, natural log. Returns the
/// never-co-occurs sentinel when the joint count is zero.
inline double pmi(const std::string& entity, const std::string& trait,
                  int value, const LabeledUserDataset& dataset,
                  std::uint64_t min_support = 5) {
    auto c = detail::pmi_counts(entity, trait, value, dataset);
    if (c.n == 0)
        throw DomainError("no users labeled for trait: " + trait);
    if (c.n_e < min_support)
        throw DomainError("entity below min_support: " + entity);
    if (c.n_c == 0)
        throw DomainError("empty class for trait: " + trait);
    if (c.n_ec == 0)
        return kNeverCoOccurs;
    return std::log(static_cast<double>(c.n_ec) * static_cast<double>(c.n) /
                    (static_cast<double>(c.n_e) * static_cast<double>(c.n_c)));
}

struct DistinctiveEntity {
    std::string id;
    double pmi;
    std::uint64_t support;
};

/// Top-k entities by PMI for a trait class, min-support filtered,
/// ties by ascending account id.
inline std::vector<DistinctiveEntity> top_distinctive(
    const std::string& trait, int value, const LabeledUserDataset& dataset,
    std::size_t k, std::uint64_t min_support = 5) {
    std::unordered_map<std::string, std::uint64_t> support;
    for (const auto& row : dataset.rows) {
        if (!row.labels.count(trait))
            continue;
        for (const auto& account : row.follows)
            ++support[account];
    }
    std::vector<DistinctiveEntity> out;
    for (const auto& [account, n_e] : support) {
        if (n_e < min_support)
            continue;
        out.push_back({account, pmi(account, trait, value, dataset, min_support),
                       n_e});
    }
    std::sort(out.begin(), out.end(),
              [](const DistinctiveEntity& a, const DistinctiveEntity& b) {
                  if (a.pmi != b.pmi)
                      return a.pmi > b.pmi;
                  return a.id < b.id;
              });
    if (out.size() > k)
        out.resize(k);
    return out;
}

} // namespace covec
