#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "covec/common.hpp"
#include "covec/trainer.hpp"

namespace covec {

struct PoliticalAnchors {
    std::string republican; // e_R
    std::string democratic; // e_D
};

/// Ground-truth ideology scores: negative = liberal, positive = conservative.
struct PollGroundTruth {
    std::vector<std::pair<std::string, double>> rows;
};

struct Neighbor {
    std::string id;
    double similarity;
};

namespace detail {

inline double norm(const float* v, std::size_t dim) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d)
        s += static_cast<double>(v[d]) * v[d];
    return std::sqrt(s);
}

inline double cosine_rows(const float* a, const float* b, std::size_t dim) {
    double na = norm(a, dim), nb = norm(b, dim);
    if (na == 0.0 || nb == 0.0)
        throw DomainError("cosine undefined for a zero vector");
    double dp = 0.0;
    for (std::size_t d = 0; d < dim; ++d)
        dp += static_cast<double>(a[d]) * b[d];
    return dp / (na * nb);
}

// Descending similarity, ties by ascending account id.
inline void sort_neighbors(std::vector<Neighbor>& out) {
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.similarity != b.similarity)
            return a.similarity > b.similarity;
        return a.id < b.id;
    });
}

} // namespace detail

/// Cosine over target vectors.
inline double cosine(const EmbeddingModel& model, const std::string& a,
                     const std::string& b) {
    std::size_t dim = model.dim();
    return detail::cosine_rows(model.target_row(model.vocab.dense_id(a)),
                               model.target_row(model.vocab.dense_id(b)), dim);
}

/// Exact brute-force top-k by cosine, query excluded.
inline std::vector<Neighbor> nearest(const EmbeddingModel& model,
                                     const std::string& query, std::size_t k) {
    std::uint32_t q = model.vocab.dense_id(query);
    std::size_t dim = model.dim();
    const float* qv = model.target_row(q);
    std::vector<Neighbor> all;
    all.reserve(model.vocab.size());
    for (std::size_t i = 0; i < model.vocab.size(); ++i) {
        if (i == q)
            continue;
        all.push_back({model.vocab.entities[i],
                       detail::cosine_rows(qv, model.target_row(i), dim)});
    }
    detail::sort_neighbors(all);
    if (all.size() > k)
        all.resize(k);
    return all;
}

/// Rank entities by cosine against v_b - v_a + v_c, excluding {a, b, c}.
inline std::vector<Neighbor> analogy(const EmbeddingModel& model,
                                     const std::string& a, const std::string& b,
                                     const std::string& c, std::size_t k) {
    std::uint32_t ia = model.vocab.dense_id(a);
    std::uint32_t ib = model.vocab.dense_id(b);
    std::uint32_t ic = model.vocab.dense_id(c);
    std::size_t dim = model.dim();
    std::vector<float> target(dim);
    const float* va = model.target_row(ia);
    const float* vb = model.target_row(ib);
    const float* vc = model.target_row(ic);
    for (std::size_t d = 0; d < dim; ++d)
        target[d] = vb[d] - va[d] + vc[d];
    std::vector<Neighbor> all;
    all.reserve(model.vocab.size());
    for (std::size_t i = 0; i < model.vocab.size(); ++i) {
        if (i == ia || i == ib || i == ic)
            continue;
        all.push_back(
            {model.vocab.entities[i],
             detail::cosine_rows(target.data(), model.target_row(i), dim)});
    }
    detail::sort_neighbors(all);
    if (all.size() > k)
        all.resize(k);
    return all;
}

/// PO(e) = cosine(e_R, e) - cosine(e_D, e). Positive means conservative lean.
inline double political_orientation(const EmbeddingModel& model,
                                    const std::string& entity,
                                    const PoliticalAnchors& anchors) {
    return cosine(model, anchors.republican, entity) -
           cosine(model, anchors.democratic, entity);
}

struct RankedSource {
    std::string id;
    double po;
};

/// Stable sort by PO descending, ties by ascending account id.
inline std::vector<RankedSource> rank_sources(
    const EmbeddingModel& model, const std::vector<std::string>& sources,
    const PoliticalAnchors& anchors) {
    std::vector<RankedSource> out;
    out.reserve(sources.size());
    for (const auto& s : sources)
        out.push_back({s, political_orientation(model, s, anchors)});
    std::stable_sort(out.begin(), out.end(),
                     [](const RankedSource& a, const RankedSource& b) {
                         if (a.po != b.po)
                             return a.po > b.po;
                         return a.id < b.id;
                     });
    return out;
}

namespace detail {

// Average ranks (1-based), ties share the mean rank.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
    std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]])
            ++j;
        double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

} // namespace detail

/// Spearman's rho over paired score vectors, with average-rank tie handling.
inline double spearman(const std::vector<double>& a,
                       const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw DomainError("spearman requires equal-length non-empty inputs");
    auto ra = detail::average_ranks(a);
    auto rb = detail::average_ranks(b);
    std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double xa = ra[i] - ma, xb = rb[i] - mb;
        num += xa * xb;
        da += xa * xa;
        db += xb * xb;
    }
    if (da == 0.0 || db == 0.0)
        throw DomainError("spearman undefined for constant ranking");
    return num / std::sqrt(da * db);
}

/// Spearman between two orderings of the same id set. Rank 1 = first.
inline double spearman_orders(const std::vector<std::string>& order_a,
                              const std::vector<std::string>& order_b) {
    if (order_a.size() != order_b.size())
        throw DomainError("rankings differ in length");
    std::unordered_map<std::string, double> pos;
    for (std::size_t i = 0; i < order_a.size(); ++i)
        pos[order_a[i]] = static_cast<double>(i + 1);
    if (pos.size() != order_a.size())
        throw DomainError("duplicate id in ranking");
    std::vector<double> ra, rb;
    ra.reserve(order_a.size());
    rb.reserve(order_a.size());
    for (std::size_t i = 0; i < order_b.size(); ++i) {
        auto it = pos.find(order_b[i]);
        if (it == pos.end())
            throw DomainError("rankings cover different id sets: " +
                              order_b[i]);
        ra.push_back(it->second);
        rb.push_back(static_cast<double>(i + 1));
    }
    return spearman(ra, rb);
}

/// Fraction of truth rows whose PO sign matches the ground-truth sign.
/// A score of exactly zero counts as conservative on both sides.
inline double binary_polarity_accuracy(
    const std::unordered_map<std::string, double>& predictions,
    const PollGroundTruth& truth) {
    if (truth.rows.empty())
        throw DomainError("empty ground truth");
    std::size_t hits = 0;
    for (const auto& [id, score] : truth.rows) {
        auto it = predictions.find(id);
        if (it == predictions.end())
            throw LookupError("no prediction for account: " + id);
        bool pred_cons = it->second >= 0.0;
        bool true_cons = score >= 0.0;
        if (pred_cons == true_cons)
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.rows.size());
}

/// Poll CSV: `account_id,score` per line, optional header.
inline PollGroundTruth load_poll(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open poll file: " + path);
    PollGroundTruth truth;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        auto comma = line.find(',');
        if (comma == std::string::npos || comma == 0)
            throw ParseError("malformed poll line " + std::to_string(lineno));
        std::string id = line.substr(0, comma);
        if (lineno == 1 && id == "account_id")
            continue;
        try {
            truth.rows.emplace_back(id, std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw ParseError("bad score at poll line " + std::to_string(lineno));
        }
    }
    return truth;
}

} // namespace covec
