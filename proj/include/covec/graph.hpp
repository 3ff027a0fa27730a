#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "covec/common.hpp"

namespace covec {

/// Bipartite user -> followed-account adjacency. Accounts followed by a user
/// are kept as a set, so duplicate edges in the input collapse.
struct FollowGraph {
    std::vector<std::string> users; // load order, duplicates merged
    std::unordered_map<std::string, std::unordered_set<std::string>> edges;
    std::uint64_t num_edges = 0;
};

/// account-id -> follower count within the loaded sample.
struct PopularityTable {
    std::unordered_map<std::string, std::uint64_t> counts;
};

/// Accounts popular enough to model, with dense contiguous ids.
struct EntityVocabulary {
    std::vector<std::string> entities;            // dense id -> account id
    std::unordered_map<std::string, std::uint32_t> index;
    std::vector<std::uint64_t> counts;            // dense id -> follower count
    std::uint64_t threshold = 0;

    std::size_t size() const { return entities.size(); }

    bool contains(const std::string& id) const { return index.count(id) != 0; }

    std::uint32_t dense_id(const std::string& id) const {
        auto it = index.find(id);
        if (it == index.end())
            throw LookupError("unknown account id: " + id);
        return it->second;
    }
};

/// Parse a `user<TAB>account` edge list. Duplicate edges are dropped.
/// Lines that do not split into exactly two non-empty fields raise
/// ParseError naming the 1-based line number.
inline FollowGraph load_edges(std::istream& in) {
    FollowGraph g;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
            line.find('\t', tab + 1) != std::string::npos)
            throw ParseError("malformed edge at line " +
                             std::to_string(lineno) + ": \"" + line + "\"");
        std::string user = line.substr(0, tab);
        std::string account = line.substr(tab + 1);
        auto [it, fresh] = g.edges.try_emplace(std::move(user));
        if (fresh)
            g.users.push_back(it->first);
        if (it->second.insert(std::move(account)).second)
            ++g.num_edges;
    }
    return g;
}

inline FollowGraph load_edges(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open edge list: " + path);
    return load_edges(in);
}

/// f(a) = number of users following account a.
inline PopularityTable compute_popularity(const FollowGraph& graph) {
    PopularityTable pop;
    for (const auto& [user, followed] : graph.edges)
        for (const auto& account : followed)
            ++pop.counts[account];
    return pop;
}

/// Select accounts with follower count above (or, by default, at) the
/// threshold. Ordering: descending count, ties by ascending account id.
inline EntityVocabulary select_entities(const PopularityTable& pop,
                                        std::uint64_t threshold,
                                        bool inclusive = true) {
    EntityVocabulary vocab;
    vocab.threshold = threshold;
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (const auto& [account, count] : pop.counts)
        if (inclusive ? count >= threshold : count > threshold)
            kept.emplace_back(account, count);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    vocab.entities.reserve(kept.size());
    vocab.counts.reserve(kept.size());
    for (auto& [account, count] : kept) {
        vocab.index.emplace(account, static_cast<std::uint32_t>(vocab.entities.size()));
        vocab.entities.push_back(std::move(account));
        vocab.counts.push_back(count);
    }
    return vocab;
}

/// Vocabulary TSV: `account_id<TAB>follower_count`, one per line, in dense-id
/// order. Written and read back bit-exactly.
inline void save_vocabulary(const EntityVocabulary& vocab,
                            const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot write vocabulary: " + path);
    for (std::size_t i = 0; i < vocab.size(); ++i)
        out << vocab.entities[i] << '\t' << vocab.counts[i] << '\n';
}

inline EntityVocabulary load_vocabulary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open vocabulary: " + path);
    EntityVocabulary vocab;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw ParseError("malformed vocabulary line " +
                             std::to_string(lineno));
        std::string account = line.substr(0, tab);
        std::uint64_t count = 0;
        try {
            count = std::stoull(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw ParseError("bad count at vocabulary line " +
                             std::to_string(lineno));
        }
        vocab.index.emplace(account, static_cast<std::uint32_t>(vocab.entities.size()));
        vocab.entities.push_back(std::move(account));
        vocab.counts.push_back(count);
    }
    return vocab;
}

} // namespace covec
