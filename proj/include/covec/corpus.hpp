#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "covec/common.hpp"
#include "covec/graph.hpp"

namespace covec {

/// Anonymized per-user entity contexts: one dense-id array per retained
/// user, user identity discarded.
struct ContextCorpus {
    std::vector<std::vector<std::uint32_t>> contexts;
    std::uint64_t total_tokens = 0;
    std::uint32_t vocab_size = 0;
    std::uint64_t num_dropped = 0; // users below min_entities
};

struct CorpusStats {
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0;
    std::uint64_t retained = 0;
    std::uint64_t dropped = 0;
};

/// Filter each user's follow set to vocabulary entities and keep it as a
/// context when at least min_entities survive. A nonzero max_entities caps
/// context length, keeping the most popular entities (lowest dense ids).
inline ContextCorpus build_contexts(const FollowGraph& graph,
                                    const EntityVocabulary& vocab,
                                    std::size_t min_entities = 2,
                                    std::size_t max_entities = 0) {
    if (min_entities < 2)
        throw ConfigError("min_entities must be >= 2");
    ContextCorpus corpus;
    corpus.vocab_size = static_cast<std::uint32_t>(vocab.size());
    for (const auto& user : graph.users) {
        const auto& followed = graph.edges.at(user);
        std::vector<std::uint32_t> ctx;
        ctx.reserve(followed.size());
        for (const auto& account : followed) {
            auto it = vocab.index.find(account);
            if (it != vocab.index.end())
                ctx.push_back(it->second);
        }
        if (ctx.size() < min_entities) {
            ++corpus.num_dropped;
            continue;
        }
        std::sort(ctx.begin(), ctx.end());
        if (max_entities != 0 && ctx.size() > max_entities)
            ctx.resize(max_entities);
        corpus.total_tokens += ctx.size();
        corpus.contexts.push_back(std::move(ctx));
    }
    return corpus;
}

inline CorpusStats corpus_stats(const ContextCorpus& corpus) {
    if (corpus.contexts.empty())
        throw DomainError("corpus is empty");
    CorpusStats s;
    s.retained = corpus.contexts.size();
    s.dropped = corpus.num_dropped;
    std::vector<std::size_t> lengths;
    lengths.reserve(corpus.contexts.size());
    double sum = 0.0;
    for (const auto& ctx : corpus.contexts) {
        lengths.push_back(ctx.size());
        sum += static_cast<double>(ctx.size());
    }
    s.mean = sum / static_cast<double>(lengths.size());
    std::sort(lengths.begin(), lengths.end());
    std::size_t n = lengths.size();
    s.median = (n % 2 == 1)
                   ? static_cast<double>(lengths[n / 2])
                   : 0.5 * (static_cast<double>(lengths[n / 2 - 1]) +
                            static_cast<double>(lengths[n / 2]));
    double ss = 0.0;
    for (auto len : lengths) {
        double d = static_cast<double>(len) - s.mean;
        ss += d * d;
    }
    s.stddev = std::sqrt(ss / static_cast<double>(n));
    return s;
}

namespace detail {
inline constexpr char kCorpusMagic[8] = {'C', 'O', 'V', 'C', 'R', 'P', '0', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& value, const char* what) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in)
        throw ParseError(std::string("truncated corpus file reading ") + what);
}
} // namespace detail

/// Corpus file: 8-byte magic, u32 vocab size, u64 context count and dropped
/// count, then per context a u32 length followed by that many u32 dense ids.
/// Little-endian throughout.
inline void save_corpus(const ContextCorpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot write corpus: " + path);
    out.write(detail::kCorpusMagic, sizeof(detail::kCorpusMagic));
    detail::write_pod(out, corpus.vocab_size);
    detail::write_pod(out, static_cast<std::uint64_t>(corpus.contexts.size()));
    detail::write_pod(out, corpus.num_dropped);
    for (const auto& ctx : corpus.contexts) {
        detail::write_pod(out, static_cast<std::uint32_t>(ctx.size()));
        out.write(reinterpret_cast<const char*>(ctx.data()),
                  static_cast<std::streamsize>(ctx.size() * sizeof(std::uint32_t)));
    }
    if (!out)
        throw ParseError("write failed: " + path);
}

inline ContextCorpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open corpus: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, detail::kCorpusMagic, sizeof(magic)) != 0)
        throw ParseError("not a corpus file: " + path);
    ContextCorpus corpus;
    std::uint64_t num_contexts = 0;
    detail::read_pod(in, corpus.vocab_size, "vocab size");
    detail::read_pod(in, num_contexts, "context count");
    detail::read_pod(in, corpus.num_dropped, "dropped count");
    corpus.contexts.reserve(num_contexts);
    for (std::uint64_t i = 0; i < num_contexts; ++i) {
        std::uint32_t len = 0;
        detail::read_pod(in, len, "context length");
        std::vector<std::uint32_t> ctx(len);
        in.read(reinterpret_cast<char*>(ctx.data()),
                static_cast<std::streamsize>(len * sizeof(std::uint32_t)));
        if (!in)
            throw ParseError("truncated corpus file in context " +
                             std::to_string(i));
        for (auto id : ctx)
            if (id >= corpus.vocab_size)
                throw ParseError("dense id out of range in corpus: " + path);
        corpus.total_tokens += len;
        corpus.contexts.push_back(std::move(ctx));
    }
    return corpus;
}

} // namespace covec
