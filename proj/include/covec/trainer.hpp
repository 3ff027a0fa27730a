#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "covec/common.hpp"
#include "covec/corpus.hpp"
#include "covec/graph.hpp"
#include "covec/rng.hpp"

namespace covec {

enum class TrainMode { Sgns, Cbow };

struct TrainConfig {
    std::size_t dim = 100;
    std::size_t negatives = 20;
    float initial_lr = 0.03f;
    float min_lr = 0.0007f;
    double downsample_t = 1e-5; // <= 0 disables downsampling
    std::size_t epochs = 5;
    TrainMode mode = TrainMode::Sgns;
    double sampling_power = 0.75;
    std::uint64_t seed = 1;
    std::size_t workers = 1;

    void validate() const {
        if (dim < 1)
            throw ConfigError("dim must be >= 1");
        if (min_lr <= 0.0f || min_lr > initial_lr)
            throw ConfigError("require 0 < min_lr <= initial_lr");
        if (epochs < 1)
            throw ConfigError("epochs must be >= 1");
        if (workers < 1)
            throw ConfigError("workers must be >= 1");
    }
};

/// Paired target/context vector matrices, row-major |E| x dim.
struct EmbeddingModel {
    EntityVocabulary vocab;
    TrainConfig config;
    std::vector<float> target_vectors;
    std::vector<float> context_vectors;

    std::size_t dim() const { return config.dim; }

    float* target_row(std::size_t i) { return target_vectors.data() + i * config.dim; }
    const float* target_row(std::size_t i) const { return target_vectors.data() + i * config.dim; }
    float* context_row(std::size_t i) { return context_vectors.data() + i * config.dim; }
    const float* context_row(std::size_t i) const { return context_vectors.data() + i * config.dim; }

    void check_id(std::size_t i) const {
        if (i >= vocab.size())
            throw LookupError("dense id out of range: " + std::to_string(i));
    }
};

/// Target rows uniform in [-0.5/dim, +0.5/dim], context rows zero.
inline EmbeddingModel init_model(EntityVocabulary vocab, TrainConfig config) {
    config.validate();
    EmbeddingModel model;
    model.config = config;
    model.vocab = std::move(vocab);
    std::size_t n = model.vocab.size() * config.dim;
    model.target_vectors.resize(n);
    model.context_vectors.assign(n, 0.0f);
    Rng rng(config.seed);
    float scale = 1.0f / static_cast<float>(config.dim);
    for (auto& x : model.target_vectors)
        x = static_cast<float>(rng.next_double() - 0.5) * scale;
    return model;
}

/// Keep probability for an entity occurring with corpus frequency f under
/// downsampling threshold t: min(1, sqrt(t/f)).
inline double subsample_keep_prob(double f, double t) {
    if (f <= 0.0 || f > 1.0)
        throw DomainError("frequency must be in (0, 1]");
    if (t <= 0.0)
        throw DomainError("downsampling threshold must be > 0");
    return std::min(1.0, std::sqrt(t / f));
}

/// Cumulative distribution over dense ids proportional to count^power.
class SamplerTable {
  public:
    SamplerTable() = default;

    SamplerTable(const EntityVocabulary& vocab, double power) {
        if (power < 0.0)
            throw ConfigError("sampling power must be >= 0");
        if (vocab.size() == 0)
            throw ConfigError("cannot build sampler over empty vocabulary");
        cumulative_.resize(vocab.size());
        double total = 0.0;
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            total += std::pow(static_cast<double>(vocab.counts[i]), power);
            cumulative_[i] = total;
        }
        for (auto& c : cumulative_)
            c /= total;
        cumulative_.back() = 1.0;
    }

    double prob(std::size_t i) const {
        return i == 0 ? cumulative_[0] : cumulative_[i] - cumulative_[i - 1];
    }

    std::uint32_t sample(Rng& rng) const {
        double u = rng.next_double();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end())
            --it;
        return static_cast<std::uint32_t>(it - cumulative_.begin());
    }

    std::size_t size() const { return cumulative_.size(); }

  private:
    std::vector<double> cumulative_;
};

namespace detail {

// Inputs clipped to [-8, 8]; coefficients stay bounded so no update can
// produce a NaN/Inf row.
inline double clipped_sigmoid(double x) {
    x = std::clamp(x, -8.0, 8.0);
    return 1.0 / (1.0 + std::exp(-x));
}

// Four partial sums break the add dependency chain; the compiler cannot
// reassociate double accumulation on its own.
template <typename P>
inline double dotp(const P* a, const float* b, std::size_t dim) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t d = 0;
    for (; d + 4 <= dim; d += 4) {
        s0 += static_cast<double>(a[d]) * static_cast<double>(b[d]);
        s1 += static_cast<double>(a[d + 1]) * static_cast<double>(b[d + 1]);
        s2 += static_cast<double>(a[d + 2]) * static_cast<double>(b[d + 2]);
        s3 += static_cast<double>(a[d + 3]) * static_cast<double>(b[d + 3]);
    }
    for (; d < dim; ++d)
        s0 += static_cast<double>(a[d]) * static_cast<double>(b[d]);
    return (s0 + s1) + (s2 + s3);
}

// Loss and sigmoid coefficients for one positive-vs-negatives decision.
// coeffs[0] = sigma(x_pos) - 1, coeffs[1 + n] = sigma(x_neg_n); the gradient
// of the loss w.r.t. any score x is the matching coefficient.
template <typename P>
inline double pair_coeffs(const EmbeddingModel& model, const P* predictor,
                          std::uint32_t positive,
                          std::span<const std::uint32_t> negatives,
                          std::vector<double>& coeffs) {
    std::size_t dim = model.config.dim;
    coeffs.clear();
    coeffs.reserve(negatives.size() + 1);
    double sig =
        clipped_sigmoid(dotp(predictor, model.context_row(positive), dim));
    coeffs.push_back(sig - 1.0);
    double loss = -std::log(sig);
    for (auto k : negatives) {
        model.check_id(k);
        double sk =
            clipped_sigmoid(dotp(predictor, model.context_row(k), dim));
        coeffs.push_back(sk);
        loss -= std::log(1.0 - sk);
    }
    return loss;
}

inline void check_sgns_pair(const EmbeddingModel& model, std::uint32_t target,
                            std::uint32_t context) {
    model.check_id(target);
    model.check_id(context);
    if (target == context)
        throw DomainError("target and context must differ");
}

// Mean of the target rows of the context ids.
inline void cbow_aggregate(const EmbeddingModel& model, std::uint32_t target,
                           std::span<const std::uint32_t> context_ids,
                           std::vector<double>& h) {
    if (context_ids.empty())
        throw DomainError("CBOW context must be non-empty");
    std::size_t dim = model.config.dim;
    h.assign(dim, 0.0);
    for (auto c : context_ids) {
        model.check_id(c);
        if (c == target)
            throw DomainError("CBOW context must exclude the target");
        const float* uc = model.target_row(c);
        for (std::size_t d = 0; d < dim; ++d)
            h[d] += uc[d];
    }
    double inv = 1.0 / static_cast<double>(context_ids.size());
    for (auto& v : h)
        v *= inv;
}

} // namespace detail

/// Negative-sampling loss of one (target, context) pair without updating.
inline double sgns_loss(const EmbeddingModel& model, std::uint32_t target,
                        std::uint32_t context,
                        std::span<const std::uint32_t> negatives) {
    detail::check_sgns_pair(model, target, context);
    thread_local std::vector<double> coeffs;
    return detail::pair_coeffs(model, model.target_row(target), context,
                               negatives, coeffs);
}

/// CBOW loss: target scored against the mean of the context target-vectors.
inline double cbow_loss(const EmbeddingModel& model, std::uint32_t target,
                        std::span<const std::uint32_t> context_ids,
                        std::span<const std::uint32_t> negatives) {
    model.check_id(target);
    thread_local std::vector<double> h;
    thread_local std::vector<double> coeffs;
    detail::cbow_aggregate(model, target, context_ids, h);
    return detail::pair_coeffs(model, h.data(), target, negatives, coeffs);
}

/// Analytic gradients of one pair loss, keyed by matrix row. Rows named
/// more than once (duplicate negatives, negative == context) accumulate.
struct PairGradients {
    double loss = 0.0;
    std::map<std::uint32_t, std::vector<double>> d_target;  // target_vectors rows
    std::map<std::uint32_t, std::vector<double>> d_context; // context_vectors rows
};

inline PairGradients sgns_gradients(const EmbeddingModel& model,
                                    std::uint32_t target, std::uint32_t context,
                                    std::span<const std::uint32_t> negatives) {
    detail::check_sgns_pair(model, target, context);
    std::size_t dim = model.dim();
    const float* u = model.target_row(target);
    std::vector<double> coeffs;
    PairGradients g;
    g.loss = detail::pair_coeffs(model, u, context, negatives, coeffs);
    auto& gu = g.d_target[target];
    gu.assign(dim, 0.0);
    auto accumulate = [&](std::uint32_t row, double coef) {
        const float* v = model.context_row(row);
        auto& gv = g.d_context[row];
        if (gv.empty())
            gv.assign(dim, 0.0);
        for (std::size_t d = 0; d < dim; ++d) {
            gu[d] += coef * v[d];
            gv[d] += coef * u[d];
        }
    };
    accumulate(context, coeffs[0]);
    for (std::size_t n = 0; n < negatives.size(); ++n)
        accumulate(negatives[n], coeffs[n + 1]);
    return g;
}

inline PairGradients cbow_gradients(const EmbeddingModel& model,
                                    std::uint32_t target,
                                    std::span<const std::uint32_t> context_ids,
                                    std::span<const std::uint32_t> negatives) {
    model.check_id(target);
    std::size_t dim = model.dim();
    std::vector<double> h;
    detail::cbow_aggregate(model, target, context_ids, h);
    std::vector<double> coeffs;
    PairGradients g;
    g.loss = detail::pair_coeffs(model, h.data(), target, negatives, coeffs);
    std::vector<double> grad_h(dim, 0.0);
    auto accumulate = [&](std::uint32_t row, double coef) {
        const float* v = model.context_row(row);
        auto& gv = g.d_context[row];
        if (gv.empty())
            gv.assign(dim, 0.0);
        for (std::size_t d = 0; d < dim; ++d) {
            grad_h[d] += coef * v[d];
            gv[d] += coef * h[d];
        }
    };
    accumulate(target, coeffs[0]);
    for (std::size_t n = 0; n < negatives.size(); ++n)
        accumulate(negatives[n], coeffs[n + 1]);
    double share = 1.0 / static_cast<double>(context_ids.size());
    for (auto c : context_ids) {
        auto& gc = g.d_target[c];
        if (gc.empty())
            gc.assign(dim, 0.0);
        for (std::size_t d = 0; d < dim; ++d)
            gc[d] += share * grad_h[d];
    }
    return g;
}

/// One SGD step on the pair loss. Returns the pre-update loss. All scores
/// are computed before any write, so the step equals a simultaneous
/// gradient step even when negative ids repeat.
inline float sgns_update(EmbeddingModel& model, std::uint32_t target,
                         std::uint32_t context,
                         std::span<const std::uint32_t> negatives, float lr) {
    detail::check_sgns_pair(model, target, context);
    if (lr <= 0.0f)
        throw ConfigError("learning rate must be > 0");
    std::size_t dim = model.dim();
    float* u = model.target_row(target);

    thread_local std::vector<double> coeffs;
    thread_local std::vector<double> grad_u;
    double loss =
        detail::pair_coeffs(model, u, context, negatives, coeffs);
    grad_u.assign(dim, 0.0);

    auto step_context = [&](std::uint32_t row, double coef) {
        float* v = model.context_row(row);
        float step = static_cast<float>(lr * coef);
        for (std::size_t d = 0; d < dim; ++d) {
            grad_u[d] += coef * v[d];
            v[d] -= step * u[d];
        }
    };
    step_context(context, coeffs[0]);
    for (std::size_t n = 0; n < negatives.size(); ++n)
        step_context(negatives[n], coeffs[n + 1]);
    for (std::size_t d = 0; d < dim; ++d)
        u[d] -= lr * static_cast<float>(grad_u[d]);
    return static_cast<float>(loss);
}

/// One CBOW SGD step; gradient on the aggregate is split equally across the
/// context rows. Returns the pre-update loss.
inline float cbow_update(EmbeddingModel& model, std::uint32_t target,
                         std::span<const std::uint32_t> context_ids,
                         std::span<const std::uint32_t> negatives, float lr) {
    model.check_id(target);
    if (lr <= 0.0f)
        throw ConfigError("learning rate must be > 0");
    std::size_t dim = model.dim();
    thread_local std::vector<double> h;
    thread_local std::vector<double> coeffs;
    thread_local std::vector<double> grad_h;
    detail::cbow_aggregate(model, target, context_ids, h);
    double loss = detail::pair_coeffs(model, h.data(), target, negatives, coeffs);
    grad_h.assign(dim, 0.0);

    auto step_context = [&](std::uint32_t row, double coef) {
        float* v = model.context_row(row);
        for (std::size_t d = 0; d < dim; ++d) {
            grad_h[d] += coef * v[d];
            v[d] -= static_cast<float>(lr * coef * h[d]);
        }
    };
    step_context(target, coeffs[0]);
    for (std::size_t n = 0; n < negatives.size(); ++n)
        step_context(negatives[n], coeffs[n + 1]);
    double share = static_cast<double>(lr) /
                   static_cast<double>(context_ids.size());
    for (auto c : context_ids) {
        float* uc = model.target_row(c);
        for (std::size_t d = 0; d < dim; ++d)
            uc[d] -= static_cast<float>(share * grad_h[d]);
    }
    return static_cast<float>(loss);
}

struct TrainResult {
    std::vector<double> epoch_mean_loss;
    std::uint64_t updates = 0; // pair updates (SGNS) or focus updates (CBOW)
    double seconds = 0.0;
};

namespace detail {

inline std::uint64_t scheduled_units(std::size_t len, TrainMode mode) {
    if (mode == TrainMode::Sgns)
        return static_cast<std::uint64_t>(len) * (len - 1);
    return static_cast<std::uint64_t>(len);
}

// Draw a negative, avoiding `positive`: one resample on collision, then the
// slot is skipped.
inline bool draw_negative(const SamplerTable& sampler, Rng& rng,
                          std::uint32_t positive, std::uint32_t& out) {
    out = sampler.sample(rng);
    if (out != positive)
        return true;
    out = sampler.sample(rng);
    return out != positive;
}

} // namespace detail

/// Train on set contexts. Per epoch each context is downsampled, shuffled,
/// and every ordered pair (SGNS) or focus entity (CBOW) is trained. The
/// learning rate decays linearly over the scheduled (pre-downsampling) unit
/// count. Bitwise deterministic with workers=1; with more workers the
/// matrices are shared without locking and lost updates are tolerated.
inline TrainResult train(EmbeddingModel& model, const ContextCorpus& corpus) {
    const TrainConfig& cfg = model.config;
    cfg.validate();
    if (corpus.contexts.empty())
        throw DomainError("cannot train on an empty corpus");
    if (corpus.vocab_size != model.vocab.size())
        throw ConfigError("corpus vocabulary size does not match model");

    // Per-entity keep probability from corpus frequency.
    std::vector<double> keep(model.vocab.size(), 1.0);
    if (cfg.downsample_t > 0.0) {
        std::vector<std::uint64_t> freq(model.vocab.size(), 0);
        for (const auto& ctx : corpus.contexts)
            for (auto id : ctx)
                ++freq[id];
        for (std::size_t i = 0; i < keep.size(); ++i)
            if (freq[i] > 0)
                keep[i] = subsample_keep_prob(
                    static_cast<double>(freq[i]) /
                        static_cast<double>(corpus.total_tokens),
                    cfg.downsample_t);
    }

    SamplerTable sampler(model.vocab, cfg.sampling_power);

    std::uint64_t total_scheduled = 0;
    for (const auto& ctx : corpus.contexts)
        total_scheduled += detail::scheduled_units(ctx.size(), cfg.mode);
    total_scheduled *= cfg.epochs;
    if (total_scheduled == 0)
        throw DomainError("corpus yields no training pairs");

    std::atomic<std::uint64_t> scheduled_done{0};
    const float lr_span = cfg.initial_lr - cfg.min_lr;

    TrainResult result;
    auto t0 = std::chrono::steady_clock::now();

    std::size_t workers = std::min(cfg.workers, corpus.contexts.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<double> loss_sum(workers, 0.0);
        std::vector<std::uint64_t> update_count(workers, 0);

        auto run_worker = [&](std::size_t w) {
            std::size_t n = corpus.contexts.size();
            std::size_t begin = n * w / workers;
            std::size_t end = n * (w + 1) / workers;
            std::vector<std::uint32_t> retained;
            std::vector<std::uint32_t> negatives;
            std::vector<std::uint32_t> cbow_ctx;
            for (std::size_t ci = begin; ci < end; ++ci) {
                const auto& ctx = corpus.contexts[ci];
                std::uint64_t sched =
                    detail::scheduled_units(ctx.size(), cfg.mode);
                std::uint64_t done =
                    scheduled_done.fetch_add(sched, std::memory_order_relaxed);
                float lr = cfg.initial_lr -
                           lr_span * (static_cast<float>(done) /
                                      static_cast<float>(total_scheduled));
                lr = std::max(lr, cfg.min_lr);

                Rng rng(mix_seed(cfg.seed, epoch, ci));
                retained.clear();
                for (auto id : ctx)
                    if (keep[id] >= 1.0 || rng.next_double() < keep[id])
                        retained.push_back(id);
                if (retained.size() < 2)
                    continue;
                for (std::size_t i = retained.size() - 1; i > 0; --i)
                    std::swap(retained[i], retained[rng.next_below(i + 1)]);

                if (cfg.mode == TrainMode::Sgns) {
                    for (std::size_t i = 0; i < retained.size(); ++i) {
                        for (std::size_t j = 0; j < retained.size(); ++j) {
                            if (i == j)
                                continue;
                            std::uint32_t positive = retained[j];
                            negatives.clear();
                            for (std::size_t k = 0; k < cfg.negatives; ++k) {
                                std::uint32_t neg;
                                if (detail::draw_negative(sampler, rng,
                                                          positive, neg))
                                    negatives.push_back(neg);
                            }
                            loss_sum[w] += sgns_update(model, retained[i],
                                                       positive, negatives, lr);
                            ++update_count[w];
                        }
                    }
                } else {
                    for (std::size_t i = 0; i < retained.size(); ++i) {
                        std::uint32_t focus = retained[i];
                        cbow_ctx.clear();
                        for (std::size_t j = 0; j < retained.size(); ++j)
                            if (j != i)
                                cbow_ctx.push_back(retained[j]);
                        negatives.clear();
                        for (std::size_t k = 0; k < cfg.negatives; ++k) {
                            std::uint32_t neg;
                            if (detail::draw_negative(sampler, rng, focus, neg))
                                negatives.push_back(neg);
                        }
                        loss_sum[w] += cbow_update(model, focus, cbow_ctx,
                                                   negatives, lr);
                        ++update_count[w];
                    }
                }
            }
        };

        if (workers == 1) {
            run_worker(0);
        } else {
            std::vector<std::thread> threads;
            threads.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w)
                threads.emplace_back(run_worker, w);
            for (auto& t : threads)
                t.join();
        }

        double total_loss = 0.0;
        std::uint64_t total_updates = 0;
        for (std::size_t w = 0; w < workers; ++w) {
            total_loss += loss_sum[w];
            total_updates += update_count[w];
        }
        result.updates += total_updates;
        result.epoch_mean_loss.push_back(
            total_updates ? total_loss / static_cast<double>(total_updates)
                          : 0.0);
    }

    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return result;
}

enum class EmbFormat { Text, Binary };

/// Text: `<vocab> <dim>` header, then `<account_id> <f1> ... <fd>` per row.
/// Binary: same header line, then `<account_id> ` followed by dim raw
/// little-endian floats and a newline, per row. Target vectors only.
inline void save_embeddings(const EmbeddingModel& model,
                            const std::string& path, EmbFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot write embeddings: " + path);
    std::size_t n = model.vocab.size();
    std::size_t dim = model.dim();
    out << n << ' ' << dim << '\n';
    if (format == EmbFormat::Text) {
        char buf[64];
        for (std::size_t i = 0; i < n; ++i) {
            out << model.vocab.entities[i];
            const float* row = model.target_row(i);
            for (std::size_t d = 0; d < dim; ++d) {
                // max_digits10 so the text round trip is exact
                std::snprintf(buf, sizeof(buf), " %.9g", row[d]);
                out << buf;
            }
            out << '\n';
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            out << model.vocab.entities[i] << ' ';
            out.write(reinterpret_cast<const char*>(model.target_row(i)),
                      static_cast<std::streamsize>(dim * sizeof(float)));
            out << '\n';
        }
    }
    if (!out)
        throw ParseError("write failed: " + path);
}

inline EmbeddingModel load_embeddings(const std::string& path,
                                      EmbFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open embeddings: " + path);
    std::size_t n = 0, dim = 0;
    in >> n >> dim;
    if (!in || dim == 0)
        throw ParseError("bad embeddings header: " + path);
    in.ignore(1); // newline
    EmbeddingModel model;
    model.config.dim = dim;
    model.target_vectors.resize(n * dim);
    model.context_vectors.assign(n * dim, 0.0f);
    for (std::size_t i = 0; i < n; ++i) {
        std::string id;
        if (format == EmbFormat::Text) {
            in >> id;
            if (!in)
                throw ParseError("truncated embeddings at row " +
                                 std::to_string(i));
            float* row = model.target_row(i);
            for (std::size_t d = 0; d < dim; ++d)
                if (!(in >> row[d]))
                    throw ParseError("truncated embeddings at row " +
                                     std::to_string(i));
        } else {
            char ch;
            while (in.get(ch) && ch != ' ')
                id.push_back(ch);
            if (!in || id.empty())
                throw ParseError("truncated embeddings at row " +
                                 std::to_string(i));
            in.read(reinterpret_cast<char*>(model.target_row(i)),
                    static_cast<std::streamsize>(dim * sizeof(float)));
            in.ignore(1); // newline
            if (!in)
                throw ParseError("truncated embeddings at row " +
                                 std::to_string(i));
        }
        model.vocab.index.emplace(id, static_cast<std::uint32_t>(i));
        model.vocab.entities.push_back(std::move(id));
        model.vocab.counts.push_back(0);
    }
    if (model.vocab.index.size() != n)
        throw ParseError("duplicate account id in embeddings: " + path);
    return model;
}

} // namespace covec
