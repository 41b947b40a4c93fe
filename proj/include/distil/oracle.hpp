#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "engine.hpp"

// Independent verification paths. Everything here re-derives conditioning,
// merging and entropies from the raw label space so that agreement with the
// closed-form calculators in engine.hpp is evidence rather than tautology.
namespace distil::oracle {

/// A parity check recorded against an ensemble.
struct Check {
    BitVec r;
    bool bilateral = false;  // consumed a pair and merged labels
    int outcome = 0;
};

/// Exhaustive ensemble of Bell-label strings with the merge structure left
/// behind by bilateral measurements. Capped at 10 pairs (2^20 labels).
class EnsembleState {
public:
    static constexpr int kMaxPairs = 10;

    static EnsembleState product(const BellDiagonal& rho, int n_pairs) {
        EnsembleState st(n_pairs);
        for (std::uint32_t g = 0; g < st.label_count(); ++g) {
            double wgt = 1.0;
            for (int k = 0; k < n_pairs; ++k) {
                wgt *= rho.p[(g >> (2 * (n_pairs - 1 - k))) & 3u];
            }
            st.weight_[g] = wgt;
        }
        return st;
    }

    static EnsembleState uniform(int n_pairs) {
        EnsembleState st(n_pairs);
        const double w = 1.0 / static_cast<double>(st.label_count());
        std::fill(st.weight_.begin(), st.weight_.end(), w);
        return st;
    }

    static EnsembleState from_weights(int n_pairs, std::vector<double> weights) {
        EnsembleState st(n_pairs);
        if (weights.size() != st.label_count()) {
            throw std::invalid_argument("EnsembleState: weight vector has wrong size");
        }
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("EnsembleState: negative weight");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw std::invalid_argument("EnsembleState: weights must sum to 1");
        }
        st.weight_ = std::move(weights);
        return st;
    }

    int pairs() const { return n_; }
    std::size_t label_count() const { return std::size_t{1} << (2 * n_); }
    const std::vector<Check>& history() const { return history_; }

    /// True when the parity q^T s is still extractable given the recorded
    /// bilateral measurements.
    bool accessible(const BitVec& q) const {
        for (const auto& c : history_) {
            if (c.bilateral && symplectic_product(q, c.r) != 0) return false;
        }
        return true;
    }

    double outcome_probability(const BitVec& r, int outcome) const {
        const std::uint32_t mask = label_mask(r);
        double total = 0.0;
        for (std::uint32_t g = 0; g < label_count(); ++g) {
            if (parity(g, mask) == (outcome & 1)) total += weight_[g];
        }
        return total;
    }

    /// Condition on r^T s = outcome without disturbing the ensemble.
    EnsembleState apply_aem(const BitVec& r, int outcome) const {
        EnsembleState next = *this;
        next.require_check(r);
        const std::uint32_t mask = label_mask(r);
        double total = 0.0;
        for (std::uint32_t g = 0; g < label_count(); ++g) {
            if (parity(g, mask) != (outcome & 1)) {
                next.weight_[g] = 0.0;
            } else {
                total += next.weight_[g];
            }
        }
        if (total <= 0.0) throw std::domain_error("apply_aem: impossible outcome");
        for (auto& w : next.weight_) w /= total;
        next.history_.push_back({r, false, outcome & 1});
        return next;
    }

    /// Condition on r^T s = outcome, then merge every label s with s + P r.
    EnsembleState apply_bpm(const BitVec& r, int outcome) const {
        EnsembleState next = apply_aem(r, outcome);
        next.history_.back().bilateral = true;
        if (!merge_is_new(r)) {
            throw std::invalid_argument("apply_bpm: r already lies in the merged span");
        }
        const std::uint32_t pmask = label_mask(r.pair_swapped());
        for (std::uint32_t g = 0; g < label_count(); ++g) {
            next.unite(g, g ^ pmask);
        }
        next.collect_weights();
        return next;
    }

    /// Weight of each merge class, keyed by its smallest member.
    std::map<std::uint32_t, double> class_weights() const {
        std::map<std::uint32_t, double> out;
        for (std::uint32_t g = 0; g < label_count(); ++g) {
            if (weight_[g] > 0.0) out[root(g)] += weight_[g];
        }
        return out;
    }

    double entropy() const {
        std::vector<double> acc(label_count(), 0.0);
        for (std::uint32_t g = 0; g < label_count(); ++g) {
            if (weight_[g] > 0.0) acc[root(g)] += weight_[g];
        }
        double s = 0.0;
        for (double w : acc) s -= plog2p(w);
        return s;
    }

    std::uint32_t root(std::uint32_t g) const {
        while (parent_[g] != g) {
            g = parent_[g] = parent_[parent_[g]];
        }
        return g;
    }

private:
    explicit EnsembleState(int n_pairs) : n_(n_pairs) {
        if (n_pairs < 1 || n_pairs > kMaxPairs) {
            throw std::length_error("EnsembleState: pair count outside [1, 10]");
        }
        weight_.assign(label_count(), 0.0);
        parent_.resize(label_count());
        std::iota(parent_.begin(), parent_.end(), 0u);
    }

    std::uint32_t label_mask(const BitVec& v) const {
        if (v.size() != static_cast<std::size_t>(2 * n_)) {
            throw std::invalid_argument("EnsembleState: check has wrong length");
        }
        return static_cast<std::uint32_t>(v.to_uint());
    }

    static int parity(std::uint32_t g, std::uint32_t mask) {
        return std::popcount(g & mask) & 1;
    }

    void require_check(const BitVec& r) const {
        if (r.is_zero()) throw std::invalid_argument("EnsembleState: zero parity check");
        label_mask(r);
        if (!accessible(r)) {
            throw std::invalid_argument("EnsembleState: check anticommutes with an earlier measurement");
        }
    }

    // r independent of the already-merged directions?
    bool merge_is_new(const BitVec& r) const {
        std::vector<std::uint32_t> basis;
        auto reduce = [&basis](std::uint32_t x) {
            for (auto b : basis) x = std::min(x, x ^ b);
            return x;
        };
        for (const auto& c : history_) {
            if (!c.bilateral) continue;
            const std::uint32_t x = reduce(static_cast<std::uint32_t>(c.r.to_uint()));
            if (x) basis.push_back(x);
        }
        return reduce(static_cast<std::uint32_t>(r.to_uint())) != 0;
    }

    void unite(std::uint32_t a, std::uint32_t b) {
        a = root(a);
        b = root(b);
        if (a == b) return;
        if (a > b) std::swap(a, b);
        parent_[b] = a;
    }

    void collect_weights() {
        std::vector<double> acc(label_count(), 0.0);
        for (std::uint32_t g = 0; g < label_count(); ++g) {
            if (weight_[g] != 0.0) acc[root(g)] += weight_[g];
        }
        weight_ = std::move(acc);
    }

    int n_ = 1;
    std::vector<double> weight_;
    mutable std::vector<std::uint32_t> parent_;
    std::vector<Check> history_;
};

/// Residual entropy of a merged bracket by direct enumeration: n0 even pairs,
/// n1 odd pairs, every label identified with its complement. Independent of
/// engine::bracket_entropy.
inline double exact_bracket_entropy(int n0, int n1, const ConditionalPairDist& cond) {
    const int n = n0 + n1;
    if (n < 1) throw std::invalid_argument("exact_bracket_entropy: need n0 + n1 >= 1");
    if (n > EnsembleState::kMaxPairs) {
        throw std::length_error("exact_bracket_entropy: enumeration capped at 10 pairs");
    }
    const std::uint32_t count = std::uint32_t{1} << n;
    std::vector<double> mass(count, 0.0);
    for (std::uint32_t choice = 0; choice < count; ++choice) {
        double wgt = 1.0;
        for (int k = 0; k < n0; ++k) {
            wgt *= ((choice >> k) & 1u) ? cond.q11 : cond.q00;
        }
        for (int k = n0; k < n; ++k) {
            wgt *= ((choice >> k) & 1u) ? cond.q10 : cond.q01;
        }
        mass[std::min(choice, static_cast<std::uint32_t>(~choice) & (count - 1))] += wgt;
    }
    double s = 0.0;
    for (double m : mass) s -= plog2p(m);
    return s;
}

/// Per-class empirical statistics of the Monte Carlo cascade.
struct McStat {
    double mean = 0.0;
    double se = 0.0;
};

struct McResult {
    long long samples = 0;
    int shards = 0;
    std::map<StateClass, McStat> frequencies;  ///< occurrences per 2^q pairs
    McStat yield;
    std::vector<McStat> eta_by_level;  ///< BPM fraction among even blocks per step
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::size_t below(std::size_t n) {
        return static_cast<std::size_t>(engine_() % n);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

struct McBlock {
    std::int8_t parity = 0;
    std::int32_t bracket = -1;  // -1: loose
};

struct McShard {
    std::map<StateClass, double> freq;
    double yield = 0.0;
    std::vector<double> eta;
};

// own ladder of even/odd class probabilities, recomputed here on purpose
inline std::vector<std::pair<double, double>> mc_ladder(const BellDiagonal& rho, int q) {
    std::vector<std::pair<double, double>> lad;
    double p0 = rho.p[0] + rho.p[3];
    double p1 = rho.p[1] + rho.p[2];
    lad.emplace_back(p0, p1);
    for (int k = 1; k <= q; ++k) {
        const double n0 = p0 * p0 + p1 * p1;
        p1 = 2 * p0 * p1;
        p0 = n0;
        lad.emplace_back(p0, p1);
    }
    return lad;
}

inline McShard mc_shard(const BellDiagonal& rho, int q, CascadeMode mode, int trunc,
                        long long samples, std::uint64_t seed) {
    Rng rng(seed);
    const auto ladder = mc_ladder(rho, q);

    std::vector<McBlock> blocks(static_cast<std::size_t>(samples));
    for (auto& b : blocks) {
        b.parity = rng.bernoulli(ladder.back().second) ? 1 : 0;
    }
    std::int32_t next_bracket = 0;
    McShard shard;

    for (int step = q - 1; step >= 0; --step) {
        const auto [p0, p1] = ladder[static_cast<std::size_t>(step)];
        const double denom = p0 * p0 + p1 * p1;
        const double v = p0 * p0 / denom;

        // bracket compositions at the current level, for the ordered ranking
        std::vector<std::pair<int, int>> comp(static_cast<std::size_t>(next_bracket), {0, 0});
        for (const auto& b : blocks) {
            if (b.bracket >= 0) {
                auto& c = comp[static_cast<std::size_t>(b.bracket)];
                (b.parity == 0 ? c.first : c.second) += 1;
            }
        }

        std::vector<McBlock> next;
        next.reserve(blocks.size() * 2);
        std::vector<std::uint32_t> evens;
        for (std::uint32_t i = 0; i < blocks.size(); ++i) {
            if (blocks[i].parity == 0) {
                evens.push_back(i);
            } else {
                // odd blocks always split off a measured singleton
                const std::int8_t beta = rng.bernoulli(0.5) ? 1 : 0;
                next.push_back({beta, next_bracket++});
                next.push_back({static_cast<std::int8_t>(1 - beta), blocks[i].bracket});
            }
        }

        if (mode == CascadeMode::Ordered) {
            std::stable_sort(evens.begin(), evens.end(),
                             [&](std::uint32_t a, std::uint32_t b) {
                                 auto key = [&](std::uint32_t i) {
                                     const auto br = blocks[i].bracket;
                                     if (br < 0) return std::tuple<int, int, int>{1, 0, 0};
                                     const auto& c = comp[static_cast<std::size_t>(br)];
                                     return std::tuple<int, int, int>{0, c.first + c.second, c.first};
                                 };
                                 return key(a) < key(b);
                             });
        } else {
            rng.shuffle(evens);
        }

        long long bpm_count = 0;
        auto resolve = [&](const std::vector<std::uint32_t>& members, std::int8_t beta,
                           std::int64_t target) {
            for (auto i : members) {
                if (static_cast<std::int64_t>(i) == target) {
                    next.push_back({beta, next_bracket++});
                    ++bpm_count;
                } else {
                    next.push_back({beta, blocks[i].bracket});
                }
                next.push_back({beta, blocks[i].bracket});
            }
        };

        std::vector<std::vector<std::uint32_t>> supers;
        supers.reserve(evens.size());
        for (auto i : evens) supers.push_back({i});

        double px = v, py = 1.0 - v;
        for (int round = 0; round < trunc && supers.size() >= 2; ++round) {
            if (mode == CascadeMode::Uniform) rng.shuffle(supers);
            const std::size_t half = supers.size() / 2;
            std::vector<std::vector<std::uint32_t>> survivors;
            survivors.reserve(half);
            for (std::size_t j = 0; j < half; ++j) {
                auto& first = supers[j];
                auto& second = supers[half + j];
                if (rng.bernoulli(2.0 * px * py)) {
                    const std::int8_t beta_first = rng.bernoulli(0.5) ? 1 : 0;
                    std::int64_t target;
                    if (mode == CascadeMode::Ordered) {
                        target = first.front();
                    } else {
                        const std::size_t pick = rng.below(first.size() + second.size());
                        target = pick < first.size() ? first[pick]
                                                     : second[pick - first.size()];
                    }
                    resolve(first, beta_first, target);
                    resolve(second, static_cast<std::int8_t>(1 - beta_first), target);
                } else {
                    first.insert(first.end(), second.begin(), second.end());
                    survivors.push_back(std::move(first));
                }
            }
            if (supers.size() % 2 == 1) {
                // unpaired leftover: resolved without a measurement
                resolve(supers.back(), rng.bernoulli(py) ? 1 : 0, -1);
            }
            supers = std::move(survivors);
            const double d = px * px + py * py;
            px = px * px / d;
            py = 1.0 - px;
        }
        for (const auto& s : supers) {
            resolve(s, rng.bernoulli(py) ? 1 : 0, -1);
        }

        shard.eta.push_back(evens.empty() ? 0.0
                                          : static_cast<double>(bpm_count) /
                                                static_cast<double>(evens.size()));
        blocks = std::move(next);
    }

    // tally terminal classes
    std::vector<std::pair<int, int>> comp(static_cast<std::size_t>(next_bracket), {0, 0});
    for (const auto& b : blocks) {
        if (b.bracket < 0) {
            const StateClass cls = b.parity == 0 ? StateClass::loose0() : StateClass::loose1();
            shard.freq[cls] += 1.0;
        } else {
            auto& c = comp[static_cast<std::size_t>(b.bracket)];
            (b.parity == 0 ? c.first : c.second) += 1;
        }
    }
    for (const auto& [n0, n1] : comp) {
        if (n0 + n1 > 0) shard.freq[StateClass::bracket(n0, n1)] += 1.0;
    }
    for (auto& [cls, f] : shard.freq) f /= static_cast<double>(samples);

    // yield estimate with oracle-side entropies
    const double even = rho.p[0] + rho.p[3];
    const double odd = rho.p[1] + rho.p[2];
    const double s2 = binary_entropy(even);
    const ConditionalPairDist cond = ConditionalPairDist::from(rho);
    double residual = 0.0;
    for (const auto& [cls, f] : shard.freq) {
        double s;
        if (cls.is_bracket()) {
            s = exact_bracket_entropy(cls.n0, cls.n1, cond);
        } else if (cls.kind == StateClass::Kind::Loose0) {
            s = -plog2p(cond.q00) - plog2p(cond.q11);
        } else {
            s = -plog2p(cond.q01) - plog2p(cond.q10);
        }
        residual += f * s;
    }
    shard.yield = 1.0 - s2 - residual / std::pow(2.0, q);
    return shard;
}

}  // namespace detail

/// Stochastic simulation of the cascade's pairing and measurement rules.
/// `samples` top-level groups are split across `shards` independent
/// populations; shard spread provides the standard errors. Deterministic for
/// a fixed seed. qdepth is capped at 4 by the bracket-entropy enumeration.
inline McResult mc_cascade(const BellDiagonal& rho, int qdepth, CascadeMode mode,
                           int trunc, long long samples, std::uint64_t seed,
                           int shards = 32) {
    if (qdepth < 1 || qdepth > 4) {
        throw std::invalid_argument("mc_cascade: qdepth must lie in [1, 4]");
    }
    if (trunc < 1) throw std::invalid_argument("mc_cascade: trunc must be >= 1");
    if (samples < 1) throw std::invalid_argument("mc_cascade: samples must be >= 1");
    shards = static_cast<int>(std::min<long long>(shards, samples));

    std::vector<detail::McShard> parts;
    parts.reserve(static_cast<std::size_t>(shards));
    for (int s = 0; s < shards; ++s) {
        const long long n = samples / shards + (s < samples % shards ? 1 : 0);
        parts.push_back(detail::mc_shard(rho, qdepth, mode, trunc, n,
                                         detail::splitmix64(seed + static_cast<std::uint64_t>(s))));
    }

    McResult out;
    out.samples = samples;
    out.shards = shards;

    auto pooled = [&](auto&& getter) {
        double mean = 0.0, var = 0.0;
        for (const auto& p : parts) mean += getter(p);
        mean /= shards;
        for (const auto& p : parts) {
            const double d = getter(p) - mean;
            var += d * d;
        }
        var = shards > 1 ? var / (shards - 1) : 0.0;
        return McStat{mean, std::sqrt(var / shards)};
    };

    std::map<StateClass, bool> seen;
    for (const auto& p : parts) {
        for (const auto& [cls, f] : p.freq) seen[cls] = true;
    }
    for (const auto& [cls, _] : seen) {
        out.frequencies[cls] = pooled([&](const detail::McShard& p) {
            const auto it = p.freq.find(cls);
            return it == p.freq.end() ? 0.0 : it->second;
        });
    }
    out.yield = pooled([](const detail::McShard& p) { return p.yield; });
    for (std::size_t lvl = 0; lvl < parts.front().eta.size(); ++lvl) {
        out.eta_by_level.push_back(
            pooled([&](const detail::McShard& p) { return p.eta[lvl]; }));
    }
    return out;
}

}  // namespace distil::oracle
