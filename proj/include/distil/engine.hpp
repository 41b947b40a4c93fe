#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bell.hpp"

namespace distil {

/// Bookkeeping unit of the cascade: a loose even/odd block, or a bracket of
/// n0 even and n1 odd blocks whose labels were merged by a past bilateral
/// measurement.
struct StateClass {
    enum class Kind : std::uint8_t { Loose0, Loose1, Bracket };

    Kind kind = Kind::Loose0;
    int n0 = 0;
    int n1 = 0;

    static StateClass loose0() { return {Kind::Loose0, 0, 0}; }
    static StateClass loose1() { return {Kind::Loose1, 0, 0}; }
    static StateClass bracket(int n0, int n1) {
        if (n0 < 0 || n1 < 0 || n0 + n1 < 1) {
            throw std::invalid_argument("StateClass::bracket: need n0 + n1 >= 1");
        }
        return {Kind::Bracket, n0, n1};
    }

    bool is_bracket() const { return kind == Kind::Bracket; }
    int blocks() const { return is_bracket() ? n0 + n1 : 1; }
    int zero_blocks() const { return is_bracket() ? n0 : (kind == Kind::Loose0 ? 1 : 0); }
    int one_blocks() const { return is_bracket() ? n1 : (kind == Kind::Loose1 ? 1 : 0); }

    std::string str() const {
        switch (kind) {
            case Kind::Loose0: return "loose0";
            case Kind::Loose1: return "loose1";
            default: return "[" + std::to_string(n0) + "," + std::to_string(n1) + "]";
        }
    }

    auto operator<=>(const StateClass&) const = default;
};

/// Priority in which even blocks are offered a bilateral measurement:
/// brackets ascending by (block count, even count), every bracket before the
/// loose even class.
inline bool bpm_priority_less(const StateClass& a, const StateClass& b) {
    auto key = [](const StateClass& c) {
        const int rank = c.is_bracket() ? 0 : (c.kind == StateClass::Kind::Loose0 ? 1 : 2);
        return std::tuple<int, int, int>{rank, c.blocks(), c.n0};
    };
    return key(a) < key(b);
}

/// Expected class occurrences per group of 2^q source pairs, at one block size.
struct FrequencyTable {
    int level = 2;  ///< block size in bits
    std::map<StateClass, double> entries;

    double block_count() const {
        double total = 0.0;
        for (const auto& [cls, f] : entries) total += cls.blocks() * f;
        return total;
    }

    /// Source pairs covered by the table; invariant across cascade steps.
    double pair_count() const { return block_count() * (level / 2); }

    double bracket_count() const {
        double total = 0.0;
        for (const auto& [cls, f] : entries) {
            if (cls.is_bracket()) total += f;
        }
        return total;
    }
};

enum class CascadeMode { Uniform, Ordered };

namespace detail {

// Conditional split probabilities of an even block into equal-parity halves,
// from the half-level class probabilities.
inline std::pair<double, double> half_split_probs(double p0, double p1) {
    const double d = p0 * p0 + p1 * p1;
    return {p0 * p0 / d, p1 * p1 / d};
}

}  // namespace detail

/// Fraction of even blocks that receive a bilateral measurement under the
/// equal-treatment pairing scheme, truncated to `trunc` rounds:
///   sum_{i=0}^{trunc-1} (vw)^{2^i} / (2^i prod_{j=0}^{i} (v^{2^j} + w^{2^j})).
/// Evaluated with a ratio recurrence so deep terms underflow cleanly.
inline double eta_uniform(double p0, double p1, int trunc) {
    if (trunc < 1) throw std::invalid_argument("eta_uniform: trunc must be >= 1");
    if (std::abs(p0 + p1 - 1.0) > 1e-9 || p0 < 0.0 || p1 < 0.0) {
        throw std::invalid_argument("eta_uniform: p0, p1 must be a distribution");
    }
    const auto [v, w] = detail::half_split_probs(p0, p1);
    if (v <= 0.0 || w <= 0.0) return 0.0;
    double term = v * w;  // i = 0, since v + w = 1
    double total = term;
    double s = v / w;     // (v/w)^{2^i}
    for (int i = 1; i < trunc; ++i) {
        term /= 2.0 * (s + 1.0 / s);
        if (term <= 0.0 || !std::isfinite(s)) break;
        total += term;
        s *= s;
    }
    return total;
}

/// Per-round measurement probabilities of the blocks leading the pairing
/// order: z_i = 2 (vw)^{2^(i-1)} / prod_{j=0}^{i-1} (v^{2^j} + w^{2^j}),
/// for i = 1..trunc. Their partial sums are bounded by 2 min(v, w).
inline std::vector<double> eta_round_terms(double p0, double p1, int trunc) {
    const auto [v, w] = detail::half_split_probs(p0, p1);
    std::vector<double> z(static_cast<std::size_t>(trunc), 0.0);
    if (v <= 0.0 || w <= 0.0) return z;
    z[0] = 2.0 * v * w;
    double s = v / w;
    for (int i = 1; i < trunc; ++i) {
        z[i] = z[i - 1] / (s + 1.0 / s);
        if (z[i] <= 0.0 || !std::isfinite(s)) break;
        s *= s;
    }
    return z;
}

/// Measurement fraction for even blocks occupying the ordered span [L, U) of
/// the even-block population. Equals the two-sum form with boundaries
/// l = floor(-log2 L) (unbounded at L = 0, capped by trunc) and
/// u = ceil(-log2 U): round i covers the ordered prefix of length 2^-i, so
/// the class collects z_i weighted by its overlap with that prefix.
inline double eta_ordered(double p0, double p1, double L, double U, int trunc) {
    if (trunc < 1) throw std::invalid_argument("eta_ordered: trunc must be >= 1");
    if (!(L >= 0.0 && L < U && U <= 1.0)) {
        throw std::invalid_argument("eta_ordered: need 0 <= L < U <= 1");
    }
    const std::vector<double> z = eta_round_terms(p0, p1, trunc);
    double total = 0.0;
    double prefix = 1.0;
    for (int i = 1; i <= trunc; ++i) {
        prefix *= 0.5;  // 2^-i
        const double top = std::min(U, prefix);
        if (top <= L) break;
        total += z[static_cast<std::size_t>(i - 1)] * (top - L) / (U - L);
    }
    return total;
}

/// Cumulative even-block spans (L, U) per class, under bpm_priority_less.
/// Classes without even blocks (or without mass) are absent.
inline std::map<StateClass, std::pair<double, double>>
class_ordering_fractions(const FrequencyTable& table) {
    std::vector<std::pair<StateClass, double>> zero_classes;
    double total = 0.0;
    for (const auto& [cls, f] : table.entries) {
        const double mass = cls.zero_blocks() * f;
        if (mass > 0.0) {
            zero_classes.emplace_back(cls, mass);
            total += mass;
        }
    }
    std::map<StateClass, std::pair<double, double>> out;
    if (total <= 0.0) return out;
    std::sort(zero_classes.begin(), zero_classes.end(),
              [](const auto& a, const auto& b) { return bpm_priority_less(a.first, b.first); });
    double cum = 0.0;
    for (const auto& [cls, mass] : zero_classes) {
        out[cls] = {cum / total, std::min(1.0, (cum + mass) / total)};
        cum += mass;
    }
    return out;
}

/// One cascade step: every block of size 2m splits into two blocks of size m.
/// Odd blocks always lose one half to a fresh singleton bracket; even blocks
/// do so with probability eta (uniform or class-ordered), otherwise both
/// halves stay put. Blocks split off a bracket leave as singletons while
/// their siblings remain; the surviving halves of a bracket recombine
/// multinomially into the bracket's next class.
inline FrequencyTable propagate_frequencies(const FrequencyTable& table,
                                            const ClassProbs& halves,
                                            CascadeMode mode, int trunc) {
    if (table.level < 4) {
        throw std::invalid_argument("propagate_frequencies: cascade ends at pair-sized blocks");
    }
    if (halves.level * 2 != table.level) {
        throw std::invalid_argument("propagate_frequencies: ClassProbs must describe the half blocks");
    }
    const auto [v, w] = detail::half_split_probs(halves.p0, halves.p1);

    std::map<StateClass, std::pair<double, double>> spans;
    double eta_flat = 0.0;
    if (mode == CascadeMode::Ordered) {
        spans = class_ordering_fractions(table);
    } else {
        eta_flat = eta_uniform(halves.p0, halves.p1, trunc);
    }
    auto eta_for = [&](const StateClass& cls) {
        if (mode == CascadeMode::Uniform) return eta_flat;
        const auto it = spans.find(cls);
        if (it == spans.end() || !(it->second.first < it->second.second)) return 0.0;
        return eta_ordered(halves.p0, halves.p1, it->second.first, it->second.second, trunc);
    };

    FrequencyTable out;
    out.level = table.level / 2;
    auto add = [&](const StateClass& cls, double f) {
        if (f > 0.0) out.entries[cls] += f;
    };

    for (const auto& [cls, f] : table.entries) {
        if (f <= 0.0) continue;
        switch (cls.kind) {
            case StateClass::Kind::Loose0: {
                const double eta = eta_for(cls);
                add(StateClass::bracket(1, 0), f * eta / 2);
                add(StateClass::loose0(), f * eta / 2);
                add(StateClass::bracket(0, 1), f * eta / 2);
                add(StateClass::loose1(), f * eta / 2);
                add(StateClass::loose0(), 2 * f * std::max(v - eta / 2, 0.0));
                add(StateClass::loose1(), 2 * f * std::max(w - eta / 2, 0.0));
                break;
            }
            case StateClass::Kind::Loose1: {
                add(StateClass::bracket(1, 0), f / 2);
                add(StateClass::loose1(), f / 2);
                add(StateClass::bracket(0, 1), f / 2);
                add(StateClass::loose0(), f / 2);
                break;
            }
            case StateClass::Kind::Bracket: {
                const double eta = eta_for(cls);
                add(StateClass::bracket(1, 0), f * (cls.n0 * eta + cls.n1) / 2);
                add(StateClass::bracket(0, 1), f * (cls.n0 * eta + cls.n1) / 2);

                // joint distribution of surviving (even, odd) halves
                std::map<std::pair<int, int>, double> dist{{{0, 0}, 1.0}};
                const std::pair<std::pair<int, int>, double> even_out[] = {
                    {{1, 0}, eta / 2},
                    {{0, 1}, eta / 2},
                    {{2, 0}, std::max(v - eta / 2, 0.0)},
                    {{0, 2}, std::max(w - eta / 2, 0.0)},
                };
                const std::pair<std::pair<int, int>, double> odd_out[] = {
                    {{0, 1}, 0.5},
                    {{1, 0}, 0.5},
                };
                auto convolve = [&dist](const auto& outcomes, int count) {
                    for (int rep = 0; rep < count; ++rep) {
                        std::map<std::pair<int, int>, double> next;
                        for (const auto& [state, pr] : dist) {
                            for (const auto& [delta, po] : outcomes) {
                                if (po <= 0.0) continue;
                                next[{state.first + delta.first,
                                      state.second + delta.second}] += pr * po;
                            }
                        }
                        dist = std::move(next);
                    }
                };
                convolve(even_out, cls.n0);
                convolve(odd_out, cls.n1);
                for (const auto& [state, pr] : dist) {
                    add(StateClass::bracket(state.first, state.second), f * pr);
                }
                break;
            }
        }
    }

    // drop numerically dead classes; total discarded mass is far below any
    // tolerance used downstream
    for (auto it = out.entries.begin(); it != out.entries.end();) {
        it = (it->second < 1e-15) ? out.entries.erase(it) : std::next(it);
    }
    return out;
}

/// Residual entropy of a merged bracket class with n0 even and n1 odd pairs.
inline double bracket_entropy(int n0, int n1, const ConditionalPairDist& cond) {
    if (n0 < 0 || n1 < 0 || n0 + n1 < 1) {
        throw std::invalid_argument("bracket_entropy: need n0 + n1 >= 1");
    }
    auto powers = [](double base, int n) {
        std::vector<double> p(static_cast<std::size_t>(n) + 1, 1.0);
        for (int i = 1; i <= n; ++i) p[i] = p[i - 1] * base;
        return p;
    };
    auto binomials = [](int n) {
        std::vector<double> c(static_cast<std::size_t>(n) + 1, 1.0);
        for (int i = 1; i <= n; ++i) c[i] = c[i - 1] * (n - i + 1) / i;
        return c;
    };
    const auto q00 = powers(cond.q00, n0), q11 = powers(cond.q11, n0);
    const auto q01 = powers(cond.q01, n1), q10 = powers(cond.q10, n1);
    const auto c0 = binomials(n0), c1 = binomials(n1);

    double acc = 0.0;
    for (int i = 0; i <= n0; ++i) {
        for (int j = 0; j <= n1; ++j) {
            const double mass = q00[i] * q11[n0 - i] * q01[j] * q10[n1 - j] +
                                q00[n0 - i] * q11[i] * q01[n1 - j] * q10[j];
            acc += c0[i] * c1[j] * plog2p(mass);
        }
    }
    return -0.5 * acc;
}

/// Residual entropy of an unmerged terminal pair of the given parity class.
inline double loose_pair_entropy(StateClass::Kind kind, const ConditionalPairDist& cond) {
    switch (kind) {
        case StateClass::Kind::Loose0: return binary_entropy(cond.q00);
        case StateClass::Kind::Loose1: return binary_entropy(cond.q01);
        default: throw std::invalid_argument("loose_pair_entropy: expected a loose class");
    }
}

/// Full cost breakdown of a protocol run, in ebits per source pair.
struct YieldReport {
    double pb_cost = 0.0;                  ///< parity-extraction cost before replacements
    double bpm_savings = 0.0;              ///< ebits saved by measurement replacements
    double residual_breeding_cost = 0.0;   ///< cost of purifying the terminal classes
    double nonmeasured_fraction = 1.0;     ///< pairs surviving to the output
    double yield_raw = 0.0;                ///< may be negative ("do not run" regime)
    double yield = 0.0;                    ///< max(yield_raw, 0)

    static YieldReport assemble(double pb_cost, double bpm_savings,
                                double residual, double nonmeasured) {
        YieldReport r;
        r.pb_cost = pb_cost;
        r.bpm_savings = bpm_savings;
        r.residual_breeding_cost = residual;
        r.nonmeasured_fraction = nonmeasured;
        r.yield_raw = nonmeasured - (pb_cost - bpm_savings) - residual;
        r.yield = std::max(r.yield_raw, 0.0);
        return r;
    }
};

inline double breeding_yield_raw(const BellDiagonal& rho) {
    return 1.0 - state_entropy(rho);
}

inline YieldReport breeding_yield_report(const BellDiagonal& rho) {
    return YieldReport::assemble(state_entropy(rho), 0.0, 0.0, 1.0);
}

/// Distilled ebits per pair of the one-way parity-extraction protocol,
/// floored at zero.
inline double breeding_yield(const BellDiagonal& rho) {
    return std::max(breeding_yield_raw(rho), 0.0);
}

/// Two-pair block protocol: blocks are classified by the 1010 parity; even
/// blocks are bred whole, odd blocks give up pair one to a bilateral phase
/// measurement and breed the surviving rank-two pair.
inline YieldReport vv_yield_report(const BellDiagonal& rho) {
    const double phase1 = rho.p[2] + rho.p[3];  // P(phase bit = 1) of one pair
    const double phase0 = 1.0 - phase1;
    const double p_odd = 2.0 * phase0 * phase1;   // a^T g = 1 for a = 1010
    const double p_even = 1.0 - p_odd;

    // conditional entropy of a 2-pair block given the even class
    double s_even = 0.0;
    if (p_even > 0.0) {
        for (unsigned g = 0; g < 16; ++g) {
            const unsigned first = (g >> 2) & 3u, second = g & 3u;
            if (((first ^ second) & 2u) != 0) continue;  // phase bits must agree
            s_even -= plog2p(rho.p[first] * rho.p[second] / p_even);
        }
    }

    // after the measurement the surviving pair is rank two: phase bit known,
    // amplitude bit distributed by the phase-conditional
    double s_odd_pair = 0.0;
    if (p_odd > 0.0) {
        const double h_phase1 = phase1 > 0.0 ? binary_entropy(rho.p[2] / phase1) : 0.0;
        const double h_phase0 = phase0 > 0.0 ? binary_entropy(rho.p[0] / phase0) : 0.0;
        s_odd_pair = 0.5 * (h_phase1 + h_phase0);
    }

    // parity extraction covers the block classes plus, for odd blocks, the
    // equiprobable phase bit of pair one; the bilateral measurement performs
    // exactly that last check, saving its ebit
    const double pb_cost = (grouped_entropy(rho, BitVec::parse("1010")) + p_odd) / 2.0;
    const double bpm_savings = p_odd / 2.0;
    const double residual = (p_even * s_even + p_odd * s_odd_pair) / 2.0;
    const double nonmeasured = 1.0 - p_odd / 2.0;
    return YieldReport::assemble(pb_cost, bpm_savings, residual, nonmeasured);
}

inline double vv_yield(const BellDiagonal& rho) {
    return vv_yield_report(rho).yield;
}

/// Terminal class frequencies of the cascade at pair level.
inline FrequencyTable cascade_frequency_table(const BellDiagonal& rho, int qdepth,
                                              CascadeMode mode, int trunc) {
    if (qdepth < 1) throw std::invalid_argument("cascade_frequency_table: qdepth must be >= 1");
    if (trunc < 1) throw std::invalid_argument("cascade_frequency_table: trunc must be >= 1");
    const std::vector<ClassProbs> ladder = class_probs_ladder(rho, qdepth);

    FrequencyTable table;
    table.level = ladder.back().level;  // 2^(qdepth+1)
    table.entries[StateClass::loose0()] = ladder.back().p0;
    table.entries[StateClass::loose1()] = ladder.back().p1;
    for (int k = qdepth - 1; k >= 0; --k) {
        table = propagate_frequencies(table, ladder[static_cast<std::size_t>(k)], mode, trunc);
    }
    return table;
}

/// Yield of the adaptive cascade protocol with 2^qdepth pairs per group.
inline YieldReport cascade_yield(const BellDiagonal& rho, int qdepth,
                                 CascadeMode mode, int trunc) {
    const FrequencyTable table = cascade_frequency_table(rho, qdepth, mode, trunc);
    const ConditionalPairDist cond = ConditionalPairDist::from(rho);
    const double group = std::pow(2.0, qdepth);

    double residual = 0.0;
    double brackets = 0.0;
    for (const auto& [cls, f] : table.entries) {
        if (cls.is_bracket()) {
            brackets += f;
            residual += f * bracket_entropy(cls.n0, cls.n1, cond);
        } else {
            residual += f * loose_pair_entropy(cls.kind, cond);
        }
    }
    residual /= group;

    const double pb_cost = grouped_entropy(rho, BitVec::parse("11"));
    return YieldReport::assemble(pb_cost, brackets / group, residual, 1.0 - brackets / group);
}

}  // namespace distil
