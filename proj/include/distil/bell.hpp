#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "gf2.hpp"

namespace distil {

/// p log2 p with the continuity convention 0 log 0 = 0.
inline double plog2p(double p) {
    return p > 0.0 ? p * std::log2(p) : 0.0;
}

/// H(p, 1-p) in bits.
inline double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("binary_entropy: p must lie in [0, 1]");
    }
    return -plog2p(p) - plog2p(1.0 - p);
}

/// Probabilities of the four Bell labels 00, 01, 10, 11 (phase bit first).
struct BellDiagonal {
    std::array<double, 4> p{1.0, 0.0, 0.0, 0.0};

    BellDiagonal() = default;

    BellDiagonal(double p00, double p01, double p10, double p11)
        : p{p00, p01, p10, p11} {
        double sum = 0.0;
        for (auto& x : p) {
            if (x < 0.0) {
                if (x < -1e-12) throw std::invalid_argument("BellDiagonal: negative probability");
                x = 0.0;
            }
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw std::invalid_argument("BellDiagonal: probabilities must sum to 1");
        }
    }

    static BellDiagonal werner(double fidelity) {
        if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
            throw std::invalid_argument("BellDiagonal::werner: fidelity must lie in [0, 1]");
        }
        const double rest = (1.0 - fidelity) / 3.0;
        return BellDiagonal(fidelity, rest, rest, rest);
    }

    double p00() const { return p[0]; }
    double p01() const { return p[1]; }
    double p10() const { return p[2]; }
    double p11() const { return p[3]; }

    /// Probability that one pair's label has parity 1 against the two-bit
    /// check a2 (a2 in {0,..,3}, phase bit high).
    double slice_parity_prob(unsigned a2) const {
        switch (a2 & 3u) {
            case 0: return 0.0;
            case 1: return p[1] + p[3];  // amplitude bit
            case 2: return p[2] + p[3];  // phase bit
            default: return p[1] + p[2];
        }
    }
};

/// Shannon entropy of the label distribution, in [0, 2] bits.
inline double state_entropy(const BellDiagonal& rho) {
    double s = 0.0;
    for (double x : rho.p) s -= plog2p(x);
    return s;
}

/// Class probabilities (even parity, odd parity) of the check a over blocks
/// of a.size()/2 independent pairs.
inline std::pair<double, double> grouped_class_probs(const BellDiagonal& rho, const BitVec& a) {
    a.require_even("grouped_class_probs");
    if (a.is_zero()) throw std::invalid_argument("grouped_class_probs: a must be nonzero");
    double bias = 1.0;  // E[(-1)^{a^T g}] factorizes over pairs
    for (std::size_t k = 0; k + 1 < a.size(); k += 2) {
        const unsigned a2 = (static_cast<unsigned>(a.bit(k)) << 1) | static_cast<unsigned>(a.bit(k + 1));
        bias *= 1.0 - 2.0 * rho.slice_parity_prob(a2);
    }
    const double p1 = 0.5 * (1.0 - bias);
    return {1.0 - p1, p1};
}

/// Binary entropy of the two-class split induced by the check a.
inline double grouped_entropy(const BellDiagonal& rho, const BitVec& a) {
    return binary_entropy(grouped_class_probs(rho, a).first);
}

/// Even/odd probabilities of the all-ones check on a block of `level` bits.
struct ClassProbs {
    int level = 2;  // block size in bits
    double p0 = 1.0;
    double p1 = 0.0;
};

/// Levels 2, 4, ..., 2^(qdepth+1). Satisfies the doubling recursion
/// p0' = p0^2 + p1^2, p1' = 2 p0 p1.
inline std::vector<ClassProbs> class_probs_ladder(const BellDiagonal& rho, int qdepth) {
    if (qdepth < 1) throw std::invalid_argument("class_probs_ladder: qdepth must be >= 1");
    std::vector<ClassProbs> out;
    out.reserve(static_cast<std::size_t>(qdepth) + 1);
    double p0 = rho.p[0] + rho.p[3];
    double p1 = rho.p[1] + rho.p[2];
    out.push_back({2, p0, p1});
    for (int k = 1; k <= qdepth; ++k) {
        const double next0 = p0 * p0 + p1 * p1;
        p1 = 2.0 * p0 * p1;
        p0 = next0;
        out.push_back({2 << k, p0, p1});
    }
    return out;
}

/// Entropy freed when two ensemble members of weight x and y collapse into
/// one: -x log x - y log y + (x+y) log (x+y) = (x+y) H(x/(x+y), y/(x+y)).
inline double entropy_reduction(double x, double y) {
    if (x < 0.0 || y < 0.0) throw std::invalid_argument("entropy_reduction: weights must be >= 0");
    const double total = x + y;
    if (total == 0.0) return 0.0;
    return total * binary_entropy(x / total);
}

/// Per-pair label distribution conditioned on the pair's parity class.
struct ConditionalPairDist {
    double q00 = 1.0, q11 = 0.0;  // within the even class {00, 11}
    double q01 = 1.0, q10 = 0.0;  // within the odd class {01, 10}

    ConditionalPairDist() = default;

    ConditionalPairDist(double q00_, double q11_, double q01_, double q10_)
        : q00(q00_), q11(q11_), q01(q01_), q10(q10_) {
        if (q00 < 0 || q11 < 0 || q01 < 0 || q10 < 0 ||
            std::abs(q00 + q11 - 1.0) > 1e-12 || std::abs(q01 + q10 - 1.0) > 1e-12) {
            throw std::invalid_argument("ConditionalPairDist: each class must be a distribution");
        }
    }

    /// Conditionals of rho; a zero-probability class falls back to (1/2, 1/2),
    /// which only ever multiplies zero frequency downstream.
    static ConditionalPairDist from(const BellDiagonal& rho) {
        const double even = rho.p[0] + rho.p[3];
        const double odd = rho.p[1] + rho.p[2];
        ConditionalPairDist c;
        if (even > 0.0) {
            c.q00 = rho.p[0] / even;
            c.q11 = rho.p[3] / even;
        } else {
            c.q00 = c.q11 = 0.5;
        }
        if (odd > 0.0) {
            c.q01 = rho.p[1] / odd;
            c.q10 = rho.p[2] / odd;
        } else {
            c.q01 = c.q10 = 0.5;
        }
        return c;
    }
};

/// Product distribution of n_pairs independent copies of rho over labels of
/// 2*n_pairs bits, indexed by BitVec::to_uint order.
inline std::vector<double> product_distribution(const BellDiagonal& rho, int n_pairs) {
    if (n_pairs < 1 || n_pairs > 15) {
        throw std::invalid_argument("product_distribution: n_pairs out of range");
    }
    const std::size_t count = std::size_t{1} << (2 * n_pairs);
    std::vector<double> joint(count, 1.0);
    for (std::size_t g = 0; g < count; ++g) {
        double wgt = 1.0;
        for (int k = 0; k < n_pairs; ++k) {
            const unsigned v = (g >> (2 * (n_pairs - 1 - k))) & 3u;
            wgt *= rho.p[v];
        }
        joint[g] = wgt;
    }
    return joint;
}

/// Result of conditioning a joint label distribution on a parity and merging
/// g with g + P a: classes are keyed by the smaller member of each merged
/// pair and hold the renormalized mass.
struct MergedDistribution {
    double class_probability = 0.0;            ///< mass of the parity class before renormalizing
    std::map<std::uint32_t, double> classes;   ///< canonical representative -> mass
};

inline MergedDistribution merged_pair_distribution(const std::vector<double>& joint,
                                                   const BitVec& a, int outcome) {
    a.require_even("merged_pair_distribution");
    if (a.is_zero()) throw std::invalid_argument("merged_pair_distribution: a must be nonzero");
    if (a.size() > 30 || joint.size() != (std::size_t{1} << a.size())) {
        throw std::invalid_argument("merged_pair_distribution: joint size must be 2^len(a)");
    }
    double total = 0.0;
    for (double w : joint) {
        if (w < -1e-12) throw std::invalid_argument("merged_pair_distribution: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("merged_pair_distribution: joint must be normalized");
    }

    const std::uint32_t amask = static_cast<std::uint32_t>(a.to_uint());
    const std::uint32_t pmask = static_cast<std::uint32_t>(a.pair_swapped().to_uint());
    MergedDistribution out;
    for (std::uint32_t g = 0; g < joint.size(); ++g) {
        if ((std::popcount(g & amask) & 1) != (outcome & 1)) continue;
        out.class_probability += joint[g];
        const std::uint32_t rep = std::min(g, g ^ pmask);
        out.classes[rep] += joint[g];
    }
    if (out.class_probability <= 0.0) {
        throw std::domain_error("merged_pair_distribution: conditioning on a zero-probability outcome");
    }
    for (auto& [rep, mass] : out.classes) mass /= out.class_probability;
    return out;
}

}  // namespace distil
