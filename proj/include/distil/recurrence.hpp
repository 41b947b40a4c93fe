#pragma once

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <vector>

#include "bell.hpp"

namespace distil {

/// Bell-label permutation bringing the probabilities into descending order
/// p00 >= p01 >= p10 >= p11. Any label permutation is reachable by one-qubit
/// local Cliffords, so this costs nothing.
inline BellDiagonal normalize_bell_order(const BellDiagonal& rho) {
    auto p = rho.p;
    std::sort(p.begin(), p.end(), std::greater<double>());
    return BellDiagonal(p[0], p[1], p[2], p[3]);
}

/// One two-pair purification round: joint parity 1111 by bilateral
/// measurement, keep the survivor on even outcome.
struct RecurrenceStep {
    BellDiagonal input;
    BellDiagonal kept;          ///< post-selected surviving pair
    double success_prob = 1.0;  ///< probability of the even outcome
    static constexpr int pair_cost = 2;  ///< input pairs consumed per attempt
};

inline RecurrenceStep recurrence_step(const BellDiagonal& rho) {
    const BitVec check = BitVec::parse("1111");
    const MergedDistribution merged =
        merged_pair_distribution(product_distribution(rho, 2), check, 0);
    if (merged.class_probability <= 0.0) {
        throw std::domain_error("recurrence_step: degenerate input");
    }

    // The four merged classes map one-to-one onto the survivor's Bell labels,
    // up to a free local relabeling; anchor each class by the surviving-pair
    // label of its smaller member.
    std::array<double, 4> kept{0.0, 0.0, 0.0, 0.0};
    for (const auto& [rep, mass] : merged.classes) {
        kept[rep & 3u] += mass;
    }

    RecurrenceStep step;
    step.input = rho;
    step.kept = BellDiagonal(kept[0], kept[1], kept[2], kept[3]);
    step.success_prob = merged.class_probability;
    return step;
}

/// Best number of purification rounds to run before an asymptotic protocol.
struct RecurrenceSchedule {
    int iterations = 0;
    double total_yield = 0.0;    ///< backend yield times surviving-pair weight
    double success_weight = 1.0; ///< prod_i success_prob_i / 2 for the chosen depth
    BellDiagonal final_state;
    std::vector<double> totals_by_depth;  ///< total yield at k = 0..kmax
};

/// Evaluates total(k) = backend(state_k) * prod_{i<k} (success_i / 2) for
/// k = 0..kmax and returns the maximizer (ties go to the smaller k). The
/// state is re-sorted before every round and before the backend.
inline RecurrenceSchedule optimal_recurrence_schedule(
    const BellDiagonal& rho,
    const std::function<double(const BellDiagonal&)>& backend,
    int kmax) {
    if (kmax < 0) throw std::invalid_argument("optimal_recurrence_schedule: kmax must be >= 0");

    std::vector<double> totals;
    std::vector<double> weights;
    std::vector<BellDiagonal> states;
    totals.reserve(static_cast<std::size_t>(kmax) + 1);

    BellDiagonal state = rho;
    double weight = 1.0;
    for (int k = 0; k <= kmax; ++k) {
        const BellDiagonal sorted = normalize_bell_order(state);
        totals.push_back(backend(sorted) * weight);
        weights.push_back(weight);
        states.push_back(sorted);
        if (k < kmax) {
            const RecurrenceStep step = recurrence_step(sorted);
            weight *= step.success_prob / 2.0;
            state = step.kept;
        }
    }

    std::size_t arg = 0;
    for (std::size_t k = 1; k < totals.size(); ++k) {
        if (totals[k] > totals[arg]) arg = k;
    }
    RecurrenceSchedule best;
    best.iterations = static_cast<int>(arg);
    best.total_yield = totals[arg];
    best.success_weight = weights[arg];
    best.final_state = states[arg];
    best.totals_by_depth = std::move(totals);
    return best;
}

}  // namespace distil
