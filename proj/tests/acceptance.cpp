// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "distil/distil.hpp"

using distil::BellDiagonal;
using distil::BitVec;
using distil::CascadeMode;

namespace {

bool g_all_pass = true;

void line(int index, bool pass, const std::string& text) {
    std::printf("[%s] %d. %s\n", pass ? "PASS" : "FAIL", index, text.c_str());
    g_all_pass = g_all_pass && pass;
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

double bisect_zero(const std::function<double(double)>& f, double lo, double hi, int iters) {
    const bool lo_positive = f(lo) > 0.0;
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((f(mid) > 0.0) == lo_positive) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

BellDiagonal random_bell(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    double p[4], total = 0.0;
    for (auto& x : p) total += (x = u(rng));
    return BellDiagonal(p[0] / total, p[1] / total, p[2] / total, p[3] / total);
}

void criterion_1_breeding_threshold() {
    const double f0 = bisect_zero(
        [](double f) { return distil::breeding_yield_raw(BellDiagonal::werner(f)); },
        0.8, 0.82, 50);
    const bool pass = std::abs(f0 - 0.8107) <= 2e-4;
    line(1, pass, "breeding threshold: zero crossing at F = " + num(f0) + " (target 0.8107 +- 2e-4)");
}

void criterion_2_cascade_threshold() {
    const double f0 = bisect_zero(
        [](double f) {
            return distil::cascade_yield(BellDiagonal::werner(f), 6, CascadeMode::Ordered, 10)
                .yield_raw;
        },
        0.70, 0.78, 40);
    const bool pass = std::abs(f0 - 0.7424) <= 1e-3;
    line(2, pass,
         "ordered cascade threshold (q=6, trunc=10): zero crossing at F = " + num(f0) +
             " (target 0.7424 +- 1e-3)");
}

struct Grid {
    std::vector<double> fidelities;
    // yields[mode][q-1][point], raw values
    std::vector<std::vector<std::vector<double>>> raw{2};
};

Grid build_grid() {
    Grid g;
    for (int i = 0; i < 50; ++i) {
        g.fidelities.push_back(0.75 + 0.25 * static_cast<double>(i) / 49.0);
    }
    for (int mode = 0; mode < 2; ++mode) {
        g.raw[static_cast<std::size_t>(mode)].resize(6);
        for (int q = 1; q <= 6; ++q) {
            auto& col = g.raw[static_cast<std::size_t>(mode)][static_cast<std::size_t>(q - 1)];
            for (const double f : g.fidelities) {
                col.push_back(distil::cascade_yield(BellDiagonal::werner(f), q,
                                                    mode == 0 ? CascadeMode::Uniform
                                                              : CascadeMode::Ordered,
                                                    10)
                                  .yield_raw);
            }
        }
    }
    return g;
}

void criterion_3_monotone_converging(const Grid& g) {
    bool monotone = true, converging = true, ordered_dominates = true;
    double worst_step = 0.0;
    for (int mode = 0; mode < 2 && monotone; ++mode) {
        for (int q = 1; q < 6; ++q) {
            for (std::size_t i = 0; i < g.fidelities.size(); ++i) {
                const double lo = g.raw[mode][static_cast<std::size_t>(q - 1)][i];
                const double hi = g.raw[mode][static_cast<std::size_t>(q)][i];
                worst_step = std::min(worst_step, hi - lo);
                if (hi < lo - 1e-9 ||
                    std::max(0.0, hi) < std::max(0.0, lo) - 1e-9) {
                    monotone = false;
                }
            }
        }
    }
    for (int mode = 0; mode < 2; ++mode) {
        for (std::size_t i = 0; i < g.fidelities.size(); ++i) {
            const double d65 = std::abs(g.raw[mode][5][i] - g.raw[mode][4][i]);
            const double d32 = std::abs(g.raw[mode][2][i] - g.raw[mode][1][i]);
            if (!(d65 <= d32 + 1e-12)) converging = false;
        }
    }
    for (int q = 0; q < 6; ++q) {
        for (std::size_t i = 0; i < g.fidelities.size(); ++i) {
            if (g.raw[1][static_cast<std::size_t>(q)][i] <
                g.raw[0][static_cast<std::size_t>(q)][i] - 1e-9) {
                ordered_dominates = false;
            }
        }
    }
    line(3, monotone && converging && ordered_dominates,
         "50-point grid on [0.75, 1]: yield nondecreasing in q (worst step " + num(worst_step) +
             "), |y6-y5| <= |y3-y2| pointwise, ordered >= uniform");
}

void criterion_4_beats_breeding(const Grid& g) {
    bool ge = true, strict = true;
    for (std::size_t i = 0; i < g.fidelities.size(); ++i) {
        const double f = g.fidelities[i];
        const double breeding = distil::breeding_yield_raw(BellDiagonal::werner(f));
        const double s2 = distil::grouped_entropy(BellDiagonal::werner(f), BitVec::parse("11"));
        for (int mode = 0; mode < 2; ++mode) {
            for (int q = 0; q < 6; ++q) {
                const double y = g.raw[mode][static_cast<std::size_t>(q)][i];
                if (y < breeding - 1e-9) ge = false;
                if (s2 > 0.0 && !(y > breeding)) strict = false;
            }
        }
    }
    line(4, ge && strict,
         "both cascade modes >= breeding on the grid, strictly where the pair split is mixed");
}

void criterion_5_oracle_equivalence() {
    // (a) bracket entropies against enumeration
    double dev_a = 0.0;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double q00 = u(rng), q01 = u(rng);
        const distil::ConditionalPairDist cond(q00, 1 - q00, q01, 1 - q01);
        for (int n0 = 0; n0 <= 6; ++n0) {
            for (int n1 = 0; n0 + n1 <= 6; ++n1) {
                if (n0 + n1 < 1) continue;
                dev_a = std::max(dev_a,
                                 std::abs(distil::bracket_entropy(n0, n1, cond) -
                                          distil::oracle::exact_bracket_entropy(n0, n1, cond)));
            }
        }
    }

    // (b) merge weights p_g + p_{g+Pa}
    double dev_b = 0.0;
    const BitVec check = BitVec::parse("1111");
    for (const auto& rho :
         {BellDiagonal::werner(0.7), BellDiagonal(0.55, 0.2, 0.15, 0.1)}) {
        const auto joint = distil::product_distribution(rho, 2);
        for (int outcome = 0; outcome < 2; ++outcome) {
            const auto base = distil::oracle::EnsembleState::product(rho, 2);
            const double mass = base.outcome_probability(check, outcome);
            for (const auto& [rep, w] : base.apply_bpm(check, outcome).class_weights()) {
                dev_b = std::max(dev_b,
                                 std::abs(w - (joint[rep] + joint[rep ^ 0b1111u]) / mass));
            }
        }
    }

    // (c) recurrence against the independent enumeration path
    double dev_c = 0.0;
    bool raises = true;
    for (int i = 0; i <= 40; ++i) {
        const double f = 0.512 + 0.486 * static_cast<double>(i) / 40.0;
        const auto rho = BellDiagonal::werner(f);
        const auto step = distil::recurrence_step(rho);
        const auto after = distil::oracle::EnsembleState::product(rho, 2).apply_bpm(check, 0);
        std::vector<double> kept(step.kept.p.begin(), step.kept.p.end());
        std::vector<double> masses;
        for (const auto& [rep, w] : after.class_weights()) masses.push_back(w);
        std::sort(kept.begin(), kept.end());
        std::sort(masses.begin(), masses.end());
        while (masses.size() < kept.size()) masses.insert(masses.begin(), 0.0);
        for (std::size_t k = 0; k < kept.size(); ++k) {
            dev_c = std::max(dev_c, std::abs(kept[k] - masses[k]));
        }
        if (f < 1.0 && !(step.kept.p00() > f)) raises = false;
    }

    const bool pass = dev_a < 1e-10 && dev_b < 1e-12 && dev_c < 1e-12 && raises;
    line(5, pass,
         "oracle equivalence: bracket dev " + num(dev_a) + ", merge dev " + num(dev_b) +
             ", recurrence dev " + num(dev_c) + ", fidelity raised on (0.5, 1)");
}

void criterion_6_eta() {
    const double third_dev = std::abs(distil::eta_uniform(0.5, 0.5, 20) - 1.0 / 3.0);

    double avg_dev = 0.0;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double p0 = 0.02 + 0.96 * u(rng);
        distil::FrequencyTable table;
        table.level = 16;
        table.entries[distil::StateClass::loose0()] = 0.05 + u(rng);
        table.entries[distil::StateClass::loose1()] = u(rng);
        for (int b = 0; b < 4; ++b) {
            const int n0 = static_cast<int>(u(rng) * 5);
            const int n1 = static_cast<int>(u(rng) * 5);
            if (n0 + n1 < 1) continue;
            table.entries[distil::StateClass::bracket(n0, n1)] += u(rng);
        }
        const auto spans = distil::class_ordering_fractions(table);
        double avg = 0.0;
        for (const auto& [cls, span] : spans) {
            (void)cls;
            avg += distil::eta_ordered(p0, 1 - p0, span.first, span.second, 10) *
                   (span.second - span.first);
        }
        avg_dev = std::max(avg_dev, std::abs(avg - distil::eta_uniform(p0, 1 - p0, 10)));
    }
    const bool pass = third_dev <= 1e-6 && avg_dev <= 1e-9;
    line(6, pass,
         "eta checks: |eta(1/2,1/2,20) - 1/3| = " + num(third_dev) +
             ", population-average dev = " + num(avg_dev));
}

void criterion_7_identities() {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double hred_dev = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng), y = u(rng);
        const double expanded = -distil::plog2p(x) - distil::plog2p(y) + distil::plog2p(x + y);
        hred_dev = std::max(hred_dev, std::abs(distil::entropy_reduction(x, y) - expanded));
    }

    double chain_dev = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto rho = random_bell(rng);
        const double p0 = rho.p00() + rho.p11();
        const auto cond = distil::ConditionalPairDist::from(rho);
        const double chained = distil::binary_entropy(p0) +
                               p0 * distil::binary_entropy(cond.q00) +
                               (1 - p0) * distil::binary_entropy(cond.q01);
        chain_dev = std::max(chain_dev, std::abs(chained - distil::state_entropy(rho)));
    }

    double conserve_dev = 0.0;
    for (const double f : {0.76, 0.85, 0.93}) {
        for (const auto mode : {CascadeMode::Uniform, CascadeMode::Ordered}) {
            const int q = 6;
            const auto ladder = distil::class_probs_ladder(BellDiagonal::werner(f), q);
            distil::FrequencyTable table;
            table.level = ladder.back().level;
            table.entries[distil::StateClass::loose0()] = ladder.back().p0;
            table.entries[distil::StateClass::loose1()] = ladder.back().p1;
            const double pairs = std::pow(2.0, q);
            conserve_dev = std::max(conserve_dev, std::abs(table.pair_count() - pairs));
            for (int k = q - 1; k >= 0; --k) {
                table = distil::propagate_frequencies(table, ladder[static_cast<std::size_t>(k)],
                                                      mode, 10);
                conserve_dev = std::max(conserve_dev, std::abs(table.pair_count() - pairs));
            }
        }
    }

    const bool pass = hred_dev <= 1e-12 && chain_dev <= 1e-10 && conserve_dev <= 1e-9;
    line(7, pass,
         "identity suite: entropy-reduction dev " + num(hred_dev) + ", chain-rule dev " +
             num(chain_dev) + ", pair-conservation dev " + num(conserve_dev));
}

void criterion_8_monte_carlo() {
    const auto rho = BellDiagonal::werner(0.85);
    const long long samples = 1000000;
    bool pass = true;
    std::string detail;

    for (const auto mode : {CascadeMode::Uniform, CascadeMode::Ordered}) {
        const auto mc = distil::oracle::mc_cascade(rho, 3, mode, 10, samples, 7, 32);
        const auto table = distil::cascade_frequency_table(rho, 3, mode, 10);
        double worst_z = 0.0;
        for (const auto& [cls, f] : table.entries) {
            if (f * static_cast<double>(samples) < 100.0) continue;
            const auto it = mc.frequencies.find(cls);
            if (it == mc.frequencies.end()) {
                pass = false;
                continue;
            }
            const double se = std::max(it->second.se,
                                       std::sqrt(f / static_cast<double>(samples)));
            worst_z = std::max(worst_z, std::abs(it->second.mean - f) / se);
        }
        const auto analytic = distil::cascade_yield(rho, 3, mode, 10);
        const double yield_z =
            std::abs(mc.yield.mean - analytic.yield_raw) / std::max(mc.yield.se, 1e-12);
        if (worst_z > 3.0 || yield_z > 3.0) pass = false;
        detail += std::string(mode == CascadeMode::Uniform ? "uniform" : "ordered") +
                  ": worst class z " + num(worst_z) + ", yield z " + num(yield_z) + "; ";
    }

    const auto a = distil::oracle::mc_cascade(rho, 3, CascadeMode::Uniform, 10, samples, 7, 32);
    const auto b = distil::oracle::mc_cascade(rho, 3, CascadeMode::Uniform, 10, samples, 8, 32);
    const double seed_z = std::abs(a.yield.mean - b.yield.mean) /
                          std::sqrt(a.yield.se * a.yield.se + b.yield.se * b.yield.se);
    if (seed_z > 5.0) pass = false;
    line(8, pass,
         "Monte Carlo at F=0.85, q=3, 1e6 samples: " + detail + "two-seed yield z " + num(seed_z));
}

void criterion_9_recurrence_curves() {
    const auto breeding = [](const BellDiagonal& s) { return distil::breeding_yield(s); };
    const auto cascade = [](const BellDiagonal& s) {
        return distil::cascade_yield(s, 6, CascadeMode::Ordered, 10).yield;
    };
    bool positive = true, dominates = true, rel_nonneg = true;
    for (int i = 0; i <= 40; ++i) {
        const double f = 0.60 + 0.40 * static_cast<double>(i) / 40.0;
        const auto rho = BellDiagonal::werner(f);
        const auto sb = distil::optimal_recurrence_schedule(rho, breeding, 20);
        const auto sc = distil::optimal_recurrence_schedule(rho, cascade, 20);
        if (!(sb.total_yield > 0.0) || !(sc.total_yield > 0.0)) positive = false;
        if (sc.total_yield < sb.total_yield - 1e-12) dominates = false;
        if (sb.total_yield > 0.0 &&
            (sc.total_yield - sb.total_yield) / sb.total_yield < -1e-12) {
            rel_nonneg = false;
        }
    }
    line(9, positive && dominates && rel_nonneg,
         "recurrence-combined curves on [0.60, 1]: positive totals, ordered cascade dominates "
         "breeding, relative difference nonnegative");
}

}  // namespace

int main() {
    criterion_1_breeding_threshold();
    criterion_2_cascade_threshold();
    const Grid grid = build_grid();
    criterion_3_monotone_converging(grid);
    criterion_4_beats_breeding(grid);
    criterion_5_oracle_equivalence();
    criterion_6_eta();
    criterion_7_identities();
    criterion_8_monte_carlo();
    criterion_9_recurrence_curves();
    std::printf("acceptance: %s\n", g_all_pass ? "ALL PASS" : "FAILURES PRESENT");
    return g_all_pass ? 0 : 1;
}
