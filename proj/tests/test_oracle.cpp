#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "distil/oracle.hpp"

using distil::BellDiagonal;
using distil::BitVec;
using distil::CascadeMode;
using distil::StateClass;
using distil::oracle::EnsembleState;
using Catch::Matchers::WithinAbs;

namespace {

BellDiagonal random_bell(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    double p[4], total = 0.0;
    for (auto& x : p) total += (x = u(rng));
    return BellDiagonal(p[0] / total, p[1] / total, p[2] / total, p[3] / total);
}

}  // namespace

TEST_CASE("apply_aem conditions without merging") {
    SECTION("uniform single pair filtered to the even class") {
        const auto st = EnsembleState::uniform(1).apply_aem(BitVec::parse("11"), 0);
        const auto classes = st.class_weights();
        REQUIRE(classes.size() == 2);
        CHECK_THAT(classes.at(0b00), WithinAbs(0.5, 1e-15));
        CHECK_THAT(classes.at(0b11), WithinAbs(0.5, 1e-15));
        CHECK_THAT(st.entropy(), WithinAbs(1.0, 1e-14));
    }

    SECTION("conditioning twice on the same parity is idempotent") {
        const auto rho = BellDiagonal::werner(0.8);
        const auto once = EnsembleState::product(rho, 2).apply_aem(BitVec::parse("1111"), 0);
        const auto twice = once.apply_aem(BitVec::parse("1111"), 0);
        CHECK_THAT(once.entropy(), WithinAbs(twice.entropy(), 1e-13));
        CHECK_THAT(twice.outcome_probability(BitVec::parse("1111"), 0), WithinAbs(1.0, 1e-13));
    }

    SECTION("pre-conditioning mass matches the class ladder") {
        const auto st = EnsembleState::product(BellDiagonal::werner(0.7), 2);
        CHECK_THAT(st.outcome_probability(BitVec::parse("1111"), 0), WithinAbs(0.68, 1e-13));
    }

    SECTION("impossible outcome throws") {
        const auto st = EnsembleState::product(BellDiagonal(1, 0, 0, 0), 1);
        CHECK_THROWS_AS(st.apply_aem(BitVec::parse("11"), 1), std::domain_error);
    }
}

TEST_CASE("apply_bpm merges labels and reduces entropy by the pairwise identity") {
    const BitVec check = BitVec::parse("1111");

    SECTION("the two-pair merge example") {
        const auto rho = BellDiagonal::werner(0.7);
        const auto joint = distil::product_distribution(rho, 2);
        const auto after = EnsembleState::product(rho, 2).apply_bpm(check, 0);
        const auto classes = after.class_weights();
        const double p0a = 0.68;
        REQUIRE(classes.size() == 4);
        CHECK_THAT(classes.at(0b0000), WithinAbs((joint[0b0000] + joint[0b1111]) / p0a, 1e-14));
        CHECK_THAT(classes.at(0b0011), WithinAbs((joint[0b0011] + joint[0b1100]) / p0a, 1e-14));
        CHECK_THAT(classes.at(0b0101), WithinAbs((joint[0b0101] + joint[0b1010]) / p0a, 1e-14));
        CHECK_THAT(classes.at(0b0110), WithinAbs((joint[0b0110] + joint[0b1001]) / p0a, 1e-14));
    }

    SECTION("entropy deficit equals the summed reductions, for random states") {
        std::mt19937_64 rng(19);
        for (int trial = 0; trial < 15; ++trial) {
            const auto rho = random_bell(rng);
            const int outcome = trial & 1;
            const auto base = EnsembleState::product(rho, 2);
            const auto plain = base.apply_aem(check, outcome);
            const auto merged = base.apply_bpm(check, outcome);
            double reductions = 0.0;
            const auto joint = distil::product_distribution(rho, 2);
            const double mass = base.outcome_probability(check, outcome);
            for (const auto& [rep, w] : merged.class_weights()) {
                (void)w;
                reductions += distil::entropy_reduction(joint[rep] / mass,
                                                        joint[rep ^ 0b1111u] / mass);
            }
            REQUIRE_THAT(plain.entropy() - merged.entropy(), WithinAbs(reductions, 1e-12));
        }
    }

    SECTION("a rank-two pair is fully merged by its own parity") {
        const auto st = EnsembleState::product(BellDiagonal::werner(0.7), 1)
                            .apply_bpm(BitVec::parse("11"), 1);
        CHECK(st.class_weights().size() == 1);
        CHECK(st.entropy() == 0.0);
    }

    SECTION("anticommuting and re-merged checks are rejected") {
        const auto st = EnsembleState::product(BellDiagonal::werner(0.7), 2)
                            .apply_bpm(BitVec::parse("1100"), 0);
        CHECK_THROWS_AS(st.apply_bpm(BitVec::parse("1000"), 0), std::invalid_argument);
        CHECK_THROWS_AS(st.apply_bpm(BitVec::parse("1100"), 0), std::invalid_argument);
        CHECK_NOTHROW(st.apply_aem(BitVec::parse("0011"), 0));
    }
}

TEST_CASE("accessible parities stay constant on merge classes, inaccessible ones split") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 6; ++trial) {
        const int pairs = 2 + trial % 2;
        auto st = EnsembleState::uniform(pairs);
        // random commuting pair-block checks
        int applied = 0;
        for (int attempt = 0; attempt < 8 && applied < 2; ++attempt) {
            BitVec r(static_cast<std::size_t>(2 * pairs));
            for (int k = 0; k < pairs; ++k) {
                if (rng() & 1) {
                    r.set_bit(static_cast<std::size_t>(2 * k), true);
                    r.set_bit(static_cast<std::size_t>(2 * k + 1), true);
                }
            }
            if (r.is_zero() || !st.accessible(r)) continue;
            const int outcome =
                st.outcome_probability(r, 0) > 1e-12 ? 0 : 1;
            try {
                st = st.apply_bpm(r, outcome);
                ++applied;
            } catch (const std::invalid_argument&) {
                // r already merged; fine
            }
        }
        if (applied == 0) continue;

        for (std::uint64_t qbits = 1; qbits < (1ull << (2 * pairs)); ++qbits) {
            const BitVec q = BitVec::from_uint(qbits, static_cast<std::size_t>(2 * pairs));
            // does q^T s take a single value on every merge class?
            bool constant_on_classes = true;
            std::map<std::uint32_t, int> seen;
            for (std::uint32_t g = 0; g < (1u << (2 * pairs)); ++g) {
                const int parity = std::popcount(g & static_cast<std::uint32_t>(q.to_uint())) & 1;
                const auto root = st.root(g);
                const auto it = seen.find(root);
                if (it == seen.end()) {
                    seen[root] = parity;
                } else if (it->second != parity) {
                    constant_on_classes = false;
                    break;
                }
            }
            REQUIRE(constant_on_classes == st.accessible(q));
        }
    }
}

TEST_CASE("equiprobable half-parity of odd blocks") {
    // on blocks known odd, the front-half check has exactly even odds
    std::mt19937_64 rng(29);
    for (int m : {2, 4}) {
        for (int trial = 0; trial < 5; ++trial) {
            const auto rho = random_bell(rng);
            const int pairs = m;  // block of 2m bits
            const auto st = EnsembleState::product(rho, pairs)
                                .apply_aem(BitVec::ones(static_cast<std::size_t>(2 * pairs)), 1);
            BitVec half(static_cast<std::size_t>(2 * pairs));
            for (int i = 0; i < pairs; ++i) half.set_bit(static_cast<std::size_t>(i), true);
            const double p1 = st.outcome_probability(half, 1);
            REQUIRE_THAT(p1, WithinAbs(0.5, 1e-12));
        }
    }
}

TEST_CASE("exact_bracket_entropy") {
    const auto half = distil::ConditionalPairDist(0.5, 0.5, 0.5, 0.5);
    CHECK(distil::oracle::exact_bracket_entropy(1, 0, half) == 0.0);
    CHECK_THAT(distil::oracle::exact_bracket_entropy(2, 0, half), WithinAbs(1.0, 1e-14));
    CHECK_THROWS_AS(distil::oracle::exact_bracket_entropy(8, 3, half), std::length_error);

    SECTION("agrees with the closed form everywhere it can enumerate") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            const double q00 = u(rng), q01 = u(rng);
            const distil::ConditionalPairDist cond(q00, 1 - q00, q01, 1 - q01);
            for (int n0 = 0; n0 <= 6; ++n0) {
                for (int n1 = 0; n0 + n1 <= 6; ++n1) {
                    if (n0 + n1 < 1) continue;
                    REQUIRE_THAT(distil::oracle::exact_bracket_entropy(n0, n1, cond),
                                 WithinAbs(distil::bracket_entropy(n0, n1, cond), 1e-10));
                }
            }
        }
    }
}

TEST_CASE("mc_cascade") {
    SECTION("pure input is deterministic") {
        const auto mc = distil::oracle::mc_cascade(BellDiagonal::werner(1.0), 2,
                                                   CascadeMode::Uniform, 10, 2000, 1, 8);
        REQUIRE(mc.frequencies.count(StateClass::loose0()) == 1);
        CHECK_THAT(mc.frequencies.at(StateClass::loose0()).mean, WithinAbs(4.0, 1e-12));
        CHECK_THAT(mc.yield.mean, WithinAbs(1.0, 1e-12));
        CHECK(mc.yield.se == 0.0);
    }

    SECTION("same seed reproduces identical statistics") {
        const auto a = distil::oracle::mc_cascade(BellDiagonal::werner(0.85), 2,
                                                  CascadeMode::Ordered, 10, 20000, 99, 16);
        const auto b = distil::oracle::mc_cascade(BellDiagonal::werner(0.85), 2,
                                                  CascadeMode::Ordered, 10, 20000, 99, 16);
        CHECK(a.yield.mean == b.yield.mean);
        REQUIRE(a.frequencies.size() == b.frequencies.size());
        for (const auto& [cls, stat] : a.frequencies) {
            CHECK(stat.mean == b.frequencies.at(cls).mean);
        }
    }

    SECTION("matches the analytic propagation within four standard errors") {
        for (const auto mode : {CascadeMode::Uniform, CascadeMode::Ordered}) {
            const auto rho = BellDiagonal::werner(0.85);
            const long long samples = 120000;
            const auto mc = distil::oracle::mc_cascade(rho, 3, mode, 10, samples, 12345, 24);
            const auto table = distil::cascade_frequency_table(rho, 3, mode, 10);
            for (const auto& [cls, f] : table.entries) {
                if (f * static_cast<double>(samples) < 200.0) continue;
                const auto it = mc.frequencies.find(cls);
                REQUIRE(it != mc.frequencies.end());
                const double se = std::max(it->second.se,
                                           std::sqrt(f / static_cast<double>(samples)));
                CAPTURE(cls.str(), mode == CascadeMode::Ordered);
                REQUIRE_THAT(it->second.mean, WithinAbs(f, 4.0 * se));
            }
            const auto analytic = distil::cascade_yield(rho, 3, mode, 10);
            REQUIRE_THAT(mc.yield.mean,
                         WithinAbs(analytic.yield_raw, 4.0 * std::max(mc.yield.se, 1e-9)));
        }
    }

    SECTION("empirical measurement fraction of even blocks tracks the uniform eta") {
        const auto rho = BellDiagonal::werner(0.85);
        const auto ladder = distil::class_probs_ladder(rho, 3);
        const auto mc = distil::oracle::mc_cascade(rho, 3, CascadeMode::Uniform, 10,
                                                   120000, 777, 24);
        REQUIRE(mc.eta_by_level.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            const auto& halves = ladder[ladder.size() - 2 - i];
            const double expect = distil::eta_uniform(halves.p0, halves.p1, 10);
            const double se = std::max(mc.eta_by_level[i].se, 1e-6);
            REQUIRE_THAT(mc.eta_by_level[i].mean, WithinAbs(expect, 4.0 * se));
        }
    }

    CHECK_THROWS_AS(distil::oracle::mc_cascade(BellDiagonal::werner(0.9), 5,
                                               CascadeMode::Uniform, 10, 100, 1),
                    std::invalid_argument);
}
