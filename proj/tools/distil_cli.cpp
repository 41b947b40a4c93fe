// Command-line front end: single yield queries, fidelity sweeps to CSV,
// oracle consistency checks and Monte Carlo validation runs.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "distil/distil.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

struct StateArgs {
    std::optional<double> werner;
    std::string probs;

    distil::BellDiagonal resolve() const {
        if (werner && !probs.empty()) {
            throw std::invalid_argument("give either --werner or --probs, not both");
        }
        if (werner) return distil::BellDiagonal::werner(*werner);
        if (!probs.empty()) {
            std::vector<double> p;
            std::stringstream ss(probs);
            std::string item;
            while (std::getline(ss, item, ',')) p.push_back(std::stod(item));
            if (p.size() != 4) throw std::invalid_argument("--probs needs four comma-separated values");
            return distil::BellDiagonal(p[0], p[1], p[2], p[3]);
        }
        throw std::invalid_argument("one of --werner or --probs is required");
    }
};

struct ProtocolEval {
    double raw = 0.0;
    double floored = 0.0;
    distil::YieldReport report;
};

ProtocolEval evaluate_protocol(const std::string& protocol, const distil::BellDiagonal& rho,
                               int q, int trunc) {
    distil::YieldReport r;
    if (protocol == "breeding") {
        r = distil::breeding_yield_report(rho);
    } else if (protocol == "vv") {
        r = distil::vv_yield_report(rho);
    } else if (protocol == "cascade") {
        r = distil::cascade_yield(rho, q, distil::CascadeMode::Uniform, trunc);
    } else if (protocol == "cascade-ordered") {
        r = distil::cascade_yield(rho, q, distil::CascadeMode::Ordered, trunc);
    } else {
        throw std::invalid_argument("unknown protocol: " + protocol);
    }
    return {r.yield_raw, r.yield, r};
}

// ---------------------------------------------------------------------------
// yield

int cmd_yield(const std::string& protocol, const StateArgs& state, int q, int trunc) {
    const distil::BellDiagonal rho = state.resolve();
    const ProtocolEval ev = evaluate_protocol(protocol, rho, q, trunc);

    std::cout << "protocol=" << protocol << "\n";
    if (protocol == "cascade" || protocol == "cascade-ordered") {
        std::cout << "q=" << q << "\n" << "trunc=" << trunc << "\n";
    }
    std::cout << "pb_cost=" << fmt(ev.report.pb_cost) << "\n"
              << "bpm_savings=" << fmt(ev.report.bpm_savings) << "\n"
              << "residual_breeding_cost=" << fmt(ev.report.residual_breeding_cost) << "\n"
              << "nonmeasured_fraction=" << fmt(ev.report.nonmeasured_fraction) << "\n"
              << "yield_raw=" << fmt(ev.report.yield_raw) << "\n"
              << "yield=" << fmt(ev.report.yield) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
    double fidelity = 0.0;
    int recurrence_iters = 0;
    double success_weight = 1.0;
    double yield_raw = 0.0;
    double yield = 0.0;
};

struct RecurrenceSetting {
    bool automatic = false;
    int fixed = 0;
};

RecurrenceSetting parse_recurrence(const std::string& text) {
    RecurrenceSetting rs;
    if (text == "none") return rs;
    if (text == "auto") {
        rs.automatic = true;
        return rs;
    }
    std::size_t pos = 0;
    const int k = std::stoi(text, &pos);
    if (pos != text.size() || k < 0) {
        throw std::invalid_argument("--recurrence expects none, auto, or a nonnegative count");
    }
    rs.fixed = k;
    return rs;
}

SweepRow sweep_point(const std::string& protocol, double fidelity, int q, int trunc,
                     const RecurrenceSetting& rec, int kmax) {
    const distil::BellDiagonal rho = distil::BellDiagonal::werner(fidelity);
    auto floored = [&](const distil::BellDiagonal& s) {
        return evaluate_protocol(protocol, s, q, trunc).floored;
    };

    SweepRow row;
    row.fidelity = fidelity;
    if (rec.automatic) {
        const distil::RecurrenceSchedule sched =
            distil::optimal_recurrence_schedule(rho, floored, kmax);
        row.recurrence_iters = sched.iterations;
        row.success_weight = sched.success_weight;
        row.yield = sched.total_yield;
        row.yield_raw = evaluate_protocol(protocol, sched.final_state, q, trunc).raw *
                        sched.success_weight;
    } else {
        distil::BellDiagonal state = rho;
        double weight = 1.0;
        for (int i = 0; i < rec.fixed; ++i) {
            const distil::RecurrenceStep step =
                distil::recurrence_step(distil::normalize_bell_order(state));
            weight *= step.success_prob / 2.0;
            state = step.kept;
        }
        const ProtocolEval ev =
            evaluate_protocol(protocol, distil::normalize_bell_order(state), q, trunc);
        row.recurrence_iters = rec.fixed;
        row.success_weight = weight;
        row.yield_raw = ev.raw * weight;
        row.yield = ev.floored * weight;
    }
    return row;
}

int cmd_sweep(const std::string& protocol, int q, int trunc, double f_min, double f_max,
              int steps, const std::string& recurrence, int kmax,
              const std::string& relative_to, const std::string& output, int jobs,
              bool gnuplot) {
    if (!(f_min >= 0.0 && f_min <= f_max && f_max <= 1.0)) {
        std::cerr << "sweep: need 0 <= fmin <= fmax <= 1\n";
        return kExitUsage;
    }
    if (steps < 1 || q < 1 || q > 12 || trunc < 1) {
        std::cerr << "sweep: need steps >= 1, q in [1, 12], trunc >= 1\n";
        return kExitUsage;
    }
    if (!relative_to.empty() && relative_to != "breeding") {
        std::cerr << "sweep: --relative-to only supports 'breeding'\n";
        return kExitUsage;
    }
    RecurrenceSetting rec;
    try {
        rec = parse_recurrence(recurrence);
    } catch (const std::exception& e) {
        std::cerr << "sweep: " << e.what() << "\n";
        return kExitUsage;
    }

    const bool with_baseline = !relative_to.empty();
    std::vector<SweepRow> rows(static_cast<std::size_t>(steps));
    std::vector<SweepRow> base(with_baseline ? rows.size() : 0);

    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= rows.size() || failed.load()) break;
            const double f = steps == 1
                                 ? f_min
                                 : f_min + (f_max - f_min) * static_cast<double>(i) /
                                               static_cast<double>(steps - 1);
            try {
                rows[i] = sweep_point(protocol, f, q, trunc, rec, kmax);
                if (with_baseline) {
                    base[i] = sweep_point("breeding", f, q, trunc, rec, kmax);
                }
            } catch (const std::exception& e) {
                std::scoped_lock lk(error_mutex);
                error = e.what();
                failed.store(true);
                break;
            }
        }
    };

    const int nthreads = std::max(1, jobs);
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failed.load()) {
        std::cerr << "sweep: " << error << "\n";
        return kExitUsage;
    }

    std::ofstream out(output);
    if (!out) {
        std::cerr << "sweep: cannot open output file " << output << "\n";
        return kExitIo;
    }
    out << "fidelity,protocol,q,recurrence_iters,success_weight,yield_raw,yield";
    if (with_baseline) out << ",relative_difference";
    out << "\n";
    const int q_column = (protocol == "cascade" || protocol == "cascade-ordered") ? q : 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SweepRow& r = rows[i];
        out << fmt(r.fidelity) << ',' << protocol << ',' << q_column << ','
            << r.recurrence_iters << ',' << fmt(r.success_weight) << ','
            << fmt(r.yield_raw) << ',' << fmt(r.yield);
        if (with_baseline) {
            const double b = base[i].yield;
            double rel;
            if (b > 0.0) {
                rel = (r.yield - b) / b;
            } else {
                rel = r.yield > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
            }
            out << ',' << fmt(rel);
        }
        out << "\n";
    }
    out.close();
    if (!out) {
        std::cerr << "sweep: write failed for " << output << "\n";
        return kExitIo;
    }

    if (gnuplot) {
        const std::string script = output + ".gp";
        std::ofstream gp(script);
        if (!gp) {
            std::cerr << "sweep: cannot open " << script << "\n";
            return kExitIo;
        }
        gp << "set datafile separator ','\n"
           << "set key left top\n"
           << "set xlabel 'fidelity'\n"
           << "set ylabel 'yield'\n"
           << "plot '" << output << "' every ::1 using 1:7 with lines title '" << protocol
           << "'\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// oracle

struct CheckResult {
    std::string name;
    double max_dev = 0.0;
    double tol = 0.0;
    bool pass = true;
    std::string detail;
};

void report(const CheckResult& r, bool& all_pass) {
    std::cout << "check=" << r.name << " max_dev=" << fmt(r.max_dev) << " tol=" << fmt(r.tol)
              << " status=" << (r.pass ? "PASS" : "FAIL");
    if (!r.detail.empty()) std::cout << " detail=" << r.detail;
    std::cout << "\n";
    all_pass = all_pass && r.pass;
}

distil::BellDiagonal random_bell(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    double p[4];
    double total = 0.0;
    for (auto& x : p) {
        x = u(rng);
        total += x;
    }
    return distil::BellDiagonal(p[0] / total, p[1] / total, p[2] / total, p[3] / total);
}

CheckResult check_bpm_merge() {
    CheckResult r{"bpm-merge", 0.0, 1e-12, true, ""};
    const distil::BitVec a = distil::BitVec::parse("1111");
    const std::uint32_t pmask = static_cast<std::uint32_t>(a.pair_swapped().to_uint());
    for (const auto& rho : {distil::BellDiagonal::werner(0.7),
                            distil::BellDiagonal(0.5, 0.2, 0.2, 0.1)}) {
        const auto joint = distil::product_distribution(rho, 2);
        for (int outcome = 0; outcome < 2; ++outcome) {
            const auto st = distil::oracle::EnsembleState::product(rho, 2);
            const auto after = st.apply_bpm(a, outcome);
            const double mass = st.outcome_probability(a, outcome);
            for (const auto& [rep, w] : after.class_weights()) {
                const double expect = (joint[rep] + joint[rep ^ pmask]) / mass;
                r.max_dev = std::max(r.max_dev, std::abs(w - expect));
            }
            // merging must account for exactly the pairwise entropy reductions
            const auto plain = st.apply_aem(a, outcome);
            double reductions = 0.0;
            for (const auto& [rep, w] : after.class_weights()) {
                (void)w;
                reductions += distil::entropy_reduction(joint[rep] / mass,
                                                        joint[rep ^ pmask] / mass);
            }
            r.max_dev = std::max(r.max_dev,
                                 std::abs(plain.entropy() - after.entropy() - reductions));
        }
    }
    r.pass = r.max_dev < r.tol;
    return r;
}

CheckResult check_bracket_entropy(int max_blocks, int dists, std::uint64_t seed) {
    CheckResult r{"bracket-entropy", 0.0, 1e-10, true, ""};
    std::mt19937_64 rng(seed);
    std::vector<distil::ConditionalPairDist> conds;
    conds.push_back(distil::ConditionalPairDist::from(distil::BellDiagonal::werner(0.7)));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < dists; ++i) {
        const double q00 = u(rng), q01 = u(rng);
        conds.emplace_back(q00, 1 - q00, q01, 1 - q01);
    }
    for (const auto& cond : conds) {
        for (int n0 = 0; n0 <= max_blocks; ++n0) {
            for (int n1 = 0; n0 + n1 <= max_blocks; ++n1) {
                if (n0 + n1 < 1) continue;
                const double lhs = distil::bracket_entropy(n0, n1, cond);
                const double rhs = distil::oracle::exact_bracket_entropy(n0, n1, cond);
                r.max_dev = std::max(r.max_dev, std::abs(lhs - rhs));
            }
        }
    }
    r.pass = r.max_dev < r.tol;
    return r;
}

CheckResult check_eta(int trunc, std::uint64_t seed) {
    CheckResult r{"eta", 0.0, 1e-9, true, ""};
    const double third = distil::eta_uniform(0.5, 0.5, std::max(trunc, 20));
    const double geo_dev = std::abs(third - 1.0 / 3.0);
    if (geo_dev > 1e-6) {
        r.pass = false;
        r.detail = "eta(1/2,1/2) deviates from 1/3 by " + fmt(geo_dev);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double p0 = 0.02 + 0.96 * u(rng);
        // random frequency table: a few brackets plus loose mass
        distil::FrequencyTable table;
        table.level = 8;
        table.entries[distil::StateClass::loose0()] = u(rng) * 2.0;
        table.entries[distil::StateClass::loose1()] = u(rng);
        const int nb = 1 + static_cast<int>(u(rng) * 4);
        for (int b = 0; b < nb; ++b) {
            const int n0 = static_cast<int>(u(rng) * 4);
            const int n1 = static_cast<int>(u(rng) * 4);
            if (n0 + n1 < 1) continue;
            table.entries[distil::StateClass::bracket(n0, n1)] += u(rng);
        }
        const auto spans = distil::class_ordering_fractions(table);
        double avg = 0.0;
        for (const auto& [cls, span] : spans) {
            (void)cls;
            if (!(span.first < span.second)) continue;
            avg += distil::eta_ordered(p0, 1 - p0, span.first, span.second, trunc) *
                   (span.second - span.first);
        }
        r.max_dev = std::max(r.max_dev,
                             std::abs(avg - distil::eta_uniform(p0, 1 - p0, trunc)));
        // whole population must reproduce the uniform fraction
        r.max_dev = std::max(r.max_dev,
                             std::abs(distil::eta_ordered(p0, 1 - p0, 0.0, 1.0, trunc) -
                                      distil::eta_uniform(p0, 1 - p0, trunc)));
    }
    r.pass = r.pass && r.max_dev < r.tol;
    return r;
}

CheckResult check_recurrence() {
    CheckResult r{"recurrence", 0.0, 1e-12, true, ""};
    const distil::BitVec check = distil::BitVec::parse("1111");
    for (double f : {0.55, 0.6, 0.7, 0.8, 0.9, 0.97}) {
        const auto rho = distil::BellDiagonal::werner(f);
        const auto step = distil::recurrence_step(rho);

        const auto st = distil::oracle::EnsembleState::product(rho, 2);
        const auto after = st.apply_bpm(check, 0);
        std::vector<double> oracle_masses;
        for (const auto& [rep, w] : after.class_weights()) {
            (void)rep;
            oracle_masses.push_back(w);
        }
        std::vector<double> kept(step.kept.p.begin(), step.kept.p.end());
        std::sort(oracle_masses.begin(), oracle_masses.end());
        std::sort(kept.begin(), kept.end());
        while (oracle_masses.size() < kept.size()) oracle_masses.insert(oracle_masses.begin(), 0.0);
        for (std::size_t i = 0; i < kept.size(); ++i) {
            r.max_dev = std::max(r.max_dev, std::abs(kept[i] - oracle_masses[i]));
        }
        r.max_dev = std::max(r.max_dev,
                             std::abs(step.success_prob - st.outcome_probability(check, 0)));
        if (f > 0.5 && f < 1.0 && step.kept.p[0] <= f) {
            r.pass = false;
            r.detail = "fidelity not raised at F=" + fmt(f);
        }
    }
    r.pass = r.pass && r.max_dev < r.tol;
    return r;
}

CheckResult check_chain_rule(std::uint64_t seed) {
    CheckResult r{"chain-rule", 0.0, 1e-10, true, ""};
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 100; ++i) {
        const auto rho = random_bell(rng);
        const double p0 = rho.p[0] + rho.p[3];
        const double p1 = rho.p[1] + rho.p[2];
        const auto cond = distil::ConditionalPairDist::from(rho);
        const double split = distil::binary_entropy(p0) +
                             p0 * distil::binary_entropy(cond.q00) +
                             p1 * distil::binary_entropy(cond.q01);
        r.max_dev = std::max(r.max_dev, std::abs(split - distil::state_entropy(rho)));
    }
    r.pass = r.max_dev < r.tol;
    return r;
}

int cmd_oracle(const std::vector<std::string>& checks, int max_blocks, int dists, int trunc,
               std::uint64_t seed) {
    auto wants = [&](const std::string& name) {
        if (checks.empty()) return true;
        for (const auto& c : checks) {
            if (c == name || c == "all") return true;
        }
        return false;
    };
    bool all_pass = true;
    if (wants("bpm-merge")) report(check_bpm_merge(), all_pass);
    if (wants("bracket-entropy")) report(check_bracket_entropy(max_blocks, dists, seed), all_pass);
    if (wants("eta")) report(check_eta(trunc, seed), all_pass);
    if (wants("recurrence")) report(check_recurrence(), all_pass);
    if (wants("chain-rule")) report(check_chain_rule(seed), all_pass);
    std::cout << "status=" << (all_pass ? "PASS" : "FAIL") << "\n";
    return all_pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const StateArgs& state, int q, const std::string& mode_name, int trunc,
                 long long samples, std::uint64_t seed, double sigma, int shards) {
    const distil::BellDiagonal rho = state.resolve();
    const distil::CascadeMode mode = mode_name == "ordered" ? distil::CascadeMode::Ordered
                                                            : distil::CascadeMode::Uniform;

    const auto mc = distil::oracle::mc_cascade(rho, q, mode, trunc, samples, seed, shards);
    const auto table = distil::cascade_frequency_table(rho, q, mode, trunc);
    const auto analytic_yield = distil::cascade_yield(rho, q, mode, trunc);
    const auto ladder = distil::class_probs_ladder(rho, q);

    std::cout << "samples=" << samples << "\n"
              << "shards=" << mc.shards << "\n"
              << "seed=" << seed << "\n"
              << "q=" << q << "\n"
              << "mode=" << mode_name << "\n"
              << "trunc=" << trunc << "\n"
              << "sigma=" << fmt(sigma) << "\n";

    bool all_pass = true;
    auto judge = [&](double analytic, const distil::oracle::McStat& stat,
                     double count_floor) -> std::pair<double, bool> {
        const double poisson = std::sqrt(std::max(analytic, 1e-12) /
                                         static_cast<double>(samples));
        const double se = std::max(stat.se, poisson);
        const double z = (stat.mean - analytic) / se;
        const bool checked = analytic * static_cast<double>(samples) >= count_floor;
        if (checked && std::abs(z) > sigma) all_pass = false;
        return {z, checked};
    };

    std::map<distil::StateClass, double> analytic;
    for (const auto& [cls, f] : table.entries) analytic[cls] = f;
    std::map<distil::StateClass, distil::oracle::McStat> empirical = mc.frequencies;
    for (const auto& [cls, f] : analytic) {
        if (!empirical.count(cls)) empirical[cls] = {};
    }
    for (const auto& [cls, stat] : empirical) {
        const double f = analytic.count(cls) ? analytic[cls] : 0.0;
        const auto [z, checked] = judge(f, stat, 100.0);
        std::cout << "class=" << cls.str() << " analytic=" << fmt(f)
                  << " empirical=" << fmt(stat.mean) << " se=" << fmt(stat.se)
                  << " z=" << fmt(z) << " checked=" << (checked ? 1 : 0) << "\n";
    }

    {
        const double se = std::max(mc.yield.se, 1e-15);
        const double z = (mc.yield.mean - analytic_yield.yield_raw) / se;
        if (std::abs(z) > sigma && std::abs(mc.yield.mean - analytic_yield.yield_raw) > 1e-12) {
            all_pass = false;
        }
        std::cout << "yield analytic=" << fmt(analytic_yield.yield_raw)
                  << " empirical=" << fmt(mc.yield.mean) << " se=" << fmt(mc.yield.se)
                  << " z=" << fmt(z) << "\n";
    }

    for (std::size_t i = 0; i < mc.eta_by_level.size(); ++i) {
        const auto& lv = ladder[ladder.size() - 1 - i];
        const double expect = distil::eta_uniform(ladder[ladder.size() - 2 - i].p0,
                                                  ladder[ladder.size() - 2 - i].p1, trunc);
        const auto& stat = mc.eta_by_level[i];
        const double se = std::max(stat.se, 1e-15);
        const double z = (stat.mean - expect) / se;
        if (std::abs(z) > sigma && std::abs(stat.mean - expect) > 1e-9) all_pass = false;
        std::cout << "eta level=" << lv.level << " analytic=" << fmt(expect)
                  << " empirical=" << fmt(stat.mean) << " se=" << fmt(stat.se)
                  << " z=" << fmt(z) << "\n";
    }

    std::cout << "status=" << (all_pass ? "PASS" : "FAIL") << "\n";
    return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact asymptotic yields of entanglement distillation protocols"};
    app.require_subcommand(1);

    // yield
    auto* yield = app.add_subcommand("yield", "Print the cost breakdown of one protocol run");
    std::string y_protocol;
    StateArgs y_state;
    int y_q = 6, y_trunc = 10;
    yield->add_option("--protocol", y_protocol, "breeding, vv, cascade, cascade-ordered")
        ->required()
        ->check(CLI::IsMember({"breeding", "vv", "cascade", "cascade-ordered"}));
    yield->add_option("--werner", y_state.werner, "Werner fidelity in [0, 1]");
    yield->add_option("--probs", y_state.probs, "four comma-separated Bell probabilities");
    yield->add_option("--q", y_q, "pairs per cascade group: 2^q")->check(CLI::Range(1, 12));
    yield->add_option("--trunc", y_trunc, "pairing recursion truncation")->check(CLI::Range(1, 64));

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Write a fidelity sweep as CSV");
    std::string s_protocol = "cascade-ordered", s_recurrence = "none", s_relative, s_output;
    int s_q = 6, s_trunc = 10, s_steps = 101, s_kmax = 20, s_jobs = 1;
    double s_fmin = 0.5, s_fmax = 1.0;
    bool s_gnuplot = false;
    sweep->add_option("--protocol", s_protocol, "breeding, vv, cascade, cascade-ordered")
        ->check(CLI::IsMember({"breeding", "vv", "cascade", "cascade-ordered"}));
    sweep->add_option("--q", s_q, "pairs per cascade group: 2^q")->check(CLI::Range(1, 12));
    sweep->add_option("--trunc", s_trunc, "pairing recursion truncation")->check(CLI::Range(1, 64));
    sweep->add_option("--fmin", s_fmin, "lowest fidelity");
    sweep->add_option("--fmax", s_fmax, "highest fidelity");
    sweep->add_option("--steps", s_steps, "grid points including both endpoints");
    sweep->add_option("--recurrence", s_recurrence, "none, auto, or a fixed iteration count");
    sweep->add_option("--kmax", s_kmax, "recurrence search depth for auto")->check(CLI::Range(0, 64));
    sweep->add_option("--relative-to", s_relative, "add a relative_difference column (breeding)");
    sweep->add_option("-o,--output", s_output, "CSV output path")->required();
    sweep->add_option("--jobs", s_jobs, "worker threads")
        ->envname("DISTIL_JOBS")
        ->check(CLI::Range(1, 256));
    sweep->add_flag("--gnuplot", s_gnuplot, "also write a companion gnuplot script");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "Cross-check closed forms against enumeration");
    std::vector<std::string> o_checks;
    int o_max_blocks = 6, o_dists = 20, o_trunc = 20;
    std::uint64_t o_seed = 12345;
    oracle->add_option("--check", o_checks,
                       "bpm-merge, bracket-entropy, eta, recurrence, chain-rule, all")
        ->check(CLI::IsMember({"bpm-merge", "bracket-entropy", "eta", "recurrence",
                               "chain-rule", "all"}));
    oracle->add_option("--max-blocks", o_max_blocks, "largest bracket size to enumerate")
        ->check(CLI::Range(1, 10));
    oracle->add_option("--dists", o_dists, "random conditional distributions")->check(CLI::Range(1, 1000));
    oracle->add_option("--trunc", o_trunc, "pairing recursion truncation")->check(CLI::Range(1, 64));
    oracle->add_option("--seed", o_seed, "random seed");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo validation of the cascade");
    StateArgs m_state;
    std::string m_mode = "uniform";
    int m_q = 3, m_trunc = 10, m_shards = 32;
    long long m_samples = 100000;
    std::uint64_t m_seed = 12345;
    double m_sigma = 3.0;
    simulate->add_option("--werner", m_state.werner, "Werner fidelity in [0, 1]");
    simulate->add_option("--probs", m_state.probs, "four comma-separated Bell probabilities");
    simulate->add_option("--q", m_q, "pairs per cascade group: 2^q")->check(CLI::Range(1, 4));
    simulate->add_option("--mode", m_mode, "uniform or ordered")
        ->check(CLI::IsMember({"uniform", "ordered"}));
    simulate->add_option("--trunc", m_trunc, "pairing recursion truncation")->check(CLI::Range(1, 64));
    simulate->add_option("--samples", m_samples, "top-level groups to simulate")
        ->check(CLI::Range(static_cast<long long>(1), static_cast<long long>(1) << 32));
    simulate->add_option("--seed", m_seed, "random seed");
    simulate->add_option("--sigma", m_sigma, "acceptance band in standard errors");
    simulate->add_option("--shards", m_shards, "independent populations")->check(CLI::Range(2, 1024));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(yield)) return cmd_yield(y_protocol, y_state, y_q, y_trunc);
        if (app.got_subcommand(sweep)) {
            return cmd_sweep(s_protocol, s_q, s_trunc, s_fmin, s_fmax, s_steps, s_recurrence,
                             s_kmax, s_relative, s_output, s_jobs, s_gnuplot);
        }
        if (app.got_subcommand(oracle)) {
            return cmd_oracle(o_checks, o_max_blocks, o_dists, o_trunc, o_seed);
        }
        if (app.got_subcommand(simulate)) {
            return cmd_simulate(m_state, m_q, m_mode, m_trunc, m_samples, m_seed, m_sigma,
                                m_shards);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
    return kExitUsage;
}
