// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "instances.hpp"
#include "maofdm/experiment.hpp"
#include "maofdm/random.hpp"

using namespace maofdm;
using maofdm::testing::random_instance;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// Figure sweeps are shared by several criteria; run each preset once.

struct SweepResult {
    std::vector<TrialRecord> records;
    double wall_s = 0.0;
};

const SweepResult& figure(const std::string& name) {
    static std::map<std::string, SweepResult> cache;
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    auto cfg = name == "default" ? ExperimentConfig{} : figure_preset(name);
    cfg.trials = 120;
    std::fprintf(stderr, "  running %s (120 trials)...\n", name.c_str());
    const auto t0 = Clock::now();
    SweepResult r{run_sweep(cfg), 0.0};
    r.wall_s = seconds_since(t0);
    return cache.emplace(name, std::move(r)).first->second;
}

std::map<std::int64_t, AggregateRow> rows_for(const std::vector<TrialRecord>& recs, Scheme s) {
    std::map<std::int64_t, AggregateRow> out;
    for (const auto& row : aggregate(recs))
        if (row.scheme == s) out[row.sweep_value] = row;
    return out;
}

bool all_ok(const std::vector<TrialRecord>& recs) {
    return std::all_of(recs.begin(), recs.end(), [](const TrialRecord& r) { return r.ok(); });
}

// ---------------------------------------------------------------------------

Outcome oracle_optimality() {
    int mismatches = 0;
    double slowest = 0.0;
    constexpr int kInstances = 200;
    for (std::uint64_t seed = 0; seed < kInstances; ++seed) {
        const auto inst = random_instance(seed);
        const auto t0 = Clock::now();
        const auto bb = bb_solve(inst.channel, inst.sys, inst.num_antennas);
        slowest = std::max(slowest, seconds_since(t0));
        const auto brute = brute_force_solve(inst.channel, inst.sys, inst.num_antennas);
        if (bb.rate_bps_hz != brute.rate_bps_hz || !bb.stats.certified) ++mismatches;
    }
    return {mismatches == 0 && slowest < 1.0,
            fmt("%d instances, %d rate mismatches, slowest bb %.3g s", kInstances, mismatches, slowest)};
}

Outcome bound_validity() {
    constexpr int kInstances = 100;
    long checks = 0;
    long violations = 0;
    int api_mismatch = 0;
    for (std::uint64_t seed = 0; seed < kInstances; ++seed) {
        const auto inst = random_instance(10'000 + seed, 6, 12, 2, 3, 2, 10);
        const auto& ch = inst.channel;
        const int n = inst.num_antennas;
        const PlacementGraph g(ch.grid());
        BoundOracle oracle(ch, inst.sys, n);

        // Best completion of every prefix, by exhaustive enumeration.
        std::map<std::vector<Vertex>, double> best;
        auto stream = enumerate_placements(g, n);
        while (auto idx = stream.next_indices()) {
            const double rate = waterfilled_rate(placement_gains(ch, *idx), inst.sys).rate;
            for (int k = 0; k <= n; ++k) {
                auto& slot = best.try_emplace(std::vector<Vertex>(idx->begin(), idx->begin() + k),
                                              -std::numeric_limits<double>::infinity())
                                 .first->second;
                slot = std::max(slot, rate);
            }
        }
        for (const auto& [prefix, truth] : best) {
            ++checks;
            if (!(oracle.bound(prefix) >= truth)) ++violations;
        }
        const double root = upper_bound(ch, inst.sys, AntennaPlacement{}, n);
        if (root != oracle.bound({})) ++api_mismatch;
    }
    return {violations == 0 && api_mismatch == 0,
            fmt("%d instances, %ld prefixes audited, %ld violations", kInstances, checks, violations)};
}

// Exact optimum over allocations p_l = mu - sigma^2/g_l on a support set S,
// enumerated over every S. Independent of the bisection in waterfill().
double support_enumeration_rate(const std::vector<double>& g, const SystemParams& sys) {
    const auto n = g.size();
    double best = 0.0;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        double floor_sum = 0.0;
        int k = 0;
        for (std::size_t l = 0; l < n; ++l)
            if (mask >> l & 1u) floor_sum += sys.noise_power / g[l], ++k;
        const double mu = (sys.max_power + floor_sum) / k;
        double sum = 0.0;
        bool feasible = true;
        for (std::size_t l = 0; l < n && feasible; ++l) {
            if (!(mask >> l & 1u)) continue;
            const double p = mu - sys.noise_power / g[l];
            if (p < 0.0) feasible = false;
            sum += std::log2(1.0 + p * g[l] / sys.noise_power);
        }
        if (feasible) best = std::max(best, sys.rate_prefactor() * sum);
    }
    return best;
}

// Best rate over the simplex lattice with the given number of steps (L <= 3).
double simplex_grid_rate(const std::vector<double>& g, const SystemParams& sys, int steps) {
    const double h = sys.max_power / steps;
    auto r = [&](const std::vector<double>& p) {
        double s = 0.0;
        for (std::size_t l = 0; l < g.size(); ++l) s += std::log2(1.0 + p[l] * g[l] / sys.noise_power);
        return sys.rate_prefactor() * s;
    };
    double best = 0.0;
    if (g.size() == 1) return r({sys.max_power});
    for (int a = 0; a <= steps; ++a) {
        if (g.size() == 2) {
            best = std::max(best, r({a * h, (steps - a) * h}));
            continue;
        }
        for (int b = 0; a + b <= steps; ++b) best = std::max(best, r({a * h, b * h, (steps - a - b) * h}));
    }
    return best;
}

Outcome waterfilling_kkt() {
    constexpr int kVectors = 1000;
    Rng rng(77);
    double worst_sum = 0.0;
    double worst_slack = 0.0;
    double worst_match = 0.0;
    int grid_beats = 0;
    for (int i = 0; i < kVectors; ++i) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 8);
        std::vector<double> g(static_cast<std::size_t>(n));
        for (auto& x : g) x = std::pow(10.0, -3.0 + 4.0 * rng.uniform());
        SystemParams sys;
        sys.noise_power = 1.0;
        sys.max_power = std::pow(10.0, -1.0 + 3.0 * rng.uniform());
        sys.num_subcarriers = n;
        sys.cp_length = 1;

        const auto wf = waterfill(g, sys);
        const double mu = wf.water_level.value_or(0.0);
        worst_sum = std::max(worst_sum, std::abs(wf.total() - sys.max_power) / sys.max_power);
        for (std::size_t l = 0; l < g.size(); ++l) {
            const double floor = sys.noise_power / g[l];
            const double p = wf.powers[l];
            const double v = p > 0.0 ? std::abs(p - (mu - floor)) : std::max(0.0, mu - floor);
            worst_slack = std::max(worst_slack, v);
        }
        const double rate = achievable_rate(g, wf, sys);
        worst_match = std::max(worst_match, std::abs(rate - support_enumeration_rate(g, sys)));
        if (n <= 3 && simplex_grid_rate(g, sys, 120) > rate + 1e-12) ++grid_beats;
    }
    return {worst_sum <= 1e-10 && worst_slack <= 1e-8 && worst_match <= 1e-6 && grid_beats == 0,
            fmt("%d vectors; max |sum p - P|/P %.2g, max slackness residual %.2g, max rate gap to exact "
                "support search %.2g, simplex-lattice points beating it %d",
                kVectors, worst_sum, worst_slack, worst_match, grid_beats)};
}

Outcome mrt_identity() {
    double worst = 0.0;
    long checks = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = random_instance(20'000 + seed);
        const auto res = bb_solve(inst.channel, inst.sys, inst.num_antennas);
        const auto bf = mrt_beamformer(inst.channel, res.placement, res.allocation);
        for (int l = 1; l <= inst.channel.num_subcarriers(); ++l) {
            const auto& w = bf.weights[static_cast<std::size_t>(l - 1)];
            cplx inner{};
            double cnorm = 0.0;
            for (std::size_t n = 0; n < w.size(); ++n) {
                const cplx c = inst.channel.cfr_at(res.placement[n], l);
                inner += std::conj(w[n]) * c;
                cnorm += std::norm(c);
            }
            const double expect = res.allocation.powers[static_cast<std::size_t>(l - 1)] * cnorm;
            if (expect > 0.0) worst = std::max(worst, std::abs(std::norm(inner) - expect) / expect);
            ++checks;
        }
    }
    return {worst <= 1e-12, fmt("%ld subcarriers checked, max relative error %.2g", checks, worst)};
}

Outcome low_snr_optimality() {
    ExperimentConfig cfg;
    cfg.max_power_dbm = -40.0;
    cfg.trials = 50;
    cfg.schemes = {Scheme::bb, Scheme::low_snr};
    const auto recs = run_sweep(cfg);
    const double bb = rows_for(recs, Scheme::bb).at(0).mean_rate;
    const double ls = rows_for(recs, Scheme::low_snr).at(0).mean_rate;
    const double rel = (bb - ls) / bb;
    return {all_ok(recs) && rel <= 0.01,
            fmt("50 seeds at -40 dBm: mean bb %.6g, low_snr %.6g, relative gap %.3g%%", bb, ls, 100 * rel)};
}

Outcome trend_num_points() {
    const auto& sw = figure("rate-vs-M");
    const auto bb = rows_for(sw.records, Scheme::bb);
    bool monotone = true;
    std::string series;
    const AggregateRow* prev = nullptr;
    for (const auto& [m, row] : bb) {
        series += fmt(" %lld:%.4f", static_cast<long long>(m), row.mean_rate);
        if (prev && row.mean_rate < prev->mean_rate - std::max(row.stderr_rate, prev->stderr_rate)) monotone = false;
        prev = &row;
    }
    const double early = bb.at(48).mean_rate - bb.at(12).mean_rate;
    const double late = bb.at(60).mean_rate - bb.at(48).mean_rate;
    const bool saturates = early > 0.0 && late <= 0.2 * early;
    return {all_ok(sw.records) && monotone && saturates,
            fmt("mean bb rate by M%s; 48->60 rise is %.1f%% of 12->48 rise", series.c_str(), 100 * late / early)};
}

Outcome trend_num_antennas() {
    const auto& sw = figure("rate-vs-Nt");
    bool strictly = true;
    for (Scheme s : {Scheme::bb, Scheme::narrowband, Scheme::low_snr, Scheme::fpa}) {
        const auto rows = rows_for(sw.records, s);
        double prev = -1.0;
        for (const auto& [n, row] : rows) {
            if (!(row.mean_rate > prev)) strictly = false;
            prev = row.mean_rate;
        }
    }
    std::map<std::int64_t, GapRow> gap;
    for (const auto& g : paired_gap(sw.records, Scheme::bb, Scheme::fpa)) gap[g.sweep_value] = g;
    bool shrinks = true;
    for (int n = 4; n < 6; ++n) {
        const auto& a = gap.at(n);
        const auto& b = gap.at(n + 1);
        if (b.mean_gap > a.mean_gap + std::max(a.stderr_gap, b.stderr_gap)) shrinks = false;
    }
    return {all_ok(sw.records) && strictly && shrinks,
            fmt("all schemes strictly increasing: %s; bb-fpa gap at N_t=4,5,6: %.3f, %.3f, %.3f",
                strictly ? "yes" : "no", gap.at(4).mean_gap, gap.at(5).mean_gap, gap.at(6).mean_gap)};
}

Outcome trend_paths_per_tap() {
    const auto& sw = figure("rate-vs-Lt");
    std::map<std::int64_t, GapRow> gap;
    for (const auto& g : paired_gap(sw.records, Scheme::bb, Scheme::fpa)) gap[g.sweep_value] = g;
    const double g1 = gap.at(1).mean_gap;
    const double g6 = gap.at(6).mean_gap;
    const bool ratio = g6 >= 2.0 * g1;
    const bool targets = std::abs(g1 - 0.2) <= 0.1 && std::abs(g6 - 1.0) <= 0.5;
    return {all_ok(sw.records) && ratio && targets,
            fmt("bb-fpa gap %.3f at L_t=1, %.3f at L_t=6 (ratio %.2f; targets 0.2+-0.1, 1.0+-0.5 %s)", g1, g6,
                g6 / g1, targets ? "met" : "missed")};
}

Outcome narrowband_gap() {
    const auto& sw = figure("default");
    const auto gap = paired_gap(sw.records, Scheme::bb, Scheme::narrowband).at(0);
    return {all_ok(sw.records) && gap.mean_gap <= 0.5 + gap.stderr_gap,
            fmt("mean bb-narrowband gap %.4f +- %.4f bps/Hz over %d trials", gap.mean_gap, gap.stderr_gap, gap.count)};
}

Outcome pruning() {
    const auto& sw = figure("default");
    std::vector<std::uint64_t> leaves;
    for (const auto& r : sw.records)
        if (r.scheme == Scheme::bb) leaves.push_back(r.leaves_evaluated);
    std::sort(leaves.begin(), leaves.end());
    const double median = leaves.size() % 2 ? static_cast<double>(leaves[leaves.size() / 2])
                                            : 0.5 * static_cast<double>(leaves[leaves.size() / 2 - 1] +
                                                                        leaves[leaves.size() / 2]);
    const auto full = count_placements(36, 3, 4);
    const double longest = std::max({sw.wall_s, figure("rate-vs-M").wall_s, figure("rate-vs-Nt").wall_s,
                                     figure("rate-vs-Lt").wall_s});
    return {median < static_cast<double>(full) && sw.wall_s < 600.0 && longest < 600.0,
            fmt("median leaves %.0f of %llu; 120-trial default sweep %.1f s, slowest figure sweep %.1f s", median,
                static_cast<unsigned long long>(full), sw.wall_s, longest)};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    auto cfg = figure_preset("rate-vs-Nt");
    cfg.trials = 20;
    const auto base = fs::temp_directory_path() / "maofdm_acceptance_determinism";
    fs::remove_all(base);
    write_outputs((base / "a").string(), run_sweep(cfg));
    write_outputs((base / "b").string(), run_sweep(cfg));
    cfg.threads = 2;
    write_outputs((base / "c").string(), run_sweep(cfg));
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    };
    bool same = true;
    for (const char* f : {"trials.csv", "summary.csv", "plot.dat"}) {
        const auto a = slurp(base / "a" / f);
        same = same && !a.empty() && a == slurp(base / "b" / f) && a == slurp(base / "c" / f);
    }
    fs::remove_all(base);
    return {same, fmt("trials.csv, summary.csv, plot.dat identical across two runs and a 2-thread run: %s",
                      same ? "yes" : "no")};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "oracle optimality", oracle_optimality},
        {2, "bound validity", bound_validity},
        {3, "water-filling KKT", waterfilling_kkt},
        {4, "MRT identity", mrt_identity},
        {5, "low-SNR optimality", low_snr_optimality},
        {6, "rate vs M trend", trend_num_points},
        {7, "rate vs N_t trend", trend_num_antennas},
        {8, "gap vs L_t trend", trend_paths_per_tap},
        {9, "narrowband near-optimality", narrowband_gap},
        {10, "pruning effectiveness", pruning},
        {11, "determinism", determinism},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : criteria) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %2d %-27s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d criterion(s) failed\n", failed);
    return failed == 0 ? 0 : 1;
}
