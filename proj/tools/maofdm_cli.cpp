// SPDX-License-Identifier: Apache-2.0
//
// maofdm: movable-antenna placement for MISO-OFDM.
//
//   maofdm solve        one realization, every selected scheme
//   maofdm sweep        config-driven Monte Carlo
//   maofdm figure NAME  preset sweeps: rate-vs-M, rate-vs-Nt, rate-vs-Lt
//   maofdm dump-channel text dump of one realization
//   maofdm selftest     oracle-equivalence checks on random small instances
//
// Exit codes: 0 success, 1 invalid config, 2 infeasible instance,
// 3 selftest failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "maofdm/channel_model.hpp"
#include "maofdm/experiment.hpp"
#include "maofdm/random.hpp"
#include "maofdm/solvers.hpp"

namespace {

using namespace maofdm;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitSelftest = 3;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::string schemes;
    std::string out;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_out) {
    cmd->add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "base seed (channel seed for solve/dump-channel)");
    cmd->add_option("--trials", o.trials, "Monte Carlo trials per sweep point");
    cmd->add_option("--schemes", o.schemes, "comma-separated subset of bb,brute,low_snr,narrowband,fpa");
    cmd->add_option("--threads", o.threads, "worker threads");
    if (with_out) cmd->add_option("--out", o.out, "output directory");
}

ExperimentConfig resolve(const CommonOptions& o, ExperimentConfig cfg = {}) {
    if (!o.config_path.empty()) cfg = load_config(o.config_path, std::move(cfg));
    if (o.seed) cfg.base_seed = *o.seed;
    if (o.trials) cfg.trials = *o.trials;
    if (!o.schemes.empty()) cfg.schemes = parse_scheme_list(o.schemes);
    if (o.threads) cfg.threads = *o.threads;
    cfg.validate();
    return cfg;
}

std::string join(std::span<const Vertex> idx) {
    std::string s;
    for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? "," : "") + std::to_string(idx[i]);
    return "{" + s + "}";
}

int cmd_solve(const CommonOptions& o) {
    const auto cfg = resolve(o);
    const auto inst = make_instance(cfg, cfg.points().front(), cfg.base_seed);
    const auto channel = generate_realization(inst.channel_params, inst.grid);
    std::printf("M=%d s=%d L=%d N_t=%d seed=%llu\n", inst.grid.num_points, inst.grid.min_sep_idx,
                inst.sys.num_subcarriers, inst.num_antennas, static_cast<unsigned long long>(cfg.base_seed));
    for (const Scheme s : cfg.schemes) {
        const auto res = run_scheme(s, channel, inst.sys, inst.num_antennas, cfg.bb_incumbent);
        std::printf("%-10s placement=%s rate=%.10g bps/Hz expanded=%llu pruned=%llu leaves=%llu time=%.3gs%s\n",
                    std::string(to_string(s)).c_str(), join(res.placement.indices()).c_str(), res.rate_bps_hz,
                    static_cast<unsigned long long>(res.stats.nodes_expanded),
                    static_cast<unsigned long long>(res.stats.nodes_pruned_by_bound),
                    static_cast<unsigned long long>(res.stats.leaves_evaluated), res.stats.wall_time_s,
                    res.stats.certified ? "" : " (not certified)");
    }
    return kExitOk;
}

void print_summary(const std::vector<TrialRecord>& records) {
    std::size_t bad = 0;
    for (const auto& r : records) bad += r.ok() ? 0 : 1;
    for (const auto& row : aggregate(records)) {
        std::printf("%s=%lld %-10s mean=%.6f stderr=%.6f n=%d\n", records.front().sweep_param.c_str(),
                    static_cast<long long>(row.sweep_value), std::string(to_string(row.scheme)).c_str(),
                    row.mean_rate, row.stderr_rate, row.count);
    }
    if (bad) std::fprintf(stderr, "warning: %zu record(s) not ok; see status column\n", bad);
}

int run_and_write(const ExperimentConfig& cfg, const std::string& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto records = run_sweep(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_outputs(out, records);
    print_summary(records);
    std::printf("wrote %s/{trials.csv,summary.csv,timing.csv,plot.dat} in %.1fs\n", out.c_str(), secs);
    return kExitOk;
}

int cmd_dump(const CommonOptions& o) {
    const auto cfg = resolve(o);
    const auto inst = make_instance(cfg, cfg.points().front(), cfg.base_seed);
    const auto channel = generate_realization(inst.channel_params, inst.grid);
    if (o.out.empty()) {
        write_channel_dump(std::cout, channel);
    } else {
        std::ofstream f(o.out);
        if (!f) throw std::runtime_error("cannot write " + o.out);
        write_channel_dump(f, channel);
    }
    return kExitOk;
}

int cmd_selftest(const CommonOptions& o) {
    const std::uint64_t seed = o.seed.value_or(2024);
    const int instances = o.trials.value_or(50);
    Rng rng(seed);
    int failures = 0;
    for (int i = 0; i < instances; ++i) {
        const int m = 8 + static_cast<int>(rng.next_u64() % 7);
        const int nt = 2 + static_cast<int>(rng.next_u64() % 2);
        const int l = 4 + static_cast<int>(rng.next_u64() % 13);
        const int s = 1 + static_cast<int>(rng.next_u64() % 3);
        ChannelModelParams cp;
        cp.num_taps = std::min(4, l);
        cp.cp_length = cp.num_taps;
        cp.num_subcarriers = l;
        cp.paths_per_tap = 4;
        cp.rng_seed = rng.next_u64();
        const double lambda = cp.wavelength_m();
        const auto grid = build_grid(3.0 * lambda, m, s * 3.0 * lambda / (m - 1));
        SystemParams sys;
        sys.num_subcarriers = l;
        sys.cp_length = cp.cp_length;
        const auto channel = generate_realization(cp, grid);
        if (count_placements(grid.num_points, grid.min_sep_idx, nt) == 0) continue;

        const auto brute = brute_force_solve(channel, sys, nt);
        const auto bb = bb_solve(channel, sys, nt);
        const double root = upper_bound(channel, sys, AntennaPlacement{}, nt);
        bool ok = bb.rate_bps_hz == brute.rate_bps_hz && root >= brute.rate_bps_hz;

        PlacementGraph graph(grid);
        const auto w = channel.power_column(1);
        double enum_best = 0.0;
        auto stream = enumerate_placements(graph, nt);
        while (auto idx = stream.next_indices()) {
            double sum = 0.0;
            for (auto it = idx->rbegin(); it != idx->rend(); ++it) sum += w[static_cast<std::size_t>(*it - 1)];
            enum_best = std::max(enum_best, sum);
        }
        const auto dp = fixed_hop_best_gain(graph, w, nt, std::nullopt);
        ok = ok && dp && std::abs(dp->gain - enum_best) <= 1e-12 * enum_best;

        if (!ok) {
            ++failures;
            std::printf("FAIL instance %d (M=%d s=%d N_t=%d L=%d): bb=%.17g brute=%.17g bound=%.17g\n", i, m,
                        grid.min_sep_idx, nt, l, bb.rate_bps_hz, brute.rate_bps_hz, root);
        }
    }
    std::printf("selftest: %d instance(s), %d failure(s)\n", instances, failures);
    return failures == 0 ? kExitOk : kExitSelftest;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Movable-antenna placement for MISO-OFDM"};
    app.require_subcommand(1);

    CommonOptions solve_opts, sweep_opts, fig_opts, dump_opts, self_opts;
    auto* solve = app.add_subcommand("solve", "solve one channel realization");
    add_common(solve, solve_opts, false);
    auto* sweep = app.add_subcommand("sweep", "config-driven Monte Carlo sweep");
    add_common(sweep, sweep_opts, true);
    sweep_opts.out = "out";
    auto* figure = app.add_subcommand("figure", "preset sweeps");
    std::string figure_name;
    figure->add_option("name", figure_name, "rate-vs-M | rate-vs-Nt | rate-vs-Lt")
        ->required()
        ->check(CLI::IsMember({"rate-vs-M", "rate-vs-Nt", "rate-vs-Lt"}));
    add_common(figure, fig_opts, true);
    fig_opts.out = "out";
    auto* dump = app.add_subcommand("dump-channel", "write one realization in the text dump format");
    add_common(dump, dump_opts, true);
    auto* self = app.add_subcommand("selftest", "bb vs brute force and DP vs enumeration");
    add_common(self, self_opts, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*solve) return cmd_solve(solve_opts);
        if (*sweep) return run_and_write(resolve(sweep_opts), sweep_opts.out);
        if (*figure) {
            ExperimentConfig base = figure_preset(figure_name);
            return run_and_write(resolve(fig_opts, base), fig_opts.out);
        }
        if (*dump) return cmd_dump(dump_opts);
        if (*self) return cmd_selftest(self_opts);
    } catch (const InfeasibleInstance& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return kExitInfeasible;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitOk;
}
