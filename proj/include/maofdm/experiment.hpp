// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo sweep runner: one channel realization per (sweep point, trial),
// shared by every scheme, with CSV and plot-table output.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maofdm/channel_model.hpp"
#include "maofdm/power_allocation.hpp"
#include "maofdm/solvers.hpp"

namespace maofdm {

enum class Scheme { bb, brute, low_snr, narrowband, fpa };
enum class SweepParam { none, num_points, num_antennas, paths_per_tap };

std::string_view to_string(Scheme s);
std::string_view to_string(SweepParam p);
/// Throws std::invalid_argument for unknown names.
Scheme parse_scheme(std::string_view name);
SweepParam parse_sweep_param(std::string_view name);
std::vector<Scheme> parse_scheme_list(std::string_view comma_separated);

struct ExperimentConfig {
    ChannelModelParams channel;  // rng_seed is overwritten per trial
    double max_power_dbm = 46.0;
    double noise_power_dbm = -60.0;
    double region_length_wavelengths = 6.0;
    double min_sep_wavelengths = 0.5;
    int num_points = 36;
    int num_antennas = 4;
    int trials = 120;
    std::uint64_t base_seed = 1;
    SweepParam sweep = SweepParam::none;
    std::vector<int> sweep_values;
    std::vector<Scheme> schemes{Scheme::bb, Scheme::narrowband, Scheme::low_snr, Scheme::fpa};
    IncumbentInit bb_incumbent = IncumbentInit::low_snr;
    /// Brute force is skipped above this many placements.
    std::uint64_t brute_force_limit = 1'000'000;
    /// Same channel seed at every sweep point of a trial.
    bool common_random_numbers = true;
    int threads = 1;

    /// Throws std::invalid_argument.
    void validate() const;
    /// Sweep values to run; {0} when no sweep is configured.
    std::vector<int> points() const;
};

/// Flat "key = value" lines, values in JSON syntax, '#' starts a comment.
/// Unknown keys and ill-typed values throw std::invalid_argument.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
/// Writes every key with its current value; parse_config reads it back.
void write_config(std::ostream& out, const ExperimentConfig& cfg);

/// Presets for "rate-vs-M", "rate-vs-Nt" and "rate-vs-Lt".
ExperimentConfig figure_preset(std::string_view figure, ExperimentConfig base = {});

/// splitmix64-chained hash of (base, sweep_index, trial_index).
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t sweep_index, std::uint64_t trial_index);

struct Instance {
    SamplingGrid grid;
    ChannelModelParams channel_params;
    SystemParams sys;
    int num_antennas = 0;
};

/// Instance parameters at one sweep value with the given channel seed.
Instance make_instance(const ExperimentConfig& cfg, int sweep_value, std::uint64_t seed);

SolveResult run_scheme(Scheme scheme, const WidebandChannel& channel, const SystemParams& sys,
                       int num_antennas, IncumbentInit bb_incumbent = IncumbentInit::low_snr);

struct TrialRecord {
    std::string sweep_param;
    std::int64_t sweep_value = 0;
    int trial_index = 0;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::bb;
    /// "ok", or "infeasible: ...", "skipped: ...", "error: ...".
    std::string status = "ok";
    double rate_bps_hz = 0.0;
    std::uint64_t nodes_expanded = 0;
    std::uint64_t nodes_pruned = 0;
    std::uint64_t leaves_evaluated = 0;
    std::string placement;  // indices joined by '-'
    double wall_time_s = 0.0;

    bool ok() const { return status == "ok"; }
};

/// Deterministic in cfg; sorted by (sweep_value, trial_index, scheme).
std::vector<TrialRecord> run_sweep(const ExperimentConfig& cfg);

struct AggregateRow {
    std::int64_t sweep_value = 0;
    Scheme scheme = Scheme::bb;
    int count = 0;
    double mean_rate = 0.0;
    double stderr_rate = 0.0;
    double mean_nodes_expanded = 0.0;
    double mean_leaves_evaluated = 0.0;
};

/// Per (sweep_value, scheme) over rows with status "ok".
std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records);

struct GapRow {
    std::int64_t sweep_value = 0;
    int count = 0;
    double mean_gap = 0.0;
    double stderr_gap = 0.0;
};

/// Paired per-trial rate difference a - b at each sweep value.
std::vector<GapRow> paired_gap(const std::vector<TrialRecord>& records, Scheme a, Scheme b);

struct MeanStderr {
    double mean = 0.0;
    double stderr_mean = 0.0;
};
/// Sample mean and s / sqrt(n) (0 for n < 2).
MeanStderr mean_stderr(const std::vector<double>& values);

inline constexpr std::string_view kRecordsHeader =
    "sweep_param,sweep_value,trial,seed,scheme,status,rate_bps_hz,nodes_expanded,nodes_pruned,"
    "leaves_evaluated,placement";
inline constexpr std::string_view kAggregatesHeader =
    "sweep_value,scheme,count,mean_rate_bps_hz,stderr_rate_bps_hz,mean_nodes_expanded,mean_leaves_evaluated";
inline constexpr std::string_view kTimingHeader = "sweep_value,trial,scheme,wall_time_s";

/// Floats use 10 significant digits. Wall time goes to the timing file only,
/// which keeps the records file byte-stable.
void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_records_csv(std::istream& in);
void write_aggregates_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_timing_csv(std::ostream& out, const std::vector<TrialRecord>& records);
/// One whitespace-separated block per scheme ("# scheme <name>", column
/// header comment, rows), blocks separated by two blank lines.
void write_plotdata(std::ostream& out, const std::vector<AggregateRow>& rows);

/// Writes trials.csv, summary.csv, timing.csv and plot.dat into dir.
void write_outputs(const std::string& dir, const std::vector<TrialRecord>& records);

}  // namespace maofdm
