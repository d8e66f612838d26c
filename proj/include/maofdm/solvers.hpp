// SPDX-License-Identifier: Apache-2.0
//
// Placement solvers for the joint antenna-position / power-allocation problem.
// All of them score placements through waterfilled_rate(), so rates from
// different solvers on the same channel are directly comparable.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "maofdm/channel_model.hpp"
#include "maofdm/power_allocation.hpp"
#include "maofdm/sampling_graph.hpp"

namespace maofdm {

/// No N_t-antenna placement fits the grid under the spacing rule.
class InfeasibleInstance : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class IncumbentInit { low_snr, narrowband, none };

struct BBConfig {
    IncumbentInit initial_incumbent = IncumbentInit::low_snr;
    /// Prune when bound <= incumbent + bound_tolerance.
    double bound_tolerance = 0.0;
    std::optional<std::uint64_t> node_budget;
    /// Called with (prefix, bound, incumbent rate) whenever a subtree is pruned.
    std::function<void(std::span<const Vertex>, double, double)> on_prune;
};

struct SolveStats {
    std::uint64_t nodes_expanded = 0;
    std::uint64_t nodes_pruned_by_bound = 0;
    std::uint64_t leaves_evaluated = 0;
    double wall_time_s = 0.0;
    /// False only when bb_solve ran out of node budget.
    bool certified = true;
    /// P_max * gamma_{l0,max} / sigma^2 from the single-subcarrier problem (low_snr_solve only).
    std::optional<double> low_snr_objective;
    std::optional<int> selected_subcarrier;
};

struct SolveResult {
    AntennaPlacement placement;
    PowerAllocation allocation;
    double rate_bps_hz = 0.0;
    SolveStats stats;
};

/// Per-channel cache: |c_l|^2 tables and fixed-hop DP tables for every
/// subcarrier, reused by the bound at every branch-and-bound node.
class BoundOracle {
public:
    BoundOracle(const WidebandChannel& channel, const SystemParams& sys, int num_antennas);

    const PlacementGraph& graph() const { return graph_; }
    int num_antennas() const { return num_antennas_; }

    /// gamma_{l,max} for a feasible prefix of length r < N_t. Each entry is
    /// -infinity when the prefix has no feasible completion.
    void max_gains(std::span<const Vertex> prefix, std::span<double> out) const;

    /// Water-filled rate over max_gains(prefix); for r == N_t, the exact rate.
    /// Partial prefixes get a 1e-12 relative margin against summation-order
    /// rounding. -infinity when the prefix cannot be completed.
    double bound(std::span<const Vertex> prefix) const;

    /// Best gain of `hops` more antennas after `last` on one subcarrier (1-based).
    double completion_gain(int subcarrier, int hops, std::optional<Vertex> last) const {
        return tables_[static_cast<std::size_t>(subcarrier - 1)].best_gain(hops, last);
    }

private:
    const WidebandChannel* channel_;
    SystemParams sys_;
    PlacementGraph graph_;
    int num_antennas_;
    std::vector<FixedHopTable> tables_;  // one per subcarrier
};

/// Exhaustive search; ties go to the lexicographically smallest placement.
SolveResult brute_force_solve(const WidebandChannel& channel, const SystemParams& sys, int num_antennas);

/// Rate upper bound over every feasible completion of prefix.
double upper_bound(const WidebandChannel& channel, const SystemParams& sys, const AntennaPlacement& prefix,
                   int num_antennas);

SolveResult bb_solve(const WidebandChannel& channel, const SystemParams& sys, int num_antennas,
                     const BBConfig& config = {});

/// Best placement for the single best subcarrier, then water-filled over all.
SolveResult low_snr_solve(const WidebandChannel& channel, const SystemParams& sys, int num_antennas);

/// 1-based subcarrier used as the band centre: floor(L/2) + 1.
int central_subcarrier(int num_subcarriers);

/// Best placement for the central subcarrier, then water-filled over all.
SolveResult narrowband_solve(const WidebandChannel& channel, const SystemParams& sys, int num_antennas);

/// Centred uniform array with index spacing s; first index uses round-half-even.
std::vector<Vertex> fpa_indices(int num_points, int min_sep_idx, int num_antennas);

SolveResult fpa_baseline(const WidebandChannel& channel, const SystemParams& sys, int num_antennas);

/// Water-fills and scores a fixed placement.
SolveResult evaluate_placement(const WidebandChannel& channel, const SystemParams& sys,
                               const AntennaPlacement& placement);

}  // namespace maofdm
