// SPDX-License-Identifier: Apache-2.0

#include "maofdm/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace maofdm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// The bound adds the DP tail to the prefix sum, a different summation order
// from the leaf evaluation, so the two can disagree in the last few ulps.
// Inflating partial-placement bounds by far more than that keeps them valid.
constexpr double kBoundGuard = 1e-12;

double guarded(double rate) { return rate + kBoundGuard * std::abs(rate); }

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_instance(const WidebandChannel& channel, const SystemParams& sys, int num_antennas) {
    sys.validate();
    if (sys.num_subcarriers != channel.num_subcarriers()) {
        throw std::invalid_argument("system and channel disagree on the number of subcarriers");
    }
    if (num_antennas < 1) throw std::invalid_argument("need at least one antenna");
    const auto& g = channel.grid();
    if (count_placements(g.num_points, g.min_sep_idx, num_antennas) == 0) {
        throw InfeasibleInstance("no feasible placement of " + std::to_string(num_antennas) +
                                 " antennas on M=" + std::to_string(g.num_points) +
                                 " points with index spacing " + std::to_string(g.min_sep_idx));
    }
}

SolveResult score(const WidebandChannel& channel, const SystemParams& sys, AntennaPlacement placement) {
    const auto gains = placement_gains(channel, placement);
    auto rated = waterfilled_rate(gains, sys);
    SolveResult out;
    out.placement = std::move(placement);
    out.allocation = std::move(rated.allocation);
    out.rate_bps_hz = rated.rate;
    return out;
}

// Best single-subcarrier placement via the fixed-hop DP.
AntennaPlacement best_for_subcarrier(const WidebandChannel& channel, const PlacementGraph& graph,
                                     int subcarrier, int num_antennas, double* gain_out = nullptr) {
    FixedHopTable table(graph, channel.power_column(subcarrier), num_antennas);
    auto path = table.best_path(num_antennas, std::nullopt);
    if (!path) throw InfeasibleInstance("no feasible placement");
    if (gain_out) *gain_out = path->gain;
    return AntennaPlacement(graph, std::move(path->suffix));
}

}  // namespace

BoundOracle::BoundOracle(const WidebandChannel& channel, const SystemParams& sys, int num_antennas)
    : channel_(&channel), sys_(sys), graph_(channel.grid()), num_antennas_(num_antennas) {
    if (num_antennas < 1) throw std::invalid_argument("need at least one antenna");
    tables_.reserve(static_cast<std::size_t>(channel.num_subcarriers()));
    for (int l = 1; l <= channel.num_subcarriers(); ++l) {
        tables_.emplace_back(graph_, channel.power_column(l), num_antennas);
    }
}

void BoundOracle::max_gains(std::span<const Vertex> prefix, std::span<double> out) const {
    const int num_sc = channel_->num_subcarriers();
    if (out.size() != static_cast<std::size_t>(num_sc)) throw std::invalid_argument("output must hold L gains");
    if (prefix.size() > static_cast<std::size_t>(num_antennas_)) throw std::invalid_argument("prefix longer than N_t");
    if (!is_feasible(graph_, prefix)) throw std::invalid_argument("prefix is not a feasible partial placement");

    const int remaining = num_antennas_ - static_cast<int>(prefix.size());
    const std::optional<Vertex> last = prefix.empty() ? std::nullopt : std::optional<Vertex>(prefix.back());
    for (int l = 1; l <= num_sc; ++l) {
        double g = 0.0;
        for (const Vertex v : prefix) g += channel_->power(v, l);
        if (remaining > 0) g += tables_[static_cast<std::size_t>(l - 1)].best_gain(remaining, last);
        out[static_cast<std::size_t>(l - 1)] = g;
    }
}

double BoundOracle::bound(std::span<const Vertex> prefix) const {
    std::vector<double> gamma(static_cast<std::size_t>(channel_->num_subcarriers()));
    max_gains(prefix, gamma);
    if (!gamma.empty() && gamma.front() == kNegInf) return kNegInf;
    const double rate = waterfilled_rate(gamma, sys_).rate;
    return static_cast<int>(prefix.size()) == num_antennas_ ? rate : guarded(rate);
}

SolveResult evaluate_placement(const WidebandChannel& channel, const SystemParams& sys,
                               const AntennaPlacement& placement) {
    check_instance(channel, sys, static_cast<int>(placement.size()));
    const auto start = Clock::now();
    auto out = score(channel, sys, placement);
    out.stats.leaves_evaluated = 1;
    out.stats.wall_time_s = seconds_since(start);
    return out;
}

SolveResult brute_force_solve(const WidebandChannel& channel, const SystemParams& sys, int num_antennas) {
    check_instance(channel, sys, num_antennas);
    const auto start = Clock::now();
    PlacementGraph graph(channel.grid());
    auto stream = enumerate_placements(graph, num_antennas);

    double best_rate = kNegInf;
    std::vector<Vertex> best;
    std::uint64_t leaves = 0;
    while (auto idx = stream.next_indices()) {
        ++leaves;
        const auto gains = placement_gains(channel, *idx);
        const double rate = waterfilled_rate(gains, sys).rate;
        if (rate > best_rate) {
            best_rate = rate;
            best.assign(idx->begin(), idx->end());
        }
    }
    auto out = score(channel, sys, AntennaPlacement(graph, std::move(best)));
    out.stats.leaves_evaluated = leaves;
    out.stats.wall_time_s = seconds_since(start);
    return out;
}

double upper_bound(const WidebandChannel& channel, const SystemParams& sys, const AntennaPlacement& prefix,
                   int num_antennas) {
    check_instance(channel, sys, num_antennas);
    BoundOracle oracle(channel, sys, num_antennas);
    return oracle.bound(prefix.indices());
}

namespace {

class BranchAndBound {
public:
    BranchAndBound(const WidebandChannel& channel, const SystemParams& sys, int num_antennas,
                   const BBConfig& config)
        : channel_(channel),
          sys_(sys),
          config_(config),
          oracle_(channel, sys, num_antennas),
          num_antennas_(num_antennas),
          num_sc_(static_cast<std::size_t>(channel.num_subcarriers())),
          prefix_gains_(static_cast<std::size_t>(num_antennas + 1) * num_sc_, 0.0),
          gamma_(num_sc_) {
        path_.reserve(static_cast<std::size_t>(num_antennas));
    }

    void seed_incumbent(double rate, std::span<const Vertex> placement) {
        best_rate_ = rate;
        best_.assign(placement.begin(), placement.end());
    }

    void run() { visit(0); }

    double best_rate() const { return best_rate_; }
    const std::vector<Vertex>& best() const { return best_; }
    SolveStats& stats() { return stats_; }

private:
    std::span<double> gains_at(int depth) {
        return std::span<double>(prefix_gains_).subspan(static_cast<std::size_t>(depth) * num_sc_, num_sc_);
    }

    bool out_of_budget() {
        if (!config_.node_budget) return false;
        if (stats_.nodes_expanded + stats_.leaves_evaluated >= *config_.node_budget) {
            stats_.certified = false;
            return true;
        }
        return false;
    }

    void visit(int depth) {
        if (aborted_) return;
        const auto& graph = oracle_.graph();
        const std::optional<Vertex> last = path_.empty() ? std::nullopt : std::optional<Vertex>(path_.back());

        if (depth == num_antennas_) {
            if (out_of_budget()) {
                aborted_ = true;
                return;
            }
            ++stats_.leaves_evaluated;
            const double rate = waterfilled_rate(gains_at(depth), sys_).rate;
            if (rate > best_rate_) {
                best_rate_ = rate;
                best_ = path_;
            }
            return;
        }

        const VertexRange children = graph.neighbors(last);
        if (children.empty()) return;

        const double ub = bound(depth, last);
        if (ub <= best_rate_ + config_.bound_tolerance) {
            ++stats_.nodes_pruned_by_bound;
            if (config_.on_prune) config_.on_prune(path_, ub, best_rate_);
            return;
        }
        if (out_of_budget()) {
            aborted_ = true;
            return;
        }
        ++stats_.nodes_expanded;

        const auto here = gains_at(depth);
        for (Vertex v = children.first; v <= children.last && !aborted_; ++v) {
            auto next = gains_at(depth + 1);
            for (std::size_t l = 0; l < num_sc_; ++l) {
                next[l] = here[l] + channel_.power(v, static_cast<int>(l) + 1);
            }
            path_.push_back(v);
            visit(depth + 1);
            path_.pop_back();
        }
    }

    double bound(int depth, std::optional<Vertex> last) {
        const int remaining = num_antennas_ - depth;
        const auto here = gains_at(depth);
        for (std::size_t l = 0; l < num_sc_; ++l) {
            const double tail = oracle_.completion_gain(static_cast<int>(l) + 1, remaining, last);
            if (tail == kNegInf) return kNegInf;
            gamma_[l] = here[l] + tail;
        }
        return guarded(waterfilled_rate(gamma_, sys_).rate);
    }

    const WidebandChannel& channel_;
    const SystemParams& sys_;
    const BBConfig& config_;
    BoundOracle oracle_;
    int num_antennas_;
    std::size_t num_sc_;
    std::vector<double> prefix_gains_;  // (N_t + 1) x L running sums along the current path
    std::vector<double> gamma_;
    std::vector<Vertex> path_;
    std::vector<Vertex> best_;
    double best_rate_ = kNegInf;
    bool aborted_ = false;
    SolveStats stats_;
};

}  // namespace

SolveResult bb_solve(const WidebandChannel& channel, const SystemParams& sys, int num_antennas,
                     const BBConfig& config) {
    check_instance(channel, sys, num_antennas);
    if (!(config.bound_tolerance >= 0.0)) throw std::invalid_argument("bound tolerance must be non-negative");
    const auto start = Clock::now();

    BranchAndBound search(channel, sys, num_antennas, config);
    // The incumbent's placement is kept alongside its rate, so an instance whose
    // optimum equals the heuristic still returns a placement.
    switch (config.initial_incumbent) {
        case IncumbentInit::low_snr: {
            const auto heur = low_snr_solve(channel, sys, num_antennas);
            search.seed_incumbent(heur.rate_bps_hz, heur.placement.indices());
            break;
        }
        case IncumbentInit::narrowband: {
            const auto heur = narrowband_solve(channel, sys, num_antennas);
            search.seed_incumbent(heur.rate_bps_hz, heur.placement.indices());
            break;
        }
        case IncumbentInit::none:
            break;
    }
    search.run();
    if (search.best().empty()) {
        throw std::runtime_error("node budget exhausted before any placement was evaluated");
    }

    PlacementGraph graph(channel.grid());
    auto out = score(channel, sys, AntennaPlacement(graph, search.best()));
    out.stats = search.stats();
    out.stats.wall_time_s = seconds_since(start);
    return out;
}

SolveResult low_snr_solve(const WidebandChannel& channel, const SystemParams& sys, int num_antennas) {
    check_instance(channel, sys, num_antennas);
    const auto start = Clock::now();
    PlacementGraph graph(channel.grid());

    int best_l = 1;
    double best_gain = kNegInf;
    for (int l = 1; l <= channel.num_subcarriers(); ++l) {
        FixedHopTable table(graph, channel.power_column(l), num_antennas);
        const double g = table.best_gain(num_antennas, std::nullopt);
        if (g > best_gain) {
            best_gain = g;
            best_l = l;
        }
    }
    auto out = score(channel, sys, best_for_subcarrier(channel, graph, best_l, num_antennas));
    out.stats.leaves_evaluated = 1;
    out.stats.selected_subcarrier = best_l;
    out.stats.low_snr_objective = sys.max_power * best_gain / sys.noise_power;
    out.stats.wall_time_s = seconds_since(start);
    return out;
}

int central_subcarrier(int num_subcarriers) { return num_subcarriers / 2 + 1; }

SolveResult narrowband_solve(const WidebandChannel& channel, const SystemParams& sys, int num_antennas) {
    check_instance(channel, sys, num_antennas);
    const auto start = Clock::now();
    PlacementGraph graph(channel.grid());
    const int lc = central_subcarrier(channel.num_subcarriers());
    auto out = score(channel, sys, best_for_subcarrier(channel, graph, lc, num_antennas));
    out.stats.leaves_evaluated = 1;
    out.stats.selected_subcarrier = lc;
    out.stats.wall_time_s = seconds_since(start);
    return out;
}

std::vector<Vertex> fpa_indices(int num_points, int min_sep_idx, int num_antennas) {
    if (num_antennas < 1) throw std::invalid_argument("need at least one antenna");
    const long long slack = static_cast<long long>(num_points) - 1 -
                            static_cast<long long>(min_sep_idx) * (num_antennas - 1);
    if (slack < 0) {
        throw InfeasibleInstance("centred array of " + std::to_string(num_antennas) + " antennas exceeds the grid");
    }
    // round(slack / 2), halves to even
    long long half = slack / 2;
    if (slack % 2 == 1 && half % 2 == 1) ++half;
    std::vector<Vertex> idx(static_cast<std::size_t>(num_antennas));
    for (int n = 0; n < num_antennas; ++n) {
        idx[static_cast<std::size_t>(n)] = static_cast<Vertex>(half + 1 + static_cast<long long>(n) * min_sep_idx);
    }
    return idx;
}

SolveResult fpa_baseline(const WidebandChannel& channel, const SystemParams& sys, int num_antennas) {
    check_instance(channel, sys, num_antennas);
    const auto start = Clock::now();
    PlacementGraph graph(channel.grid());
    const auto& g = channel.grid();
    auto out = score(channel, sys, AntennaPlacement(graph, fpa_indices(g.num_points, g.min_sep_idx, num_antennas)));
    out.stats.leaves_evaluated = 1;
    out.stats.wall_time_s = seconds_since(start);
    return out;
}

}  // namespace maofdm
