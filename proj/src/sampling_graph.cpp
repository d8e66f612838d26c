// SPDX-License-Identifier: Apache-2.0

#include "maofdm/sampling_graph.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace maofdm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double SamplingGrid::position(Vertex k) const {
    if (k < 1 || k > num_points) {
        throw std::out_of_range("sampling point " + std::to_string(k) + " outside 1.." +
                                std::to_string(num_points));
    }
    if (k == num_points) return region_length_m;
    return static_cast<double>(k - 1) * spacing_m;
}

SamplingGrid build_grid(double region_length_m, int num_points, double min_sep_m) {
    if (!(region_length_m > 0.0) || !std::isfinite(region_length_m)) {
        throw std::invalid_argument("region length must be positive and finite");
    }
    if (num_points < 2) throw std::invalid_argument("need at least two sampling points");
    if (!(min_sep_m > 0.0) || min_sep_m > region_length_m) {
        throw std::invalid_argument("minimum separation must lie in (0, region length]");
    }

    SamplingGrid g;
    g.region_length_m = region_length_m;
    g.num_points = num_points;
    g.spacing_m = region_length_m / static_cast<double>(num_points - 1);
    g.min_sep_m = min_sep_m;

    // Ratios that are integers up to rounding (e.g. a_min = 3 * delta) must not
    // round up to the next step.
    const double steps = min_sep_m / g.spacing_m;
    const double nearest = std::round(steps);
    int s = std::abs(steps - nearest) <= 1e-9 * std::max(1.0, steps) ? static_cast<int>(nearest)
                                                                     : static_cast<int>(std::ceil(steps));
    g.min_sep_idx = std::max(s, 1);
    return g;
}

std::uint64_t count_placements(int num_points, int min_sep_idx, int num_antennas) {
    if (num_antennas < 1) return 0;
    const long long n = static_cast<long long>(num_points) -
                        static_cast<long long>(min_sep_idx - 1) * static_cast<long long>(num_antennas - 1);
    const long long k = num_antennas;
    if (n < k) return 0;
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t r = 1;
    for (long long i = 0; i < k; ++i) {
        // r * (n - i) is divisible by (i + 1); cancel the gcd first to stay exact.
        const auto num = static_cast<std::uint64_t>(n - i);
        const auto den = static_cast<std::uint64_t>(i + 1);
        const std::uint64_t g = std::gcd(r, den);
        const std::uint64_t factor = num / (den / g);
        if (r / g > kMax / factor) return kMax;
        r = (r / g) * factor;
    }
    return r;
}

PlacementGraph::PlacementGraph(SamplingGrid grid) : grid_(grid) {
    if (grid_.num_points < 2 || grid_.min_sep_idx < 1) {
        throw std::invalid_argument("placement graph needs a valid sampling grid");
    }
}

bool PlacementGraph::has_edge(Vertex from, Vertex to) const {
    const int m = grid_.num_points;
    return from >= 1 && from <= m && to >= 1 && to <= m && to - from >= grid_.min_sep_idx;
}

VertexRange PlacementGraph::neighbors(std::optional<Vertex> v) const {
    if (!v) return {1, grid_.num_points};
    if (*v < 1 || *v > grid_.num_points) {
        throw std::out_of_range("vertex " + std::to_string(*v) + " outside the placement graph");
    }
    return {*v + grid_.min_sep_idx, grid_.num_points};
}

bool is_feasible(const PlacementGraph& graph, std::span<const Vertex> indices) {
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 1 || indices[i] > graph.vertex_count()) return false;
        if (i > 0 && !graph.has_edge(indices[i - 1], indices[i])) return false;
    }
    return true;
}

AntennaPlacement::AntennaPlacement(const PlacementGraph& graph, std::vector<Vertex> indices)
    : indices_(std::move(indices)) {
    if (!is_feasible(graph, indices_)) {
        std::string msg = "infeasible placement {";
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            msg += (i ? "," : "") + std::to_string(indices_[i]);
        }
        msg += "} for M=" + std::to_string(graph.vertex_count()) +
               ", s=" + std::to_string(graph.min_sep_idx());
        throw std::invalid_argument(msg);
    }
}

PlacementStream::PlacementStream(const PlacementGraph& graph, int num_antennas) : graph_(&graph) {
    if (num_antennas < 1) throw std::invalid_argument("need at least one antenna");
    current_.resize(static_cast<std::size_t>(num_antennas));
}

std::optional<std::span<const Vertex>> PlacementStream::next_indices() {
    if (done_) return std::nullopt;
    const int n = static_cast<int>(current_.size());
    const int m = graph_->vertex_count();
    const int s = graph_->min_sep_idx();

    if (!started_) {
        started_ = true;
        for (int i = 0; i < n; ++i) current_[static_cast<std::size_t>(i)] = 1 + i * s;
        if (current_.back() > m) {
            done_ = true;
            return std::nullopt;
        }
        return std::span<const Vertex>(current_);
    }

    // Rightmost slot that can still move right, then pack the rest tightly.
    for (int i = n - 1; i >= 0; --i) {
        const int limit = m - s * (n - 1 - i);
        auto& slot = current_[static_cast<std::size_t>(i)];
        if (slot < limit) {
            ++slot;
            for (int j = i + 1; j < n; ++j) {
                current_[static_cast<std::size_t>(j)] = slot + s * (j - i);
            }
            return std::span<const Vertex>(current_);
        }
    }
    done_ = true;
    return std::nullopt;
}

std::optional<AntennaPlacement> PlacementStream::next() {
    auto idx = next_indices();
    if (!idx) return std::nullopt;
    return AntennaPlacement(*graph_, std::vector<Vertex>(idx->begin(), idx->end()));
}

PlacementStream enumerate_placements(const PlacementGraph& graph, int num_antennas) {
    return PlacementStream(graph, num_antennas);
}

FixedHopTable::FixedHopTable(const PlacementGraph& graph, std::span<const double> vertex_weights,
                             int max_hops)
    : num_points_(graph.vertex_count()),
      min_sep_idx_(graph.min_sep_idx()),
      max_hops_(max_hops),
      stride_(graph.vertex_count() + 2) {
    if (max_hops < 1) throw std::invalid_argument("hop count must be at least 1");
    if (vertex_weights.size() != static_cast<std::size_t>(num_points_)) {
        throw std::invalid_argument("need one weight per sampling point");
    }
    const std::size_t cells = static_cast<std::size_t>(max_hops) * static_cast<std::size_t>(stride_);
    best_.assign(cells, kNegInf);
    tail_.assign(cells, kNegInf);
    arg_tail_.assign(cells, 0);

    const int m = num_points_;
    const int s = min_sep_idx_;
    for (int h = 1; h <= max_hops; ++h) {
        for (Vertex v = 1; v <= m; ++v) {
            const double w = vertex_weights[static_cast<std::size_t>(v - 1)];
            if (h == 1) {
                best(h, v) = w;
            } else if (v + s <= m && tail(h - 1, v + s) != kNegInf) {
                best(h, v) = w + tail(h - 1, v + s);
            }
        }
        // Column m+1 stays at -inf; ties keep the smaller vertex.
        for (Vertex u = m; u >= 1; --u) {
            const std::size_t at = index(h, u);
            const std::size_t right = index(h, u + 1);
            if (best_[at] != kNegInf && best_[at] >= tail_[right]) {
                tail_[at] = best_[at];
                arg_tail_[at] = u;
            } else {
                tail_[at] = tail_[right];
                arg_tail_[at] = arg_tail_[right];
            }
        }
    }
}

Vertex FixedHopTable::first_admissible(std::optional<Vertex> start) const {
    if (!start) return 1;
    if (*start < 1 || *start > num_points_) {
        throw std::out_of_range("start vertex " + std::to_string(*start) + " outside the placement graph");
    }
    return *start + min_sep_idx_;
}

double FixedHopTable::best_gain(int hops, std::optional<Vertex> start) const {
    if (hops < 1 || hops > max_hops_) throw std::out_of_range("hop count outside table range");
    const Vertex first = first_admissible(start);
    if (first > num_points_) return kNegInf;
    return tail(hops, first);
}

std::optional<FixedHopPath> FixedHopTable::best_path(int hops, std::optional<Vertex> start) const {
    const double gain = best_gain(hops, start);
    if (gain == kNegInf) return std::nullopt;

    FixedHopPath out;
    out.gain = gain;
    out.suffix.reserve(static_cast<std::size_t>(hops));
    Vertex from = first_admissible(start);
    for (int h = hops; h >= 1; --h) {
        const Vertex v = arg_tail(h, from);
        out.suffix.push_back(v);
        from = v + min_sep_idx_;
    }
    return out;
}

std::optional<FixedHopPath> fixed_hop_best_gain(const PlacementGraph& graph,
                                                std::span<const double> vertex_weights, int hops,
                                                std::optional<Vertex> start) {
    FixedHopTable table(graph, vertex_weights, hops);
    return table.best_path(hops, start);
}

}  // namespace maofdm
