// SPDX-License-Identifier: Apache-2.0
//
// Discretized movement region and the placement DAG over its sampling points.
// All vertex indices exposed here are 1-based: vertices are {1..M}.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace maofdm {

using Vertex = int;

/// Uniformly sampled linear movement region of length A with M points.
struct SamplingGrid {
    double region_length_m = 0.0;
    int num_points = 0;
    double spacing_m = 0.0;
    double min_sep_m = 0.0;
    /// Smallest index gap whose metric distance is at least min_sep_m.
    int min_sep_idx = 1;

    /// Position in meters of 1-based sampling point k.
    double position(Vertex k) const;
};

/// Throws std::invalid_argument on non-positive inputs, M < 2 or a_min > A.
SamplingGrid build_grid(double region_length_m, int num_points, double min_sep_m);

/// Closed-form number of N-vertex paths: C(M - (s-1)(N-1), N), 0 when negative.
std::uint64_t count_placements(int num_points, int min_sep_idx, int num_antennas);

/// Contiguous, possibly empty, range of vertices [first, last].
struct VertexRange {
    Vertex first = 1;
    Vertex last = 0;

    bool empty() const { return first > last; }
    int size() const { return empty() ? 0 : last - first + 1; }
    bool contains(Vertex v) const { return v >= first && v <= last; }
};

/// Implicit DAG: edge (i, j) exists iff j - i >= s.
class PlacementGraph {
public:
    explicit PlacementGraph(SamplingGrid grid);

    const SamplingGrid& grid() const { return grid_; }
    int vertex_count() const { return grid_.num_points; }
    int min_sep_idx() const { return grid_.min_sep_idx; }

    bool has_edge(Vertex from, Vertex to) const;

    /// Outgoing neighbors of v; std::nullopt stands for the empty prefix and
    /// yields every vertex.
    VertexRange neighbors(std::optional<Vertex> v) const;

private:
    SamplingGrid grid_;
};

/// Strictly increasing list of grid indices obeying the spacing rule.
class AntennaPlacement {
public:
    AntennaPlacement() = default;

    /// Validates against the graph; throws std::invalid_argument when an index
    /// is out of range or a consecutive pair is closer than min_sep_idx.
    AntennaPlacement(const PlacementGraph& graph, std::vector<Vertex> indices);

    std::span<const Vertex> indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }
    Vertex operator[](std::size_t i) const { return indices_[i]; }
    Vertex back() const { return indices_.back(); }

    friend bool operator==(const AntennaPlacement&, const AntennaPlacement&) = default;
    friend auto operator<=>(const AntennaPlacement&, const AntennaPlacement&) = default;

private:
    std::vector<Vertex> indices_;
};

/// True when indices is a feasible (possibly partial) placement on graph.
bool is_feasible(const PlacementGraph& graph, std::span<const Vertex> indices);

/// Lazy lexicographic stream over every feasible N-antenna placement.
class PlacementStream {
public:
    PlacementStream(const PlacementGraph& graph, int num_antennas);

    /// Next placement, or std::nullopt once exhausted.
    std::optional<AntennaPlacement> next();

    /// Same as next() without constructing an AntennaPlacement; the returned
    /// span is valid until the following call.
    std::optional<std::span<const Vertex>> next_indices();

private:
    const PlacementGraph* graph_;
    std::vector<Vertex> current_;
    bool started_ = false;
    bool done_ = false;
};

PlacementStream enumerate_placements(const PlacementGraph& graph, int num_antennas);

struct FixedHopPath {
    double gain = 0.0;
    std::vector<Vertex> suffix;
};

/// Best k-vertex path sums for a fixed set of vertex weights, for every hop
/// count up to max_hops and every admissible start. Built once in O(k*M);
/// queries are O(1) for the gain and O(k) for the path.
class FixedHopTable {
public:
    FixedHopTable(const PlacementGraph& graph, std::span<const double> vertex_weights, int max_hops);

    int max_hops() const { return max_hops_; }

    /// Maximum weight of a `hops`-vertex path whose first vertex lies in
    /// neighbors(start). -infinity when no such path exists.
    double best_gain(int hops, std::optional<Vertex> start) const;

    /// Lexicographically smallest argmax path, or std::nullopt if infeasible.
    std::optional<FixedHopPath> best_path(int hops, std::optional<Vertex> start) const;

private:
    // best_[h][v]: best h-vertex path starting exactly at v.
    // tail_[h][u]: max over v >= u of best_[h][v]; arg_tail_ holds the smallest such v.
    double& best(int h, Vertex v) { return best_[index(h, v)]; }
    double best(int h, Vertex v) const { return best_[index(h, v)]; }
    double tail(int h, Vertex u) const { return tail_[index(h, u)]; }
    Vertex arg_tail(int h, Vertex u) const { return arg_tail_[index(h, u)]; }
    std::size_t index(int h, Vertex v) const {
        return static_cast<std::size_t>(h - 1) * static_cast<std::size_t>(stride_) + static_cast<std::size_t>(v);
    }
    Vertex first_admissible(std::optional<Vertex> start) const;

    int num_points_;
    int min_sep_idx_;
    int max_hops_;
    int stride_;
    std::vector<double> best_;
    std::vector<double> tail_;
    std::vector<Vertex> arg_tail_;
};

/// One-shot wrapper around FixedHopTable. std::nullopt means infeasible.
std::optional<FixedHopPath> fixed_hop_best_gain(const PlacementGraph& graph,
                                                std::span<const double> vertex_weights, int hops,
                                                std::optional<Vertex> start);

}  // namespace maofdm
