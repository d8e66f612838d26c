// SPDX-License-Identifier: Apache-2.0
//
// Wideband field-response channel: T delay taps with exponentially decaying
// power, each the sum of L_t planar paths with uniform departure angles and
// CSCG gains. The per-position tap response is zero-padded to L and taken
// through an unnormalized L-point DFT to give c_l(a).

#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "maofdm/sampling_graph.hpp"

namespace maofdm {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 3.0e8;

struct ChannelModelParams {
    int num_taps = 5;
    int paths_per_tap = 10;
    int num_subcarriers = 64;
    int cp_length = 6;
    double carrier_freq_hz = 2.4e9;
    double tx_rx_distance_m = 10.0;
    double pathloss_exponent = 2.2;
    double tap_decay_factor = 2.0;
    std::uint64_t rng_seed = 0;

    double wavelength_m() const { return kSpeedOfLight / carrier_freq_hz; }

    /// Throws std::invalid_argument when a count is non-positive, M_CP < T,
    /// T > L or a physical constant is out of range.
    void validate() const;
};

/// (lambda / 4 pi)^2 * d^-exponent: free-space reference at 1 m.
double path_loss(const ChannelModelParams& params);

/// Expected power of each tap; sums to path_loss(params).
std::vector<double> tap_power_profile(const ChannelModelParams& params);

/// Per-path draws for one realization, kept so the CFR can be recomputed.
struct TapFieldData {
    struct Path {
        double angle_rad = 0.0;
        cplx gain;
    };
    std::vector<double> tap_power;          // g_t
    std::vector<std::vector<Path>> paths;   // [tap][path]
};

class WidebandChannel {
public:
    WidebandChannel(SamplingGrid grid, ChannelModelParams params, TapFieldData taps,
                    std::vector<cplx> cfr);

    const SamplingGrid& grid() const { return grid_; }
    const ChannelModelParams& params() const { return params_; }
    const TapFieldData& taps() const { return taps_; }

    int num_points() const { return grid_.num_points; }
    int num_subcarriers() const { return params_.num_subcarriers; }

    /// c_l(position); both indices 1-based. Throws std::out_of_range.
    cplx cfr_at(Vertex position_idx, int subcarrier) const;

    /// Row of L responses for one position (1-based).
    std::span<const cplx> cfr_row(Vertex position_idx) const;

    /// |c_l(position)|^2 for all positions of one subcarrier, indexed by v-1.
    std::span<const double> power_column(int subcarrier) const;

    /// |c_l(position)|^2, 1-based indices, no range check.
    double power(Vertex position_idx, int subcarrier) const {
        return power_by_subcarrier_[static_cast<std::size_t>(subcarrier - 1) * static_cast<std::size_t>(grid_.num_points) +
                                    static_cast<std::size_t>(position_idx - 1)];
    }

private:
    SamplingGrid grid_;
    ChannelModelParams params_;
    TapFieldData taps_;
    std::vector<cplx> cfr_;                  // row-major M x L
    std::vector<double> power_by_subcarrier_;  // row-major L x M
};

/// Deterministic in (params.rng_seed, params, grid).
WidebandChannel generate_realization(const ChannelModelParams& params, const SamplingGrid& grid);

/// h_t(a) for every tap at a position in meters.
std::vector<cplx> tap_response(const TapFieldData& taps, double position_m, double wavelength_m);

/// Zero-pads the taps to length L and applies the DFT with kernel exp(-j 2 pi l t / L), l from 0.
std::vector<cplx> taps_to_cfr(std::span<const cplx> taps, int num_subcarriers);

/// g_l = sum_n |c_l(a_n)|^2 for l = 1..L, accumulated in placement order.
std::vector<double> placement_gains(const WidebandChannel& channel, const AntennaPlacement& placement);
std::vector<double> placement_gains(const WidebandChannel& channel, std::span<const Vertex> indices);

/// Text dump: header "maofdm-channel M=<M> L=<L> T=<T> seed=<seed>", then
/// M*L lines "m l re im" with 17 significant digits, m and l 1-based.
void write_channel_dump(std::ostream& out, const WidebandChannel& channel);

struct ChannelDump {
    int num_points = 0;
    int num_subcarriers = 0;
    int num_taps = 0;
    std::uint64_t seed = 0;
    std::vector<cplx> cfr;  // row-major M x L

    cplx at(Vertex m, int l) const {
        return cfr[static_cast<std::size_t>(m - 1) * static_cast<std::size_t>(num_subcarriers) +
                   static_cast<std::size_t>(l - 1)];
    }
};

/// Throws std::runtime_error on malformed input.
ChannelDump read_channel_dump(std::istream& in);

}  // namespace maofdm
