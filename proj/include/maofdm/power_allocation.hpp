// SPDX-License-Identifier: Apache-2.0
//
// MRT beamforming and water-filling across OFDM subcarriers. Rates are in
// bits/s/Hz and include the 1/(L + M_CP) cyclic-prefix overhead.

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "maofdm/channel_model.hpp"
#include "maofdm/sampling_graph.hpp"

namespace maofdm {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

struct SystemParams {
    double noise_power = 1e-9;           // sigma^2, W
    double max_power = 39.810717055349734;  // P_max, W (46 dBm)
    int num_subcarriers = 64;
    int cp_length = 6;

    void validate() const;
    double rate_prefactor() const { return 1.0 / static_cast<double>(num_subcarriers + cp_length); }
};

struct PowerAllocation {
    std::vector<double> powers;
    /// Unset when every gain is zero and nothing was allocated.
    std::optional<double> water_level;

    double total() const;
};

inline constexpr double kDefaultWaterfillTol = 1e-10;
inline constexpr int kWaterfillMaxIter = 200;

/// p_l = (mu - sigma^2 / g_l)^+ with sum p_l = P_max. Zero gains get zero
/// power. Throws std::invalid_argument on negative or non-finite gains.
PowerAllocation waterfill(std::span<const double> gains, const SystemParams& sys,
                          double tol = kDefaultWaterfillTol);

/// (1/(L+M_CP)) * sum_l log2(1 + p_l g_l / sigma^2).
double achievable_rate(std::span<const double> gains, const PowerAllocation& alloc, const SystemParams& sys);

/// Water-level form: (1/(L+M_CP)) * sum over active l of log2(mu g_l / sigma^2).
double water_level_rate(std::span<const double> gains, const PowerAllocation& alloc, const SystemParams& sys);

struct RatedAllocation {
    PowerAllocation allocation;
    double rate = 0.0;
};

/// Water-fill then score; the single scoring path every solver shares.
RatedAllocation waterfilled_rate(std::span<const double> gains, const SystemParams& sys);

struct Beamformer {
    /// weights[l] holds the N_t-element precoder of subcarrier l+1.
    std::vector<std::vector<cplx>> weights;
};

/// w_l = sqrt(p_l) c_l / ||c_l||. Throws std::domain_error when a subcarrier
/// with positive power has an all-zero channel vector.
Beamformer mrt_beamformer(const WidebandChannel& channel, const AntennaPlacement& placement,
                          const PowerAllocation& alloc);

/// (1/(L+M_CP)) * sum_l log2(1 + |w_l^H c_l|^2 / sigma^2) for explicit precoders.
double beamformed_rate(const WidebandChannel& channel, const AntennaPlacement& placement,
                       const Beamformer& bf, const SystemParams& sys);

}  // namespace maofdm
