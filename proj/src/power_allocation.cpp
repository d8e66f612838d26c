// SPDX-License-Identifier: Apache-2.0

#include "maofdm/power_allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace maofdm {

void SystemParams::validate() const {
    if (!(noise_power > 0.0) || !std::isfinite(noise_power)) throw std::invalid_argument("noise power must be positive");
    if (!(max_power > 0.0) || !std::isfinite(max_power)) throw std::invalid_argument("max power must be positive");
    if (num_subcarriers < 1) throw std::invalid_argument("num_subcarriers must be positive");
    if (cp_length < 0) throw std::invalid_argument("cp_length must be non-negative");
}

double PowerAllocation::total() const { return std::accumulate(powers.begin(), powers.end(), 0.0); }

namespace {

// floors[l] = sigma^2 / g_l; +inf marks a zero-gain subcarrier.
double allocated(std::span<const double> floors, double mu) {
    double sum = 0.0;
    for (const double f : floors) sum += std::max(mu - f, 0.0);
    return sum;
}

// Closed-form water level for the active set {l : floor_l < mu}; returns
// std::nullopt if that level would change the active set.
std::optional<double> exact_level(std::span<const double> floors, double budget, double mu) {
    double floor_sum = 0.0;
    int active = 0;
    for (const double f : floors) {
        if (f < mu) {
            floor_sum += f;
            ++active;
        }
    }
    if (active == 0) return std::nullopt;
    const double level = (budget + floor_sum) / active;
    for (const double f : floors) {
        if ((f < mu) != (f < level)) return std::nullopt;
    }
    return level;
}

}  // namespace

PowerAllocation waterfill(std::span<const double> gains, const SystemParams& sys, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("water-filling tolerance must be positive");
    const double noise = sys.noise_power;
    const double budget = sys.max_power;
    constexpr double kInf = std::numeric_limits<double>::infinity();

    std::vector<double> floors(gains.size(), kInf);
    double lo = kInf;
    double hi = 0.0;
    for (std::size_t l = 0; l < gains.size(); ++l) {
        const double g = gains[l];
        if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("channel gains must be finite and non-negative");
        if (g > 0.0) {
            floors[l] = noise / g;
            lo = std::min(lo, floors[l]);
            hi = std::max(hi, floors[l]);
        }
    }

    PowerAllocation alloc;
    alloc.powers.assign(gains.size(), 0.0);
    if (lo == kInf) return alloc;

    hi += budget;
    double mu = hi;
    for (int iter = 0; iter < kWaterfillMaxIter; ++iter) {
        mu = 0.5 * (lo + hi);
        const double sum = allocated(floors, mu);
        if (std::abs(sum - budget) <= tol * budget) break;
        if (sum > budget) {
            hi = mu;
        } else {
            lo = mu;
        }
    }
    // The bisection pins down the active set; finish with its exact level.
    if (auto level = exact_level(floors, budget, mu)) mu = *level;

    for (std::size_t l = 0; l < gains.size(); ++l) alloc.powers[l] = std::max(mu - floors[l], 0.0);
    alloc.water_level = mu;
    return alloc;
}

double achievable_rate(std::span<const double> gains, const PowerAllocation& alloc, const SystemParams& sys) {
    if (gains.size() != alloc.powers.size()) throw std::invalid_argument("allocation and gains differ in length");
    double sum = 0.0;
    for (std::size_t l = 0; l < gains.size(); ++l) {
        sum += std::log2(1.0 + alloc.powers[l] * gains[l] / sys.noise_power);
    }
    return sys.rate_prefactor() * sum;
}

double water_level_rate(std::span<const double> gains, const PowerAllocation& alloc, const SystemParams& sys) {
    if (gains.size() != alloc.powers.size()) throw std::invalid_argument("allocation and gains differ in length");
    if (!alloc.water_level) return 0.0;
    const double mu = *alloc.water_level;
    double sum = 0.0;
    for (std::size_t l = 0; l < gains.size(); ++l) {
        if (alloc.powers[l] > 0.0) sum += std::log2(mu * gains[l] / sys.noise_power);
    }
    return sys.rate_prefactor() * sum;
}

RatedAllocation waterfilled_rate(std::span<const double> gains, const SystemParams& sys) {
    RatedAllocation out;
    out.allocation = waterfill(gains, sys);
    out.rate = achievable_rate(gains, out.allocation, sys);
    return out;
}

Beamformer mrt_beamformer(const WidebandChannel& channel, const AntennaPlacement& placement,
                          const PowerAllocation& alloc) {
    const int num_sc = channel.num_subcarriers();
    if (alloc.powers.size() != static_cast<std::size_t>(num_sc)) {
        throw std::invalid_argument("allocation must cover every subcarrier");
    }
    Beamformer bf;
    bf.weights.resize(static_cast<std::size_t>(num_sc));
    for (int l = 1; l <= num_sc; ++l) {
        const double p = alloc.powers[static_cast<std::size_t>(l - 1)];
        auto& w = bf.weights[static_cast<std::size_t>(l - 1)];
        w.assign(placement.size(), cplx{});
        if (p <= 0.0) continue;
        double norm2 = 0.0;
        for (const Vertex v : placement.indices()) norm2 += std::norm(channel.cfr_at(v, l));
        if (norm2 == 0.0) throw std::domain_error("MRT direction undefined for an all-zero channel vector");
        const double scale = std::sqrt(p / norm2);
        for (std::size_t n = 0; n < placement.size(); ++n) w[n] = scale * channel.cfr_at(placement[n], l);
    }
    return bf;
}

double beamformed_rate(const WidebandChannel& channel, const AntennaPlacement& placement,
                       const Beamformer& bf, const SystemParams& sys) {
    const int num_sc = channel.num_subcarriers();
    if (bf.weights.size() != static_cast<std::size_t>(num_sc)) {
        throw std::invalid_argument("beamformer must cover every subcarrier");
    }
    double sum = 0.0;
    for (int l = 1; l <= num_sc; ++l) {
        const auto& w = bf.weights[static_cast<std::size_t>(l - 1)];
        cplx inner{};
        for (std::size_t n = 0; n < placement.size(); ++n) inner += std::conj(w[n]) * channel.cfr_at(placement[n], l);
        sum += std::log2(1.0 + std::norm(inner) / sys.noise_power);
    }
    return sys.rate_prefactor() * sum;
}

}  // namespace maofdm
