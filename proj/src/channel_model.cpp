// SPDX-License-Identifier: Apache-2.0

#include "maofdm/channel_model.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "maofdm/random.hpp"

namespace maofdm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

void ChannelModelParams::validate() const {
    if (num_taps < 1) throw std::invalid_argument("num_taps must be positive");
    if (paths_per_tap < 1) throw std::invalid_argument("paths_per_tap must be positive");
    if (num_subcarriers < 1) throw std::invalid_argument("num_subcarriers must be positive");
    if (cp_length < num_taps) throw std::invalid_argument("cyclic prefix must cover the channel taps (M_CP >= T)");
    if (num_taps > num_subcarriers) throw std::invalid_argument("taps must fit in the DFT length (T <= L)");
    if (!(carrier_freq_hz > 0.0)) throw std::invalid_argument("carrier frequency must be positive");
    if (!(tx_rx_distance_m > 0.0)) throw std::invalid_argument("tx-rx distance must be positive");
    if (!std::isfinite(pathloss_exponent)) throw std::invalid_argument("path-loss exponent must be finite");
    if (!(tap_decay_factor > 0.0)) throw std::invalid_argument("tap decay factor must be positive");
}

double path_loss(const ChannelModelParams& params) {
    const double ref = params.wavelength_m() / (4.0 * std::numbers::pi);
    return ref * ref * std::pow(params.tx_rx_distance_m, -params.pathloss_exponent);
}

std::vector<double> tap_power_profile(const ChannelModelParams& params) {
    std::vector<double> profile(static_cast<std::size_t>(params.num_taps));
    double total = 0.0;
    for (int t = 0; t < params.num_taps; ++t) {
        profile[static_cast<std::size_t>(t)] = std::pow(params.tap_decay_factor, -static_cast<double>(t));
        total += profile[static_cast<std::size_t>(t)];
    }
    const double scale = path_loss(params) / total;
    for (auto& g : profile) g *= scale;
    return profile;
}

WidebandChannel::WidebandChannel(SamplingGrid grid, ChannelModelParams params, TapFieldData taps,
                                 std::vector<cplx> cfr)
    : grid_(grid), params_(params), taps_(std::move(taps)), cfr_(std::move(cfr)) {
    const auto m = static_cast<std::size_t>(grid_.num_points);
    const auto l = static_cast<std::size_t>(params_.num_subcarriers);
    if (cfr_.size() != m * l) throw std::invalid_argument("CFR matrix must be M x L");
    power_by_subcarrier_.resize(m * l);
    for (std::size_t row = 0; row < m; ++row) {
        for (std::size_t col = 0; col < l; ++col) {
            const cplx c = cfr_[row * l + col];
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
                throw std::invalid_argument("CFR contains non-finite entries");
            }
            power_by_subcarrier_[col * m + row] = std::norm(c);
        }
    }
}

cplx WidebandChannel::cfr_at(Vertex position_idx, int subcarrier) const {
    if (position_idx < 1 || position_idx > grid_.num_points) {
        throw std::out_of_range("position index " + std::to_string(position_idx) + " out of range");
    }
    if (subcarrier < 1 || subcarrier > params_.num_subcarriers) {
        throw std::out_of_range("subcarrier " + std::to_string(subcarrier) + " out of range");
    }
    return cfr_[static_cast<std::size_t>(position_idx - 1) * static_cast<std::size_t>(params_.num_subcarriers) +
                static_cast<std::size_t>(subcarrier - 1)];
}

std::span<const cplx> WidebandChannel::cfr_row(Vertex position_idx) const {
    if (position_idx < 1 || position_idx > grid_.num_points) {
        throw std::out_of_range("position index " + std::to_string(position_idx) + " out of range");
    }
    const auto l = static_cast<std::size_t>(params_.num_subcarriers);
    return std::span<const cplx>(cfr_).subspan(static_cast<std::size_t>(position_idx - 1) * l, l);
}

std::span<const double> WidebandChannel::power_column(int subcarrier) const {
    if (subcarrier < 1 || subcarrier > params_.num_subcarriers) {
        throw std::out_of_range("subcarrier " + std::to_string(subcarrier) + " out of range");
    }
    const auto m = static_cast<std::size_t>(grid_.num_points);
    return std::span<const double>(power_by_subcarrier_).subspan(static_cast<std::size_t>(subcarrier - 1) * m, m);
}

std::vector<cplx> tap_response(const TapFieldData& taps, double position_m, double wavelength_m) {
    std::vector<cplx> h(taps.paths.size());
    const double k = kTwoPi * position_m / wavelength_m;
    for (std::size_t t = 0; t < taps.paths.size(); ++t) {
        cplx acc{0.0, 0.0};
        for (const auto& p : taps.paths[t]) {
            acc += p.gain * std::polar(1.0, k * std::cos(p.angle_rad));
        }
        h[t] = acc;
    }
    return h;
}

std::vector<cplx> taps_to_cfr(std::span<const cplx> taps, int num_subcarriers) {
    if (num_subcarriers < 1 || taps.size() > static_cast<std::size_t>(num_subcarriers)) {
        throw std::invalid_argument("DFT length must cover the taps");
    }
    const auto n = static_cast<std::size_t>(num_subcarriers);
    std::vector<cplx> cfr(n);
    for (std::size_t l = 0; l < n; ++l) {
        cplx acc{0.0, 0.0};
        for (std::size_t t = 0; t < taps.size(); ++t) {
            // Reduce l*t mod L so the twiddle angle stays in [0, 2 pi).
            const auto k = (l * t) % n;
            acc += taps[t] * std::polar(1.0, -kTwoPi * static_cast<double>(k) / static_cast<double>(n));
        }
        cfr[l] = acc;
    }
    return cfr;
}

WidebandChannel generate_realization(const ChannelModelParams& params, const SamplingGrid& grid) {
    params.validate();
    PlacementGraph check(grid);  // validates the grid

    Rng rng(params.rng_seed);
    TapFieldData taps;
    taps.tap_power = tap_power_profile(params);
    taps.paths.resize(static_cast<std::size_t>(params.num_taps));
    for (int t = 0; t < params.num_taps; ++t) {
        const double path_var = taps.tap_power[static_cast<std::size_t>(t)] / params.paths_per_tap;
        auto& paths = taps.paths[static_cast<std::size_t>(t)];
        paths.resize(static_cast<std::size_t>(params.paths_per_tap));
        for (auto& p : paths) {
            p.angle_rad = kTwoPi * rng.uniform();
            p.gain = rng.cscg(path_var);
        }
    }

    const double lambda = params.wavelength_m();
    const auto l = static_cast<std::size_t>(params.num_subcarriers);
    std::vector<cplx> cfr(static_cast<std::size_t>(grid.num_points) * l);
    for (Vertex m = 1; m <= grid.num_points; ++m) {
        const auto h = tap_response(taps, grid.position(m), lambda);
        const auto row = taps_to_cfr(h, params.num_subcarriers);
        std::copy(row.begin(), row.end(), cfr.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(m - 1) * l));
    }
    return WidebandChannel(grid, params, std::move(taps), std::move(cfr));
}

std::vector<double> placement_gains(const WidebandChannel& channel, std::span<const Vertex> indices) {
    std::vector<double> gains(static_cast<std::size_t>(channel.num_subcarriers()), 0.0);
    for (const Vertex v : indices) {
        if (v < 1 || v > channel.num_points()) throw std::out_of_range("placement index out of range");
    }
    for (int l = 1; l <= channel.num_subcarriers(); ++l) {
        double g = 0.0;
        for (const Vertex v : indices) g += channel.power(v, l);
        gains[static_cast<std::size_t>(l - 1)] = g;
    }
    return gains;
}

std::vector<double> placement_gains(const WidebandChannel& channel, const AntennaPlacement& placement) {
    return placement_gains(channel, placement.indices());
}

void write_channel_dump(std::ostream& out, const WidebandChannel& channel) {
    out << "maofdm-channel M=" << channel.num_points() << " L=" << channel.num_subcarriers()
        << " T=" << channel.params().num_taps << " seed=" << channel.params().rng_seed << '\n';
    char buf[96];
    for (Vertex m = 1; m <= channel.num_points(); ++m) {
        const auto row = channel.cfr_row(m);
        for (int l = 1; l <= channel.num_subcarriers(); ++l) {
            const cplx c = row[static_cast<std::size_t>(l - 1)];
            std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g\n", m, l, c.real(), c.imag());
            out << buf;
        }
    }
}

ChannelDump read_channel_dump(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("channel dump: missing header");
    ChannelDump dump;
    {
        std::istringstream hs(line);
        std::string magic, tm, tl, tt, ts;
        hs >> magic >> tm >> tl >> tt >> ts;
        if (magic != "maofdm-channel" || tm.rfind("M=", 0) != 0 || tl.rfind("L=", 0) != 0 ||
            tt.rfind("T=", 0) != 0 || ts.rfind("seed=", 0) != 0) {
            throw std::runtime_error("channel dump: malformed header '" + line + "'");
        }
        try {
            dump.num_points = std::stoi(tm.substr(2));
            dump.num_subcarriers = std::stoi(tl.substr(2));
            dump.num_taps = std::stoi(tt.substr(2));
            dump.seed = std::stoull(ts.substr(5));
        } catch (const std::exception&) {
            throw std::runtime_error("channel dump: malformed header '" + line + "'");
        }
        if (dump.num_points < 1 || dump.num_subcarriers < 1) {
            throw std::runtime_error("channel dump: empty dimensions");
        }
    }
    const auto m = static_cast<std::size_t>(dump.num_points);
    const auto l = static_cast<std::size_t>(dump.num_subcarriers);
    dump.cfr.assign(m * l, cplx{});
    std::vector<bool> seen(m * l, false);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        long long pm = 0, pl = 0;
        double re = 0.0, im = 0.0;
        if (!(ls >> pm >> pl >> re >> im) || pm < 1 || pl < 1 || static_cast<std::size_t>(pm) > m ||
            static_cast<std::size_t>(pl) > l) {
            throw std::runtime_error("channel dump: malformed row '" + line + "'");
        }
        const std::size_t at = static_cast<std::size_t>(pm - 1) * l + static_cast<std::size_t>(pl - 1);
        if (seen[at]) throw std::runtime_error("channel dump: duplicate entry '" + line + "'");
        seen[at] = true;
        dump.cfr[at] = {re, im};
        ++rows;
    }
    if (rows != m * l) throw std::runtime_error("channel dump: expected M*L rows");
    return dump;
}

}  // namespace maofdm
