// SPDX-License-Identifier: Apache-2.0

#include "maofdm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "maofdm/random.hpp"

namespace maofdm {

namespace {

using json = nlohmann::json;

std::string fmt10(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string csv_safe(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

std::string join_indices(std::span<const Vertex> idx) {
    std::string out;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i) out += '-';
        out += std::to_string(idx[i]);
    }
    return out;
}

}  // namespace

std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::bb: return "bb";
        case Scheme::brute: return "brute";
        case Scheme::low_snr: return "low_snr";
        case Scheme::narrowband: return "narrowband";
        case Scheme::fpa: return "fpa";
    }
    return "?";
}

std::string_view to_string(SweepParam p) {
    switch (p) {
        case SweepParam::none: return "none";
        case SweepParam::num_points: return "M";
        case SweepParam::num_antennas: return "Nt";
        case SweepParam::paths_per_tap: return "Lt";
    }
    return "?";
}

namespace {

std::string_view to_string(IncumbentInit i) {
    switch (i) {
        case IncumbentInit::low_snr: return "low_snr";
        case IncumbentInit::narrowband: return "narrowband";
        case IncumbentInit::none: return "none";
    }
    return "?";
}

IncumbentInit parse_incumbent(std::string_view name) {
    if (name == "low_snr") return IncumbentInit::low_snr;
    if (name == "narrowband") return IncumbentInit::narrowband;
    if (name == "none") return IncumbentInit::none;
    throw std::invalid_argument("unknown bb_incumbent '" + std::string(name) + "'");
}

}  // namespace

Scheme parse_scheme(std::string_view name) {
    for (auto s : {Scheme::bb, Scheme::brute, Scheme::low_snr, Scheme::narrowband, Scheme::fpa}) {
        if (to_string(s) == name) return s;
    }
    throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

SweepParam parse_sweep_param(std::string_view name) {
    for (auto p : {SweepParam::none, SweepParam::num_points, SweepParam::num_antennas, SweepParam::paths_per_tap}) {
        if (to_string(p) == name) return p;
    }
    throw std::invalid_argument("unknown sweep parameter '" + std::string(name) + "' (none, M, Nt, Lt)");
}

std::vector<Scheme> parse_scheme_list(std::string_view comma_separated) {
    std::vector<Scheme> out;
    std::size_t pos = 0;
    while (pos <= comma_separated.size()) {
        const auto end = std::min(comma_separated.find(',', pos), comma_separated.size());
        const auto item = trim(comma_separated.substr(pos, end - pos));
        if (!item.empty()) {
            const Scheme s = parse_scheme(item);
            if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
        }
        pos = end + 1;
    }
    if (out.empty()) throw std::invalid_argument("scheme list is empty");
    return out;
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (threads < 1) throw std::invalid_argument("threads must be at least 1");
    if (schemes.empty()) throw std::invalid_argument("no schemes selected");
    if (sweep != SweepParam::none && sweep_values.empty()) {
        throw std::invalid_argument("sweep '" + std::string(to_string(sweep)) + "' needs sweep_values");
    }
    if (!(region_length_wavelengths > 0.0)) throw std::invalid_argument("region_length_wavelengths must be positive");
    if (!(min_sep_wavelengths > 0.0)) throw std::invalid_argument("min_sep_wavelengths must be positive");
    if (!std::isfinite(max_power_dbm) || !std::isfinite(noise_power_dbm)) {
        throw std::invalid_argument("power levels must be finite");
    }
    // Every sweep point must describe a well-formed instance.
    for (const int v : points()) {
        const auto inst = make_instance(*this, v, 0);
        inst.channel_params.validate();
        inst.sys.validate();
        if (inst.num_antennas < 1) throw std::invalid_argument("num_antennas must be positive");
    }
}

std::vector<int> ExperimentConfig::points() const {
    if (sweep == SweepParam::none) return {0};
    return sweep_values;
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig cfg) {
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value_text = trim(line.substr(eq + 1));
        json v;
        try {
            v = json::parse(value_text);
        } catch (const json::parse_error&) {
            // Bare words are accepted as strings.
            v = value_text;
        }
        const auto where = "config line " + std::to_string(lineno) + " (" + key + "): ";
        try {
            auto& ch = cfg.channel;
            if (key == "num_taps") ch.num_taps = v.get<int>();
            else if (key == "paths_per_tap") ch.paths_per_tap = v.get<int>();
            else if (key == "num_subcarriers") ch.num_subcarriers = v.get<int>();
            else if (key == "cp_length") ch.cp_length = v.get<int>();
            else if (key == "carrier_freq_hz") ch.carrier_freq_hz = v.get<double>();
            else if (key == "tx_rx_distance_m") ch.tx_rx_distance_m = v.get<double>();
            else if (key == "pathloss_exponent") ch.pathloss_exponent = v.get<double>();
            else if (key == "tap_decay_factor") ch.tap_decay_factor = v.get<double>();
            else if (key == "max_power_dbm") cfg.max_power_dbm = v.get<double>();
            else if (key == "noise_power_dbm") cfg.noise_power_dbm = v.get<double>();
            else if (key == "region_length_wavelengths") cfg.region_length_wavelengths = v.get<double>();
            else if (key == "min_sep_wavelengths") cfg.min_sep_wavelengths = v.get<double>();
            else if (key == "num_points") cfg.num_points = v.get<int>();
            else if (key == "num_antennas") cfg.num_antennas = v.get<int>();
            else if (key == "trials") cfg.trials = v.get<int>();
            else if (key == "base_seed") cfg.base_seed = v.get<std::uint64_t>();
            else if (key == "sweep") cfg.sweep = parse_sweep_param(v.get<std::string>());
            else if (key == "sweep_values") cfg.sweep_values = v.get<std::vector<int>>();
            else if (key == "schemes") {
                if (v.is_array()) {
                    std::string joined;
                    for (const auto& s : v) joined += s.get<std::string>() + ",";
                    cfg.schemes = parse_scheme_list(joined);
                } else {
                    cfg.schemes = parse_scheme_list(v.get<std::string>());
                }
            }
            else if (key == "bb_incumbent") cfg.bb_incumbent = parse_incumbent(v.get<std::string>());
            else if (key == "brute_force_limit") cfg.brute_force_limit = v.get<std::uint64_t>();
            else if (key == "common_random_numbers") cfg.common_random_numbers = v.get<bool>();
            else if (key == "threads") cfg.threads = v.get<int>();
            else throw std::invalid_argument("unknown key");
        } catch (const json::exception& e) {
            throw std::invalid_argument(where + "bad value '" + value_text + "'");
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
    const auto& ch = cfg.channel;
    out << "num_taps = " << ch.num_taps << '\n'
        << "paths_per_tap = " << ch.paths_per_tap << '\n'
        << "num_subcarriers = " << ch.num_subcarriers << '\n'
        << "cp_length = " << ch.cp_length << '\n'
        << "carrier_freq_hz = " << fmt17(ch.carrier_freq_hz) << '\n'
        << "tx_rx_distance_m = " << fmt17(ch.tx_rx_distance_m) << '\n'
        << "pathloss_exponent = " << fmt17(ch.pathloss_exponent) << '\n'
        << "tap_decay_factor = " << fmt17(ch.tap_decay_factor) << '\n'
        << "max_power_dbm = " << fmt17(cfg.max_power_dbm) << '\n'
        << "noise_power_dbm = " << fmt17(cfg.noise_power_dbm) << '\n'
        << "region_length_wavelengths = " << fmt17(cfg.region_length_wavelengths) << '\n'
        << "min_sep_wavelengths = " << fmt17(cfg.min_sep_wavelengths) << '\n'
        << "num_points = " << cfg.num_points << '\n'
        << "num_antennas = " << cfg.num_antennas << '\n'
        << "trials = " << cfg.trials << '\n'
        << "base_seed = " << cfg.base_seed << '\n'
        << "sweep = \"" << to_string(cfg.sweep) << "\"\n"
        << "sweep_values = " << json(cfg.sweep_values).dump() << '\n';
    json schemes = json::array();
    for (auto s : cfg.schemes) schemes.push_back(std::string(to_string(s)));
    out << "schemes = " << schemes.dump() << '\n'
        << "bb_incumbent = \"" << to_string(cfg.bb_incumbent) << "\"\n"
        << "brute_force_limit = " << cfg.brute_force_limit << '\n'
        << "common_random_numbers = " << (cfg.common_random_numbers ? "true" : "false") << '\n'
        << "threads = " << cfg.threads << '\n';
}

ExperimentConfig figure_preset(std::string_view figure, ExperimentConfig base) {
    if (figure == "rate-vs-M") {
        base.sweep = SweepParam::num_points;
        base.sweep_values = {12, 18, 24, 30, 36, 42, 48, 54, 60};
    } else if (figure == "rate-vs-Nt") {
        base.sweep = SweepParam::num_antennas;
        base.sweep_values = {2, 3, 4, 5, 6};
    } else if (figure == "rate-vs-Lt") {
        base.sweep = SweepParam::paths_per_tap;
        base.sweep_values = {1, 2, 3, 4, 5, 6};
    } else {
        throw std::invalid_argument("unknown figure '" + std::string(figure) +
                                    "' (rate-vs-M, rate-vs-Nt, rate-vs-Lt)");
    }
    return base;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t sweep_index, std::uint64_t trial_index) {
    std::uint64_t h = splitmix64(base_seed);
    h = splitmix64(h ^ sweep_index);
    return splitmix64(h ^ trial_index);
}

Instance make_instance(const ExperimentConfig& cfg, int sweep_value, std::uint64_t seed) {
    Instance inst;
    inst.channel_params = cfg.channel;
    inst.channel_params.rng_seed = seed;
    int num_points = cfg.num_points;
    inst.num_antennas = cfg.num_antennas;
    switch (cfg.sweep) {
        case SweepParam::none: break;
        case SweepParam::num_points: num_points = sweep_value; break;
        case SweepParam::num_antennas: inst.num_antennas = sweep_value; break;
        case SweepParam::paths_per_tap: inst.channel_params.paths_per_tap = sweep_value; break;
    }
    const double lambda = inst.channel_params.wavelength_m();
    inst.grid = build_grid(cfg.region_length_wavelengths * lambda, num_points, cfg.min_sep_wavelengths * lambda);
    inst.sys.noise_power = dbm_to_watts(cfg.noise_power_dbm);
    inst.sys.max_power = dbm_to_watts(cfg.max_power_dbm);
    inst.sys.num_subcarriers = inst.channel_params.num_subcarriers;
    inst.sys.cp_length = inst.channel_params.cp_length;
    return inst;
}

SolveResult run_scheme(Scheme scheme, const WidebandChannel& channel, const SystemParams& sys,
                       int num_antennas, IncumbentInit bb_incumbent) {
    switch (scheme) {
        case Scheme::bb: {
            BBConfig bb;
            bb.initial_incumbent = bb_incumbent;
            return bb_solve(channel, sys, num_antennas, bb);
        }
        case Scheme::brute: return brute_force_solve(channel, sys, num_antennas);
        case Scheme::low_snr: return low_snr_solve(channel, sys, num_antennas);
        case Scheme::narrowband: return narrowband_solve(channel, sys, num_antennas);
        case Scheme::fpa: return fpa_baseline(channel, sys, num_antennas);
    }
    throw std::invalid_argument("unknown scheme");
}

namespace {

std::vector<TrialRecord> run_trial(const ExperimentConfig& cfg, std::size_t point_index, int sweep_value,
                                   int trial) {
    const std::uint64_t seed =
        derive_seed(cfg.base_seed, cfg.common_random_numbers ? 0 : point_index, static_cast<std::uint64_t>(trial));

    std::vector<TrialRecord> out;
    out.reserve(cfg.schemes.size());
    auto blank = [&](Scheme s) {
        TrialRecord r;
        r.sweep_param = std::string(to_string(cfg.sweep));
        r.sweep_value = sweep_value;
        r.trial_index = trial;
        r.seed = seed;
        r.scheme = s;
        return r;
    };

    std::optional<WidebandChannel> channel;
    Instance inst;
    std::string setup_error;
    try {
        inst = make_instance(cfg, sweep_value, seed);
        channel.emplace(generate_realization(inst.channel_params, inst.grid));
    } catch (const std::exception& e) {
        setup_error = csv_safe(std::string("error: ") + e.what());
    }

    for (const Scheme s : cfg.schemes) {
        TrialRecord r = blank(s);
        if (!channel) {
            r.status = setup_error;
            out.push_back(std::move(r));
            continue;
        }
        if (s == Scheme::brute) {
            const auto n = count_placements(inst.grid.num_points, inst.grid.min_sep_idx, inst.num_antennas);
            if (n > cfg.brute_force_limit) {
                r.status = "skipped: " + std::to_string(n) + " placements exceed brute_force_limit";
                out.push_back(std::move(r));
                continue;
            }
        }
        try {
            const auto res = run_scheme(s, *channel, inst.sys, inst.num_antennas, cfg.bb_incumbent);
            r.rate_bps_hz = res.rate_bps_hz;
            r.nodes_expanded = res.stats.nodes_expanded;
            r.nodes_pruned = res.stats.nodes_pruned_by_bound;
            r.leaves_evaluated = res.stats.leaves_evaluated;
            r.placement = join_indices(res.placement.indices());
            r.wall_time_s = res.stats.wall_time_s;
        } catch (const InfeasibleInstance& e) {
            r.status = csv_safe(std::string("infeasible: ") + e.what());
        } catch (const std::exception& e) {
            r.status = csv_safe(std::string("error: ") + e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

std::vector<TrialRecord> run_sweep(const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (cfg.threads < 1) throw std::invalid_argument("threads must be at least 1");
    const auto points = cfg.points();
    const std::size_t jobs = points.size() * static_cast<std::size_t>(cfg.trials);
    std::vector<std::vector<TrialRecord>> results(jobs);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
            const std::size_t p = j / static_cast<std::size_t>(cfg.trials);
            const int t = static_cast<int>(j % static_cast<std::size_t>(cfg.trials));
            results[j] = run_trial(cfg, p, points[p], t);
        }
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), std::max<std::size_t>(jobs, 1));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<TrialRecord> records;
    for (auto& r : results) {
        for (auto& rec : r) records.push_back(std::move(rec));
    }
    std::stable_sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
        if (a.sweep_value != b.sweep_value) return a.sweep_value < b.sweep_value;
        if (a.trial_index != b.trial_index) return a.trial_index < b.trial_index;
        return static_cast<int>(a.scheme) < static_cast<int>(b.scheme);
    });
    return records;
}

MeanStderr mean_stderr(const std::vector<double>& values) {
    MeanStderr out;
    if (values.empty()) return out;
    double sum = 0.0;
    for (const double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (const double v : values) ss += (v - out.mean) * (v - out.mean);
    const double n = static_cast<double>(values.size());
    out.stderr_mean = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return out;
}

std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records) {
    struct Acc {
        std::vector<double> rates;
        double nodes = 0.0;
        double leaves = 0.0;
    };
    std::map<std::pair<std::int64_t, int>, Acc> groups;
    for (const auto& r : records) {
        if (!r.ok()) continue;
        auto& acc = groups[{r.sweep_value, static_cast<int>(r.scheme)}];
        acc.rates.push_back(r.rate_bps_hz);
        acc.nodes += static_cast<double>(r.nodes_expanded);
        acc.leaves += static_cast<double>(r.leaves_evaluated);
    }
    std::vector<AggregateRow> rows;
    rows.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        AggregateRow row;
        row.sweep_value = key.first;
        row.scheme = static_cast<Scheme>(key.second);
        row.count = static_cast<int>(acc.rates.size());
        const auto ms = mean_stderr(acc.rates);
        row.mean_rate = ms.mean;
        row.stderr_rate = ms.stderr_mean;
        row.mean_nodes_expanded = acc.nodes / row.count;
        row.mean_leaves_evaluated = acc.leaves / row.count;
        rows.push_back(row);
    }
    return rows;
}

std::vector<GapRow> paired_gap(const std::vector<TrialRecord>& records, Scheme a, Scheme b) {
    std::map<std::pair<std::int64_t, int>, std::pair<std::optional<double>, std::optional<double>>> pairs;
    for (const auto& r : records) {
        if (!r.ok()) continue;
        auto& slot = pairs[{r.sweep_value, r.trial_index}];
        if (r.scheme == a) slot.first = r.rate_bps_hz;
        if (r.scheme == b) slot.second = r.rate_bps_hz;
    }
    std::map<std::int64_t, std::vector<double>> diffs;
    for (const auto& [key, p] : pairs) {
        if (p.first && p.second) diffs[key.first].push_back(*p.first - *p.second);
    }
    std::vector<GapRow> rows;
    for (const auto& [value, d] : diffs) {
        const auto ms = mean_stderr(d);
        rows.push_back({value, static_cast<int>(d.size()), ms.mean, ms.stderr_mean});
    }
    return rows;
}

void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    out << kRecordsHeader << '\n';
    for (const auto& r : records) {
        out << r.sweep_param << ',' << r.sweep_value << ',' << r.trial_index << ',' << r.seed << ','
            << to_string(r.scheme) << ',' << csv_safe(r.status) << ',' << fmt10(r.rate_bps_hz) << ','
            << r.nodes_expanded << ',' << r.nodes_pruned << ',' << r.leaves_evaluated << ',' << r.placement << '\n';
    }
}

std::vector<TrialRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kRecordsHeader) {
        throw std::runtime_error("records CSV: unexpected header");
    }
    std::vector<TrialRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            f.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (f.size() != 11) {
            throw std::runtime_error("records CSV line " + std::to_string(lineno) + ": expected 11 columns");
        }
        try {
            TrialRecord r;
            r.sweep_param = f[0];
            r.sweep_value = std::stoll(f[1]);
            r.trial_index = std::stoi(f[2]);
            r.seed = std::stoull(f[3]);
            r.scheme = parse_scheme(f[4]);
            r.status = f[5];
            r.rate_bps_hz = std::stod(f[6]);
            r.nodes_expanded = std::stoull(f[7]);
            r.nodes_pruned = std::stoull(f[8]);
            r.leaves_evaluated = std::stoull(f[9]);
            r.placement = f[10];
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("records CSV line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_aggregates_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    out << kAggregatesHeader << '\n';
    for (const auto& r : rows) {
        out << r.sweep_value << ',' << to_string(r.scheme) << ',' << r.count << ',' << fmt10(r.mean_rate) << ','
            << fmt10(r.stderr_rate) << ',' << fmt10(r.mean_nodes_expanded) << ','
            << fmt10(r.mean_leaves_evaluated) << '\n';
    }
}

void write_timing_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    out << kTimingHeader << '\n';
    for (const auto& r : records) {
        out << r.sweep_value << ',' << r.trial_index << ',' << to_string(r.scheme) << ',' << fmt10(r.wall_time_s)
            << '\n';
    }
}

void write_plotdata(std::ostream& out, const std::vector<AggregateRow>& rows) {
    std::map<int, std::vector<const AggregateRow*>> by_scheme;
    for (const auto& r : rows) by_scheme[static_cast<int>(r.scheme)].push_back(&r);
    bool first = true;
    for (const auto& [scheme, list] : by_scheme) {
        if (!first) out << "\n\n";
        first = false;
        out << "# scheme " << to_string(static_cast<Scheme>(scheme)) << '\n'
            << "# sweep_value mean_rate_bps_hz stderr_rate_bps_hz\n";
        for (const auto* r : list) {
            out << r->sweep_value << ' ' << fmt10(r->mean_rate) << ' ' << fmt10(r->stderr_rate) << '\n';
        }
    }
}

void write_outputs(const std::string& dir, const std::vector<TrialRecord>& records) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto rows = aggregate(records);
    auto open = [&](const char* name) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
        return f;
    };
    {
        auto f = open("trials.csv");
        write_records_csv(f, records);
    }
    {
        auto f = open("summary.csv");
        write_aggregates_csv(f, rows);
    }
    {
        auto f = open("timing.csv");
        write_timing_csv(f, records);
    }
    {
        auto f = open("plot.dat");
        write_plotdata(f, rows);
    }
}

}  // namespace maofdm
