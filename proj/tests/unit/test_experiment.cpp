// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "maofdm/experiment.hpp"

using namespace maofdm;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.channel.num_subcarriers = 16;
    cfg.channel.cp_length = 5;
    cfg.num_points = 16;
    cfg.num_antennas = 3;
    cfg.trials = 5;
    cfg.base_seed = 42;
    cfg.schemes = {Scheme::bb, Scheme::brute, Scheme::low_snr, Scheme::narrowband, Scheme::fpa};
    return cfg;
}

std::string records_bytes(const std::vector<TrialRecord>& recs) {
    std::ostringstream out;
    write_records_csv(out, recs);
    return out.str();
}

TrialRecord rec(std::int64_t value, int trial, Scheme s, double rate) {
    TrialRecord r;
    r.sweep_param = "M";
    r.sweep_value = value;
    r.trial_index = trial;
    r.scheme = s;
    r.rate_bps_hz = rate;
    r.placement = "1-4";
    return r;
}

int count_columns(const std::string& line) {
    return static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
}

}  // namespace

TEST_CASE("scheme and sweep names") {
    for (auto s : {Scheme::bb, Scheme::brute, Scheme::low_snr, Scheme::narrowband, Scheme::fpa})
        CHECK(parse_scheme(to_string(s)) == s);
    CHECK(parse_sweep_param("M") == SweepParam::num_points);
    CHECK(parse_sweep_param("Nt") == SweepParam::num_antennas);
    CHECK(parse_sweep_param("Lt") == SweepParam::paths_per_tap);
    CHECK_THROWS_AS(parse_scheme("simplex"), std::invalid_argument);
    CHECK(parse_scheme_list("bb, fpa") == std::vector<Scheme>{Scheme::bb, Scheme::fpa});
    CHECK_THROWS(parse_scheme_list("bb,magic"));
}

TEST_CASE("config parsing") {
    const auto cfg = parse_config(R"(
# comment line
num_points = 24        # trailing comment
num_antennas = 3
max_power_dbm = 40.5
schemes = ["bb", "fpa"]
sweep = M
sweep_values = [12, 18]
paths_per_tap = 4
common_random_numbers = false
bb_incumbent = none
)");
    CHECK(cfg.num_points == 24);
    CHECK(cfg.num_antennas == 3);
    CHECK(cfg.max_power_dbm == 40.5);
    CHECK(cfg.schemes == std::vector<Scheme>{Scheme::bb, Scheme::fpa});
    CHECK(cfg.sweep == SweepParam::num_points);
    CHECK(cfg.sweep_values == std::vector<int>{12, 18});
    CHECK(cfg.channel.paths_per_tap == 4);
    CHECK_FALSE(cfg.common_random_numbers);
    CHECK(cfg.bb_incumbent == IncumbentInit::none);
    CHECK(cfg.trials == 120);  // untouched keys keep their defaults
    CHECK(cfg.points() == std::vector<int>{12, 18});

    SUBCASE("overrides layer on a base") {
        const auto layered = parse_config("trials = 7", cfg);
        CHECK(layered.trials == 7);
        CHECK(layered.num_points == 24);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(parse_config("no_such_key = 3"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("num_points 3"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("num_points = \"many\""), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("schemes = [\"bb\", \"magic\"]"), std::invalid_argument);
    }
    SUBCASE("write_config round trip") {
        std::ostringstream out;
        write_config(out, cfg);
        const auto back = parse_config(out.str());
        std::ostringstream again;
        write_config(again, back);
        CHECK(out.str() == again.str());
    }
}

TEST_CASE("config validation") {
    auto cfg = small_config();
    CHECK_NOTHROW(cfg.validate());
    cfg.sweep = SweepParam::num_points;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // sweep without values
    cfg.sweep_values = {12, 1};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // M=1 is no grid
    cfg = small_config();
    cfg.channel.cp_length = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.trials = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("figure presets") {
    const auto m = figure_preset("rate-vs-M");
    CHECK(m.sweep == SweepParam::num_points);
    CHECK(m.sweep_values == std::vector<int>{12, 18, 24, 30, 36, 42, 48, 54, 60});
    CHECK(figure_preset("rate-vs-Nt").sweep_values == std::vector<int>{2, 3, 4, 5, 6});
    CHECK(figure_preset("rate-vs-Lt").sweep_values == std::vector<int>{1, 2, 3, 4, 5, 6});
    CHECK_THROWS(figure_preset("rate-vs-nothing"));
}

TEST_CASE("seed derivation") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t p = 0; p < 10; ++p)
        for (std::uint64_t t = 0; t < 100; ++t) seen.insert(derive_seed(7, p, t));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(7, 1, 2) == derive_seed(7, 1, 2));
    CHECK(derive_seed(7, 1, 2) != derive_seed(8, 1, 2));
}

TEST_CASE("instances follow the configuration") {
    auto cfg = small_config();
    const auto inst = make_instance(cfg, 0, 9);
    CHECK(inst.grid.num_points == 16);
    CHECK(inst.grid.min_sep_idx == 2);  // 0.4 wavelength spacing, half-wavelength separation
    CHECK(inst.sys.max_power == doctest::Approx(39.810717055349734));
    CHECK(inst.sys.noise_power == doctest::Approx(1e-9));
    CHECK(inst.channel_params.rng_seed == 9);
    cfg.sweep = SweepParam::paths_per_tap;
    cfg.sweep_values = {2};
    CHECK(make_instance(cfg, 2, 9).channel_params.paths_per_tap == 2);
}

TEST_CASE("sweeps: pairing, ordering and record contents") {
    auto cfg = small_config();
    cfg.sweep = SweepParam::num_points;
    cfg.sweep_values = {12, 16};
    const auto recs = run_sweep(cfg);
    REQUIRE(recs.size() == 2 * 5 * 5);

    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        CHECK(r.ok());
        CHECK(r.sweep_param == "M");
        CHECK(r.seed == derive_seed(42, 0, static_cast<std::uint64_t>(r.trial_index)));
        if (i > 0) {
            const auto& p = recs[i - 1];
            CHECK(std::tie(p.sweep_value, p.trial_index) <= std::tie(r.sweep_value, r.trial_index));
        }
    }
    // Schemes within a trial share the realization, so bb and brute agree.
    for (std::size_t i = 0; i < recs.size(); i += 5) {
        CHECK(recs[i].scheme == Scheme::bb);
        CHECK(recs[i + 1].scheme == Scheme::brute);
        CHECK(recs[i].rate_bps_hz == recs[i + 1].rate_bps_hz);
        for (int k = 2; k < 5; ++k) CHECK(recs[i + k].rate_bps_hz <= recs[i].rate_bps_hz);
    }
    // The fixed array lands at the centre.
    CHECK(recs[4].placement == "5-6-7");  // M=12 gives unit index separation

    cfg.common_random_numbers = false;
    const auto indep = run_sweep(cfg);
    CHECK(indep[0].seed == derive_seed(42, 0, 0));
    CHECK(indep.back().seed == derive_seed(42, 1, 4));
}

TEST_CASE("infeasible and skipped rows are recorded, not dropped") {
    auto cfg = small_config();
    cfg.sweep = SweepParam::num_antennas;
    cfg.sweep_values = {2, 9};  // 9 antennas need 17 grid points
    cfg.trials = 2;
    cfg.brute_force_limit = 10;
    const auto recs = run_sweep(cfg);
    REQUIRE(recs.size() == 2 * 2 * 5);
    for (const auto& r : recs) {
        if (r.sweep_value == 9) {
            CHECK(r.status.rfind("infeasible: ", 0) == 0);
        } else if (r.scheme == Scheme::brute) {
            CHECK(r.status.rfind("skipped: ", 0) == 0);
        } else {
            CHECK(r.ok());
        }
    }
    const auto rows = aggregate(recs);
    for (const auto& row : rows) CHECK(row.sweep_value == 2);
    CHECK(rows.size() == 4);

    std::ostringstream out;
    write_records_csv(out, recs);
    std::istringstream in(out.str());
    const auto back = read_records_csv(in);
    CHECK(records_bytes(back) == out.str());
}

TEST_CASE("aggregation") {
    SUBCASE("single record") {
        const auto rows = aggregate({rec(12, 0, Scheme::bb, 3.5)});
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].count == 1);
        CHECK(rows[0].mean_rate == 3.5);
        CHECK(rows[0].stderr_rate == 0.0);
    }
    SUBCASE("equal rates have zero spread") {
        const auto rows = aggregate({rec(12, 0, Scheme::bb, 2.0), rec(12, 1, Scheme::bb, 2.0)});
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].mean_rate == 2.0);
        CHECK(rows[0].stderr_rate == 0.0);
    }
    SUBCASE("hand-computed mean and standard error") {
        // {1, 2, 4}: mean 7/3, sample variance 7/3, stderr sqrt(7/9).
        const auto ms = mean_stderr({1.0, 2.0, 4.0});
        CHECK(ms.mean == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
        CHECK(ms.stderr_mean == doctest::Approx(std::sqrt(7.0 / 9.0)).epsilon(1e-15));
    }
    SUBCASE("groups by value and scheme; failures excluded") {
        auto bad = rec(12, 2, Scheme::bb, 99.0);
        bad.status = "error: boom";
        const auto rows = aggregate({rec(18, 0, Scheme::fpa, 1.0), rec(12, 0, Scheme::fpa, 1.0),
                                     rec(12, 0, Scheme::bb, 3.0), rec(12, 1, Scheme::bb, 5.0), bad});
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].sweep_value == 12);
        CHECK(rows[0].scheme == Scheme::bb);
        CHECK(rows[0].count == 2);
        CHECK(rows[0].mean_rate == 4.0);
        CHECK(rows[1].scheme == Scheme::fpa);
        CHECK(rows[2].sweep_value == 18);
    }
    SUBCASE("paired gaps") {
        const auto gaps = paired_gap({rec(12, 0, Scheme::bb, 3.0), rec(12, 0, Scheme::fpa, 2.0),
                                      rec(12, 1, Scheme::bb, 5.0), rec(12, 1, Scheme::fpa, 2.0),
                                      rec(12, 2, Scheme::bb, 9.0)},
                                     Scheme::bb, Scheme::fpa);
        REQUIRE(gaps.size() == 1);
        CHECK(gaps[0].count == 2);
        CHECK(gaps[0].mean_gap == 2.0);
        CHECK(gaps[0].stderr_gap == doctest::Approx(1.0));
    }
}

TEST_CASE("output formats") {
    auto cfg = small_config();
    cfg.trials = 3;
    const auto recs = run_sweep(cfg);
    const auto text = records_bytes(recs);
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    CHECK(line == kRecordsHeader);
    int n = 0;
    while (std::getline(lines, line)) {
        CHECK(count_columns(line) == 11);
        ++n;
    }
    CHECK(n == 15);

    std::ostringstream agg;
    write_aggregates_csv(agg, aggregate(recs));
    CHECK(agg.str().rfind(std::string(kAggregatesHeader) + "\n", 0) == 0);

    std::ostringstream plot;
    write_plotdata(plot, aggregate(recs));
    CHECK(plot.str().find("# scheme bb\n") != std::string::npos);
    CHECK(plot.str().find("# scheme fpa\n") != std::string::npos);

    std::ostringstream timing;
    write_timing_csv(timing, recs);
    CHECK(timing.str().rfind(std::string(kTimingHeader) + "\n", 0) == 0);

    SUBCASE("malformed record files are rejected") {
        std::istringstream bad_header("nope\n");
        CHECK_THROWS(read_records_csv(bad_header));
        std::istringstream short_row(std::string(kRecordsHeader) + "\nM,12,0\n");
        CHECK_THROWS(read_records_csv(short_row));
    }
    SUBCASE("write_outputs produces every file") {
        const auto dir = std::filesystem::temp_directory_path() / "maofdm_test_outputs";
        std::filesystem::remove_all(dir);
        write_outputs(dir.string(), recs);
        for (const char* f : {"trials.csv", "summary.csv", "timing.csv", "plot.dat"})
            CHECK(std::filesystem::exists(dir / f));
        std::ifstream in(dir / "trials.csv");
        std::stringstream buf;
        buf << in.rdbuf();
        CHECK(buf.str() == text);
        std::filesystem::remove_all(dir);
    }
}

TEST_CASE("determinism: same bytes across runs and thread counts") {
    auto cfg = small_config();
    cfg.sweep = SweepParam::paths_per_tap;
    cfg.sweep_values = {1, 3};
    cfg.trials = 6;
    const auto a = records_bytes(run_sweep(cfg));
    const auto b = records_bytes(run_sweep(cfg));
    cfg.threads = 3;
    const auto c = records_bytes(run_sweep(cfg));
    CHECK(a == b);
    CHECK(a == c);
}
