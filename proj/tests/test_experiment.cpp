// SPDX-License-Identifier: Apache-2.0
//
// pinch-robust: robust power allocation and antenna placement for
// pinching-antenna waveguide systems
// Copyright (C) 2026 The pinch-robust authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "pinch/experiment.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <sstream>

using namespace pinch;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.num_antennas = 2;
    cfg.num_scenarios = 3;
    cfg.sweep_values = {0.5, 1.0};
    cfg.bcd.num_restarts = 1;
    cfg.bcd.include_baseline_start = true;
    cfg.seed = 11;
    return cfg;
}

std::string csv_of(const SweepResult &r) {
    std::ostringstream out;
    write_csv(r, out);
    return out.str();
}

} // namespace

TEST(Scenario, UsersInsideArea) {
    ExperimentConfig cfg;
    cfg.num_users = 7;
    Rng rng(81);
    for (int i = 0; i < 200; ++i) {
        const Scenario s = generate_scenario(cfg, rng);
        ASSERT_EQ(s.users.size(), 7u);
        for (const auto &u : s.users) {
            EXPECT_LE(std::abs(u.u_hat.x), 60.0);
            EXPECT_LE(std::abs(u.u_hat.y), 10.0);
            EXPECT_EQ(u.radius_m, 3.0);
            EXPECT_EQ(u.rate_min, 1.0);
            EXPECT_NEAR(u.noise_power_w, 3.981071705534973e-13, 1e-26);
        }
    }
}

TEST(Scenario, DeterministicForSeed) {
    ExperimentConfig cfg;
    Rng a(scenario_seed(5, 2)), b(scenario_seed(5, 2));
    const Scenario sa = generate_scenario(cfg, a), sb = generate_scenario(cfg, b);
    for (std::size_t k = 0; k < sa.users.size(); ++k) {
        EXPECT_EQ(sa.users[k].u_hat.x, sb.users[k].u_hat.x);
        EXPECT_EQ(sa.users[k].u_hat.y, sb.users[k].u_hat.y);
    }
    EXPECT_NE(scenario_seed(5, 2), scenario_seed(5, 3));
    EXPECT_NE(scenario_seed(5, 2), scenario_seed(6, 2));
}

TEST(Scenario, CoordinatesCentredWithUniformSpread) {
    ExperimentConfig cfg;
    cfg.num_users = 1;
    Rng rng(82);
    const int n = 100000;
    double sx = 0.0, sy = 0.0, sxx = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto u = generate_scenario(cfg, rng).users[0].u_hat;
        sx += u.x;
        sy += u.y;
        sxx += u.x * u.x;
    }
    // Uniform on [-a/2, a/2]: standard deviation a / sqrt(12).
    EXPECT_NEAR(sx / n, 0.0, 4.0 * 120.0 / std::sqrt(12.0 * n));
    EXPECT_NEAR(sy / n, 0.0, 4.0 * 20.0 / std::sqrt(12.0 * n));
    EXPECT_NEAR(sxx / n, 120.0 * 120.0 / 12.0, 0.02 * 1200.0);
}

TEST(Config, ParsesKeysListsAndComments) {
    std::istringstream in("# header\n"
                          "num_users = 5   # trailing\n"
                          "\n"
                          "sweep_var = radius\n"
                          "sweep_values = [1, 2.5, 4]\n"
                          "schemes = [proposed_single, fixed_baseline]\n"
                          "carrier_freq_hz = 3e10\n"
                          "bcd.num_restarts = 4\n"
                          "evaluator.boundary_samples = 128\n"
                          "search.scan_cell_wavelengths = 0.5\n"
                          "timing = true\n");
    const auto cfg = parse_config(in);
    EXPECT_EQ(cfg.num_users, 5u);
    EXPECT_EQ(cfg.sweep_var, SweepVar::radius);
    EXPECT_EQ(cfg.sweep_values, (std::vector<double>{1.0, 2.5, 4.0}));
    EXPECT_EQ(cfg.schemes, (std::vector<Scheme>{Scheme::proposed_single, Scheme::fixed_baseline}));
    EXPECT_EQ(cfg.waveguide.carrier_freq_hz, 3e10);
    EXPECT_EQ(cfg.bcd.num_restarts, 4u);
    EXPECT_EQ(cfg.evaluator.boundary_samples, 128u);
    EXPECT_EQ(cfg.search_evaluator.scan_cell_wavelengths, 0.5);
    EXPECT_TRUE(cfg.timing);
    EXPECT_EQ(cfg.radius_m, 3.0);
}

TEST(Config, ErrorsNameTheLine) {
    auto message = [](const std::string &text) {
        std::istringstream in(text);
        try {
            parse_config(in);
        } catch (const std::invalid_argument &e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("num_users = 3\nbogus = 1\n").find("line 2"), std::string::npos);
    EXPECT_NE(message("num_users = 3\nbogus = 1\n").find("bogus"), std::string::npos);
    EXPECT_NE(message("radius_m = abc\n").find("line 1"), std::string::npos);
    EXPECT_NE(message("\n\nnum_users\n").find("line 3"), std::string::npos);
    EXPECT_FALSE(message("num_users = -2\n").empty());
    EXPECT_FALSE(message("sweep_values = 1, 2\n").empty());
    EXPECT_FALSE(message("schemes = [magic]\n").empty());
    EXPECT_FALSE(message("timing = maybe\n").empty());
    EXPECT_FALSE(message("evaluator.nonsense = 1\n").empty());
}

TEST(Config, ValidateRejectsBadValues) {
    ExperimentConfig cfg;
    cfg.sweep_values = {2.0, 1.0};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.num_users = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.threads = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    EXPECT_NO_THROW(ExperimentConfig{}.validate());
}

TEST(Config, SweepValueApplies) {
    const ExperimentConfig base;
    EXPECT_EQ(apply_sweep_value(base, SweepVar::rate, 2.0).rate_min, 2.0);
    EXPECT_EQ(apply_sweep_value(base, SweepVar::radius, 4.0).radius_m, 4.0);
    EXPECT_EQ(apply_sweep_value(base, SweepVar::outage, 0.05).outage_eps, 0.05);
    EXPECT_EQ(apply_sweep_value(base, SweepVar::users, 6.0).num_users, 6u);
    EXPECT_EQ(apply_sweep_value(base, SweepVar::antennas, 4.0).num_antennas, 4u);
}

TEST(Csv, HeaderOnlyWhenEmpty) {
    EXPECT_EQ(csv_of(SweepResult{}), "sweep_var,sweep_value,scheme,scenario_seed,total_power_mw,runtime_ms\n");
}

TEST(Csv, TenSignificantDigitsRoundTrip) {
    for (double x : {3.14159265358979, 1e-300, 12345678901.0, 0.1}) {
        const double back = std::stod(format_g10(x));
        EXPECT_NEAR(back / x, 1.0, 5e-10);
    }
}

TEST(Sweep, MeansMatchRawValues) {
    const auto r = run_sweep(tiny_config());
    ASSERT_EQ(r.cells.size(), 6u);
    for (const auto &c : r.cells) {
        ASSERT_EQ(c.raw_mw.size(), 3u);
        EXPECT_EQ(c.failures, 0u);
        EXPECT_NEAR(c.mean_mw, (c.raw_mw[0] + c.raw_mw[1] + c.raw_mw[2]) / 3.0, 1e-12 * c.mean_mw);
        EXPECT_GT(c.stderr_mw, 0.0);
    }
    // Schemes at one sweep value share scenarios.
    EXPECT_EQ(r.cell(0.5, Scheme::proposed_single).scenario_seeds, r.cell(0.5, Scheme::fixed_baseline).scenario_seeds);
    EXPECT_EQ(r.cell(0.5, Scheme::proposed_single).scenario_seeds, r.cell(1.0, Scheme::proposed_single).scenario_seeds);
    const std::string csv = csv_of(r);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 6 * 3);
}

TEST(Sweep, IndependentOfThreadCount) {
    auto cfg = tiny_config();
    const std::string one = csv_of(run_sweep(cfg));
    cfg.threads = 3;
    EXPECT_EQ(csv_of(run_sweep(cfg)), one);
}

TEST(Sweep, SingleAntennaBeatsBaselineAtOneAntenna) {
    auto cfg = tiny_config();
    cfg.num_antennas = 1;
    cfg.num_scenarios = 10;
    cfg.schemes = {Scheme::proposed_single, Scheme::fixed_baseline};
    const auto r = run_sweep(cfg);
    for (double v : cfg.sweep_values) {
        const auto &s = r.cell(v, Scheme::proposed_single), &b = r.cell(v, Scheme::fixed_baseline);
        for (std::size_t i = 0; i < s.raw_mw.size(); ++i) EXPECT_LE(s.raw_mw[i], b.raw_mw[i] * (1.0 + 1e-9));
    }
}

TEST(Schemes, MultiFallsBackToSingleAtOneAntenna) {
    ExperimentConfig cfg;
    cfg.num_antennas = 1;
    Rng rng(83);
    const Scenario s = generate_scenario(cfg, rng);
    const auto multi = run_scheme(Scheme::proposed_multi_cd, s, cfg, 1);
    const auto single = run_scheme(Scheme::proposed_single, s, cfg, 1);
    EXPECT_EQ(multi.total_power_w, single.total_power_w);
    EXPECT_EQ(multi.certificates.size(), 3u);
}

TEST(Schemes, NamesRoundTrip) {
    for (auto s : {Scheme::proposed_single, Scheme::proposed_multi_cd, Scheme::fixed_baseline})
        EXPECT_EQ(parse_scheme(to_string(s)), s);
    for (auto v : {SweepVar::rate, SweepVar::radius, SweepVar::outage, SweepVar::users, SweepVar::antennas})
        EXPECT_EQ(parse_sweep_var(to_string(v)), v);
    EXPECT_THROW(parse_scheme("best"), std::invalid_argument);
}
