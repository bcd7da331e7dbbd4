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

#include "pinch/validation.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pinch;

namespace {

const double kNoise = noise_power_from_psd(-174.0, 100e6);

Scenario random_scenario(Rng &rng, std::size_t K, std::size_t N, double r = 3.0) {
    Scenario s;
    s.num_antennas = N;
    for (std::size_t k = 0; k < K; ++k) {
        UserSpec u;
        u.u_hat = {uniform(rng, -60.0, 60.0), uniform(rng, -10.0, 10.0)};
        u.radius_m = r;
        u.rate_min = 1.0;
        u.noise_power_w = kNoise;
        s.users.push_back(u);
    }
    return s;
}

Allocation evaluated(const Placement &pl, const Scenario &s) {
    auto eval = total_power(pl, s.users, s.waveguide, {});
    return {pl, eval.powers};
}

} // namespace

TEST(DiskSampling, ZeroRadiusIsOrigin) {
    Rng rng(61);
    for (int i = 0; i < 10; ++i) {
        const Point2 p = sample_uniform_disk(rng, 0.0);
        EXPECT_EQ(p.x, 0.0);
        EXPECT_EQ(p.y, 0.0);
    }
}

TEST(DiskSampling, UniformOverArea) {
    // Radius density 2 rho / r^2: mean 2r/3, variance r^2/18, P(rho <= r/2) = 1/4.
    Rng rng(62);
    const double r = 3.0;
    const int n = 200000;
    double sum = 0.0, sum_x = 0.0;
    int inner = 0;
    for (int i = 0; i < n; ++i) {
        const Point2 p = sample_uniform_disk(rng, r);
        const double rho = norm(p);
        ASSERT_LE(rho, r * (1.0 + 1e-15));
        sum += rho;
        sum_x += p.x;
        inner += rho <= r / 2.0;
    }
    const double sigma_mean = std::sqrt(r * r / 18.0 / n);
    EXPECT_NEAR(sum / n, 2.0 * r / 3.0, 4.0 * sigma_mean);
    EXPECT_NEAR(sum_x / n, 0.0, 4.0 * r / 2.0 / std::sqrt(n));
    EXPECT_NEAR(static_cast<double>(inner) / n, 0.25, 4.0 * std::sqrt(0.25 * 0.75 / n));
}

TEST(MonteCarlo, RobustAllocationsHaveNoViolations) {
    Rng rng(63);
    for (int i = 0; i < 5; ++i) {
        const Scenario s = random_scenario(rng, 3, 3);
        const auto pl = random_feasible_placement(3, s.waveguide, rng);
        const auto report = monte_carlo_outage(evaluated(pl, s), s, 5000, 64 + i);
        ASSERT_EQ(report.users.size(), 3u);
        EXPECT_EQ(report.total_violations(), 0u);
        for (const auto &u : report.users) {
            EXPECT_EQ(u.num_samples, 5000u);
            EXPECT_GE(u.min_rate, 1.0 - 1e-9);
        }
    }
}

TEST(MonteCarlo, HalvedPowerCausesOutage) {
    Rng rng(65);
    const Scenario s = random_scenario(rng, 3, 1);
    auto alloc = evaluated(Placement{{0.0}}, s);
    for (auto &p : alloc.powers) p *= 0.5;
    const auto report = monte_carlo_outage(alloc, s, 5000, 66);
    for (const auto &u : report.users) {
        EXPECT_GT(u.outage, 0.0);
        EXPECT_LT(u.min_rate, 1.0);
    }
}

TEST(MonteCarlo, ExactThresholdAtZeroRadiusPasses) {
    Rng rng(67);
    const Scenario s = random_scenario(rng, 2, 1, 0.0);
    const auto report = monte_carlo_outage(evaluated(Placement{{4.0}}, s), s, 100, 68);
    EXPECT_EQ(report.total_violations(), 0u);
}

TEST(MonteCarlo, DeterministicForSeed) {
    Rng rng(69);
    const Scenario s = random_scenario(rng, 2, 2);
    auto alloc = evaluated(random_feasible_placement(2, s.waveguide, rng), s);
    for (auto &p : alloc.powers) p *= 0.7;
    const auto a = monte_carlo_outage(alloc, s, 2000, 70);
    const auto b = monte_carlo_outage(alloc, s, 2000, 70);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_EQ(a.users[k].num_violations, b.users[k].num_violations);
        EXPECT_EQ(a.users[k].min_rate, b.users[k].min_rate);
    }
}

TEST(Audit, PassesOnSolverOutputs) {
    Rng rng(71);
    const Scenario one = random_scenario(rng, 3, 1);
    const auto p2 = solve_p2(one.users, one.waveguide);
    const auto single = audit_solution(allocation_of(p2), one, {}, p2.certificates);
    EXPECT_TRUE(single.pass);
    for (const auto &u : single.users) {
        ASSERT_TRUE(u.certificate_margin.has_value());
        EXPECT_TRUE(u.certificate_ok);
    }

    const Scenario three = random_scenario(rng, 3, 3);
    const auto pl = random_feasible_placement(3, three.waveguide, rng);
    const auto multi = audit_solution(evaluated(pl, three), three, {});
    EXPECT_TRUE(multi.pass);
    for (const auto &u : multi.users) EXPECT_FALSE(u.certificate_margin.has_value());
}

TEST(Audit, FlagsSpacingViolation) {
    Rng rng(72);
    const Scenario s = random_scenario(rng, 2, 2);
    const Placement squeezed{{0.0, s.waveguide.wavelength() / 4.0}};
    const auto report = audit_solution(Allocation{squeezed, {1.0, 1.0}}, s, {});
    EXPECT_FALSE(report.pass);
    EXPECT_FALSE(report.placement.feasible);
    ASSERT_FALSE(report.placement.violations.empty());
    EXPECT_EQ(report.placement.violations[0].kind, PlacementViolationKind::spacing);
}

TEST(Audit, FlagsReducedPower) {
    Rng rng(73);
    const Scenario s = random_scenario(rng, 3, 2);
    auto alloc = evaluated(random_feasible_placement(2, s.waveguide, rng), s);
    alloc.powers[1] *= 0.99;
    const auto report = audit_solution(alloc, s, {});
    EXPECT_FALSE(report.pass);
    EXPECT_TRUE(report.users[0].pass);
    EXPECT_FALSE(report.users[1].pass);
    EXPECT_LT(report.users[1].robust_margin, 0.0);
}

TEST(Audit, FlagsBadCertificate) {
    Rng rng(74);
    const Scenario s = random_scenario(rng, 2, 1);
    auto p2 = solve_p2(s.users, s.waveguide);
    p2.certificates[0].lambda = 0.5 * p2.gammas[0];
    const auto report = audit_solution(allocation_of(p2), s, {}, p2.certificates);
    EXPECT_FALSE(report.pass);
    EXPECT_FALSE(report.users[0].certificate_ok);
    EXPECT_TRUE(report.users[1].certificate_ok);
}

TEST(Audit, RejectsWrongPowerCount) {
    Rng rng(75);
    const Scenario s = random_scenario(rng, 3, 1);
    EXPECT_FALSE(audit_solution(Allocation{Placement{{0.0}}, {1.0}}, s, {}).pass);
}
