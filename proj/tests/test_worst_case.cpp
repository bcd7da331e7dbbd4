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

#include "pinch/multi_pa.hpp"
#include "pinch/worst_case.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace pinch;

namespace {

const double kNoise = noise_power_from_psd(-174.0, 100e6);

UserSpec make_user(Point2 u, double r) {
    UserSpec s;
    s.u_hat = u;
    s.radius_m = r;
    s.rate_min = 1.0;
    s.noise_power_w = kNoise;
    return s;
}

UserSpec random_user(Rng &rng, double r_max = 5.0) {
    const Point2 c{uniform(rng, -60.0, 60.0), uniform(rng, -10.0, 10.0)};
    return make_user(c, uniform(rng, 0.0, r_max));
}

double closed_form_gain(const UserSpec &u, double v, const WaveguideConfig &wg) {
    const double rho = std::hypot(u.u_hat.x - v, u.u_hat.y);
    return wg.eta() / ((rho + u.radius_m) * (rho + u.radius_m) + wg.height_m * wg.height_m);
}

} // namespace

TEST(WorstCaseDistance, Examples) {
    WaveguideConfig wg;
    const auto below = worst_case_distance_sq(make_user({2.0, 0.0}, 3.0), 2.0, wg);
    EXPECT_DOUBLE_EQ(below.distance_sq, 18.0);
    EXPECT_NEAR(norm(below.offset), 3.0, 1e-15);

    const auto exact = worst_case_distance_sq(make_user({5.0, 4.0}, 0.0), 1.0, wg);
    EXPECT_DOUBLE_EQ(exact.distance_sq, 16.0 + 16.0 + 9.0);
}

TEST(WorstCaseDistance, MatchesBoundarySweep) {
    WaveguideConfig wg;
    Rng rng(21);
    for (int i = 0; i < 300; ++i) {
        const UserSpec u = random_user(rng);
        const double v = uniform(rng, -25.0, 25.0);
        double sweep = 0.0;
        for (int j = 0; j < 721; ++j) {
            const double t = 2.0 * std::numbers::pi * j / 721.0;
            const double dx = u.u_hat.x + u.radius_m * std::cos(t) - v;
            const double dy = u.u_hat.y + u.radius_m * std::sin(t);
            sweep = std::max(sweep, dx * dx + dy * dy + wg.height_m * wg.height_m);
        }
        const double got = worst_case_distance_sq(u, v, wg).distance_sq;
        // The sweep undershoots the true maximum by at most the angular gap.
        EXPECT_GE(got, sweep * (1.0 - 1e-12));
        const double gap = std::numbers::pi / 721.0;
        EXPECT_LE(got - sweep, 2.0 * u.radius_m * 60.0 * gap * gap + 1e-9);
    }
}

TEST(BoundarySample, ZeroRadiusReturnsCentreAtFirstIndex) {
    WaveguideConfig wg;
    const Placement pl{{-3.0, 4.0}};
    const UserSpec u = make_user({1.0, 2.0}, 0.0);
    const auto b = boundary_sample_min(u, pl, wg, 64);
    EXPECT_EQ(b.index, 0u);
    EXPECT_EQ(b.angle, 0.0);
    EXPECT_DOUBLE_EQ(b.value, channel_gain_sq(u.u_hat, pl, wg));
}

TEST(BoundarySample, SingleAntennaAngleWithinOneBin) {
    WaveguideConfig wg;
    Rng rng(22);
    for (int i = 0; i < 200; ++i) {
        const UserSpec u = make_user({uniform(rng, -60.0, 60.0), uniform(rng, -10.0, 10.0)}, 3.0);
        const double v = uniform(rng, -25.0, 25.0);
        const std::size_t L = 64;
        const auto b = boundary_sample_min(u, Placement{{v}}, wg, L);
        const double ray = std::atan2(u.u_hat.y, u.u_hat.x - v);
        double diff = std::remainder(b.angle - ray, 2.0 * std::numbers::pi);
        EXPECT_LE(std::abs(diff), 2.0 * std::numbers::pi / L + 1e-12);
    }
}

TEST(BoundarySample, DenserNestedSamplingNeverHigher) {
    // 4096 angles contain the 64 coarse ones.
    WaveguideConfig wg;
    Rng rng(29);
    for (int i = 0; i < 50; ++i) {
        const Placement pl = random_feasible_placement(3, wg, rng);
        const UserSpec u = make_user({uniform(rng, -60.0, 60.0), uniform(rng, -10.0, 10.0)}, 3.0);
        EXPECT_LE(boundary_sample_min(u, pl, wg, 4096).value, boundary_sample_min(u, pl, wg, 64).value);
    }
}

TEST(BoundarySample, RejectsTooFewSamples) {
    WaveguideConfig wg;
    EXPECT_THROW(boundary_sample_min(make_user({0, 0}, 1.0), Placement{{0.0}}, wg, 3), std::invalid_argument);
}

TEST(RefineLocal, NeverWorseThanStartAndStaysInDisk) {
    WaveguideConfig wg;
    EvaluatorConfig cfg;
    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
        const auto N = static_cast<std::size_t>(2 + rng() % 4);
        const Placement pl = random_feasible_placement(N, wg, rng);
        const UserSpec u = make_user({uniform(rng, -60.0, 60.0), uniform(rng, -10.0, 10.0)}, 3.0);
        const double rho = 3.0 * std::sqrt(uniform01(rng));
        const double t = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        const Point2 start{rho * std::cos(t), rho * std::sin(t)};
        const auto res = refine_local(start, u, pl, wg, cfg);
        EXPECT_LE(res.value, channel_gain_sq(u.u_hat + start, pl, wg));
        EXPECT_LE(norm(res.offset), 3.0 * (1.0 + 1e-12));
        const double amp = static_cast<double>(N) * std::sqrt(wg.eta()) / wg.height_m;
        EXPECT_NEAR(res.value, channel_gain_sq(u.u_hat + res.offset, pl, wg), 1e-14 * amp * amp);
    }
}

TEST(RefineLocal, SingleAntennaReachesFarthestPoint) {
    WaveguideConfig wg;
    EvaluatorConfig cfg;
    Rng rng(24);
    for (int i = 0; i < 100; ++i) {
        const Point2 c{uniform(rng, -60.0, 60.0), uniform(rng, -10.0, 10.0)};
        const UserSpec u = make_user(c, uniform(rng, 0.5, 5.0));
        const double v = uniform(rng, -25.0, 25.0);
        const Point2 start{0.3 * u.radius_m, -0.2 * u.radius_m};
        const auto res = refine_local(start, u, Placement{{v}}, wg, cfg);
        EXPECT_NEAR(res.value / closed_form_gain(u, v, wg), 1.0, 1e-9);
    }
}

TEST(RefineLocal, StationaryStartIsFixedPoint) {
    // Directly below a single antenna the gain is maximal, but it is also a
    // stationary point; with zero radius nothing can move.
    WaveguideConfig wg;
    EvaluatorConfig cfg;
    const UserSpec u = make_user({2.0, 0.0}, 0.0);
    const auto res = refine_local({0.0, 0.0}, u, Placement{{2.0}}, wg, cfg);
    EXPECT_EQ(res.offset.x, 0.0);
    EXPECT_EQ(res.offset.y, 0.0);
}

TEST(WorstCaseGain, SingleAntennaClosedForm) {
    WaveguideConfig wg;
    EvaluatorConfig cfg;
    Rng rng(25);
    for (int i = 0; i < 300; ++i) {
        const UserSpec u = random_user(rng);
        const double v = uniform(rng, -25.0, 25.0);
        const auto g = worst_case_gain(u, Placement{{v}}, wg, cfg);
        EXPECT_EQ(g.method, WorstCaseMethod::geometric);
        EXPECT_NEAR(g.gain_sq_hat / closed_form_gain(u, v, wg), 1.0, 1e-12);
    }
}

TEST(WorstCaseGain, ZeroRadiusIsCentreValue) {
    WaveguideConfig wg;
    EvaluatorConfig cfg;
    const Placement pl{{-4.0, 1.0, 7.5}};
    const UserSpec u = make_user({3.0, -2.0}, 0.0);
    EXPECT_EQ(worst_case_gain(u, pl, wg, cfg).gain_sq_hat, channel_gain_sq(u.u_hat, pl, wg));
    EXPECT_EQ(brute_force_gain(u, pl, wg, 16).gain_sq_hat, channel_gain_sq(u.u_hat, pl, wg));
}

TEST(WorstCaseGain, FloorAppliedToDeepNull) {
    // Antennas mirrored about the user, 1.5 guided wavelengths apart: equal
    // amplitudes and free-space phases, guided phases opposite.
    WaveguideConfig wg;
    const double D = 1.5 * wg.guided_wavelength();
    const Placement pl{{5.0 - D / 2.0, 5.0 + D / 2.0}};
    const UserSpec u = make_user({5.0, 2.0}, 0.5);
    EXPECT_LT(channel_gain_sq(u.u_hat, pl, wg), 1e-28);
    EvaluatorConfig cfg;
    const auto g = worst_case_gain(u, pl, wg, cfg);
    EXPECT_TRUE(g.floored);
    EXPECT_EQ(g.gain_sq_safe, cfg.eps_floor);
    EXPECT_LT(g.gain_sq_hat, cfg.eps_floor);
}

TEST(WorstCaseGain, NeverAboveCentreOrBoundarySamples) {
    WaveguideConfig wg;
    EvaluatorConfig cfg;
    Rng rng(26);
    for (int i = 0; i < 40; ++i) {
        const auto N = static_cast<std::size_t>(2 + rng() % 4);
        const Placement pl = random_feasible_placement(N, wg, rng);
        const UserSpec u = make_user({uniform(rng, -60.0, 60.0), uniform(rng, -10.0, 10.0)}, 3.0);
        const auto g = worst_case_gain(u, pl, wg, cfg);
        EXPECT_LE(g.gain_sq_hat, channel_gain_sq(u.u_hat, pl, wg));
        EXPECT_LE(g.gain_sq_hat, boundary_sample_min(u, pl, wg, cfg.boundary_samples).value);
        EXPECT_LE(norm(g.arg_delta), 3.0 * (1.0 + 1e-12));
        // Deep nulls cancel to rounding of the amplitude sum.
        const double amp = static_cast<double>(N) * std::sqrt(wg.eta()) / wg.height_m;
        EXPECT_NEAR(g.gain_sq_hat, channel_gain_sq(u.u_hat + g.arg_delta, pl, wg), 1e-14 * amp * amp);
    }
}

TEST(WorstCaseGain, Deterministic) {
    WaveguideConfig wg;
    EvaluatorConfig cfg;
    const Placement pl{{-7.0, 2.0, 11.0}};
    const UserSpec u = make_user({14.0, 3.0}, 3.0);
    EXPECT_EQ(worst_case_gain(u, pl, wg, cfg), worst_case_gain(u, pl, wg, cfg));
}

TEST(WorstCaseGain, AtOrBelowCoarseGrid) {
    // Self-consistency with the grid oracle at a resolution cheap enough for
    // a unit test.
    WaveguideConfig wg;
    EvaluatorConfig cfg;
    Rng rng(27);
    for (int i = 0; i < 40; ++i) {
        const auto N = static_cast<std::size_t>(2 + rng() % 4);
        const Placement pl = random_feasible_placement(N, wg, rng);
        const UserSpec u = make_user({uniform(rng, -60.0, 60.0), uniform(rng, -10.0, 10.0)}, 3.0);
        const auto wc = worst_case_gain(u, pl, wg, cfg);
        const auto bf = brute_force_gain(u, pl, wg, 101);
        EXPECT_LE(wc.gain_sq_safe, bf.gain_sq_safe * 1.01) << "case " << i;
    }
}

TEST(BruteForce, SingleAntennaConvergesToClosedForm) {
    WaveguideConfig wg;
    const UserSpec u = make_user({12.0, 4.0}, 3.0);
    const double exact = closed_form_gain(u, -3.0, wg);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t res : {16u, 64u, 256u}) {
        const double err = brute_force_gain(u, Placement{{-3.0}}, wg, res).gain_sq_hat / exact - 1.0;
        EXPECT_GE(err, -1e-12);
        EXPECT_LE(err, prev);
        prev = err;
    }
    EXPECT_LT(prev, 1e-4);
}

TEST(BruteForce, RejectsCoarseGrid) {
    WaveguideConfig wg;
    EXPECT_THROW(brute_force_gain(make_user({0, 0}, 1.0), Placement{{0.0, 1.0}}, wg, 15), std::invalid_argument);
}

TEST(CellBound, IsALowerBoundOnSamples) {
    WaveguideConfig wg;
    Rng rng(28);
    detail::CellScratch scratch;
    for (int i = 0; i < 600; ++i) {
        const auto N = static_cast<std::size_t>(2 + rng() % 4);
        Placement pl = random_feasible_placement(N, wg, rng);
        if (i % 2) {
            // Packed array, as coordinate descent often produces.
            const double start = uniform(rng, -25.0, 24.9);
            for (std::size_t n = 0; n < N; ++n) pl[n] = start + static_cast<double>(n) * wg.wavelength() / 2.0;
        }
        Point2 c{uniform(rng, -60.0, 60.0), uniform(rng, -10.0, 10.0)};
        if (i % 4 == 1) c = {pl[0] + uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)};
        const double half = std::pow(10.0, uniform(rng, -3.0, 0.5));
        const auto b = detail::cell_bound(c, half, pl, wg, scratch);
        EXPECT_NEAR(b.centre_value / channel_gain_sq(c, pl, wg), 1.0, 1e-12);
        for (int j = 0; j < 200; ++j) {
            const Point2 x{c.x + uniform(rng, -half, half), c.y + uniform(rng, -half, half)};
            EXPECT_LE(b.lower, channel_gain_sq(x, pl, wg) * (1.0 + 1e-9));
        }
    }
}

TEST(EvaluatorConfig, Validate) {
    EvaluatorConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.boundary_samples = 3;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.eps_floor = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
