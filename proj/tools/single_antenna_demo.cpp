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

// Minimal library usage: one antenna, three users, robust powers and a
// Monte Carlo outage check.

#include "pinch/pinch.hpp"

#include <cstdio>

int main() {
    using namespace pinch;
    Scenario s;
    s.num_antennas = 1;
    const double noise = noise_power_from_psd(-174.0, 100e6);
    for (Point2 u : {Point2{-20.0, 4.0}, Point2{5.0, -7.0}, Point2{30.0, 2.0}})
        s.users.push_back({u, 3.0, 1.0, noise, 0.01});

    const auto sol = solve_p2(s.users, s.waveguide);
    std::printf("antenna at v* = %.4f m\n", sol.v_star);
    for (std::size_t k = 0; k < sol.powers.size(); ++k)
        std::printf("user %zu: %.6g mW (lambda %.3g)\n", k, watts_to_mw(sol.powers[k]), sol.certificates[k].lambda);
    std::printf("total: %.6g mW\n", watts_to_mw(sol.total_power));

    const auto mc = monte_carlo_outage(allocation_of(sol), s, 10000, 42);
    std::printf("Monte Carlo violations: %zu\n", mc.total_violations());
}
