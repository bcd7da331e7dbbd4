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

#pragma once

#include "pinch/core_model.hpp"
#include "pinch/multi_pa.hpp"
#include "pinch/random.hpp"
#include "pinch/single_pa.hpp"
#include "pinch/worst_case.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace pinch {

/// Uniform point of the closed disk of radius r.
inline Point2 sample_uniform_disk(Rng &rng, double r) {
    const double rho = r * std::sqrt(uniform01(rng));
    const double theta = 2.0 * std::numbers::pi * uniform01(rng);
    return {rho * std::cos(theta), rho * std::sin(theta)};
}

/// Antenna positions with their per-user powers, the common shape of both
/// solver outputs.
struct Allocation {
    Placement placement;
    std::vector<double> powers;
};

inline Allocation allocation_of(const SinglePaSolution &s) { return {Placement{{s.v_star}}, s.powers}; }
inline Allocation allocation_of(const MultiPaSolution &s) { return {s.placement, s.powers}; }

// ------------------------------------------------------------------------
// Monte Carlo outage
// ------------------------------------------------------------------------

struct UserOutage {
    double outage = 0.0;
    std::size_t num_samples = 0;
    std::size_t num_violations = 0;
    double min_rate = std::numeric_limits<double>::infinity();
    Point2 worst_offset;
};

struct OutageReport {
    std::vector<UserOutage> users;

    std::size_t total_violations() const {
        std::size_t n = 0;
        for (const auto &u : users) n += u.num_violations;
        return n;
    }
};

/// Draws true locations uniformly on each user's disk and counts rate
/// shortfalls. A sample violates when p |h|^2 / N falls below gamma by more
/// than a few ulps, so an allocation at the exact threshold passes. User k
/// uses substream k of `seed`, which keeps counts independent of evaluation
/// order.
inline OutageReport monte_carlo_outage(const Allocation &alloc, const Scenario &scenario, std::size_t n_samples,
                                       std::uint64_t seed) {
    const auto &wg = scenario.waveguide;
    const std::size_t K = scenario.users.size();
    const std::size_t N = alloc.placement.size();
    constexpr double rel_guard = 16.0 * std::numeric_limits<double>::epsilon();
    OutageReport report;
    for (std::size_t k = 0; k < K; ++k) {
        const auto &user = scenario.users[k];
        const double gamma = snr_threshold(K, user.rate_min, user.noise_power_w);
        const double p = alloc.powers.at(k);
        Rng rng = make_rng(seed, k);
        UserOutage out;
        out.num_samples = n_samples;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const Point2 off = sample_uniform_disk(rng, user.radius_m);
            const double g = channel_gain_sq(user.u_hat + off, alloc.placement, wg);
            const double received = p * g / static_cast<double>(N);
            const double r = rate(p, g, N, K, user.noise_power_w);
            if (r < out.min_rate) {
                out.min_rate = r;
                out.worst_offset = off;
            }
            if (received < gamma * (1.0 - rel_guard)) ++out.num_violations;
        }
        out.outage = n_samples ? static_cast<double>(out.num_violations) / static_cast<double>(n_samples) : 0.0;
        report.users.push_back(out);
    }
    return report;
}

// ------------------------------------------------------------------------
// Solution audit
// ------------------------------------------------------------------------

struct AuditConfig {
    std::size_t brute_force_resolution = 201;
    double margin_rel_tol = 1e-9;   // robust margin, relative to gamma
    double gain_rel_tol = 0.01;     // brute-force gain may undercut the solver's by this much
    double psd_tol = 1e-9;
};

struct UserAudit {
    double gamma = 0.0;
    double robust_margin = 0.0;      // p m~ / N - gamma, with m~ recomputed
    double brute_force_margin = 0.0; // p max(bf, eps) / N - gamma
    double gain_delta = 0.0;         // brute-force gain minus solver gain (relative)
    std::optional<double> certificate_margin; // smallest LMI eigenvalue, single antenna only
    bool certificate_ok = true;
    bool pass = true;
};

struct AuditReport {
    PlacementVerdict placement;
    std::vector<UserAudit> users;
    bool pass = true;
};

/// Re-checks a solution from scratch: placement feasibility, recomputed
/// worst-case gains and closed-form powers, a brute-force gain cross-check on
/// an independent grid and, when given, the S-procedure certificates.
inline AuditReport audit_solution(const Allocation &alloc, const Scenario &scenario, const EvaluatorConfig &eval_cfg,
                                  std::span<const SCertificate> certificates = {}, const AuditConfig &cfg = {}) {
    const auto &wg = scenario.waveguide;
    const std::size_t K = scenario.users.size();
    const std::size_t N = alloc.placement.size();
    AuditReport report;
    report.placement = validate_placement(alloc.placement, wg);
    if (N == 0) report.placement.feasible = false;
    report.pass = report.placement.feasible && alloc.powers.size() == K;
    if (!report.pass) return report;

    for (std::size_t k = 0; k < K; ++k) {
        const auto &user = scenario.users[k];
        UserAudit a;
        a.gamma = snr_threshold(K, user.rate_min, user.noise_power_w);
        const double p = alloc.powers[k];
        const auto g = worst_case_gain(user, alloc.placement, wg, eval_cfg);
        const auto bf = brute_force_gain(user, alloc.placement, wg, cfg.brute_force_resolution, eval_cfg.eps_floor);
        a.robust_margin = p * g.gain_sq_safe / static_cast<double>(N) - a.gamma;
        a.brute_force_margin = p * bf.gain_sq_safe / static_cast<double>(N) - a.gamma;
        a.gain_delta = (bf.gain_sq_safe - g.gain_sq_safe) / g.gain_sq_safe;
        if (k < certificates.size() && N == 1) {
            const auto &c = certificates[k];
            const auto verdict = is_psd(build_lmi(p, c.lambda, alloc.placement[0], c.t, user, wg, a.gamma), cfg.psd_tol);
            a.certificate_margin = verdict.min_eigenvalue;
            a.certificate_ok = verdict.psd && c.lambda >= a.gamma && c.t >= alloc.placement[0] * alloc.placement[0];
        }
        a.pass = a.robust_margin >= -cfg.margin_rel_tol * a.gamma && a.gain_delta >= -cfg.gain_rel_tol &&
                 a.certificate_ok;
        report.pass = report.pass && a.pass;
        report.users.push_back(a);
    }
    return report;
}

} // namespace pinch
