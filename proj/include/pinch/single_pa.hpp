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
#include "pinch/worst_case.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace pinch {

// ------------------------------------------------------------------------
// S-procedure LMI
// ------------------------------------------------------------------------

using LmiMatrix = Eigen::Matrix3d;

/// Multiplier certificate for the robust SNR constraint of one user.
struct SCertificate {
    double lambda = 0.0;
    double t = 0.0;          // epigraph slack, >= v^2
    double psd_margin = 0.0; // smallest eigenvalue of the certified matrix
};

/// The 3x3 arrow matrix
///   [ (lambda - gamma) I2          gamma v - lambda u_hat                  ]
///   [ (gamma v - lambda u_hat)^T   eta p - gamma (t + d^2) + lambda s      ]
/// with v = (v, 0) and s = |u_hat|^2 - r^2.
inline LmiMatrix build_lmi(double p, double lambda, double v, double t, const UserSpec &user,
                           const WaveguideConfig &wg, double gamma) {
    const Point2 &u = user.u_hat;
    const double r = user.radius_m;
    const double d2 = wg.height_m * wg.height_m;
    LmiMatrix m;
    const double a = lambda - gamma;
    const double bx = gamma * v - lambda * u.x;
    const double by = -lambda * u.y;
    const double c = wg.eta() * p - gamma * (t + d2) + lambda * (norm_sq(u) - r * r);
    m << a, 0.0, bx, 0.0, a, by, bx, by, c;
    return m;
}

struct PsdVerdict {
    bool psd = false;
    double min_eigenvalue = 0.0;
    explicit operator bool() const { return psd; }
};

/// Smallest eigenvalue against a tolerance relative to the spectral norm.
/// The entries live on a 1e-12 W scale, so an absolute floor would accept
/// everything.
inline PsdVerdict is_psd(const LmiMatrix &m, double tol = 1e-9) {
    Eigen::SelfAdjointEigenSolver<LmiMatrix> es;
    es.computeDirect(m, Eigen::EigenvaluesOnly);
    const auto &ev = es.eigenvalues(); // ascending
    const double scale = std::max(std::abs(ev(0)), std::abs(ev(2)));
    return {ev(0) >= -tol * scale, ev(0)};
}

/// Coefficients of q(lambda) = a lambda^2 + b lambda + c, the Schur
/// complement (lambda - gamma) c(lambda) - |b(lambda)|^2 of the LMI at t = v^2.
struct SchurQuadratic {
    double a = 0.0, b = 0.0, c = 0.0;
    double operator()(double lambda) const { return (a * lambda + b) * lambda + c; }
};

inline SchurQuadratic schur_quadratic(double p, double v, const UserSpec &user, const WaveguideConfig &wg,
                                      double gamma) {
    const Point2 &u = user.u_hat;
    const double r2 = user.radius_m * user.radius_m;
    const double s = norm_sq(u) - r2;
    const double c0 = wg.eta() * p - gamma * (v * v + wg.height_m * wg.height_m);
    return {-r2, c0 - gamma * s + 2.0 * gamma * v * u.x, -gamma * (c0 + gamma * v * v)};
}

/// Searches lambda >= gamma making the LMI PSD at t = v^2. The feasible set
/// of q(lambda) >= 0 is an interval with closed-form ends and its midpoint is
/// returned. When the interval collapses to a point within rounding, or the
/// disk has zero radius (the interval is unbounded or needs lambda -> inf),
/// candidates are checked directly against the PSD tolerance.
inline std::optional<SCertificate> find_certificate(double p, double v, const UserSpec &user,
                                                    const WaveguideConfig &wg, double gamma,
                                                    double psd_tol = 1e-9) {
    const double t = v * v;
    auto certify = [&](double lambda) -> std::optional<SCertificate> {
        if (!(lambda >= gamma) || !std::isfinite(lambda)) return std::nullopt;
        const auto verdict = is_psd(build_lmi(p, lambda, v, t, user, wg, gamma), psd_tol);
        if (!verdict) return std::nullopt;
        return SCertificate{lambda, t, verdict.min_eigenvalue};
    };

    const auto q = schur_quadratic(p, v, user, wg, gamma);
    constexpr double eps = std::numeric_limits<double>::epsilon();

    if (q.a < 0.0) {
        const double disc = q.b * q.b - 4.0 * q.a * q.c;
        // b and c cancel terms much larger than themselves, so the noise is
        // scaled by the summand magnitudes.
        const Point2 &u = user.u_hat;
        const double d2 = wg.height_m * wg.height_m;
        const double b_terms = wg.eta() * p + gamma * (v * v + d2 + norm_sq(u) + user.radius_m * user.radius_m +
                                                       2.0 * std::abs(v * u.x));
        const double c_terms = gamma * (wg.eta() * p + gamma * (2.0 * v * v + d2));
        const double disc_noise = 64.0 * eps * (2.0 * std::abs(q.b) * b_terms + 4.0 * std::abs(q.a) * c_terms);
        if (disc >= 0.0) {
            const double root = std::sqrt(disc);
            // Stable roots of a lambda^2 + b lambda + c with a < 0.
            const double qq = -0.5 * (q.b + std::copysign(root, q.b));
            double lo = qq / q.a;
            double hi = qq != 0.0 ? q.c / qq : lo;
            if (lo > hi) std::swap(lo, hi);
            lo = std::max(lo, gamma);
            if (hi >= lo) {
                if (auto cert = certify(0.5 * (lo + hi))) return cert;
                if (auto cert = certify(hi)) return cert;
            }
        }
        if (disc > -disc_noise) {
            // Degenerate interval: the vertex is the only candidate.
            if (auto cert = certify(std::max(-q.b / (2.0 * q.a), gamma))) return cert;
        }
        return std::nullopt;
    }

    // Zero radius: q is affine in lambda and its slope is the nominal SNR
    // slack eta p - gamma (|u_hat - v|^2 + d^2).
    if (q.b > 0.0) {
        const double lo = std::max(gamma, -q.c / q.b);
        if (auto cert = certify(2.0 * lo)) return cert;
    }
    const Point2 rel{user.u_hat.x - v, user.u_hat.y};
    const double slack_scale = wg.eta() * p + gamma * (norm_sq(rel) + wg.height_m * wg.height_m);
    if (q.b < -64.0 * eps * slack_scale) return std::nullopt;
    // Boundary case p at the nominal minimum: the Schur complement only
    // vanishes as lambda grows without bound.
    double lambda = 2.0 * gamma;
    for (int i = 0; i < 64; ++i, lambda *= 4.0)
        if (auto cert = certify(lambda)) return cert;
    return std::nullopt;
}

// ------------------------------------------------------------------------
// Single-antenna robust power
// ------------------------------------------------------------------------

/// Minimal power meeting the SNR threshold everywhere on the disk with one
/// antenna at x = v: gamma ((rho + r)^2 + d^2) / eta.
inline double min_power_at_position(double v, const UserSpec &user, const WaveguideConfig &wg, double gamma) {
    return gamma * worst_case_distance_sq(user, v, wg).distance_sq / wg.eta();
}

struct P2Options {
    double v_tol_rel = 1e-6; // golden-section width, relative to the waveguide length
    double psd_tol = 1e-9;
};

struct SinglePaSolution {
    double v_star = 0.0;
    std::vector<double> powers;
    std::vector<double> gammas;
    std::vector<SCertificate> certificates;
    double total_power = 0.0;
    double oracle_total_power = 0.0; // from the channel at each farthest point
};

/// Sum of the per-user robust minimum powers for a single antenna at v.
inline double single_pa_total_power(double v, std::span<const UserSpec> users, const WaveguideConfig &wg) {
    double total = 0.0;
    for (const auto &u : users) total += min_power_at_position(v, u, wg, snr_threshold(users.size(), u.rate_min, u.noise_power_w));
    return total;
}

/// Joint power and position design for one antenna. The objective is convex
/// in v, so golden-section search over the waveguide span is exact up to the
/// bracket width; both span ends are compared against the interior optimum.
inline SinglePaSolution solve_p2(std::span<const UserSpec> users, const WaveguideConfig &wg,
                                 const P2Options &opts = {}) {
    if (users.empty()) throw std::invalid_argument("solve_p2: at least one user required");
    wg.validate();
    for (const auto &u : users) u.validate();

    auto objective = [&](double v) { return single_pa_total_power(v, users, wg); };
    const double lo0 = -0.5 * wg.length_m;
    const double hi0 = 0.5 * wg.length_m;
    const double tol = opts.v_tol_rel * wg.length_m;

    constexpr double inv_phi = 0.6180339887498949; // (sqrt 5 - 1) / 2
    double lo = lo0, hi = hi0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(x1), f2 = objective(x2);
    while (hi - lo > tol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    double v_star = 0.5 * (lo + hi);
    double best = objective(v_star);
    for (double cand : {lo0, hi0}) {
        const double f = objective(cand);
        if (f < best) {
            best = f;
            v_star = cand;
        }
    }

    SinglePaSolution sol;
    sol.v_star = v_star;
    const Placement single{{v_star}};
    for (const auto &u : users) {
        const double gamma = snr_threshold(users.size(), u.rate_min, u.noise_power_w);
        const double p = min_power_at_position(v_star, u, wg, gamma);
        auto cert = find_certificate(p, v_star, u, wg, gamma, opts.psd_tol);
        if (!cert) throw std::runtime_error("solve_p2: no S-procedure certificate at the optimum");
        const auto far = worst_case_distance_sq(u, v_star, wg);
        sol.gammas.push_back(gamma);
        sol.powers.push_back(p);
        sol.certificates.push_back(*cert);
        sol.total_power += p;
        sol.oracle_total_power += gamma / channel_gain_sq(u.u_hat + far.offset, single, wg);
    }
    return sol;
}

} // namespace pinch
