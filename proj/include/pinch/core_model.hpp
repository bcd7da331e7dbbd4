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

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinch {

inline constexpr double kSpeedOfLight = 299'792'458.0; // m/s

// Absolute slack (meters) applied to the spacing and bound checks so that
// placements assembled as v + lambda/2 in floating point stay feasible.
inline constexpr double kPlacementSlack = 1e-9;

// ------------------------------------------------------------------------
// Planar geometry (ground plane, meters)
// ------------------------------------------------------------------------

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Point2 &operator+=(const Point2 &o) { x += o.x; y += o.y; return *this; }
    constexpr Point2 &operator-=(const Point2 &o) { x -= o.x; y -= o.y; return *this; }
    friend constexpr Point2 operator+(Point2 a, const Point2 &b) { return a += b; }
    friend constexpr Point2 operator-(Point2 a, const Point2 &b) { return a -= b; }
    friend constexpr Point2 operator*(double s, const Point2 &p) { return {s * p.x, s * p.y}; }
    friend constexpr bool operator==(const Point2 &, const Point2 &) = default;
};

inline double dot(const Point2 &a, const Point2 &b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Point2 &p) { return std::hypot(p.x, p.y); }
inline double norm_sq(const Point2 &p) { return dot(p, p); }

// ------------------------------------------------------------------------
// Configuration types
// ------------------------------------------------------------------------

/// Physical constants of the waveguide and the access point geometry.
///
/// The waveguide lies along the x axis at height `height_m`, spanning
/// [-length_m/2, length_m/2]; the feed point sits at x = -length_m/2.
struct WaveguideConfig {
    double carrier_freq_hz = 28e9;
    double n_eff = 1.4;
    double length_m = 50.0;
    double height_m = 3.0;

    double wavelength() const { return kSpeedOfLight / carrier_freq_hz; }
    double guided_wavelength() const { return wavelength() / n_eff; }

    /// Free-space path loss coefficient lambda^2 / (16 pi^2), in m^2.
    double eta() const {
        const double lambda = wavelength();
        return lambda * lambda / (16.0 * std::numbers::pi * std::numbers::pi);
    }

    void validate() const {
        if (!(carrier_freq_hz > 0.0)) throw std::invalid_argument("waveguide: carrier_freq_hz must be > 0");
        if (!(n_eff >= 1.0)) throw std::invalid_argument("waveguide: n_eff must be >= 1");
        if (!(length_m > 0.0)) throw std::invalid_argument("waveguide: length_m must be > 0");
        if (!(height_m > 0.0)) throw std::invalid_argument("waveguide: height_m must be > 0");
    }
};

/// Estimated user location with its bounded uncertainty disk and QoS target.
struct UserSpec {
    Point2 u_hat;
    double radius_m = 0.0;
    double rate_min = 0.0;      // bits/s/Hz
    double noise_power_w = 1.0; // sigma^2
    double outage_eps = 0.0;    // reporting only; the robust design ignores it

    void validate() const {
        if (!(radius_m >= 0.0)) throw std::invalid_argument("user: radius_m must be >= 0");
        if (!(rate_min >= 0.0)) throw std::invalid_argument("user: rate_min must be >= 0");
        if (!(noise_power_w > 0.0)) throw std::invalid_argument("user: noise_power_w must be > 0");
        if (!(outage_eps >= 0.0 && outage_eps <= 1.0))
            throw std::invalid_argument("user: outage_eps must be in [0, 1]");
    }
};

/// Antenna x-coordinates along the waveguide, expected strictly increasing.
/// Feasibility is checked by validate_placement rather than enforced here, so
/// that infeasible candidates can be represented and reported.
struct Placement {
    std::vector<double> positions;

    std::size_t size() const { return positions.size(); }
    double operator[](std::size_t n) const { return positions[n]; }
    double &operator[](std::size_t n) { return positions[n]; }
    friend bool operator==(const Placement &, const Placement &) = default;
};

struct Scenario {
    WaveguideConfig waveguide;
    std::vector<UserSpec> users;
    double area_x_m = 120.0;
    double area_y_m = 20.0;
    std::size_t num_antennas = 1;

    void validate() const {
        waveguide.validate();
        if (users.empty()) throw std::invalid_argument("scenario: at least one user required");
        if (num_antennas < 1) throw std::invalid_argument("scenario: at least one antenna required");
        if (!(area_x_m > 0.0 && area_y_m > 0.0)) throw std::invalid_argument("scenario: area must be positive");
        for (const auto &u : users) u.validate();
    }
};

// ------------------------------------------------------------------------
// Channel model
// ------------------------------------------------------------------------

namespace detail {

// exp(-j 2 pi (d / lambda + feed / lambda_g)) with the cycle count reduced
// to [0, 1) before scaling, which keeps the phase accurate at long ranges.
inline std::complex<double> propagation_phasor(double distance, double feed_offset, double lambda,
                                               double lambda_g) {
    double cycles = distance / lambda + feed_offset / lambda_g;
    cycles -= std::floor(cycles);
    const double phase = 2.0 * std::numbers::pi * cycles;
    return {std::cos(phase), -std::sin(phase)};
}

} // namespace detail

/// Combined complex channel from all antennas to a ground-plane point.
inline std::complex<double> channel_gain(const Point2 &u, const Placement &placement, const WaveguideConfig &wg) {
    const double lambda = wg.wavelength();
    const double lambda_g = wg.guided_wavelength();
    const double sqrt_eta = std::sqrt(wg.eta());
    const double h2 = wg.height_m * wg.height_m;
    const double feed = wg.length_m / 2.0;

    std::complex<double> h{0.0, 0.0};
    for (double v : placement.positions) {
        const double dx = u.x - v;
        const double d = std::sqrt(dx * dx + u.y * u.y + h2);
        h += (sqrt_eta / d) * detail::propagation_phasor(d, v + feed, lambda, lambda_g);
    }
    return h;
}

inline double channel_gain_sq(const Point2 &u, const Placement &placement, const WaveguideConfig &wg) {
    return std::norm(channel_gain(u, placement, wg));
}

/// |h|^2 together with its planar gradient and Hessian.
struct GainDerivatives {
    double value = 0.0;
    double amplitude_sum = 0.0; // sum of term magnitudes, an upper bound on |h|
    std::array<double, 2> grad{};
    std::array<double, 3> hess{}; // xx, xy, yy
};

/// Channel evaluator with the per-antenna constants precomputed; for dense
/// sampling of one placement.
class ChannelKernel {
  public:
    ChannelKernel(const Placement &placement, const WaveguideConfig &wg)
        : inv_lambda_(1.0 / wg.wavelength()), sqrt_eta_(std::sqrt(wg.eta())), h2_(wg.height_m * wg.height_m) {
        const double lambda_g = wg.guided_wavelength();
        const double feed = wg.length_m / 2.0;
        for (double v : placement.positions) {
            const double cycles = (v + feed) / lambda_g;
            antennas_.push_back({v, cycles - std::floor(cycles)});
        }
    }

    std::complex<double> gain(const Point2 &u) const {
        double re = 0.0, im = 0.0;
        for (const auto &a : antennas_) {
            const double dx = u.x - a.position;
            const double d = std::sqrt(dx * dx + u.y * u.y + h2_);
            double cycles = d * inv_lambda_ + a.guided_cycles;
            cycles -= std::floor(cycles);
            const double phase = 2.0 * std::numbers::pi * cycles;
            const double amp = sqrt_eta_ / d;
            re += amp * std::cos(phase);
            im -= amp * std::sin(phase);
        }
        return {re, im};
    }

    double gain_sq(const Point2 &u) const { return std::norm(gain(u)); }

  private:
    struct Antenna {
        double position;
        double guided_cycles;
    };
    double inv_lambda_, sqrt_eta_, h2_;
    std::vector<Antenna> antennas_;
};

/// Analytic first and second derivatives of |h(u)|^2 with respect to the
/// planar user location. Each term c(d) = sqrt(eta)/d * exp(-j(k d + g))
/// satisfies c' = c (-1/d - jk) and c'' = c ((1/d + jk)^2 + 1/d^2).
inline GainDerivatives channel_gain_sq_derivatives(const Point2 &u, const Placement &placement,
                                                   const WaveguideConfig &wg) {
    using cd = std::complex<double>;
    const double lambda = wg.wavelength();
    const double lambda_g = wg.guided_wavelength();
    const double k = 2.0 * std::numbers::pi / lambda;
    const double sqrt_eta = std::sqrt(wg.eta());
    const double h2 = wg.height_m * wg.height_m;
    const double feed = wg.length_m / 2.0;

    cd h{0.0, 0.0};
    cd hx{0.0, 0.0}, hy{0.0, 0.0};
    cd hxx{0.0, 0.0}, hxy{0.0, 0.0}, hyy{0.0, 0.0};
    double amp_sum = 0.0;
    for (double v : placement.positions) {
        const double dx = u.x - v;
        const double dy = u.y;
        const double d = std::sqrt(dx * dx + dy * dy + h2);
        const double inv_d = 1.0 / d;
        const cd c = (sqrt_eta * inv_d) * detail::propagation_phasor(d, v + feed, lambda, lambda_g);
        const cd s{inv_d, k};
        const cd c1 = -c * s;
        const cd c2 = c * (s * s + inv_d * inv_d);

        const double ddx = dx * inv_d;
        const double ddy = dy * inv_d;
        const double dxx = (1.0 - ddx * ddx) * inv_d;
        const double dxy = -ddx * ddy * inv_d;
        const double dyy = (1.0 - ddy * ddy) * inv_d;

        amp_sum += sqrt_eta * inv_d;
        h += c;
        hx += c1 * ddx;
        hy += c1 * ddy;
        hxx += c2 * (ddx * ddx) + c1 * dxx;
        hxy += c2 * (ddx * ddy) + c1 * dxy;
        hyy += c2 * (ddy * ddy) + c1 * dyy;
    }

    const cd hc = std::conj(h);
    GainDerivatives out;
    out.value = std::norm(h);
    out.amplitude_sum = amp_sum;
    out.grad = {2.0 * (hc * hx).real(), 2.0 * (hc * hy).real()};
    out.hess = {2.0 * (std::conj(hx) * hx + hc * hxx).real(),
                2.0 * (std::conj(hx) * hy + hc * hxy).real(),
                2.0 * (std::conj(hy) * hy + hc * hyy).real()};
    return out;
}

// ------------------------------------------------------------------------
// Rate and SNR threshold
// ------------------------------------------------------------------------

/// Achievable TDMA rate with equal per-antenna power split, bits/s/Hz.
inline double rate(double power_w, double gain_sq, std::size_t num_antennas, std::size_t num_users,
                   double noise_w) {
    const double snr = power_w * gain_sq / (static_cast<double>(num_antennas) * noise_w);
    return std::log2(1.0 + snr) / static_cast<double>(num_users);
}

/// Received-power threshold gamma = sigma^2 (2^{K R_min} - 1), in Watts.
inline double snr_threshold(std::size_t num_users, double rate_min, double noise_w) {
    return noise_w * std::expm1(static_cast<double>(num_users) * rate_min * std::numbers::ln2);
}

// ------------------------------------------------------------------------
// Placement feasibility
// ------------------------------------------------------------------------

enum class PlacementViolationKind { spacing, below_start, beyond_end };

struct PlacementViolation {
    std::size_t index; // zero-based antenna index
    PlacementViolationKind kind;
    friend bool operator==(const PlacementViolation &, const PlacementViolation &) = default;
};

struct PlacementVerdict {
    bool feasible = true;
    std::vector<PlacementViolation> violations;

    explicit operator bool() const { return feasible; }
};

inline PlacementVerdict validate_placement(const Placement &placement, const WaveguideConfig &wg) {
    PlacementVerdict verdict;
    const double half = wg.length_m / 2.0;
    const double min_gap = wg.wavelength() / 2.0;
    for (std::size_t n = 0; n < placement.size(); ++n) {
        const double v = placement[n];
        if (n > 0 && !(v - placement[n - 1] >= min_gap - kPlacementSlack))
            verdict.violations.push_back({n, PlacementViolationKind::spacing});
        if (!(v >= -half - kPlacementSlack))
            verdict.violations.push_back({n, PlacementViolationKind::below_start});
        if (!(v <= half + kPlacementSlack))
            verdict.violations.push_back({n, PlacementViolationKind::beyond_end});
    }
    verdict.feasible = verdict.violations.empty();
    return verdict;
}

inline std::string to_string(PlacementViolationKind kind) {
    switch (kind) {
    case PlacementViolationKind::spacing: return "spacing";
    case PlacementViolationKind::below_start: return "below_start";
    case PlacementViolationKind::beyond_end: return "beyond_end";
    }
    return "unknown";
}

// ------------------------------------------------------------------------
// Unit conversions (used at the CLI boundary)
// ------------------------------------------------------------------------

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double watts_to_mw(double w) { return w * 1e3; }

/// Thermal noise power for a PSD in dBm/Hz over the given bandwidth.
inline double noise_power_from_psd(double psd_dbm_per_hz, double bandwidth_hz) {
    return dbm_to_watts(psd_dbm_per_hz + 10.0 * std::log10(bandwidth_hz));
}

} // namespace pinch
