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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinch {

/// Tuning knobs for the worst-case gain evaluator.
struct EvaluatorConfig {
    std::size_t boundary_samples = 64; // L
    std::size_t interior_starts = 8;   // N_start
    std::size_t refine_max_iters = 200;
    double refine_step_tol = 1e-10; // relative to max(1 m, r)
    double eps_floor = 1e-18;
    std::size_t oracle_grid_resolution = 401;
    std::uint64_t seed = 0; // rotates the interior start pattern

    // Screening pool: extra interior points whose |h|^2 and amplitude lower
    // bound are evaluated but only the most promising are refined.
    std::size_t screen_pool = 64;
    std::size_t screen_refines = 4; // refined per ranking (by value, by bound)
    bool leave_one_out_bounds = true;

    // Branch-and-bound over square cells with amplitude and Lipschitz lower
    // bounds, subdividing down to `scan_cell_wavelengths` * lambda. Zero
    // disables the stage; `scan_max_cells` caps the cells evaluated.
    double scan_cell_wavelengths = 0.25;
    std::size_t scan_max_cells = 200000;
    std::size_t scan_refines = 8;

    void validate() const {
        if (boundary_samples < 4) throw std::invalid_argument("evaluator: boundary_samples must be >= 4");
        if (interior_starts < 1) throw std::invalid_argument("evaluator: interior_starts must be >= 1");
        if (!(eps_floor > 0.0)) throw std::invalid_argument("evaluator: eps_floor must be > 0");
        if (oracle_grid_resolution < 16) throw std::invalid_argument("evaluator: oracle_grid_resolution must be >= 16");
        if (!(scan_cell_wavelengths >= 0.0)) throw std::invalid_argument("evaluator: scan_cell_wavelengths must be >= 0");
    }

    friend bool operator==(const EvaluatorConfig &, const EvaluatorConfig &) = default;
};

enum class WorstCaseMethod { geometric, sampled_refined, brute_force };

inline std::string to_string(WorstCaseMethod m) {
    switch (m) {
    case WorstCaseMethod::geometric: return "geometric";
    case WorstCaseMethod::sampled_refined: return "sampled+refined";
    case WorstCaseMethod::brute_force: return "brute_force";
    }
    return "unknown";
}

struct WorstCaseResult {
    double gain_sq_hat = 0.0;  // minimum |h|^2 found over the disk
    double gain_sq_safe = 0.0; // max(gain_sq_hat, eps_floor)
    Point2 arg_delta;          // offset from u_hat achieving gain_sq_hat
    WorstCaseMethod method = WorstCaseMethod::sampled_refined;
    bool floored = false;

    friend bool operator==(const WorstCaseResult &, const WorstCaseResult &) = default;
};

// ------------------------------------------------------------------------
// Single antenna: closed-form farthest point of the disk
// ------------------------------------------------------------------------

struct DiskFarthestPoint {
    double distance_sq = 0.0; // max ||u - v_tilde||^2 over the disk, m^2
    Point2 offset;            // maximizing offset from u_hat
};

/// Farthest point of the uncertainty disk from an antenna at (v, 0, d).
inline DiskFarthestPoint worst_case_distance_sq(const UserSpec &user, double v, const WaveguideConfig &wg) {
    const Point2 away = user.u_hat - Point2{v, 0.0};
    const double rho = norm(away);
    const double r = user.radius_m;
    const double d = wg.height_m;
    DiskFarthestPoint out;
    out.distance_sq = (rho + r) * (rho + r) + d * d;
    out.offset = rho > 0.0 ? (r / rho) * away : Point2{r, 0.0};
    return out;
}

// ------------------------------------------------------------------------
// Boundary sampling
// ------------------------------------------------------------------------

struct BoundarySample {
    double value = 0.0;
    double angle = 0.0;
    std::size_t index = 0;
};

/// Evaluates |h|^2 at L equally spaced angles on the disk boundary and returns
/// the smallest, lowest index first on ties.
inline BoundarySample boundary_sample_min(const UserSpec &user, const Placement &placement,
                                          const WaveguideConfig &wg, std::size_t num_samples) {
    if (num_samples < 4) throw std::invalid_argument("boundary_sample_min: need at least 4 samples");
    BoundarySample best{std::numeric_limits<double>::infinity(), 0.0, 0};
    const double r = user.radius_m;
    for (std::size_t l = 0; l < num_samples; ++l) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(l) / static_cast<double>(num_samples);
        const Point2 p = user.u_hat + Point2{r * std::cos(theta), r * std::sin(theta)};
        const double f = channel_gain_sq(p, placement, wg);
        if (f < best.value) best = {f, theta, l};
    }
    return best;
}

// ------------------------------------------------------------------------
// Local refinement
// ------------------------------------------------------------------------

struct RefineResult {
    Point2 offset;
    double value = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

inline Point2 project_to_disk(const Point2 &p, double r) {
    const double n = norm(p);
    return n > r ? (r / n) * p : p;
}

// Saddle-free Newton direction -sum_i (g.e_i / |mu_i|) e_i over the
// eigenpairs of the 2x2 Hessian. The component along each eigenvector is
// capped at range / sqrt(|mu_i|): the distance over which the quadratic
// model would sweep the whole attainable range of |h|^2. Across interference
// fringes this is a fraction of a wavelength; along smooth directions it is
// meters.
inline Point2 saddle_free_newton(const std::array<double, 2> &g, const std::array<double, 3> &h, double range) {
    const double a = h[0], b = h[1], c = h[2];
    const double mean = 0.5 * (a + c);
    const double half_diff = 0.5 * (a - c);
    const double rad = std::hypot(half_diff, b);
    const double mu1 = mean + rad;
    const double mu2 = mean - rad;
    Point2 e1;
    if (rad == 0.0) {
        e1 = {1.0, 0.0};
    } else if (half_diff >= 0.0) {
        e1 = {half_diff + rad, b};
    } else {
        e1 = {b, rad - half_diff};
    }
    e1 = (1.0 / norm(e1)) * e1;
    const Point2 e2{-e1.y, e1.x};
    const Point2 gp{g[0], g[1]};

    auto component = [&](const Point2 &e, double mu) {
        const double ge = dot(gp, e);
        const double curv = std::abs(mu);
        if (!(curv > 0.0)) return 0.0;
        const double cap = range / std::sqrt(curv);
        return std::clamp(-ge / curv, -cap, cap);
    };
    Point2 dir = component(e1, mu1) * e1 + component(e2, mu2) * e2;
    if (dir == Point2{0.0, 0.0}) dir = -1.0 * gp;
    return dir;
}

} // namespace detail

/// Trust-region descent on du -> |h(u_hat + du)|^2 over ||du|| <= r.
///
/// Interior iterates take a saddle-free Newton step; when the iterate sits on
/// the boundary and the descent direction points outward, the step is taken
/// along the circle in angle instead. Steps are accepted only when they
/// decrease the objective by a fair share of the quadratic model's
/// prediction, which keeps the iterate inside one interference fringe
/// instead of hopping between them. The result is never worse than the
/// (projected) start.
inline RefineResult refine_local(const Point2 &start, const UserSpec &user, const Placement &placement,
                                 const WaveguideConfig &wg, const EvaluatorConfig &cfg) {
    const double r = user.radius_m;
    Point2 x = detail::project_to_disk(start, r);
    auto eval = channel_gain_sq_derivatives(user.u_hat + x, placement, wg);
    RefineResult out{x, eval.value, 0};
    if (r == 0.0) return out;

    const double step_tol = cfg.refine_step_tol * std::max(1.0, r);
    double trust = std::min(r, wg.wavelength() / 4.0);

    for (std::size_t it = 0; it < cfg.refine_max_iters; ++it) {
        const Point2 g{eval.grad[0], eval.grad[1]};
        const double f = eval.value;
        const bool on_boundary = norm(x) >= r * (1.0 - 1e-12) && dot(g, x) < 0.0;
        // Projected gradient: only the tangential part counts on an active boundary.
        const double gnorm = on_boundary ? std::abs(dot(g, Point2{-x.y, x.x})) / norm(x) : norm(g);
        if (gnorm * r <= cfg.refine_step_tol * f || gnorm == 0.0) break;

        Point2 xt;
        double predicted = 0.0;
        if (on_boundary) {
            const double theta = std::atan2(x.y, x.x);
            const Point2 t{-std::sin(theta), std::cos(theta)};
            const Point2 ht{eval.hess[0] * t.x + eval.hess[1] * t.y, eval.hess[1] * t.x + eval.hess[2] * t.y};
            const double f_theta = r * dot(g, t);
            const double f_theta2 = r * r * dot(t, ht) - dot(g, x);
            const double f_ss = std::abs(f_theta2) / (r * r);
            const double arc_cap = f_ss > 0.0 ? eval.amplitude_sum / std::sqrt(f_ss) : trust;
            const double max_dtheta = std::min({trust, arc_cap, 0.25 * r}) / r;
            double dtheta = f_theta2 > 0.0 ? -f_theta / f_theta2 : -std::copysign(max_dtheta, f_theta);
            dtheta = std::clamp(dtheta, -max_dtheta, max_dtheta);
            xt = {r * std::cos(theta + dtheta), r * std::sin(theta + dtheta)};
            predicted = -(f_theta * dtheta + 0.5 * f_theta2 * dtheta * dtheta);
        } else {
            Point2 dir = detail::saddle_free_newton(eval.grad, eval.hess, eval.amplitude_sum);
            const double dn = norm(dir);
            if (dn > trust) dir = (trust / dn) * dir;
            xt = detail::project_to_disk(x + dir, r);
            const Point2 s = xt - x;
            const Point2 hs{eval.hess[0] * s.x + eval.hess[1] * s.y, eval.hess[1] * s.x + eval.hess[2] * s.y};
            predicted = -(dot(g, s) + 0.5 * dot(s, hs));
        }

        const double step = norm(xt - x);
        const auto et = channel_gain_sq_derivatives(user.u_hat + xt, placement, wg);
        const double actual = f - et.value;
        const double ratio = predicted > 0.0 ? actual / predicted : (actual > 0.0 ? 1.0 : -1.0);

        if (ratio < 0.25) {
            trust = 0.25 * step;
        } else if (ratio > 0.75 && ratio < 4.0 && step >= 0.99 * trust) {
            trust = std::min(2.0 * trust, 2.0 * r);
        }

        if (ratio >= 0.1 && actual > 0.0) {
            x = xt;
            eval = et;
            out = {x, eval.value, it + 1};
            if (step < step_tol) break;
        } else if (trust < step_tol) {
            break;
        }
    }
    return out;
}

// ------------------------------------------------------------------------
// Worst-case gain
// ------------------------------------------------------------------------

namespace detail {

// Vogel spiral: area-uniform, low-discrepancy points strictly inside the disk,
// rotated by a seed-derived angle.
inline Point2 interior_start(std::size_t i, std::size_t count, double r, std::uint64_t seed) {
    constexpr double golden_angle = 2.399963229728653; // pi (3 - sqrt 5)
    const double rotation = 2.0 * std::numbers::pi * static_cast<double>(seed % 1000003ULL) / 1000003.0;
    const double rho = r * std::sqrt((static_cast<double>(i) + 0.5) / static_cast<double>(count));
    const double theta = rotation + golden_angle * static_cast<double>(i);
    return {rho * std::cos(theta), rho * std::sin(theta)};
}

// Lower bound max(0, 2 max_n a_n - sum_n a_n) on |h| from the triangle
// inequality, a_n = sqrt(eta)/d_n. Returns the signed slack and its gradient.
struct AmplitudeBound {
    double slack = 0.0;
    Point2 grad;
};

inline AmplitudeBound amplitude_bound(const Point2 &u, const Placement &placement, const WaveguideConfig &wg) {
    const double sqrt_eta = std::sqrt(wg.eta());
    const double h2 = wg.height_m * wg.height_m;
    double sum = 0.0, best = -1.0;
    Point2 sum_grad, best_grad;
    for (double v : placement.positions) {
        const double dx = u.x - v;
        const double d2 = dx * dx + u.y * u.y + h2;
        const double d = std::sqrt(d2);
        const double a = sqrt_eta / d;
        const Point2 ga{-a * dx / d2, -a * u.y / d2};
        sum += a;
        sum_grad += ga;
        if (a > best) {
            best = a;
            best_grad = ga;
        }
    }
    return {2.0 * best - sum, 2.0 * best_grad - sum_grad};
}

inline double amplitude_bound_sq(const Point2 &u, const Placement &placement, const WaveguideConfig &wg) {
    const double s = amplitude_bound(u, placement, wg).slack;
    return s > 0.0 ? s * s : 0.0;
}

// Projected gradient descent on the bound slack; moves a start toward the
// region where the antenna amplitudes can cancel.
inline Point2 descend_amplitude_bound(Point2 x, const UserSpec &user, const Placement &placement,
                                      const WaveguideConfig &wg, std::size_t iters) {
    const double r = user.radius_m;
    auto cur = amplitude_bound(user.u_hat + x, placement, wg);
    double step = 0.25 * r;
    for (std::size_t it = 0; it < iters && cur.slack > 0.0; ++it) {
        const double gn = norm(cur.grad);
        if (gn == 0.0) break;
        bool moved = false;
        for (int bt = 0; bt < 30; ++bt, step *= 0.5) {
            const Point2 xt = project_to_disk(x - (step / gn) * cur.grad, r);
            const auto nt = amplitude_bound(user.u_hat + xt, placement, wg);
            if (nt.slack < cur.slack) {
                x = xt;
                cur = nt;
                moved = true;
                step *= 2.0;
                break;
            }
        }
        if (!moved) break;
    }
    return x;
}

// Gauss-Newton on the phase residuals that put every term in antiphase with
// the strongest one, which is where |h| meets the amplitude bound. Residuals
// are amplitude-weighted; with two antennas the minimum-norm step is taken.
inline Point2 align_phases(Point2 x, const UserSpec &user, const Placement &placement, const WaveguideConfig &wg,
                           std::size_t iters) {
    const std::size_t n = placement.size();
    if (n < 2) return x;
    const double r = user.radius_m;
    const double lambda = wg.wavelength();
    const double lambda_g = wg.guided_wavelength();
    const double k = 2.0 * std::numbers::pi / lambda;
    const double h2 = wg.height_m * wg.height_m;
    const double feed = wg.length_m / 2.0;
    std::vector<double> amp(n), phase(n);
    std::vector<Point2> grad(n);
    for (std::size_t it = 0; it < iters; ++it) {
        const Point2 u = user.u_hat + x;
        std::size_t strongest = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = u.x - placement[i];
            const double d = std::sqrt(dx * dx + u.y * u.y + h2);
            amp[i] = 1.0 / d;
            phase[i] = std::arg(propagation_phasor(d, placement[i] + feed, lambda, lambda_g));
            grad[i] = {-k * dx / d, -k * u.y / d};
            if (amp[i] > amp[strongest]) strongest = i;
        }
        // Normal equations of the weighted least-squares step.
        double a11 = 0.0, a12 = 0.0, a22 = 0.0, b1 = 0.0, b2 = 0.0;
        Point2 single_row;
        double single_res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == strongest) continue;
            double res = phase[i] - phase[strongest] - std::numbers::pi;
            res -= 2.0 * std::numbers::pi * std::round(res / (2.0 * std::numbers::pi));
            const Point2 row = grad[i] - grad[strongest];
            const double w = amp[i] * amp[i];
            a11 += w * row.x * row.x;
            a12 += w * row.x * row.y;
            a22 += w * row.y * row.y;
            b1 -= w * row.x * res;
            b2 -= w * row.y * res;
            single_row = row;
            single_res = res;
        }
        Point2 step;
        const double det = a11 * a22 - a12 * a12;
        if (n == 2 || det <= 1e-12 * (a11 * a22 + 1e-300)) {
            const double rn = norm_sq(single_row);
            if (n != 2 || rn == 0.0) break;
            step = (-single_res / rn) * single_row;
        } else {
            step = {(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
        }
        x = project_to_disk(x + step, r);
        if (norm(step) < 1e-9 * lambda) break;
    }
    return x;
}

// Lower bound (a_m - |S_m|)^2 on |h|^2 where S_m sums every term except m;
// tight wherever the phase of term m against S_m can still be tuned.
struct PartialEnv { double value; Point2 grad; };
// (a_m - |S_m|)^2 where S_m is the sum of all other terms.
inline PartialEnv partial_envelope(const Point2 &u, std::size_t m, const Placement &pl, const WaveguideConfig &wg){
  using cd=std::complex<double>;
  const double lambda=wg.wavelength(), lg=wg.guided_wavelength(), k=2*std::numbers::pi/lambda, se=std::sqrt(wg.eta()), h2=wg.height_m*wg.height_m, feed=wg.length_m/2;
  cd S{0,0}, Sx{0,0}, Sy{0,0}; double am=0; Point2 gam;
  for(std::size_t i=0;i<pl.size();++i){
    const double dx=u.x-pl[i], d=std::sqrt(dx*dx+u.y*u.y+h2), inv=1/d;
    if(i==m){ am=se*inv; gam={-am*dx*inv*inv, -am*u.y*inv*inv}; continue; }
    const cd c=(se*inv)*propagation_phasor(d,pl[i]+feed,lambda,lg);
    const cd c1=-c*cd{inv,k};
    S+=c; Sx+=c1*(dx*inv); Sy+=c1*(u.y*inv);
  }
  const double sa=std::abs(S);
  Point2 gs{0,0}; if(sa>0){ gs={ (std::conj(S)*Sx).real()/sa, (std::conj(S)*Sy).real()/sa }; }
  const double diff=am-sa;
  return {diff*diff, 2*diff*(gam-gs)};
}
inline Point2 descend_partial(Point2 x, std::size_t m, const UserSpec&user,const Placement&pl,const WaveguideConfig&wg,int iters){
  const double r=user.radius_m; auto cur=partial_envelope(user.u_hat+x,m,pl,wg); double step=0.25*r;
  for(int it=0;it<iters;++it){ double gn=norm(cur.grad); if(gn==0)break; bool moved=false;
    for(int bt=0;bt<40;++bt,step*=0.5){ Point2 xt=project_to_disk(x-(step/gn)*cur.grad,r); auto nt=partial_envelope(user.u_hat+xt,m,pl,wg);
      if(nt.value<cur.value){x=xt;cur=nt;moved=true;step*=2;break;} }
    if(!moved)break; }
  return x;
}
// min-norm phase step putting term m in antiphase with S_m
inline Point2 align_partial(Point2 x, std::size_t m, const UserSpec&user,const Placement&pl,const WaveguideConfig&wg,int iters){
  using cd=std::complex<double>;
  const double lambda=wg.wavelength(), lg=wg.guided_wavelength(), k=2*std::numbers::pi/lambda, h2=wg.height_m*wg.height_m, feed=wg.length_m/2;
  for(int it=0;it<iters;++it){
    Point2 u=user.u_hat+x; cd S{0,0},Sx{0,0},Sy{0,0}; cd cm; Point2 gm;
    for(std::size_t i=0;i<pl.size();++i){ const double dx=u.x-pl[i], d=std::sqrt(dx*dx+u.y*u.y+h2), inv=1/d;
      const cd c=inv*propagation_phasor(d,pl[i]+feed,lambda,lg);
      if(i==m){cm=c; gm={-k*dx*inv,-k*u.y*inv}; continue;}
      const cd c1=-c*cd{inv,k}; S+=c; Sx+=c1*(dx*inv); Sy+=c1*(u.y*inv);}
    if(std::abs(S)==0)break;
    // grad of arg(S) = Im(conj(S) dS)/|S|^2
    const double s2=std::norm(S);
    Point2 gS{(std::conj(S)*Sx).imag()/s2,(std::conj(S)*Sy).imag()/s2};
    Point2 row=gm-gS; double res=std::arg(cm)-std::arg(S)-std::numbers::pi; res-=2*std::numbers::pi*std::round(res/(2*std::numbers::pi));
    double rn=norm_sq(row); if(rn==0)break; Point2 step=(-res/rn)*row;
    x=project_to_disk(x+step,user.radius_m); if(norm(step)<1e-9*lambda)break;
  }
  return x;
}

// Damped Gauss-Newton on the complex channel itself, aiming each step at the
// zero of its linearisation. Steps are capped at a tenth of the radius and
// halved until |h|^2 decreases.
inline Point2 gauss_newton_null(Point2 x, const UserSpec &user, const Placement &placement, const WaveguideConfig &wg,
                                std::size_t iters) {
    using cd = std::complex<double>;
    const double r = user.radius_m;
    const double lambda = wg.wavelength();
    const double lambda_g = wg.guided_wavelength();
    const double k = 2.0 * std::numbers::pi / lambda;
    const double sqrt_eta = std::sqrt(wg.eta());
    const double h2 = wg.height_m * wg.height_m;
    const double feed = wg.length_m / 2.0;
    double f = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < iters; ++it) {
        const Point2 u = user.u_hat + x;
        cd h{0.0, 0.0}, hx{0.0, 0.0}, hy{0.0, 0.0};
        for (double v : placement.positions) {
            const double dx = u.x - v;
            const double d = std::sqrt(dx * dx + u.y * u.y + h2);
            const double inv_d = 1.0 / d;
            const cd c = (sqrt_eta * inv_d) * propagation_phasor(d, v + feed, lambda, lambda_g);
            const cd c1 = -c * cd{inv_d, k};
            h += c;
            hx += c1 * (dx * inv_d);
            hy += c1 * (u.y * inv_d);
        }
        f = std::norm(h);
        const double det = hx.real() * hy.imag() - hy.real() * hx.imag();
        if (det == 0.0) break;
        Point2 step{-(hy.imag() * h.real() - hy.real() * h.imag()) / det,
                    -(hx.real() * h.imag() - hx.imag() * h.real()) / det};
        const double len = norm(step);
        if (len > 0.1 * r) step = (0.1 * r / len) * step;
        bool moved = false;
        for (int bt = 0; bt < 8 && !moved; ++bt, step = 0.5 * step) {
            const Point2 xt = project_to_disk(x + step, r);
            if (channel_gain_sq(user.u_hat + xt, placement, wg) < f) {
                x = xt;
                moved = true;
            }
        }
        if (!moved) break;
    }
    return x;
}

// Lower bound on |h|^2 over an axis-aligned square cell, from two bounds:
//  - amplitude intervals over the cell in the triangle inequality;
//  - |h(c)| minus a Lipschitz constant of h with the phase of one reference
//    antenna factored out, so that antennas seen from similar directions
//    contribute little slope.
struct CellBound {
    double lower = 0.0;
    double centre_value = 0.0;
};

struct CellScratch {
    std::vector<double> lo, hi, inv_dmin, gx, gy;
};

inline CellBound cell_bound(const Point2 &c, double half, const Placement &pl, const WaveguideConfig &wg,
                            CellScratch &s) {
    const std::size_t N = pl.size();
    const double lambda = wg.wavelength();
    const double lambda_g = wg.guided_wavelength();
    const double k = 2.0 * std::numbers::pi / lambda;
    const double sqrt_eta = std::sqrt(wg.eta());
    const double h2 = wg.height_m * wg.height_m;
    const double feed = wg.length_m / 2.0;
    const double rho = half * std::numbers::sqrt2;
    s.lo.resize(N);
    s.hi.resize(N);
    s.inv_dmin.resize(N);
    s.gx.resize(N);
    s.gy.resize(N);

    std::complex<double> h{0.0, 0.0};
    double sum_hi = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        const double dx = c.x - pl[n];
        const double dy = c.y;
        const double d = std::sqrt(dx * dx + dy * dy + h2);
        h += (sqrt_eta / d) * propagation_phasor(d, pl[n] + feed, lambda, lambda_g);
        s.gx[n] = dx / d;
        s.gy[n] = dy / d;
        const double ex = std::max(0.0, std::abs(dx) - half), ey = std::max(0.0, std::abs(dy) - half);
        const double fx = std::abs(dx) + half, fy = std::abs(dy) + half;
        const double dmin = std::sqrt(ex * ex + ey * ey + h2);
        s.hi[n] = sqrt_eta / dmin;
        s.lo[n] = sqrt_eta / std::sqrt(fx * fx + fy * fy + h2);
        s.inv_dmin[n] = 1.0 / dmin;
        sum_hi += s.hi[n];
    }
    const double mag = std::abs(h);
    double lower = 0.0;
    for (std::size_t m = 0; m < N; ++m) {
        lower = std::max(lower, s.lo[m] - (sum_hi - s.hi[m]));
        double slope = s.hi[m] * s.inv_dmin[m];
        for (std::size_t n = 0; n < N; ++n) {
            if (n == m) continue;
            // Unit vectors towards two antennas differ by at most their
            // separation over the distance to the segment joining them.
            const double seg_lo = std::min(pl[n], pl[m]), seg_hi = std::max(pl[n], pl[m]);
            const double sx = std::max({0.0, seg_lo - (c.x + half), (c.x - half) - seg_hi});
            const double sy = std::max(0.0, std::abs(c.y) - half);
            const double dphase = std::min(std::hypot(s.gx[n] - s.gx[m], s.gy[n] - s.gy[m]) +
                                               (s.inv_dmin[n] + s.inv_dmin[m]) * rho,
                                           std::abs(pl[n] - pl[m]) / std::sqrt(sx * sx + sy * sy + h2));
            slope += s.hi[n] * (s.inv_dmin[n] + k * dphase);
        }
        lower = std::max(lower, mag - slope * rho);
    }
    return {lower * lower, mag * mag};
}

struct ScanSample {
    Point2 offset;
    double value;
};

// Best-first branch and bound over the disk. Cells whose lower bound is not
// below `best` are discarded; cells reaching the minimum size contribute
// their (disk-projected) centre as a sample. Returns the deepest samples.
inline std::vector<ScanSample> branch_and_bound(const UserSpec &user, const Placement &pl, const WaveguideConfig &wg,
                                                double min_cell, std::size_t max_cells, std::size_t keep,
                                                double &best, Point2 &best_arg) {
    struct Node {
        Point2 c;
        double half;
        double lower;
        bool operator>(const Node &o) const { return lower > o.lower; }
    };
    const double r = user.radius_m;
    CellScratch scratch;
    std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
    std::vector<ScanSample> leaves;
    std::size_t evaluated = 0;

    auto visit = [&](const Point2 &c, double half) {
        if (norm(c) - half * std::numbers::sqrt2 > r) return;
        const auto b = cell_bound(user.u_hat + c, half, pl, wg, scratch);
        ++evaluated;
        if (norm(c) <= r && b.centre_value < best) {
            best = b.centre_value;
            best_arg = c;
        }
        if (b.lower < best) open.push({c, half, b.lower});
    };
    auto offer = [&](const ScanSample &s) {
        if (leaves.size() < keep) {
            leaves.push_back(s);
        } else {
            auto worst = std::max_element(leaves.begin(), leaves.end(),
                                          [](const ScanSample &a, const ScanSample &b) { return a.value < b.value; });
            if (s.value < worst->value) *worst = s;
        }
    };

    visit({0.0, 0.0}, r);
    while (!open.empty() && evaluated < max_cells) {
        const Node node = open.top();
        open.pop();
        if (node.lower >= best) break;
        if (2.0 * node.half <= min_cell) {
            const Point2 x = project_to_disk(node.c, r);
            const double f = channel_gain_sq(user.u_hat + x, pl, wg);
            if (f < best) {
                best = f;
                best_arg = x;
            }
            offer({x, f});
            continue;
        }
        const double q = 0.5 * node.half;
        for (const Point2 d : {Point2{-q, -q}, Point2{q, -q}, Point2{-q, q}, Point2{q, q}}) visit(node.c + d, q);
    }
    std::sort(leaves.begin(), leaves.end(), [](const ScanSample &a, const ScanSample &b) { return a.value < b.value; });
    return leaves;
}

inline WorstCaseResult finish(double hat, const Point2 &arg, WorstCaseMethod method, double eps_floor) {
    WorstCaseResult res;
    res.gain_sq_hat = hat;
    res.arg_delta = arg;
    res.method = method;
    res.floored = hat < eps_floor;
    res.gain_sq_safe = std::max(hat, eps_floor);
    return res;
}

} // namespace detail

/// Worst-case squared channel magnitude over the user's uncertainty disk,
/// plus the floored value used for power allocation.
///
/// A single antenna is handled exactly through the farthest disk point. For
/// several antennas the estimate is the smallest of: the disk center, the
/// refined best boundary sample, and refined interior starts (`extra_starts`
/// are appended to the interior starts and refined the same way).
inline WorstCaseResult worst_case_gain(const UserSpec &user, const Placement &placement, const WaveguideConfig &wg,
                                       const EvaluatorConfig &cfg, std::span<const Point2> extra_starts = {}) {
    if (placement.size() == 1) {
        const auto far = worst_case_distance_sq(user, placement[0], wg);
        return detail::finish(wg.eta() / far.distance_sq, far.offset, WorstCaseMethod::geometric, cfg.eps_floor);
    }

    const double r = user.radius_m;
    double best = channel_gain_sq(user.u_hat, placement, wg);
    Point2 best_arg{0.0, 0.0};
    if (r == 0.0) return detail::finish(best, best_arg, WorstCaseMethod::sampled_refined, cfg.eps_floor);

    auto consider = [&](const RefineResult &res) {
        if (res.value < best) {
            best = res.value;
            best_arg = res.offset;
        }
    };

    const auto boundary = boundary_sample_min(user, placement, wg, cfg.boundary_samples);
    const Point2 boundary_offset{r * std::cos(boundary.angle), r * std::sin(boundary.angle)};
    consider(refine_local(boundary_offset, user, placement, wg, cfg));
    for (std::size_t i = 0; i < cfg.interior_starts; ++i)
        consider(refine_local(detail::interior_start(i, cfg.interior_starts, r, cfg.seed), user, placement, wg, cfg));
    for (const auto &s : extra_starts) consider(refine_local(s, user, placement, wg, cfg));

    if (cfg.screen_pool > 0 && cfg.screen_refines > 0) {
        struct Screened {
            Point2 offset;
            double value;
            double bound;
        };
        std::vector<Screened> pool;
        pool.reserve(cfg.screen_pool);
        for (std::size_t i = 0; i < cfg.screen_pool; ++i) {
            const Point2 off = detail::interior_start(i, cfg.screen_pool, r, cfg.seed + 0x9e3779b9ULL);
            const Point2 p = user.u_hat + off;
            pool.push_back({off, channel_gain_sq(p, placement, wg), detail::amplitude_bound_sq(p, placement, wg)});
        }
        const std::size_t picks = std::min(cfg.screen_refines, pool.size());
        auto by_value = pool;
        std::partial_sort(by_value.begin(), by_value.begin() + static_cast<std::ptrdiff_t>(picks), by_value.end(),
                          [](const Screened &a, const Screened &b) { return a.value < b.value; });
        for (std::size_t i = 0; i < picks; ++i) consider(refine_local(by_value[i].offset, user, placement, wg, cfg));

        // Lower bounds on |h|^2 vary slowly compared with the fringes, so
        // their minimizers over the pool and the boundary ring are located
        // first; the phases are then aligned there and the result refined.
        for (std::size_t i = 0; i < cfg.boundary_samples; ++i) {
            const double theta =
                2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(cfg.boundary_samples);
            pool.push_back({Point2{r * std::cos(theta), r * std::sin(theta)}, 0.0, 0.0});
        }
        const double lambda = wg.wavelength();
        const std::size_t descents = std::min(2 * picks, pool.size());
        std::vector<Point2> candidates;
        auto guided = [&](auto &&bound, auto &&descend, auto &&align) {
            for (auto &c : pool) c.bound = bound(c.offset);
            std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(descents), pool.end(),
                              [](const Screened &a, const Screened &b) { return a.bound < b.bound; });
            std::vector<Screened> lows(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(descents));
            for (auto &c : lows) {
                c.offset = descend(c.offset);
                c.bound = bound(c.offset);
            }
            std::sort(lows.begin(), lows.end(), [](const Screened &a, const Screened &b) { return a.bound < b.bound; });
            std::vector<Point2> kept;
            for (const auto &c : lows) {
                if (kept.size() == picks) break;
                bool distinct = true;
                for (const auto &e : kept) distinct = distinct && norm(e - c.offset) > 0.05 * r;
                if (distinct) kept.push_back(c.offset);
            }
            for (const auto &e : kept) candidates.push_back(align(e));
        };
        guided([&](const Point2 &x) { return detail::amplitude_bound_sq(user.u_hat + x, placement, wg); },
               [&](const Point2 &x) { return detail::descend_amplitude_bound(x, user, placement, wg, 60); },
               [&](const Point2 &x) { return detail::align_phases(x, user, placement, wg, 8); });
        for (std::size_t m = 0; cfg.leave_one_out_bounds && placement.size() > 2 && m < placement.size(); ++m) {
            guided([&](const Point2 &x) { return detail::partial_envelope(user.u_hat + x, m, placement, wg).value; },
                   [&](const Point2 &x) { return detail::descend_partial(x, m, user, placement, wg, 60); },
                   [&](const Point2 &x) { return detail::align_partial(x, m, user, placement, wg, 8); });
        }
        // Gauss-Newton from every pool point; only the deepest few are kept.
        {
            std::vector<Screened> nulls;
            nulls.reserve(pool.size());
            for (const auto &c : pool) {
                const Point2 x = detail::gauss_newton_null(c.offset, user, placement, wg, 20);
                nulls.push_back({x, channel_gain_sq(user.u_hat + x, placement, wg), 0.0});
            }
            std::partial_sort(nulls.begin(), nulls.begin() + static_cast<std::ptrdiff_t>(picks), nulls.end(),
                              [](const Screened &a, const Screened &b) { return a.value < b.value; });
            for (std::size_t i = 0; i < picks; ++i) consider(refine_local(nulls[i].offset, user, placement, wg, cfg));
        }
        const std::size_t aligned = candidates.size();
        for (std::size_t c = 0; c < aligned && c < picks; ++c) {
            // Dark fringes are millimetre-scale, so a small patch around each
            // envelope minimizer is scanned as well.
            constexpr int half = 4;
            const Point2 centre = candidates[c];
            Point2 patch_best = centre;
            double patch_value = channel_gain_sq(user.u_hat + centre, placement, wg);
            for (int i = -half; i <= half; ++i)
                for (int j = -half; j <= half; ++j) {
                    const Point2 off =
                        detail::project_to_disk(centre + Point2{0.25 * lambda * i, 0.25 * lambda * j}, r);
                    const double f = channel_gain_sq(user.u_hat + off, placement, wg);
                    if (f < patch_value) {
                        patch_value = f;
                        patch_best = off;
                    }
                }
            candidates.push_back(patch_best);
        }
        for (const auto &c : candidates) consider(refine_local(c, user, placement, wg, cfg));
    }

    if (cfg.scan_cell_wavelengths > 0.0 && best >= cfg.eps_floor) {
        const auto leaves = detail::branch_and_bound(user, placement, wg, cfg.scan_cell_wavelengths * wg.wavelength(),
                                                     cfg.scan_max_cells, cfg.scan_refines, best, best_arg);
        for (const auto &leaf : leaves) consider(refine_local(leaf.offset, user, placement, wg, cfg));
    }

    return detail::finish(best, best_arg, WorstCaseMethod::sampled_refined, cfg.eps_floor);
}

// ------------------------------------------------------------------------
// Brute-force oracle
// ------------------------------------------------------------------------

/// Minimum of |h|^2 over a polar grid of `grid_res` radii (center and exact
/// boundary ring included) times 8 * grid_res angles.
inline WorstCaseResult brute_force_gain(const UserSpec &user, const Placement &placement, const WaveguideConfig &wg,
                                        std::size_t grid_res, double eps_floor = EvaluatorConfig{}.eps_floor) {
    if (grid_res < 16) throw std::invalid_argument("brute_force_gain: grid_res must be >= 16");
    const double r = user.radius_m;
    double best = channel_gain_sq(user.u_hat, placement, wg);
    Point2 best_arg{0.0, 0.0};
    if (r > 0.0) {
        const std::size_t num_angles = 8 * grid_res;
        std::vector<Point2> dirs(num_angles);
        for (std::size_t j = 0; j < num_angles; ++j) {
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(num_angles);
            dirs[j] = {std::cos(theta), std::sin(theta)};
        }
        const ChannelKernel kernel(placement, wg);
        for (std::size_t i = 1; i < grid_res; ++i) {
            const double rho = r * static_cast<double>(i) / static_cast<double>(grid_res - 1);
            for (const auto &dir : dirs) {
                const Point2 off = rho * dir;
                const double f = kernel.gain_sq(user.u_hat + off);
                if (f < best) {
                    best = f;
                    best_arg = off;
                }
            }
        }
    }
    return detail::finish(best, best_arg, WorstCaseMethod::brute_force, eps_floor);
}

} // namespace pinch
