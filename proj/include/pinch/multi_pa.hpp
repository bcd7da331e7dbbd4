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
#include "pinch/random.hpp"
#include "pinch/worst_case.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pinch {

// ------------------------------------------------------------------------
// Closed-form power and the total-power objective
// ------------------------------------------------------------------------

/// Per-user power N gamma / m~ that meets the SNR threshold at the worst
/// point of the disk under equal per-antenna power.
inline double optimal_power(double gamma, double gain_sq_safe, std::size_t num_antennas) {
    return static_cast<double>(num_antennas) * gamma / gain_sq_safe;
}

inline std::vector<double> user_thresholds(std::span<const UserSpec> users) {
    std::vector<double> gammas;
    gammas.reserve(users.size());
    for (const auto &u : users) gammas.push_back(snr_threshold(users.size(), u.rate_min, u.noise_power_w));
    return gammas;
}

struct PowerEvaluation {
    PlacementVerdict verdict;
    std::vector<double> powers;
    std::vector<WorstCaseResult> gains;
    double total_power = std::numeric_limits<double>::infinity(); // infinite when infeasible

    bool ok() const { return verdict.feasible; }
};

/// Worst-case gains and closed-form powers for every user at a placement.
/// An infeasible placement is reported through the verdict, not evaluated.
inline PowerEvaluation total_power(const Placement &placement, std::span<const UserSpec> users,
                                   const WaveguideConfig &wg, const EvaluatorConfig &cfg) {
    PowerEvaluation out;
    out.verdict = validate_placement(placement, wg);
    if (placement.size() == 0) {
        out.verdict.feasible = false;
        return out;
    }
    if (!out.verdict) return out;
    out.total_power = 0.0;
    for (const auto &u : users) {
        const double gamma = snr_threshold(users.size(), u.rate_min, u.noise_power_w);
        auto g = worst_case_gain(u, placement, wg, cfg);
        const double p = optimal_power(gamma, g.gain_sq_safe, placement.size());
        out.powers.push_back(p);
        out.gains.push_back(g);
        out.total_power += p;
    }
    return out;
}

/// Objective value only; same arithmetic and summation order as total_power.
inline double total_power_value(const Placement &placement, std::span<const UserSpec> users,
                                const WaveguideConfig &wg, const EvaluatorConfig &cfg) {
    if (placement.size() == 0 || !validate_placement(placement, wg)) return std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (const auto &u : users) {
        const double gamma = snr_threshold(users.size(), u.rate_min, u.noise_power_w);
        total += optimal_power(gamma, worst_case_gain(u, placement, wg, cfg).gain_sq_safe, placement.size());
    }
    return total;
}

// ------------------------------------------------------------------------
// Placements
// ------------------------------------------------------------------------

/// Range of antenna n keeping half-wavelength spacing to its neighbours and
/// staying on the waveguide.
inline std::pair<double, double> feasible_interval(const Placement &placement, std::size_t n,
                                                   const WaveguideConfig &wg) {
    const double half = wg.length_m / 2.0;
    const double gap = wg.wavelength() / 2.0;
    const double lo = n > 0 ? std::max(-half, placement[n - 1] + gap) : -half;
    const double hi = n + 1 < placement.size() ? std::min(half, placement[n + 1] - gap) : half;
    return {lo, hi};
}

/// N antennas from the feed end at exactly half-wavelength spacing.
inline Placement fixed_baseline_placement(std::size_t num_antennas, const WaveguideConfig &wg) {
    const double gap = wg.wavelength() / 2.0;
    if (num_antennas == 0 || static_cast<double>(num_antennas - 1) * gap > wg.length_m)
        throw std::invalid_argument("fixed_baseline_placement: waveguide cannot host the antennas");
    Placement p;
    for (std::size_t n = 0; n < num_antennas; ++n) p.positions.push_back(-wg.length_m / 2.0 + static_cast<double>(n) * gap);
    return p;
}

/// Uniform draw from the feasible set: N sorted uniforms on the span shortened
/// by (N-1) half-wavelengths, the n-th shifted by n half-wavelengths.
inline Placement random_feasible_placement(std::size_t num_antennas, const WaveguideConfig &wg, Rng &rng) {
    const double gap = wg.wavelength() / 2.0;
    const double span = wg.length_m - static_cast<double>(num_antennas - 1) * gap;
    if (num_antennas == 0 || span < 0.0)
        throw std::invalid_argument("random_feasible_placement: waveguide cannot host the antennas");
    Placement p;
    p.positions.resize(num_antennas);
    for (auto &v : p.positions) v = -wg.length_m / 2.0 + span * uniform01(rng);
    std::sort(p.positions.begin(), p.positions.end());
    for (std::size_t n = 0; n < num_antennas; ++n) p.positions[n] += static_cast<double>(n) * gap;
    return p;
}

// ------------------------------------------------------------------------
// Block coordinate descent
// ------------------------------------------------------------------------

struct BcdConfig {
    std::size_t num_restarts = 8;       // R
    std::size_t max_sweeps = 30;        // I_BCD
    std::size_t line_search_evals = 41; // I_line
    double delta_tol = 1e-10;           // W
    double rel_stop_tol = 1e-4;
    std::uint64_t rng_seed = 0;
    // Golden-section steps around the best grid point; the grid alone cannot
    // resolve a smooth optimum finer than its spacing.
    std::size_t polish_evals = 24;
    // Adds one restart seeded at fixed_baseline_placement after the R random ones.
    bool include_baseline_start = false;
    // Evaluator used inside the sweeps. Final powers and the restart ranking
    // always use the evaluator passed to bcd_solve.
    std::optional<EvaluatorConfig> search_evaluator;

    void validate() const {
        if (num_restarts < 1) throw std::invalid_argument("bcd: num_restarts must be >= 1");
        if (line_search_evals < 3) throw std::invalid_argument("bcd: line_search_evals must be >= 3");
        if (!(delta_tol >= 0.0)) throw std::invalid_argument("bcd: delta_tol must be >= 0");
        if (!(rel_stop_tol >= 0.0)) throw std::invalid_argument("bcd: rel_stop_tol must be >= 0");
        if (search_evaluator) search_evaluator->validate();
    }
};

struct CoordinateUpdate {
    double position = 0.0;
    double objective = 0.0;
    bool accepted = false;
    std::size_t evaluations = 0;
};

/// One-dimensional update of antenna n: a uniform grid over the feasible
/// interval (ends included), then golden-section polishing inside the best
/// grid cell pair. The best candidate replaces the incumbent only if it lowers
/// the objective by more than delta_tol plus a rounding guard.
inline CoordinateUpdate coordinate_update(const Placement &placement, std::size_t n, std::span<const UserSpec> users,
                                          const WaveguideConfig &wg, const EvaluatorConfig &eval_cfg,
                                          std::size_t line_evals, double incumbent_objective,
                                          double delta_tol = 0.0, std::size_t polish_evals = 0) {
    CoordinateUpdate out{placement[n], incumbent_objective, false, 0};
    const auto [lo, hi] = feasible_interval(placement, n, wg);
    if (!(hi > lo) || line_evals < 2) return out;

    Placement trial = placement;
    auto eval_at = [&](double v) {
        trial[n] = v;
        ++out.evaluations;
        return total_power_value(trial, users, wg, eval_cfg);
    };

    const double step = (hi - lo) / static_cast<double>(line_evals - 1);
    double best_v = placement[n];
    double best_f = incumbent_objective;
    std::size_t best_i = line_evals;
    for (std::size_t i = 0; i < line_evals; ++i) {
        const double v = i + 1 == line_evals ? hi : lo + static_cast<double>(i) * step;
        const double f = eval_at(v);
        if (f < best_f) {
            best_f = f;
            best_v = v;
            best_i = i;
        }
    }

    if (polish_evals > 0 && best_i < line_evals) {
        constexpr double inv_phi = 0.6180339887498949;
        double a = std::max(lo, best_v - step);
        double b = std::min(hi, best_v + step);
        double x1 = b - inv_phi * (b - a);
        double x2 = a + inv_phi * (b - a);
        double f1 = eval_at(x1), f2 = eval_at(x2);
        for (std::size_t k = 2; k < polish_evals; ++k) {
            if (f1 < best_f) best_f = f1, best_v = x1;
            if (f2 < best_f) best_f = f2, best_v = x2;
            if (f1 <= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = eval_at(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = eval_at(x2);
            }
        }
        if (f1 < best_f) best_f = f1, best_v = x1;
        if (f2 < best_f) best_f = f2, best_v = x2;
    }

    const double guard = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(incumbent_objective);
    if (best_f < incumbent_objective - delta_tol - guard) {
        out.position = best_v;
        out.objective = best_f;
        out.accepted = true;
    }
    return out;
}

struct RestartOutcome {
    Placement initial;
    Placement final_placement;
    std::vector<double> sweep_trace; // search objective: initial, then after each sweep
    double objective = 0.0;          // authoritative objective of the reported placement
    bool baseline_seeded = false;
};

struct MultiPaSolution {
    Placement placement;
    std::vector<double> powers;
    std::vector<WorstCaseResult> worst_gains;
    double total_power = 0.0;
    std::vector<double> restart_trace; // authoritative objective per restart
    std::vector<double> sweep_trace;   // winning restart
    std::size_t best_restart = 0;
    std::vector<RestartOutcome> restarts;
};

namespace detail {

inline RestartOutcome run_restart(Placement start, std::span<const UserSpec> users, const WaveguideConfig &wg,
                                  const EvaluatorConfig &eval_cfg, const EvaluatorConfig &search_cfg,
                                  const BcdConfig &cfg) {
    RestartOutcome out;
    out.initial = start;
    Placement x = std::move(start);
    double f = total_power_value(x, users, wg, search_cfg);
    out.sweep_trace.push_back(f);
    for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        const double before = f;
        for (std::size_t n = 0; n < x.size(); ++n) {
            const auto upd = coordinate_update(x, n, users, wg, search_cfg, cfg.line_search_evals, f, cfg.delta_tol,
                                               cfg.polish_evals);
            if (upd.accepted) {
                x[n] = upd.position;
                f = upd.objective;
            }
        }
        out.sweep_trace.push_back(f);
        if (before - f < cfg.delta_tol + cfg.rel_stop_tol * f) break;
    }
    out.final_placement = x;
    // Under a separate search evaluator the start can still win on the
    // authoritative objective, so both ends of the run are scored. The search
    // evaluator has fewer candidates and so never reports more power; a start
    // that is already no better under it is skipped.
    const double f_final = total_power_value(out.final_placement, users, wg, eval_cfg);
    const double f_initial = search_cfg == eval_cfg || out.sweep_trace.front() >= f_final
                                 ? std::numeric_limits<double>::infinity()
                                 : total_power_value(out.initial, users, wg, eval_cfg);
    if (f_initial < f_final) {
        out.final_placement = out.initial;
        out.objective = f_initial;
    } else {
        out.objective = f_final;
    }
    return out;
}

} // namespace detail

/// Multi-start block coordinate descent over the antenna positions. Restart r
/// draws its initial placement from substream r of rng_seed, so a run with
/// more restarts always contains the runs of a smaller one.
inline MultiPaSolution bcd_solve(const Scenario &scenario, const EvaluatorConfig &eval_cfg, const BcdConfig &cfg) {
    scenario.validate();
    eval_cfg.validate();
    cfg.validate();
    const auto &wg = scenario.waveguide;
    const std::span<const UserSpec> users(scenario.users);
    const EvaluatorConfig &search_cfg = cfg.search_evaluator ? *cfg.search_evaluator : eval_cfg;

    MultiPaSolution sol;
    const std::size_t total = cfg.num_restarts + (cfg.include_baseline_start ? 1 : 0);
    for (std::size_t r = 0; r < total; ++r) {
        const bool baseline = r >= cfg.num_restarts;
        Placement start;
        if (baseline) {
            start = fixed_baseline_placement(scenario.num_antennas, wg);
        } else {
            Rng rng = make_rng(cfg.rng_seed, r);
            start = random_feasible_placement(scenario.num_antennas, wg, rng);
        }
        auto outcome = detail::run_restart(std::move(start), users, wg, eval_cfg, search_cfg, cfg);
        outcome.baseline_seeded = baseline;
        sol.restart_trace.push_back(outcome.objective);
        if (r == 0 || outcome.objective < sol.restart_trace[sol.best_restart]) sol.best_restart = r;
        sol.restarts.push_back(std::move(outcome));
    }

    const auto &best = sol.restarts[sol.best_restart];
    sol.placement = best.final_placement;
    sol.sweep_trace = best.sweep_trace;
    auto eval = total_power(sol.placement, users, wg, eval_cfg);
    sol.powers = std::move(eval.powers);
    sol.worst_gains = std::move(eval.gains);
    sol.total_power = eval.total_power;
    return sol;
}

} // namespace pinch
