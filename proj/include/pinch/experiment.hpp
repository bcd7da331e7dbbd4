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
#include "pinch/validation.hpp"
#include "pinch/worst_case.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pinch {

// ------------------------------------------------------------------------
// Configuration
// ------------------------------------------------------------------------

enum class SweepVar { rate, radius, outage, users, antennas };
enum class Scheme { proposed_single, proposed_multi_cd, fixed_baseline };

inline std::string to_string(SweepVar v) {
    switch (v) {
    case SweepVar::rate: return "rate";
    case SweepVar::radius: return "radius";
    case SweepVar::outage: return "outage";
    case SweepVar::users: return "users";
    case SweepVar::antennas: return "antennas";
    }
    return "unknown";
}

inline std::string to_string(Scheme s) {
    switch (s) {
    case Scheme::proposed_single: return "proposed_single";
    case Scheme::proposed_multi_cd: return "proposed_multi_cd";
    case Scheme::fixed_baseline: return "fixed_baseline";
    }
    return "unknown";
}

inline SweepVar parse_sweep_var(const std::string &s) {
    for (auto v : {SweepVar::rate, SweepVar::radius, SweepVar::outage, SweepVar::users, SweepVar::antennas})
        if (to_string(v) == s) return v;
    throw std::invalid_argument("unknown sweep variable: " + s);
}

inline Scheme parse_scheme(const std::string &s) {
    for (auto v : {Scheme::proposed_single, Scheme::proposed_multi_cd, Scheme::fixed_baseline})
        if (to_string(v) == s) return v;
    throw std::invalid_argument("unknown scheme: " + s);
}

/// Everything a sweep needs. Defaults are the simulation settings of the
/// reference system: K = 3 users in a 120 x 20 m area, r = 3 m, 1 bit/s/Hz,
/// 28 GHz, 100 MHz, -174 dBm/Hz, a 50 m waveguide at 3 m height.
struct ExperimentConfig {
    std::size_t num_users = 3;
    double area_x_m = 120.0;
    double area_y_m = 20.0;
    double radius_m = 3.0;
    double rate_min = 1.0;
    double outage_eps = 0.01;
    double bandwidth_hz = 100e6;
    double noise_psd_dbm_hz = -174.0;
    std::size_t num_antennas = 3;
    WaveguideConfig waveguide;

    SweepVar sweep_var = SweepVar::rate;
    std::vector<double> sweep_values{0.5, 1.0, 1.5, 2.0};
    std::vector<Scheme> schemes{Scheme::proposed_single, Scheme::proposed_multi_cd, Scheme::fixed_baseline};
    std::size_t num_scenarios = 100;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    bool timing = false;

    EvaluatorConfig evaluator;
    EvaluatorConfig search_evaluator = light_evaluator();
    bool separate_search_evaluator = true;
    BcdConfig bcd = default_bcd();

    static EvaluatorConfig light_evaluator() {
        EvaluatorConfig e;
        e.screen_pool = 0;
        e.screen_refines = 0;
        e.leave_one_out_bounds = false;
        e.scan_cell_wavelengths = 0.0;
        return e;
    }

    static BcdConfig default_bcd() {
        BcdConfig b;
        b.include_baseline_start = true;
        return b;
    }

    double noise_power_w() const { return noise_power_from_psd(noise_psd_dbm_hz, bandwidth_hz); }

    void validate() const {
        waveguide.validate();
        evaluator.validate();
        search_evaluator.validate();
        bcd.validate();
        if (num_users < 1) throw std::invalid_argument("config: num_users must be >= 1");
        if (num_antennas < 1) throw std::invalid_argument("config: num_antennas must be >= 1");
        if (!(area_x_m > 0.0 && area_y_m > 0.0)) throw std::invalid_argument("config: area must be positive");
        if (!(radius_m >= 0.0)) throw std::invalid_argument("config: radius_m must be >= 0");
        if (!(rate_min >= 0.0)) throw std::invalid_argument("config: rate_min must be >= 0");
        if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("config: bandwidth_hz must be > 0");
        if (num_scenarios < 1) throw std::invalid_argument("config: num_scenarios must be >= 1");
        if (sweep_values.empty()) throw std::invalid_argument("config: sweep_values must be nonempty");
        if (!std::is_sorted(sweep_values.begin(), sweep_values.end()))
            throw std::invalid_argument("config: sweep_values must be sorted");
        if (schemes.empty()) throw std::invalid_argument("config: schemes must be nonempty");
        if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    }
};

namespace detail {

inline std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string &value) {
    std::string v = trim(value);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        throw std::invalid_argument("expected a bracketed list, got '" + value + "'");
    std::vector<std::string> out;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string &key, const std::string &v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception &) {
        pos = 0;
    }
    if (pos != v.size()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
    return out;
}

inline std::uint64_t parse_u64(const std::string &key, const std::string &v) {
    std::size_t pos = 0;
    std::uint64_t out = 0;
    try {
        if (!v.empty() && v.front() == '-') throw std::invalid_argument("negative");
        out = std::stoull(v, &pos);
    } catch (const std::exception &) {
        pos = 0;
    }
    if (pos != v.size() || v.empty())
        throw std::invalid_argument("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string &key, const std::string &v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: '" + key + "' expects true or false, got '" + v + "'");
}

inline void apply_evaluator_key(EvaluatorConfig &e, const std::string &field, const std::string &key,
                                const std::string &v) {
    if (field == "boundary_samples") e.boundary_samples = parse_u64(key, v);
    else if (field == "interior_starts") e.interior_starts = parse_u64(key, v);
    else if (field == "refine_max_iters") e.refine_max_iters = parse_u64(key, v);
    else if (field == "refine_step_tol") e.refine_step_tol = parse_double(key, v);
    else if (field == "eps_floor") e.eps_floor = parse_double(key, v);
    else if (field == "oracle_grid_resolution") e.oracle_grid_resolution = parse_u64(key, v);
    else if (field == "seed") e.seed = parse_u64(key, v);
    else if (field == "screen_pool") e.screen_pool = parse_u64(key, v);
    else if (field == "screen_refines") e.screen_refines = parse_u64(key, v);
    else if (field == "leave_one_out_bounds") e.leave_one_out_bounds = parse_bool(key, v);
    else if (field == "scan_cell_wavelengths") e.scan_cell_wavelengths = parse_double(key, v);
    else if (field == "scan_max_cells") e.scan_max_cells = parse_u64(key, v);
    else if (field == "scan_refines") e.scan_refines = parse_u64(key, v);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

} // namespace detail

/// Applies one `key = value` assignment.
inline void apply_config_key(ExperimentConfig &cfg, const std::string &key, const std::string &value) {
    using namespace detail;
    const std::string &v = value;
    if (key == "num_users") cfg.num_users = parse_u64(key, v);
    else if (key == "area_x_m") cfg.area_x_m = parse_double(key, v);
    else if (key == "area_y_m") cfg.area_y_m = parse_double(key, v);
    else if (key == "radius_m") cfg.radius_m = parse_double(key, v);
    else if (key == "rate_min") cfg.rate_min = parse_double(key, v);
    else if (key == "outage_eps") cfg.outage_eps = parse_double(key, v);
    else if (key == "bandwidth_hz") cfg.bandwidth_hz = parse_double(key, v);
    else if (key == "noise_psd_dbm_hz") cfg.noise_psd_dbm_hz = parse_double(key, v);
    else if (key == "num_antennas") cfg.num_antennas = parse_u64(key, v);
    else if (key == "carrier_freq_hz") cfg.waveguide.carrier_freq_hz = parse_double(key, v);
    else if (key == "n_eff") cfg.waveguide.n_eff = parse_double(key, v);
    else if (key == "waveguide_length_m") cfg.waveguide.length_m = parse_double(key, v);
    else if (key == "height_m") cfg.waveguide.height_m = parse_double(key, v);
    else if (key == "sweep_var") cfg.sweep_var = parse_sweep_var(v);
    else if (key == "sweep_values") {
        cfg.sweep_values.clear();
        for (const auto &item : split_list(v)) cfg.sweep_values.push_back(parse_double(key, item));
    } else if (key == "schemes") {
        cfg.schemes.clear();
        for (const auto &item : split_list(v)) cfg.schemes.push_back(parse_scheme(item));
    } else if (key == "num_scenarios") cfg.num_scenarios = parse_u64(key, v);
    else if (key == "seed") cfg.seed = parse_u64(key, v);
    else if (key == "threads") cfg.threads = parse_u64(key, v);
    else if (key == "timing") cfg.timing = parse_bool(key, v);
    else if (key == "separate_search_evaluator") cfg.separate_search_evaluator = parse_bool(key, v);
    else if (key == "bcd.num_restarts") cfg.bcd.num_restarts = parse_u64(key, v);
    else if (key == "bcd.max_sweeps") cfg.bcd.max_sweeps = parse_u64(key, v);
    else if (key == "bcd.line_search_evals") cfg.bcd.line_search_evals = parse_u64(key, v);
    else if (key == "bcd.delta_tol") cfg.bcd.delta_tol = parse_double(key, v);
    else if (key == "bcd.rel_stop_tol") cfg.bcd.rel_stop_tol = parse_double(key, v);
    else if (key == "bcd.polish_evals") cfg.bcd.polish_evals = parse_u64(key, v);
    else if (key == "bcd.include_baseline_start") cfg.bcd.include_baseline_start = parse_bool(key, v);
    else if (key.rfind("evaluator.", 0) == 0) apply_evaluator_key(cfg.evaluator, key.substr(10), key, v);
    else if (key.rfind("search.", 0) == 0) apply_evaluator_key(cfg.search_evaluator, key.substr(7), key, v);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

/// Parses `key = value` lines; `#` starts a comment, lists are `[a, b, c]`.
inline ExperimentConfig parse_config(std::istream &in, ExperimentConfig cfg = {}) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            apply_config_key(cfg, key, value);
        } catch (const std::invalid_argument &e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string &path, ExperimentConfig cfg = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    return parse_config(in, std::move(cfg));
}

// ------------------------------------------------------------------------
// Scenarios and schemes
// ------------------------------------------------------------------------

/// K user estimates uniform over the area rectangle centred at the origin.
inline Scenario generate_scenario(const ExperimentConfig &cfg, Rng &rng) {
    Scenario s;
    s.waveguide = cfg.waveguide;
    s.area_x_m = cfg.area_x_m;
    s.area_y_m = cfg.area_y_m;
    s.num_antennas = cfg.num_antennas;
    const double noise = cfg.noise_power_w();
    for (std::size_t k = 0; k < cfg.num_users; ++k) {
        UserSpec u;
        u.u_hat.x = uniform(rng, -0.5 * cfg.area_x_m, 0.5 * cfg.area_x_m);
        u.u_hat.y = uniform(rng, -0.5 * cfg.area_y_m, 0.5 * cfg.area_y_m);
        u.radius_m = cfg.radius_m;
        u.rate_min = cfg.rate_min;
        u.noise_power_w = noise;
        u.outage_eps = cfg.outage_eps;
        s.users.push_back(u);
    }
    return s;
}

/// Config with the swept variable set to `value`.
inline ExperimentConfig apply_sweep_value(ExperimentConfig cfg, SweepVar var, double value) {
    switch (var) {
    case SweepVar::rate: cfg.rate_min = value; break;
    case SweepVar::radius: cfg.radius_m = value; break;
    case SweepVar::outage: cfg.outage_eps = value; break;
    case SweepVar::users: cfg.num_users = static_cast<std::size_t>(std::llround(value)); break;
    case SweepVar::antennas: cfg.num_antennas = static_cast<std::size_t>(std::llround(value)); break;
    }
    return cfg;
}

/// Seed of scenario i; shared by every sweep value and scheme.
inline std::uint64_t scenario_seed(std::uint64_t master, std::size_t index) { return substream_seed(master, index); }

struct SchemeOutcome {
    double total_power_w = 0.0;
    Allocation allocation;
    std::vector<SCertificate> certificates; // single-antenna solutions only
};

inline BcdConfig bcd_for(const ExperimentConfig &cfg, std::uint64_t scen_seed) {
    BcdConfig b = cfg.bcd;
    b.rng_seed = substream_seed(scen_seed, 0x6263640000000001ULL);
    if (cfg.separate_search_evaluator) b.search_evaluator = cfg.search_evaluator;
    return b;
}

/// Solves one scenario with one scheme. The multi-antenna scheme falls back to
/// the single-antenna solver when N = 1.
inline SchemeOutcome run_scheme(Scheme scheme, const Scenario &scenario, const ExperimentConfig &cfg,
                                std::uint64_t scen_seed) {
    SchemeOutcome out;
    const std::span<const UserSpec> users(scenario.users);
    auto single = [&] {
        const auto sol = solve_p2(users, scenario.waveguide);
        out.total_power_w = sol.total_power;
        out.allocation = allocation_of(sol);
        out.certificates = sol.certificates;
    };
    switch (scheme) {
    case Scheme::proposed_single: single(); break;
    case Scheme::proposed_multi_cd:
        if (scenario.num_antennas == 1) {
            single();
        } else {
            const auto sol = bcd_solve(scenario, cfg.evaluator, bcd_for(cfg, scen_seed));
            out.total_power_w = sol.total_power;
            out.allocation = allocation_of(sol);
        }
        break;
    case Scheme::fixed_baseline: {
        const auto placement = fixed_baseline_placement(scenario.num_antennas, scenario.waveguide);
        auto eval = total_power(placement, users, scenario.waveguide, cfg.evaluator);
        out.total_power_w = eval.total_power;
        out.allocation = {placement, std::move(eval.powers)};
        break;
    }
    }
    return out;
}

// ------------------------------------------------------------------------
// Sweeps
// ------------------------------------------------------------------------

struct SweepCell {
    double sweep_value = 0.0;
    Scheme scheme = Scheme::proposed_single;
    std::vector<std::uint64_t> scenario_seeds;
    std::vector<double> raw_mw;     // NaN marks a failed solve
    std::vector<double> runtime_ms; // zero unless timing is enabled
    std::vector<std::string> errors;
    double mean_mw = 0.0;
    double stderr_mw = 0.0;
    std::size_t failures = 0;
};

struct SweepResult {
    SweepVar sweep_var = SweepVar::rate;
    std::vector<SweepCell> cells; // value-major, schemes in config order

    const SweepCell &cell(double value, Scheme scheme) const {
        for (const auto &c : cells)
            if (c.sweep_value == value && c.scheme == scheme) return c;
        throw std::out_of_range("sweep result has no such cell");
    }
};

inline void summarize(SweepCell &c) {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (double x : c.raw_mw) {
        if (std::isnan(x)) continue;
        sum += x;
        ++n;
    }
    c.failures = c.raw_mw.size() - n;
    c.mean_mw = n ? sum / static_cast<double>(n) : std::nan("");
    for (double x : c.raw_mw)
        if (!std::isnan(x)) sum_sq += (x - c.mean_mw) * (x - c.mean_mw);
    c.stderr_mw = n > 1 ? std::sqrt(sum_sq / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
}

/// Runs every (sweep value, scenario) job, each solving all schemes. Jobs go
/// to worker threads in any order but write to pre-assigned slots, so the
/// result does not depend on the thread count.
inline SweepResult run_sweep(const ExperimentConfig &cfg) {
    cfg.validate();
    SweepResult result;
    result.sweep_var = cfg.sweep_var;
    const std::size_t S = cfg.num_scenarios;
    const std::size_t M = cfg.schemes.size();
    for (double value : cfg.sweep_values) {
        for (Scheme scheme : cfg.schemes) {
            SweepCell c;
            c.sweep_value = value;
            c.scheme = scheme;
            c.scenario_seeds.resize(S);
            c.raw_mw.assign(S, 0.0);
            c.runtime_ms.assign(S, 0.0);
            c.errors.assign(S, {});
            result.cells.push_back(std::move(c));
        }
    }

    const std::size_t jobs = cfg.sweep_values.size() * S;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
            const std::size_t vi = j / S;
            const std::size_t si = j % S;
            const auto point = apply_sweep_value(cfg, cfg.sweep_var, cfg.sweep_values[vi]);
            const std::uint64_t seed = scenario_seed(cfg.seed, si);
            Rng rng(seed);
            const Scenario scenario = generate_scenario(point, rng);
            for (std::size_t m = 0; m < M; ++m) {
                auto &cell = result.cells[vi * M + m];
                cell.scenario_seeds[si] = seed;
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    cell.raw_mw[si] = watts_to_mw(run_scheme(cfg.schemes[m], scenario, point, seed).total_power_w);
                } catch (const std::exception &e) {
                    cell.raw_mw[si] = std::nan("");
                    cell.errors[si] = e.what();
                }
                if (cfg.timing)
                    cell.runtime_ms[si] =
                        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            }
        }
    };
    const std::size_t nthreads = std::min(cfg.threads, std::max<std::size_t>(jobs, 1));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }
    for (auto &c : result.cells) summarize(c);
    return result;
}

// ------------------------------------------------------------------------
// CSV
// ------------------------------------------------------------------------

inline std::string format_g10(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

inline void write_csv(const SweepResult &result, std::ostream &out) {
    out << "sweep_var,sweep_value,scheme,scenario_seed,total_power_mw,runtime_ms\n";
    for (const auto &c : result.cells) {
        for (std::size_t i = 0; i < c.raw_mw.size(); ++i) {
            out << to_string(result.sweep_var) << ',' << format_g10(c.sweep_value) << ',' << to_string(c.scheme) << ','
                << c.scenario_seeds[i] << ',' << format_g10(c.raw_mw[i]) << ',' << format_g10(c.runtime_ms[i]) << '\n';
        }
    }
}

inline void emit_csv(const SweepResult &result, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_csv(result, out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

} // namespace pinch
