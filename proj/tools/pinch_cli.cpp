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

// Command-line front end: solve, sweep, oracle and montecarlo subcommands.

#include "pinch/pinch.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using json = nlohmann::ordered_json;
using namespace pinch;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;
    bool strict = false;
};

ExperimentConfig load(const CommonOptions &o) {
    ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate();
    return cfg;
}

json to_json(const Point2 &p) { return json::array({p.x, p.y}); }

json scenario_json(const Scenario &s) {
    json users = json::array();
    for (const auto &u : s.users)
        users.push_back({{"u_hat", to_json(u.u_hat)}, {"radius_m", u.radius_m}, {"rate_min", u.rate_min}});
    return {{"num_antennas", s.num_antennas}, {"noise_power_w", s.users.front().noise_power_w}, {"users", users}};
}

json audit_json(const AuditReport &a) {
    json users = json::array();
    for (const auto &u : a.users) {
        json j{{"gamma_w", u.gamma},
               {"robust_margin_w", u.robust_margin},
               {"brute_force_margin_w", u.brute_force_margin},
               {"gain_delta_rel", u.gain_delta},
               {"pass", u.pass}};
        if (u.certificate_margin) j["certificate_min_eigenvalue"] = *u.certificate_margin;
        users.push_back(j);
    }
    json violations = json::array();
    for (const auto &v : a.placement.violations)
        violations.push_back({{"index", v.index}, {"kind", to_string(v.kind)}});
    return {{"pass", a.pass}, {"placement_feasible", a.placement.feasible}, {"violations", violations}, {"users", users}};
}

void write_or_print(const json &j, const std::string &path) {
    if (path.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

Scenario scenario_at(const ExperimentConfig &cfg, std::size_t index) {
    Rng rng(scenario_seed(cfg.seed, index));
    return generate_scenario(cfg, rng);
}

int cmd_solve(const CommonOptions &o, const std::string &scheme_name) {
    const auto cfg = load(o);
    const Scheme scheme = parse_scheme(scheme_name);
    const Scenario scenario = scenario_at(cfg, 0);
    const auto outcome = run_scheme(scheme, scenario, cfg, scenario_seed(cfg.seed, 0));
    const auto audit = audit_solution(outcome.allocation, scenario, cfg.evaluator, outcome.certificates);

    json j{{"scheme", to_string(scheme)},
           {"seed", cfg.seed},
           {"scenario", scenario_json(scenario)},
           {"placement_m", outcome.allocation.placement.positions},
           {"powers_w", outcome.allocation.powers},
           {"total_power_w", outcome.total_power_w},
           {"total_power_mw", watts_to_mw(outcome.total_power_w)},
           {"audit", audit_json(audit)}};
    write_or_print(j, o.out);
    if (!o.quiet && !o.out.empty())
        std::cerr << to_string(scheme) << ": total power " << watts_to_mw(outcome.total_power_w) << " mW, audit "
                  << (audit.pass ? "pass" : "FAIL") << '\n';
    return o.strict && !audit.pass ? 2 : 0;
}

int cmd_sweep(const CommonOptions &o, std::size_t threads, bool timing) {
    auto cfg = load(o);
    if (threads > 0) cfg.threads = threads;
    if (timing) cfg.timing = true;
    const auto result = run_sweep(cfg);
    if (o.out.empty()) {
        write_csv(result, std::cout);
    } else {
        emit_csv(result, o.out);
    }
    std::size_t failures = 0;
    for (const auto &c : result.cells) {
        failures += c.failures;
        if (!o.quiet)
            std::cerr << to_string(result.sweep_var) << '=' << c.sweep_value << ' ' << to_string(c.scheme)
                      << ": mean " << c.mean_mw << " mW (stderr " << c.stderr_mw << ")\n";
    }
    return o.strict && failures > 0 ? 2 : 0;
}

int cmd_oracle(const CommonOptions &o, std::size_t scenarios, std::size_t resolution) {
    const auto cfg = load(o);
    json rows = json::array();
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < scenarios; ++i) {
        const Scenario scenario = scenario_at(cfg, i);
        Rng rng = make_rng(scenario_seed(cfg.seed, i), 1);
        const Placement placement = random_feasible_placement(scenario.num_antennas, scenario.waveguide, rng);
        for (std::size_t k = 0; k < scenario.users.size(); ++k) {
            const auto &u = scenario.users[k];
            const auto wc = worst_case_gain(u, placement, scenario.waveguide, cfg.evaluator);
            const auto bf = brute_force_gain(u, placement, scenario.waveguide, resolution, cfg.evaluator.eps_floor);
            const double ratio = wc.gain_sq_safe / bf.gain_sq_safe;
            worst_ratio = std::max(worst_ratio, ratio);
            rows.push_back({{"scenario", i},
                            {"user", k},
                            {"worst_case_gain", wc.gain_sq_hat},
                            {"method", to_string(wc.method)},
                            {"brute_force_gain", bf.gain_sq_hat},
                            {"ratio", ratio}});
        }
    }
    const bool pass = worst_ratio <= 1.01;
    json j{{"resolution", resolution}, {"max_ratio", worst_ratio}, {"pass", pass}, {"rows", rows}};
    write_or_print(j, o.out);
    if (!o.quiet && !o.out.empty())
        std::cerr << "max worst-case / brute-force ratio " << worst_ratio << (pass ? " (pass)\n" : " (FAIL)\n");
    return o.strict && !pass ? 2 : 0;
}

int cmd_montecarlo(const CommonOptions &o, const std::string &scheme_name, std::size_t scenarios,
                   std::size_t samples) {
    const auto cfg = load(o);
    const Scheme scheme = parse_scheme(scheme_name);
    json rows = json::array();
    std::size_t violations = 0;
    for (std::size_t i = 0; i < scenarios; ++i) {
        const std::uint64_t seed = scenario_seed(cfg.seed, i);
        const Scenario scenario = scenario_at(cfg, i);
        const auto outcome = run_scheme(scheme, scenario, cfg, seed);
        const auto report = monte_carlo_outage(outcome.allocation, scenario, samples, substream_seed(seed, 7));
        for (std::size_t k = 0; k < report.users.size(); ++k) {
            const auto &u = report.users[k];
            violations += u.num_violations;
            rows.push_back({{"scenario", i},
                            {"user", k},
                            {"samples", u.num_samples},
                            {"violations", u.num_violations},
                            {"outage", u.outage},
                            {"min_rate", u.min_rate},
                            {"worst_offset_m", to_json(u.worst_offset)}});
        }
    }
    json j{{"scheme", to_string(scheme)}, {"total_violations", violations}, {"rows", rows}};
    write_or_print(j, o.out);
    if (!o.quiet && !o.out.empty()) std::cerr << "total violations: " << violations << '\n';
    return o.strict && violations > 0 ? 2 : 0;
}

void add_common(CLI::App *sub, CommonOptions &o) {
    sub->add_option("--config", o.config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Master seed, overrides the config");
    sub->add_option("--out", o.out, "Output path (stdout when omitted)");
    sub->add_flag("--quiet", o.quiet, "Suppress the summary on stderr");
    sub->add_flag("--strict", o.strict, "Exit nonzero when a check fails");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Robust power allocation and antenna placement for pinching-antenna systems"};
    app.require_subcommand(1);

    CommonOptions o;
    std::string scheme = "proposed_multi_cd";
    std::size_t threads = 0, scenarios = 1, samples = 10000, resolution = 401;
    bool timing = false;

    auto *solve = app.add_subcommand("solve", "Solve one generated scenario and audit the result");
    add_common(solve, o);
    solve->add_option("--scheme", scheme, "proposed_single | proposed_multi_cd | fixed_baseline");

    auto *sweep = app.add_subcommand("sweep", "Run a parameter sweep and write CSV");
    add_common(sweep, o);
    sweep->add_option("--threads", threads, "Worker threads (output does not depend on it)");
    sweep->add_flag("--timing", timing, "Record wall-clock runtimes (makes the CSV nondeterministic)");

    auto *oracle = app.add_subcommand("oracle", "Compare the worst-case evaluator with the brute-force grid");
    add_common(oracle, o);
    oracle->add_option("--scenarios", scenarios, "Number of generated scenarios");
    oracle->add_option("--resolution", resolution, "Brute-force radii (angles are 8x)")->check(CLI::Range(16, 4096));

    auto *mc = app.add_subcommand("montecarlo", "Monte Carlo outage check of solver outputs");
    add_common(mc, o);
    mc->add_option("--scheme", scheme, "proposed_single | proposed_multi_cd | fixed_baseline");
    mc->add_option("--scenarios", scenarios, "Number of generated scenarios");
    mc->add_option("--samples", samples, "Samples per user");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve) return cmd_solve(o, scheme);
        if (*sweep) return cmd_sweep(o, threads, timing);
        if (*oracle) return cmd_oracle(o, scenarios, resolution);
        if (*mc) return cmd_montecarlo(o, scheme, scenarios, samples);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
