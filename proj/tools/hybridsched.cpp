// SPDX-License-Identifier: Apache-2.0
//
// hybridsched: downlink MU-MIMO scheduling with hybrid channel-state information
// Copyright (C) 2026 The hybridsched authors
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

// Command-line front end: build | solve | simulate | sweep.

#include "hybridsched/errors.hpp"
#include "hybridsched/model_cache.hpp"
#include "hybridsched/saf.hpp"
#include "hybridsched/simulation.hpp"
#include "hybridsched/version.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace hybridsched;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kScale = 3, kNumerical = 4 };

struct Common {
    std::string config;
    std::string cache;
    std::string out = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned threads = 0;
};

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Output files are write-once: never replace something already there.
std::ofstream open_new(const std::filesystem::path &p, bool binary = false) {
    if (std::filesystem::exists(p))
        throw CacheError("refusing to overwrite " + p.string());
    std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
    if (!out)
        throw ConfigError("cannot write " + p.string());
    return out;
}

struct Loaded {
    ModelBundle bundle;
    FrameConfig frame;
};

json config_document(const Common &c) {
    if (c.config.empty())
        throw ConfigError("--config is required");
    return read_config_file(c.config);
}

SystemConfig system_section(const json &doc, const Common &c) {
    SystemConfig cfg = system_config_from_json(doc.contains("system") ? doc.at("system") : json::object());
    if (c.seed_given)
        cfg.seed = c.seed;
    cfg.validate();
    return cfg;
}

FrameConfig frame_section(const json &doc) {
    return frame_config_from_json(doc.contains("frame") ? doc.at("frame") : json::object());
}

void check_sections(const json &doc, std::initializer_list<const char *> allowed) {
    for (const auto &[key, value] : doc.items()) {
        bool ok = false;
        for (const char *a : allowed)
            ok = ok || key == a;
        if (!ok)
            throw ConfigError(key + ": unknown top-level section");
    }
}

Loaded load_model(const Common &c) {
    Loaded l;
    if (!c.cache.empty()) {
        l.bundle = read_model_cache(c.cache);
        if (c.seed_given && c.seed != l.bundle.cfg.seed)
            throw ConfigError("--seed differs from the seed the cache was built with");
        if (!c.config.empty()) {
            const json doc = config_document(c);
            check_sections(doc, {"system", "frame"});
            const SystemConfig cfg = system_section(doc, c);
            if (config_hash(cfg) != config_hash(l.bundle.cfg))
                throw CacheError("cache was built from a different configuration than " + c.config);
            l.frame = frame_section(doc);
        }
        return l;
    }
    const json doc = config_document(c);
    check_sections(doc, {"system", "frame"});
    l.bundle = build_bundle(system_section(doc, c));
    l.frame = frame_section(doc);
    return l;
}

json manifest_json(const std::string &command, const SystemConfig &cfg, const Codebooks *cb, const json &extra) {
    json m;
    m["tool"] = "hybridsched";
    m["version"] = kVersion;
    m["command"] = command;
    m["config"] = to_json(cfg);
    m["config_hash"] = hex(config_hash(cfg));
    if (cb) {
        m["coarse_codebook_hash"] = hex(cb->coarse.hash());
        m["fine_codebook_hash"] = hex(cb->fine.hash());
    }
    m["seed"] = cfg.seed;
    for (const auto &[k, v] : extra.items())
        m[k] = v;
    return m;
}

// Writes manifest.json and returns its hash, which every other output file carries.
std::string write_manifest(const std::filesystem::path &dir, const json &m) {
    const std::string text = m.dump(2) + "\n";
    auto out = open_new(dir / "manifest.json");
    out << text;
    return hex(fnv1a64(text));
}

void prepare_out(const Common &c) {
    std::filesystem::create_directories(c.out);
    if (c.threads > 0)
        set_thread_count(c.threads);
}

int cmd_build(const Common &c) {
    prepare_out(c);
    const json doc = config_document(c);
    check_sections(doc, {"system", "frame"});
    const SystemConfig cfg = system_section(doc, c);
    std::cout << "states: " << StateSpace::count_states(cfg) << "\n";
    const ModelBundle b = build_bundle(cfg);
    const std::filesystem::path dir(c.out);
    write_model_cache((dir / "model.cache").string(), b);
    const std::uint64_t checksum = bundle_checksum(b);
    std::size_t infeasible = 0;
    for (std::uint8_t f : b.model.rewards().feasible_table())
        infeasible += f == 0;
    const json extra{{"cache_checksum", hex(checksum)}, {"reward_hash", hex(b.model.rewards().hash())}};
    write_manifest(dir, manifest_json("build", cfg, &b.codebooks, extra));
    std::cout << "actions: " << b.model.num_actions() << "\n"
              << "pair reward tuples: " << b.model.rewards().num_tuples() << " (" << infeasible
              << " without support)\n"
              << "one-shot reward entries: " << b.model.rewards().oneshot_table().size() << "\n"
              << "cache checksum: " << hex(checksum) << "\n";
    return kOk;
}

std::vector<double> parse_list(const std::string &s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception &) {
            throw ConfigError("cannot parse '" + item + "' as a number");
        }
    }
    return out;
}

int cmd_solve(const Common &c, const std::string &queues, bool ones) {
    prepare_out(c);
    const Loaded l = load_model(c);
    const TabularMdp mdp = tabulate(l.bundle.model);
    std::vector<double> q;
    if (ones || queues.empty())
        q.assign(mdp.num_users, 1.0);
    else
        q = parse_list(queues);
    if (q.size() != mdp.num_users)
        throw ConfigError("--queues needs one value per user");
    const SafSolver solver(mdp);
    const StateActionFrequency x = solver.solve(q);
    const StationaryPolicy pol = derandomize(x, mdp, q);
    const std::vector<double> rstar = lp_rates(x, mdp);

    const std::filesystem::path dir(c.out);
    const std::string mhash =
        write_manifest(dir, manifest_json("solve", l.bundle.cfg, &l.bundle.codebooks, json{{"queues", q}}));
    std::vector<std::size_t> actions(mdp.num_states);
    std::vector<std::size_t> counts(mdp.num_actions, 0);
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        actions[s] = pol.action(s);
        ++counts[actions[s]];
    }
    json pj;
    pj["manifest"] = mhash;
    pj["objective"] = x.objective;
    pj["rstar"] = rstar;
    pj["queues"] = q;
    json names = json::array();
    for (const Action &a : l.bundle.model.actions())
        names.push_back(to_string(a));
    pj["action_names"] = names;
    pj["actions"] = actions;
    auto out = open_new(dir / "policy.json");
    out << pj.dump() << "\n";

    std::cout << "states: " << mdp.num_states << "  actions: " << mdp.num_actions << "\n";
    std::cout << "LP objective: " << format_double(x.objective) << "\n";
    std::cout << "R*:";
    for (double r : rstar)
        std::cout << " " << format_double(r);
    std::cout << "\npolicy:";
    for (std::size_t a = 0; a < counts.size(); ++a)
        std::cout << " " << to_string(l.bundle.model.actions()[a]) << "=" << counts[a];
    std::cout << " states\n";
    return kOk;
}

struct SimulateArgs {
    std::string policy = "frame";
    std::int64_t intervals = 10000;
    int frame = 0;
    double v = 0.0;
    std::string seeds = "1";
    bool log = true;
};

int cmd_simulate(const Common &c, const SimulateArgs &a) {
    prepare_out(c);
    const Loaded l = load_model(c);
    FrameConfig fc = l.frame;
    if (a.frame > 0)
        fc.frame_length = a.frame;
    if (a.v > 0.0)
        fc.v = a.v;
    fc.validate(l.bundle.cfg.num_users);
    const PolicyKind kind = parse_policy_kind(a.policy);
    std::vector<std::uint64_t> seeds;
    for (double s : parse_list(a.seeds)) {
        if (s < 0 || s != std::floor(s))
            throw ConfigError("--seeds must be nonnegative integers");
        seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (seeds.empty())
        throw ConfigError("--seeds needs at least one seed");

    std::optional<TabularMdp> mdp;
    std::unique_ptr<SafSolver> solver;
    if (kind == PolicyKind::frame) {
        mdp = tabulate(l.bundle.model);
        solver = std::make_unique<SafSolver>(*mdp);
    }
    const SimulationContext ctx{&l.bundle.codebooks, &l.bundle.model, solver.get()};
    std::vector<TrajectoryMetrics> runs(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        runs[i] = run_trajectory(ctx, fc, kind, a.intervals, RngStream(seeds[i], 0x5452), a.log);
    });

    const std::filesystem::path dir(c.out);
    json extra{{"policy", a.policy}, {"intervals", a.intervals}, {"frame", to_json(fc)}, {"seeds", seeds}};
    const std::string mhash = write_manifest(dir, manifest_json("simulate", l.bundle.cfg, &l.bundle.codebooks, extra));
    {
        auto out = open_new(dir / "metrics.csv");
        write_metrics_csv(out, runs, seeds, mhash);
    }
    if (a.log)
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            auto out = open_new(dir / ("trajectory_" + std::to_string(seeds[i]) + ".ndjson"));
            write_trajectory_log(out, runs[i].log, mhash);
        }
    for (std::size_t i = 0; i < seeds.size(); ++i)
        std::cout << "seed " << seeds[i] << ": sum rate " << format_double(runs[i].sum_rate) << ", utility "
                  << format_double(runs[i].utility) << "\n";
    return kOk;
}

int cmd_sweep(const Common &c) {
    prepare_out(c);
    const json doc = config_document(c);
    check_sections(doc, {"system", "frame", "sweep"});
    const SystemConfig cfg = system_section(doc, c);
    json sj = doc.contains("sweep") ? doc.at("sweep") : json::object();
    if (doc.contains("frame"))
        sj["frame"] = doc.at("frame");
    const SweepPlan plan = sweep_plan_from_json(sj);
    const std::vector<SweepRow> rows = snr_sweep(plan, cfg);

    const std::filesystem::path dir(c.out);
    json extra{{"sweep", sj}};
    const std::string mhash = write_manifest(dir, manifest_json("sweep", cfg, nullptr, extra));
    {
        auto out = open_new(dir / "results.csv");
        write_sweep_csv(out, rows, mhash);
    }
    bool any_error = false;
    for (const SweepRow &r : rows)
        any_error = any_error || !r.error.empty();
    if (any_error) {
        auto out = open_new(dir / "sweep_errors.txt");
        out << "# manifest " << mhash << "\n";
        for (const SweepRow &r : rows)
            if (!r.error.empty())
                out << format_double(r.snr_db) << "," << r.policy << ": " << r.error << "\n";
    }
    for (const SweepRow &r : rows)
        std::cout << format_double(r.snr_db) << " dB  " << r.policy << "  " << format_double(r.mean_sum_rate)
                  << " +/- " << format_double(r.stderr_sum_rate) << (r.error.empty() ? "" : "  (errors)") << "\n";
    return kOk;
}

void add_common(CLI::App *sub, Common &c, bool needs_cache) {
    sub->add_option("--config", c.config, "configuration file (JSON, comments allowed)");
    if (needs_cache)
        sub->add_option("--cache", c.cache, "model cache written by 'build'");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&c](const std::uint64_t &s) {
            c.seed = s;
            c.seed_given = true;
        },
        "override the configuration seed");
    sub->add_option("--threads", c.threads, "worker thread cap");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Scheduling under hybrid channel-state information"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    Common common;

    auto *build = app.add_subcommand("build", "build codebooks, conditional model and reward tables into a cache");
    add_common(build, common, false);

    auto *solve = app.add_subcommand("solve", "solve the occupancy LP and write the deterministic policy");
    add_common(solve, common, true);
    std::string queues;
    bool ones = false;
    solve->add_option("--queues", queues, "comma-separated queue weights");
    solve->add_flag("--ones", ones, "use unit queue weights");

    auto *simulate = app.add_subcommand("simulate", "run trajectories and write metrics and logs");
    add_common(simulate, common, true);
    SimulateArgs sim;
    simulate->add_option("--policy", sim.policy, "frame | myopic | conventional");
    simulate->add_option("--intervals", sim.intervals, "intervals per trajectory");
    simulate->add_option("--frame", sim.frame, "frame length T");
    simulate->add_option("--V", sim.v, "utility weight V");
    simulate->add_option("--seeds", sim.seeds, "comma-separated trajectory seeds");
    bool no_log = false;
    simulate->add_flag("--no-log", no_log, "skip trajectory logs");

    auto *sweep = app.add_subcommand("sweep", "SNR sweep over policies and CSI modes");
    add_common(sweep, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }
    sim.log = !no_log;

    const auto t0 = std::chrono::steady_clock::now();
    int rc = kOk;
    try {
        if (build->parsed())
            rc = cmd_build(common);
        else if (solve->parsed())
            rc = cmd_solve(common, queues, ones);
        else if (simulate->parsed())
            rc = cmd_simulate(common, sim);
        else if (sweep->parsed())
            rc = cmd_sweep(common);
    } catch (const TooLarge &e) {
        std::cerr << "error: " << e.what() << " (about " << e.count() << " states)\n";
        return kScale;
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const InvalidInput &e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kConfig;
    } catch (const CacheError &e) {
        std::cerr << "cache error: " << e.what() << "\n";
        return kConfig;
    } catch (const Error &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::filesystem::filesystem_error &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "wall-clock: " << secs << " s\n";
    return rc;
}
