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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero if any fail.
// Usage: acceptance <cli-binary> <config-dir> <work-dir>

#include "hybridsched/model_cache.hpp"
#include "hybridsched/saf.hpp"
#include "hybridsched/simulation.hpp"
#include "hybridsched/transmission.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace hybridsched;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string &name, bool ok, const std::string &detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << detail << std::endl;
    failures += !ok;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SystemConfig desk_config() { return SystemConfig{}; }

struct DeskModel {
    SystemConfig cfg = desk_config();
    Codebooks cb;
    MdpModel model;
    TabularMdp mdp;
    DeskModel() {
        cb = build_codebooks(cfg);
        RngStream rng(cfg.seed, 1);
        model = build_model(cfg, cb, estimate_conditional_model(cfg, cb, rng));
        mdp = tabulate(model);
    }
};

double dot(const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

void lp_optimality(const DeskModel &d) {
    const auto t0 = std::chrono::steady_clock::now();
    const SafSolver solver(d.mdp);
    RngStream rng(11, 1);
    std::vector<std::vector<double>> qs{{1.0, 1.0, 1.0}, {5.0, 1.0, 0.2}, {0.0, 0.0, 1.0}};
    for (int k = 0; k < 3; ++k)
        qs.push_back({10 * rng.uniform(), 10 * rng.uniform(), 10 * rng.uniform()});

    double worst_feas = 0.0, worst_gap = -1e300, worst_extract = 0.0;
    for (const auto &q : qs) {
        const StateActionFrequency x = solver.solve(q);
        worst_feas = std::max({worst_feas, normalization_residual(x), balance_residual(x, d.mdp)});
        for (int p = 0; p < 200; ++p) {
            std::vector<std::size_t> acts(d.mdp.num_states);
            for (std::size_t &a : acts)
                a = rng.index(d.mdp.num_actions);
            const PolicyEvaluation ev = evaluate_policy(StationaryPolicy::deterministic_from(d.mdp.num_actions, acts), d.mdp);
            worst_gap = std::max(worst_gap, dot(q, ev.rates) - x.objective);
        }
        const std::vector<double> lp = lp_rates(x, d.mdp);
        const PolicyEvaluation ev = evaluate_policy(extract_policy(x, d.mdp, q), d.mdp);
        for (std::size_t n = 0; n < lp.size(); ++n)
            worst_extract = std::max(worst_extract, std::abs(ev.rates[n] - lp[n]));
    }
    const double secs = seconds_since(t0);
    std::ostringstream o;
    o << "states " << d.mdp.num_states << ", actions " << d.mdp.num_actions << ", feasibility residual " << worst_feas
      << ", max(sampled value - LP objective) " << worst_gap << ", |extracted - lp rates| " << worst_extract << ", "
      << secs << " s";
    report(1, "LP feasibility and optimality",
           d.mdp.num_states == 64 && d.mdp.num_actions == 3 && worst_feas <= 1e-8 && worst_gap <= 1e-6 &&
               worst_extract <= 1e-6 && secs < 60.0,
           o.str());
}

// Kernel entry written out from the definition, digit by digit.
double dense_kernel_entry(const MdpModel &m, std::uint64_t from, std::size_t action, std::uint64_t to) {
    const MdpState s = m.space().decode(from), t = m.space().decode(to);
    const Action &a = m.actions()[action];
    const ConditionalModel &c = m.conditional();
    double p = 1.0;
    for (std::size_t k = 0; k < s.records.size(); ++k) {
        const PairRecord &before = s.records[k], &after = t.records[k];
        if (k == a.pair && a.kind == Action::Kind::pair) {
            if (after.past_coarse_i != s.cur[a.i] || after.past_coarse_j != s.cur[a.j])
                return 0.0;
            p *= c.p_fine_given_coarse[s.cur[a.i] * c.num_fine + after.past_fine_i];
            p *= c.p_fine_given_coarse[s.cur[a.j] * c.num_fine + after.past_fine_j];
        } else if (before.past_fine_i != after.past_fine_i || before.past_fine_j != after.past_fine_j ||
                   before.past_coarse_i != after.past_coarse_i || before.past_coarse_j != after.past_coarse_j) {
            return 0.0;
        }
    }
    for (std::uint32_t cur : t.cur)
        p *= c.pi_coarse[cur];
    return p;
}

void kernel_oracle(const DeskModel &d) {
    const std::uint64_t S = d.model.space().total_states();
    double worst = 0.0;
    for (std::uint64_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < d.model.num_actions(); ++a) {
            std::vector<double> row(S, 0.0);
            for (const Successor &n : d.model.successors(s, a))
                row[n.state] += n.probability;
            for (std::uint64_t t = 0; t < S; ++t) {
                const double dense = dense_kernel_entry(d.model, s, a, t);
                worst = std::max(worst, std::abs(row[t] - dense));
                worst = std::max(worst, std::abs(d.model.transition_probability(s, a, t) - dense));
            }
        }
    std::ostringstream o;
    o << S << " states, max entry difference " << worst;
    report(2, "factorized kernel", S == 64 && worst <= 1e-12, o.str());
}

double eig_rate(const CMatrix &gamma, const CMatrix &g) {
    const Eigen::MatrixXcd m = Eigen::MatrixXcd(gamma).inverse() * Eigen::MatrixXcd(g) * Eigen::MatrixXcd(g).adjoint();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        acc += std::log2(std::abs(1.0 + es.eigenvalues()(i)));
    return acc / 3.0;
}

double hermitian_logdet(const Eigen::MatrixXcd &m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        acc += std::log2(es.eigenvalues()(i));
    return acc;
}

void rate_oracle() {
    SystemConfig cfg;
    cfg.coarse_bits = 2;
    cfg.fine_bits = 3;
    cfg.power_budget = 100.0;
    const Codebooks cb = build_codebooks(cfg);
    RngStream rng(3, 3);
    double err_sub = 0.0, err_opt = 0.0, dominance = 1e300;
    for (int trial = 0; trial < 1000; ++trial) {
        const ChannelDraw pi = draw_channel(cfg, cb, rng), pj = draw_channel(cfg, cb, rng);
        const ChannelDraw ni = draw_channel(cfg, cb, rng), nj = draw_channel(cfg, cb, rng);
        const auto [wi, wj] = slot1_precoders(pi.coarse_id, pj.coarse_id, cfg, cb);
        const CRow fi = fine_estimate(pi, cfg, cb), fj = fine_estimate(pj, cfg, cb);
        const auto [z2, z3] =
            resolution_precoders(multicast_direction(ni.coarse_id, nj.coarse_id, cb), fi, fj, wi, wj, cfg.power_budget);
        const UserObservationInputs in{pi.h, ni.h, fi, fj, &wi, &wj, &z2, &z3};
        const EffectiveChannel sub = effective_channel_suboptimal(in);
        const double r_sub = instantaneous_rate(sub, wi, wj);
        const double o_sub = eig_rate(sub.gamma, sub.g);
        err_sub = std::max(err_sub, std::abs(r_sub - o_sub) / std::max(1.0, std::abs(o_sub)));

        const EffectiveChannel opt = effective_channel_optimal(in);
        const Eigen::MatrixXcd intf = Eigen::MatrixXcd(opt.f_tilde) * Eigen::MatrixXcd(wj);
        const Eigen::MatrixXcd sig = Eigen::MatrixXcd(opt.f) * Eigen::MatrixXcd(wi);
        const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(3, 3);
        const double o_opt = (hermitian_logdet(id + intf * intf.adjoint() + sig * sig.adjoint()) -
                              hermitian_logdet(id + intf * intf.adjoint())) /
                             3.0;
        const double r_opt = instantaneous_rate(opt, wi, wj);
        err_opt = std::max(err_opt, std::abs(r_opt - o_opt) / std::max(1.0, std::abs(o_opt)));
        dominance = std::min(dominance, r_opt - r_sub);
    }
    std::ostringstream o;
    o << "1000 draws, suboptimal error " << err_sub << ", optimal error " << err_opt << ", min(opt - sub) "
      << dominance;
    report(3, "rate formula", err_sub <= 1e-9 && err_opt <= 1e-9 && dominance >= -1e-9, o.str());
}

void degrees_of_freedom() {
    const auto t0 = std::chrono::steady_clock::now();
    SystemConfig cfg;
    cfg.coarse_bits = 2;
    cfg.fine_bits = 2;
    cfg.csi_mode = CsiMode::perfect_delayed;
    const Codebooks cb = build_codebooks(cfg);
    const double snrs[2] = {30.0, 50.0};
    double mean[2];
    const int draws = 2000;
    for (int k = 0; k < 2; ++k) {
        cfg.power_budget = std::pow(10.0, snrs[k] / 10.0);
        RngStream rng(7, 7);
        double s = 0.0;
        int count = 0;
        while (count < draws) {
            const ChannelDraw pi = draw_channel(cfg, cb, rng), pj = draw_channel(cfg, cb, rng);
            const ChannelDraw ni = draw_channel(cfg, cb, rng), nj = draw_channel(cfg, cb, rng);
            // Equal coarse ids leave slot 1 with a single usable direction.
            if (pi.coarse_id == pj.coarse_id)
                continue;
            const auto [wi, wj] = slot1_precoders(pi.coarse_id, pj.coarse_id, cfg, cb);
            const CVector dir = resolution_direction(ni.coarse_id, nj.coarse_id, cfg, cb);
            const PairRealization pr{pi.h, pj.h, ni.h, nj.h, fine_estimate(pi, cfg, cb), fine_estimate(pj, cfg, cb)};
            const auto r = pair_instantaneous_rates(pr, wi, wj, dir, cfg.power_budget, false);
            s += r[0] + r[1];
            ++count;
        }
        mean[k] = s / count;
    }
    const double slope = (mean[1] - mean[0]) / 2.0;
    const double target = 4.0 / 3.0 * std::log2(10.0);
    const double secs = seconds_since(t0);
    std::ostringstream o;
    o << "slope " << slope << " bits/10 dB vs " << target << " (" << draws << " draws per point, " << secs << " s)";
    report(4, "degrees of freedom", std::abs(slope - target) <= 0.15 * target && secs < 120.0, o.str());
}

void interference_limitation() {
    SystemConfig cfg;
    cfg.coarse_bits = 2;
    cfg.fine_bits = 2;
    cfg.mc_samples_reward = 1000;
    const Codebooks cb = build_codebooks(cfg);
    RngStream crng(cfg.seed, 1);
    const ConditionalModel cond = estimate_conditional_model(cfg, cb, crng);
    const RewardPools pools = build_reward_pools(cfg, cb);
    FrameConfig fc;
    struct Cell {
        double mean = 0.0, se = 0.0;
    };
    auto run = [&](double snr, CsiMode mode, PolicyKind kind) {
        SystemConfig c = cfg;
        c.power_budget = std::pow(10.0, snr / 10.0);
        c.csi_mode = mode;
        const MdpModel m = build_model(c, cb, cond, pools);
        const SimulationContext ctx{&cb, &m, nullptr};
        std::vector<double> v;
        for (std::uint64_t seed = 1; seed <= 5; ++seed)
            v.push_back(run_trajectory(ctx, fc, kind, 10000, RngStream(seed, 0x5452)).sum_rate);
        Cell out;
        for (double s : v)
            out.mean += s / v.size();
        for (double s : v)
            out.se += (s - out.mean) * (s - out.mean);
        out.se = std::sqrt(out.se / (v.size() - 1) / v.size());
        return out;
    };
    const Cell h30 = run(30, CsiMode::hybrid, PolicyKind::myopic), h40 = run(40, CsiMode::hybrid, PolicyKind::myopic);
    const Cell c30 = run(30, CsiMode::hybrid, PolicyKind::conventional);
    const Cell c40 = run(40, CsiMode::hybrid, PolicyKind::conventional);
    const Cell d40 = run(40, CsiMode::delayed_only, PolicyKind::myopic);
    const double gain_h = h40.mean - h30.mean, gain_c = c40.mean - c30.mean;
    const bool order = h40.mean >= d40.mean - 2.0 * std::hypot(h40.se, d40.se) &&
                       d40.mean >= c40.mean - 2.0 * std::hypot(d40.se, c40.se);
    std::ostringstream o;
    o << "conventional gain " << gain_c << ", hybrid gain " << gain_h << ", at 40 dB hybrid " << h40.mean
      << " delayed-only " << d40.mean << " conventional " << c40.mean;
    report(5, "interference limitation", gain_c < 0.5 && gain_h > 1.5 && order, o.str());
}

void convergence(const DeskModel &d) {
    const SafSolver solver(d.mdp);
    const SimulationContext ctx{&d.cb, &d.model, &solver};
    FrameConfig fc;
    fc.utility = UtilityKind::log1p;
    fc.frame_length = 100;
    const ConvergenceOptions opt;
    const ConvergenceReport rep = convergence_report(ctx, fc, opt);

    bool dec = true;
    std::ostringstream o6;
    for (std::size_t i = 0; i < rep.frame_lengths.size(); ++i) {
        o6 << "T=" << rep.frame_lengths[i] << " " << rep.deviation_mean[i] << "+/-" << rep.deviation_stderr[i]
           << (i + 1 < rep.frame_lengths.size() ? ", " : "");
        if (i > 0)
            dec = dec && rep.deviation_mean[i] < rep.deviation_mean[i - 1];
    }
    report(6, "frame concentration", dec, o6.str());

    bool nondec = true, stable = true;
    std::ostringstream o7;
    for (std::size_t i = 0; i < rep.v_values.size(); ++i) {
        o7 << "V=" << rep.v_values[i] << " U " << rep.utility_mean[i] << "+/-" << rep.utility_stderr[i] << " ratio "
           << rep.stability_ratio[i] << (i + 1 < rep.v_values.size() ? ", " : "");
        if (i > 0)
            nondec = nondec && rep.utility_mean[i] >= rep.utility_mean[i - 1] -
                                                          2.0 * std::hypot(rep.utility_stderr[i],
                                                                           rep.utility_stderr[i - 1]);
        stable = stable && std::abs(rep.stability_ratio[i] - 1.0) <= 0.1;
    }
    report(7, "utility and stability", nondec && stable, o7.str());
}

void arrival_closed_forms() {
    RngStream rng(8, 8);
    double worst = 0.0;
    for (UtilityKind u : {UtilityKind::sum, UtilityKind::log1p}) {
        FrameConfig fc;
        fc.utility = u;
        const std::function<double(double)> marginal =
            u == UtilityKind::log1p ? std::function<double(double)>([](double r) {
                return 1.0 / ((1.0 + r) * std::numbers::ln2);
            })
                                    : std::function<double(double)>([](double) { return 1.0; });
        for (int trial = 0; trial < 1000; ++trial) {
            fc.v = std::exp(rng.uniform() * 8.0 - 2.0);
            fc.r_max = 0.1 + 20.0 * rng.uniform();
            const double q = std::exp(rng.uniform() * 8.0 - 3.0);
            const double closed = solve_virtual_arrivals({q}, fc)[0];
            const double bisect = solve_separable_arrival(marginal, fc.v, q, fc.r_max);
            worst = std::max(worst, std::abs(closed - bisect) / std::max(1.0, std::abs(bisect)));
        }
    }
    std::ostringstream o;
    o << "2000 triples, max error " << worst;
    report(8, "arrival closed forms", worst <= 1e-9, o.str());
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Runs one command line into `dir` and returns stdout; stderr carries wall-clock time.
int run_cli(const std::string &cli, const std::string &args, const fs::path &dir) {
    fs::create_directories(dir);
    const std::string cmd = "\"" + cli + "\" " + args + " --out \"" + dir.string() + "\" > \"" +
                            (dir / "stdout.txt").string() + "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
    return std::system(cmd.c_str());
}

bool same_outputs(const fs::path &a, const fs::path &b, std::string &why) {
    std::size_t count = 0;
    for (const auto &e : fs::directory_iterator(a)) {
        const std::string name = e.path().filename().string();
        if (name == "stderr.txt")
            continue;
        ++count;
        if (!fs::exists(b / name) || slurp(e.path()) != slurp(b / name)) {
            why = name + " differs";
            return false;
        }
    }
    if (count < 2) {
        why = "missing outputs in " + a.string();
        return false;
    }
    return true;
}

void determinism(const std::string &cli, const fs::path &configs, const fs::path &work) {
    fs::remove_all(work);
    fs::create_directories(work);
    {
        std::ofstream s(work / "tiny_sweep.json");
        s << R"({"system": {"num_users": 3, "coarse_bits": 1, "fine_bits": 1, "mc_samples_model": 5000,
                 "mc_samples_reward": 100},
                 "sweep": {"snr_db": [10, 30], "policies": ["frame", "myopic:delayed-only", "conventional"],
                           "intervals": 200, "seeds": [1, 2]}})";
    }
    const std::string desk = "--config \"" + (configs / "desk.json").string() + "\"";
    std::vector<std::string> checked;
    std::string why;
    bool ok = true;
    for (int rep = 0; rep < 2 && ok; ++rep) {
        const fs::path root = work / ("run" + std::to_string(rep));
        ok = run_cli(cli, "build " + desk, root / "build") == 0;
        const std::string cache = " --cache \"" + (root / "build" / "model.cache").string() + "\"";
        ok = ok && run_cli(cli, "solve " + desk + cache + " --queues 1,2,0.5", root / "solve") == 0;
        ok = ok && run_cli(cli, "simulate " + desk + cache + " --policy frame --intervals 500 --frame 50 --seeds 1,2",
                           root / "simulate_frame") == 0;
        ok = ok && run_cli(cli, "simulate " + desk + cache + " --policy myopic --intervals 500 --seeds 3",
                           root / "simulate_myopic") == 0;
        ok = ok && run_cli(cli, "sweep --config \"" + (work / "tiny_sweep.json").string() + "\"", root / "sweep") == 0;
        if (!ok)
            why = "a command failed in run " + std::to_string(rep);
    }
    if (ok)
        for (const char *cmd : {"build", "solve", "simulate_frame", "simulate_myopic", "sweep"}) {
            if (!same_outputs(work / "run0" / cmd, work / "run1" / cmd, why)) {
                ok = false;
                why = std::string(cmd) + ": " + why;
                break;
            }
            checked.push_back(cmd);
        }
    std::ostringstream o;
    if (ok) {
        o << "identical outputs for";
        for (const std::string &c : checked)
            o << " " << c;
    } else {
        o << why;
    }
    report(9, "determinism", ok, o.str());
}

} // namespace

int main(int argc, char **argv) {
    if (argc != 4) {
        std::cerr << "usage: acceptance <cli-binary> <config-dir> <work-dir>\n";
        return 2;
    }
    const DeskModel desk;
    lp_optimality(desk);
    kernel_oracle(desk);
    rate_oracle();
    degrees_of_freedom();
    interference_limitation();
    convergence(desk);
    arrival_closed_forms();
    determinism(argv[1], argv[2], argv[3]);
    return failures == 0 ? 0 : 1;
}
