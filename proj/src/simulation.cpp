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

#include "hybridsched/simulation.hpp"

#include "hybridsched/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>

namespace hybridsched {

namespace {

constexpr std::uint64_t kTrajectoryStream = 0x5452;
constexpr std::uint64_t kConvergenceStream = 0x434f;

double mean_of(const std::vector<double> &v) {
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double> &v) {
    if (v.size() < 2)
        return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

std::vector<double> service_of(const SchedulerState &st, const Action &a, const MdpModel &model,
                               const Codebooks &codebooks, bool instantaneous) {
    const SystemConfig &cfg = model.config();
    std::vector<double> r(static_cast<std::size_t>(cfg.num_users), 0.0);
    const ChannelDraw &ni = st.now[a.i];
    const ChannelDraw &nj = st.now[a.j];
    std::array<double, 2> v{};
    if (!instantaneous) {
        v = a.kind == Action::Kind::pair ? model.rewards().pair_rates(model.tuple(st.mdp_state(), a))
                                         : model.rewards().oneshot_rates(ni.coarse_id, nj.coarse_id);
    } else if (a.kind == Action::Kind::pair) {
        const LivePairRecord &rec = st.records[a.pair];
        const auto [w_i, w_j] = slot1_precoders(rec.ids.past_coarse_i, rec.ids.past_coarse_j, cfg, codebooks);
        const CVector dir = resolution_direction(ni.coarse_id, nj.coarse_id, cfg, codebooks);
        const PairRealization real{rec.h_i, rec.h_j, ni.h, nj.h, rec.fine_i, rec.fine_j};
        v = pair_instantaneous_rates(real, w_i, w_j, dir, cfg.power_budget, cfg.rate_mode == RateMode::optimal_filter);
    } else {
        const auto [w_i, w_j] = oneshot_zf_precoders(ni.coarse_id, nj.coarse_id, cfg, codebooks);
        v = {oneshot_rate(ni.h, w_i, w_j), oneshot_rate(nj.h, w_j, w_i)};
    }
    r[a.i] = v[0];
    r[a.j] = v[1];
    return r;
}

double distance(const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n)
        s += (a[n] - b[n]) * (a[n] - b[n]);
    return std::sqrt(s);
}

void finish_queue_stats(TrajectoryMetrics &m, const std::vector<double> &qsum, const std::vector<std::vector<double>> &quser) {
    const std::size_t J = qsum.size();
    if (J == 0)
        return;
    double total = 0.0, third = 0.0, half = 0.0;
    std::size_t n_third = 0, n_half = 0;
    const std::size_t N = quser.empty() ? 0 : quser.front().size();
    m.queue_user_last_half.assign(N, 0.0);
    for (std::size_t k = 0; k < J; ++k) {
        total += qsum[k];
        m.queue_max = std::max(m.queue_max, qsum[k]);
        if (2 * k >= J) {
            half += qsum[k];
            ++n_half;
            for (std::size_t n = 0; n < N; ++n)
                m.queue_user_last_half[n] += quser[k][n];
            if (4 * k < 3 * J) {
                third += qsum[k];
                ++n_third;
            }
        }
    }
    m.queue_mean = total / static_cast<double>(J);
    m.queue_last_half = n_half ? half / static_cast<double>(n_half) : 0.0;
    m.queue_third_quarter = n_third ? third / static_cast<double>(n_third) : 0.0;
    for (double &v : m.queue_user_last_half)
        v = n_half ? v / static_cast<double>(n_half) : 0.0;
}

} // namespace

std::string to_string(PolicyKind p) {
    switch (p) {
    case PolicyKind::frame:
        return "frame";
    case PolicyKind::myopic:
        return "myopic";
    case PolicyKind::conventional:
        return "conventional";
    }
    return "?";
}

PolicyKind parse_policy_kind(const std::string &s) {
    if (s == "frame")
        return PolicyKind::frame;
    if (s == "myopic")
        return PolicyKind::myopic;
    if (s == "conventional")
        return PolicyKind::conventional;
    throw ConfigError("unknown policy '" + s + "' (expected frame, myopic or conventional)");
}

double TrajectoryMetrics::mean_frame_deviation() const { return mean_of(frame_deviations); }

std::size_t sample_successor(const TabularMdp &mdp, std::size_t s, std::size_t a, RngStream &rng) {
    const std::size_t k = s * mdp.num_actions + a;
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t e = mdp.offset[k]; e < mdp.offset[k + 1]; ++e) {
        acc += mdp.succ[e].probability;
        if (u < acc)
            return mdp.succ[e].state;
    }
    return mdp.succ[mdp.offset[k + 1] - 1].state;
}

TrajectoryMetrics run_trajectory(const SimulationContext &ctx, const FrameConfig &fc, PolicyKind policy,
                                 std::int64_t intervals, RngStream rng, bool keep_log) {
    if (!ctx.model || !ctx.codebooks)
        throw InvalidInput("simulation context is missing the model or codebooks");
    if (policy == PolicyKind::frame && !ctx.solver)
        throw InvalidInput("frame policy needs an LP solver over the tabulated model");
    if (intervals < 1)
        throw InvalidInput("number of intervals must be >= 1");
    const MdpModel &model = *ctx.model;
    const Codebooks &codebooks = *ctx.codebooks;
    const SystemConfig &cfg = model.config();
    const auto N = static_cast<std::size_t>(cfg.num_users);

    RngStream setup_rng = rng.child(0);
    RngStream channel_rng = rng.child(1);
    RngStream policy_rng = rng.child(2);

    SchedulerState st;
    st.records = setup_phase(cfg, codebooks, setup_rng);
    st.queues = VirtualQueues(N);
    for (std::size_t u = 0; u < N; ++u)
        st.now.push_back(draw_channel(cfg, codebooks, channel_rng));

    TrajectoryMetrics m;
    m.intervals = intervals;
    m.cumulative_service.assign(N, 0.0);
    std::vector<double> qsum(static_cast<std::size_t>(intervals));
    std::vector<std::vector<double>> quser(static_cast<std::size_t>(intervals));
    std::vector<double> frame_sum(N, 0.0);
    std::int64_t frame_fill = 0;

    for (std::int64_t k = 0; k < intervals; ++k) {
        const std::uint64_t state = model.space().encode(st.mdp_state());
        Action act;
        switch (policy) {
        case PolicyKind::frame:
            act = model.actions()[frame_policy_step(st, k, model, *ctx.solver, fc, policy_rng)];
            break;
        case PolicyKind::myopic:
            act = model.actions()[myopic_step(st, model, fc)];
            break;
        case PolicyKind::conventional:
            act = conventional_step(st, model, fc);
            break;
        }
        const std::vector<double> service = service_of(st, act, model, codebooks, fc.instantaneous_service);

        if (policy == PolicyKind::frame) {
            for (std::size_t n = 0; n < N; ++n)
                frame_sum[n] += service[n];
            if (++frame_fill == fc.frame_length) {
                for (double &v : frame_sum)
                    v /= static_cast<double>(fc.frame_length);
                m.frame_deviations.push_back(distance(frame_sum, st.frame_rstar));
                std::fill(frame_sum.begin(), frame_sum.end(), 0.0);
                frame_fill = 0;
            }
        }

        st.queues.q = queue_update(st.queues.q, service, st.arrivals);
        for (std::size_t n = 0; n < N; ++n)
            m.cumulative_service[n] += service[n];
        qsum[static_cast<std::size_t>(k)] = st.queues.total();
        quser[static_cast<std::size_t>(k)] = st.queues.q;
        if (keep_log)
            m.log.push_back({k, state, act, service, st.queues.q});

        if (act.kind == Action::Kind::pair) {
            LivePairRecord &rec = st.records[act.pair];
            const ChannelDraw &di = st.now[act.i];
            const ChannelDraw &dj = st.now[act.j];
            rec.ids = {di.fine_id, dj.fine_id, di.coarse_id, dj.coarse_id};
            rec.kappa = k;
            rec.h_i = di.h;
            rec.h_j = dj.h;
            rec.fine_i = fine_estimate(di, cfg, codebooks);
            rec.fine_j = fine_estimate(dj, cfg, codebooks);
        }
        for (std::size_t u = 0; u < N; ++u)
            st.now[u] = draw_channel(cfg, codebooks, channel_rng);
    }

    m.throughput.resize(N);
    for (std::size_t n = 0; n < N; ++n)
        m.throughput[n] = m.cumulative_service[n] / static_cast<double>(intervals);
    m.sum_rate = 0.0;
    for (double v : m.throughput)
        m.sum_rate += v;
    m.utility = utility_value(m.throughput, fc);
    m.lyapunov_final = st.queues.lyapunov();
    m.lp_solves = st.lp_solves;
    finish_queue_stats(m, qsum, quser);
    return m;
}

TrajectoryMetrics metrics_from_log(const std::vector<IntervalRecord> &log, int num_users, const FrameConfig &fc) {
    const auto N = static_cast<std::size_t>(num_users);
    TrajectoryMetrics m;
    m.intervals = static_cast<std::int64_t>(log.size());
    m.cumulative_service.assign(N, 0.0);
    std::vector<double> qsum;
    std::vector<std::vector<double>> quser;
    for (const IntervalRecord &r : log) {
        for (std::size_t n = 0; n < N; ++n)
            m.cumulative_service[n] += r.rate[n];
        double t = 0.0;
        for (double v : r.queue)
            t += v;
        qsum.push_back(t);
        quser.push_back(r.queue);
    }
    m.throughput.resize(N);
    for (std::size_t n = 0; n < N; ++n)
        m.throughput[n] = log.empty() ? 0.0 : m.cumulative_service[n] / static_cast<double>(log.size());
    for (double v : m.throughput)
        m.sum_rate += v;
    m.utility = utility_value(m.throughput, fc);
    if (!log.empty()) {
        double l = 0.0;
        for (double v : log.back().queue)
            l += v * v;
        m.lyapunov_final = 0.5 * l;
    }
    finish_queue_stats(m, qsum, quser);
    return m;
}

std::string SweepPolicy::label() const {
    if (kind == PolicyKind::conventional)
        return "conventional";
    return to_string(kind) + ":" + to_string(csi);
}

SweepPolicy parse_sweep_policy(const std::string &s) {
    SweepPolicy p;
    const auto colon = s.find(':');
    p.kind = parse_policy_kind(s.substr(0, colon));
    if (colon != std::string::npos)
        p.csi = parse_csi_mode(s.substr(colon + 1));
    return p;
}

SweepPlan sweep_plan_from_json(const nlohmann::json &j) {
    for (const auto &[key, value] : j.items())
        if (key != "snr_db" && key != "policies" && key != "intervals" && key != "seeds" && key != "frame" &&
            key != "system")
            throw ConfigError("sweep." + key + ": unknown key");
    SweepPlan plan;
    try {
        plan.snr_db = j.at("snr_db").get<std::vector<double>>();
        plan.policies.clear();
        for (const auto &p : j.at("policies"))
            plan.policies.push_back(parse_sweep_policy(p.get<std::string>()));
        if (j.contains("intervals"))
            plan.intervals = j.at("intervals").get<std::int64_t>();
        if (j.contains("seeds"))
            plan.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("sweep: ") + e.what());
    }
    if (j.contains("frame"))
        plan.frame = frame_config_from_json(j.at("frame"));
    if (plan.snr_db.empty())
        throw ConfigError("sweep.snr_db: grid must be nonempty");
    if (plan.policies.empty())
        throw ConfigError("sweep.policies: list must be nonempty");
    if (plan.intervals < 1)
        throw ConfigError("sweep.intervals: must be >= 1");
    if (plan.seeds.empty())
        throw ConfigError("sweep.seeds: need at least one seed");
    return plan;
}

std::vector<SweepRow> snr_sweep(const SweepPlan &plan, const SystemConfig &base) {
    const Codebooks codebooks = build_codebooks(base);
    RngStream model_rng(base.seed, 1);
    const ConditionalModel cond = estimate_conditional_model(base, codebooks, model_rng);
    const RewardPools pools = build_reward_pools(base, codebooks);

    std::vector<SweepRow> rows;
    for (double snr : plan.snr_db) {
        SystemConfig at_snr = base;
        at_snr.power_budget = std::pow(10.0, snr / 10.0);
        // One model per CSI mode in use at this SNR.
        std::map<CsiMode, MdpModel> models;
        std::map<CsiMode, std::string> model_errors, lp_errors;
        std::map<CsiMode, TabularMdp> tabular;
        std::map<CsiMode, std::unique_ptr<SafSolver>> solvers;
        for (const SweepPolicy &p : plan.policies) {
            const CsiMode mode = p.kind == PolicyKind::conventional ? CsiMode::hybrid : p.csi;
            if (models.count(mode) || model_errors.count(mode))
                continue;
            SystemConfig c = at_snr;
            c.csi_mode = mode;
            try {
                models.emplace(mode, build_model(c, codebooks, cond, pools));
            } catch (const Error &e) {
                model_errors[mode] = e.what();
            }
        }
        for (const SweepPolicy &p : plan.policies) {
            if (p.kind != PolicyKind::frame || !models.count(p.csi) || solvers.count(p.csi) ||
                lp_errors.count(p.csi))
                continue;
            try {
                tabular.emplace(p.csi, tabulate(models.at(p.csi)));
                solvers.emplace(p.csi, std::make_unique<SafSolver>(tabular.at(p.csi)));
            } catch (const Error &e) {
                lp_errors[p.csi] = e.what();
                tabular.erase(p.csi);
            }
        }

        const std::size_t n_cells = plan.policies.size() * plan.seeds.size();
        std::vector<double> sum_rate(n_cells, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> utility(n_cells, std::numeric_limits<double>::quiet_NaN());
        std::vector<std::string> errors(n_cells);
        parallel_for(n_cells, [&](std::size_t cell) {
            const SweepPolicy &p = plan.policies[cell / plan.seeds.size()];
            const std::uint64_t seed = plan.seeds[cell % plan.seeds.size()];
            const CsiMode mode = p.kind == PolicyKind::conventional ? CsiMode::hybrid : p.csi;
            if (model_errors.count(mode)) {
                errors[cell] = model_errors.at(mode);
                return;
            }
            if (p.kind == PolicyKind::frame && lp_errors.count(mode)) {
                errors[cell] = lp_errors.at(mode);
                return;
            }
            SimulationContext ctx{&codebooks, &models.at(mode),
                                  p.kind == PolicyKind::frame ? solvers.at(mode).get() : nullptr};
            try {
                const TrajectoryMetrics m =
                    run_trajectory(ctx, plan.frame, p.kind, plan.intervals, RngStream(seed, kTrajectoryStream));
                sum_rate[cell] = m.sum_rate;
                utility[cell] = m.utility;
            } catch (const Error &e) {
                errors[cell] = e.what();
            }
        });

        for (std::size_t pi = 0; pi < plan.policies.size(); ++pi) {
            SweepRow row;
            row.snr_db = snr;
            row.policy = plan.policies[pi].label();
            std::vector<double> sr, ut;
            for (std::size_t si = 0; si < plan.seeds.size(); ++si) {
                const std::size_t cell = pi * plan.seeds.size() + si;
                if (!errors[cell].empty()) {
                    if (row.error.empty())
                        row.error = errors[cell];
                    continue;
                }
                sr.push_back(sum_rate[cell]);
                ut.push_back(utility[cell]);
            }
            row.seed_count = sr.size();
            if (sr.empty()) {
                row.mean_sum_rate = row.stderr_sum_rate = row.utility = std::numeric_limits<double>::quiet_NaN();
            } else {
                row.mean_sum_rate = mean_of(sr);
                row.stderr_sum_rate = stderr_of(sr);
                row.utility = mean_of(ut);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

ConvergenceReport convergence_report(const SimulationContext &ctx, const FrameConfig &base,
                                     const ConvergenceOptions &opt) {
    if (!ctx.solver || !ctx.model)
        throw InvalidInput("convergence report needs the model and its LP solver");
    const TabularMdp &mdp = ctx.solver->mdp();
    const std::vector<double> ones(mdp.num_users, 1.0);
    const StateActionFrequency x = ctx.solver->solve(ones);
    const StationaryPolicy policy = derandomize(x, mdp, ones);
    const std::vector<double> rstar = lp_rates(x, mdp);
    std::vector<double> start_mass(mdp.num_states);
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        start_mass[s] = std::max(0.0, x.state_mass(s));

    ConvergenceReport rep;
    const RngStream base_rng(ctx.model->config().seed, kConvergenceStream);
    for (int T : opt.frame_lengths) {
        std::vector<double> dev(opt.frames_per_length);
        parallel_for(opt.frames_per_length, [&](std::size_t f) {
            RngStream rng = base_rng.child(static_cast<std::uint64_t>(T)).child(f);
            // Start from the LP's own state marginal.
            double u = rng.uniform();
            std::size_t s = 0;
            for (; s + 1 < mdp.num_states; ++s) {
                if (u < start_mass[s])
                    break;
                u -= start_mass[s];
            }
            std::vector<double> acc(mdp.num_users, 0.0);
            for (int t = 0; t < T; ++t) {
                const std::size_t a = policy.action(s);
                for (std::size_t n = 0; n < mdp.num_users; ++n)
                    acc[n] += mdp.reward(s, a, n);
                s = sample_successor(mdp, s, a, rng);
            }
            for (double &v : acc)
                v /= T;
            dev[f] = distance(acc, rstar);
        });
        rep.frame_lengths.push_back(T);
        rep.deviation_mean.push_back(mean_of(dev));
        rep.deviation_stderr.push_back(stderr_of(dev));
    }

    for (double v : opt.v_values) {
        FrameConfig fc = base;
        fc.v = v;
        fc.frame_length = opt.utility_frame_length;
        std::vector<TrajectoryMetrics> runs(opt.seeds.size());
        parallel_for(opt.seeds.size(), [&](std::size_t i) {
            runs[i] = run_trajectory(ctx, fc, PolicyKind::frame, opt.utility_intervals,
                                     RngStream(opt.seeds[i], kTrajectoryStream));
        });
        std::vector<double> util, ratio, backlog;
        std::vector<double> qbar(mdp.num_users, 0.0);
        for (const TrajectoryMetrics &m : runs) {
            util.push_back(m.utility);
            ratio.push_back(m.queue_third_quarter > 0.0 ? m.queue_last_half / m.queue_third_quarter : 1.0);
            backlog.push_back(m.queue_last_half);
            for (std::size_t n = 0; n < mdp.num_users; ++n)
                qbar[n] += m.queue_user_last_half[n] / static_cast<double>(runs.size());
        }
        rep.v_values.push_back(v);
        rep.utility_mean.push_back(mean_of(util));
        rep.utility_stderr.push_back(stderr_of(util));
        rep.utility_bound.push_back(utility_value(solve_virtual_arrivals(qbar, fc), fc));
        rep.backlog.push_back(mean_of(backlog));
        rep.stability_ratio.push_back(mean_of(ratio));
    }
    return rep;
}

std::string format_double(double v) {
    if (std::isnan(v))
        return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_trajectory_log(std::ostream &out, const std::vector<IntervalRecord> &log, const std::string &manifest) {
    out << nlohmann::json{{"manifest", manifest}}.dump() << '\n';
    for (const IntervalRecord &r : log) {
        nlohmann::json j;
        j["k"] = r.k;
        j["state"] = r.state;
        j["action"] = to_string(r.action);
        j["rate"] = r.rate;
        j["queue"] = r.queue;
        out << j.dump() << '\n';
    }
}

void write_metrics_csv(std::ostream &out, const std::vector<TrajectoryMetrics> &runs,
                       const std::vector<std::uint64_t> &seeds, const std::string &manifest) {
    const std::size_t N = runs.empty() ? 0 : runs.front().throughput.size();
    out << "seed,intervals,sum_rate,utility,queue_mean,queue_max,lyapunov_final,mean_frame_deviation,lp_solves";
    for (std::size_t n = 0; n < N; ++n)
        out << ",throughput_" << n;
    out << '\n';
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const TrajectoryMetrics &m = runs[i];
        out << seeds[i] << ',' << m.intervals << ',' << format_double(m.sum_rate) << ',' << format_double(m.utility)
            << ',' << format_double(m.queue_mean) << ',' << format_double(m.queue_max) << ','
            << format_double(m.lyapunov_final) << ',' << format_double(m.mean_frame_deviation()) << ','
            << m.lp_solves;
        for (double t : m.throughput)
            out << ',' << format_double(t);
        out << '\n';
    }
    out << "# manifest " << manifest << '\n';
}

void write_sweep_csv(std::ostream &out, const std::vector<SweepRow> &rows, const std::string &manifest) {
    out << "snr_db,policy,mean_sum_rate,stderr,utility,seed_count\n";
    for (const SweepRow &r : rows)
        out << format_double(r.snr_db) << ',' << r.policy << ',' << format_double(r.mean_sum_rate) << ','
            << format_double(r.stderr_sum_rate) << ',' << format_double(r.utility) << ',' << r.seed_count << '\n';
    out << "# manifest " << manifest << '\n';
}

} // namespace hybridsched
