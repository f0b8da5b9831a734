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

#include "hybridsched/scheduler.hpp"

#include "hybridsched/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hybridsched {

double VirtualQueues::total() const {
    double s = 0.0;
    for (double v : q)
        s += v;
    return s;
}

double VirtualQueues::lyapunov() const {
    double s = 0.0;
    for (double v : q)
        s += v * v;
    return 0.5 * s;
}

namespace {

double weight_of(const FrameConfig &fc, std::size_t n) { return fc.weights.empty() ? 1.0 : fc.weights.at(n); }

} // namespace

double utility_value(const std::vector<double> &rates, const FrameConfig &fc) {
    double u = 0.0;
    for (std::size_t n = 0; n < rates.size(); ++n) {
        switch (fc.utility) {
        case UtilityKind::sum:
            u += rates[n];
            break;
        case UtilityKind::log1p:
            u += std::log2(1.0 + rates[n]);
            break;
        case UtilityKind::weighted_sum:
            u += weight_of(fc, n) * rates[n];
            break;
        }
    }
    return u;
}

double solve_separable_arrival(const std::function<double(double)> &marginal_utility, double v, double q,
                               double r_max) {
    // The objective derivative V u'(r) - Q is nonincreasing.
    if (v * marginal_utility(r_max) - q >= 0.0)
        return r_max;
    if (v * marginal_utility(0.0) - q <= 0.0)
        return 0.0;
    double lo = 0.0, hi = r_max;
    while (hi - lo > 1e-12 * std::max(1.0, r_max)) {
        const double mid = 0.5 * (lo + hi);
        if (v * marginal_utility(mid) - q > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> solve_virtual_arrivals(const std::vector<double> &q, const FrameConfig &fc) {
    std::vector<double> r(q.size(), 0.0);
    for (std::size_t n = 0; n < q.size(); ++n) {
        if (q[n] < 0.0)
            throw InvalidInput("virtual queues must be nonnegative");
        switch (fc.utility) {
        case UtilityKind::sum:
            r[n] = fc.v >= q[n] ? fc.r_max : 0.0;
            break;
        case UtilityKind::weighted_sum:
            r[n] = fc.v * weight_of(fc, n) >= q[n] ? fc.r_max : 0.0;
            break;
        case UtilityKind::log1p:
            r[n] = q[n] == 0.0 ? fc.r_max
                               : std::clamp(fc.v / (q[n] * std::numbers::ln2) - 1.0, 0.0, fc.r_max);
            break;
        }
    }
    return r;
}

std::vector<double> queue_update(const std::vector<double> &q, const std::vector<double> &service,
                                 const std::vector<double> &arrivals) {
    std::vector<double> out(q.size());
    for (std::size_t n = 0; n < q.size(); ++n)
        out[n] = std::max(q[n] - service[n], 0.0) + arrivals[n];
    return out;
}

MdpState SchedulerState::mdp_state() const {
    MdpState s;
    s.records.reserve(records.size());
    for (const LivePairRecord &r : records)
        s.records.push_back(r.ids);
    s.cur.reserve(now.size());
    for (const ChannelDraw &d : now)
        s.cur.push_back(d.coarse_id);
    return s;
}

std::vector<LivePairRecord> setup_phase(const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng) {
    std::vector<LivePairRecord> records;
    std::int64_t k = 0;
    for (int i = 0; i < cfg.num_users; ++i)
        for (int j = i + 1; j < cfg.num_users; ++j, ++k) {
            std::vector<ChannelDraw> draws;
            for (int u = 0; u < cfg.num_users; ++u)
                draws.push_back(draw_channel(cfg, codebooks, rng));
            LivePairRecord r;
            r.ids = {draws[i].fine_id, draws[j].fine_id, draws[i].coarse_id, draws[j].coarse_id};
            r.kappa = k - cfg.num_pairs();
            r.h_i = draws[i].h;
            r.h_j = draws[j].h;
            r.fine_i = fine_estimate(draws[i], cfg, codebooks);
            r.fine_j = fine_estimate(draws[j], cfg, codebooks);
            records.push_back(std::move(r));
        }
    return records;
}

std::size_t frame_policy_step(SchedulerState &st, std::int64_t k, const MdpModel &model, const SafSolver &solver,
                              const FrameConfig &fc, RngStream &rng) {
    const TabularMdp &mdp = solver.mdp();
    if (k % fc.frame_length == 0 || st.policy.num_states == 0) {
        st.arrivals = solve_virtual_arrivals(st.queues.q, fc);
        st.frame_x = solver.solve(st.queues.q);
        st.policy = fc.randomized_policy ? extract_policy(st.frame_x, mdp, st.queues.q)
                                         : derandomize(st.frame_x, mdp, st.queues.q);
        st.frame_rstar = lp_rates(st.frame_x, mdp);
        ++st.lp_solves;
    }
    const std::uint64_t s = model.space().encode(st.mdp_state());
    return st.policy.sample(static_cast<std::size_t>(s), rng);
}

std::size_t myopic_step(SchedulerState &st, const MdpModel &model, const FrameConfig &fc) {
    st.arrivals = solve_virtual_arrivals(st.queues.q, fc);
    const MdpState s = st.mdp_state();
    std::size_t best = 0;
    double best_value = model.weighted_reward(s, 0, st.queues.q);
    for (std::size_t a = 1; a < model.num_actions(); ++a) {
        const double v = model.weighted_reward(s, a, st.queues.q);
        if (v > best_value) {
            best_value = v;
            best = a;
        }
    }
    return best;
}

Action conventional_step(SchedulerState &st, const MdpModel &model, const FrameConfig &fc) {
    st.arrivals = solve_virtual_arrivals(st.queues.q, fc);
    const auto &pairs = model.space().pairs();
    bool any_distinct = false;
    for (const auto &[i, j] : pairs)
        any_distinct = any_distinct || st.now[i].coarse_id != st.now[j].coarse_id;
    Action best;
    double best_value = -1.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        if (any_distinct && st.now[i].coarse_id == st.now[j].coarse_id)
            continue;
        const auto &r = model.rewards().oneshot_rates(st.now[i].coarse_id, st.now[j].coarse_id);
        const double v = st.queues.q[i] * r[0] + st.queues.q[j] * r[1];
        if (v > best_value) {
            best_value = v;
            best = {Action::Kind::oneshot, i, j, p};
        }
    }
    return best;
}

} // namespace hybridsched
