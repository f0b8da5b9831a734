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

#include "hybridsched/mdp.hpp"

#include "hybridsched/errors.hpp"

#include <cmath>
#include <sstream>

namespace hybridsched {

namespace {

bool checked_mul(std::uint64_t &acc, std::uint64_t f) { return !__builtin_mul_overflow(acc, f, &acc); }

std::uint32_t sample_categorical(const double *p, std::size_t n, RngStream &rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += p[k];
        if (u < acc)
            return static_cast<std::uint32_t>(k);
    }
    // Rounding left a sliver above the last cumulative value; take the last supported entry.
    for (std::size_t k = n; k-- > 0;)
        if (p[k] > 0.0)
            return static_cast<std::uint32_t>(k);
    return 0;
}

} // namespace

StateSpace::StateSpace(const SystemConfig &cfg)
    : num_users_(cfg.num_users), nc_(cfg.coarse_size()), nf_(cfg.fine_size()) {
    for (int i = 0; i < num_users_; ++i)
        for (int j = i + 1; j < num_users_; ++j)
            pairs_.emplace_back(i, j);
    std::uint64_t total = 1;
    bool ok = true;
    for (std::size_t p = 0; p < pairs_.size() && ok; ++p)
        ok = checked_mul(total, nf_) && checked_mul(total, nf_) && checked_mul(total, nc_) && checked_mul(total, nc_);
    for (int u = 0; u < num_users_ && ok; ++u)
        ok = checked_mul(total, nc_);
    if (!ok) {
        throw TooLarge("state space does not fit a 64-bit index", count_states(cfg));
    }
    total_ = total;
}

double StateSpace::count_states(const SystemConfig &cfg) {
    const double nc = static_cast<double>(cfg.coarse_size());
    const double nf = static_cast<double>(cfg.fine_size());
    return std::pow(nf * nf * nc * nc, static_cast<double>(cfg.num_pairs())) * std::pow(nc, cfg.num_users);
}

std::size_t StateSpace::pair_index(int i, int j) const {
    if (i > j)
        std::swap(i, j);
    if (i < 0 || j >= num_users_ || i == j)
        throw InvalidInput("pair index out of range");
    return static_cast<std::size_t>(i * (2 * num_users_ - i - 1) / 2 + (j - i - 1));
}

std::uint64_t StateSpace::encode(const MdpState &s) const {
    if (s.records.size() != pairs_.size() || s.cur.size() != static_cast<std::size_t>(num_users_))
        throw InvalidInput("state shape does not match the state space");
    std::uint64_t index = 0;
    std::uint64_t stride = 1;
    auto digit = [&](std::uint32_t d, std::size_t radix) {
        if (d >= radix)
            throw InvalidInput("state digit out of range");
        index += d * stride;
        stride *= radix;
    };
    for (const PairRecord &r : s.records) {
        digit(r.past_fine_i, nf_);
        digit(r.past_fine_j, nf_);
        digit(r.past_coarse_i, nc_);
        digit(r.past_coarse_j, nc_);
    }
    for (std::uint32_t c : s.cur)
        digit(c, nc_);
    return index;
}

MdpState StateSpace::decode(std::uint64_t index) const {
    if (index >= total_)
        throw InvalidInput("state index out of range");
    MdpState s;
    s.records.resize(pairs_.size());
    s.cur.resize(static_cast<std::size_t>(num_users_));
    auto digit = [&](std::size_t radix) {
        const auto d = static_cast<std::uint32_t>(index % radix);
        index /= radix;
        return d;
    };
    for (PairRecord &r : s.records) {
        r.past_fine_i = digit(nf_);
        r.past_fine_j = digit(nf_);
        r.past_coarse_i = digit(nc_);
        r.past_coarse_j = digit(nc_);
    }
    for (std::uint32_t &c : s.cur)
        c = digit(nc_);
    return s;
}

StateSpace build_state_space(const SystemConfig &cfg) { return StateSpace(cfg); }

std::string to_string(const Action &a) {
    std::ostringstream o;
    o << (a.kind == Action::Kind::pair ? "pair" : "oneshot") << "(" << a.i << "," << a.j << ")";
    return o.str();
}

std::vector<Action> build_actions(const SystemConfig &cfg) {
    std::vector<Action> out;
    std::size_t p = 0;
    for (int i = 0; i < cfg.num_users; ++i)
        for (int j = i + 1; j < cfg.num_users; ++j)
            out.push_back({Action::Kind::pair, i, j, p++});
    if (cfg.enable_oneshot_actions) {
        const std::size_t n = out.size();
        for (std::size_t k = 0; k < n; ++k) {
            Action a = out[k];
            a.kind = Action::Kind::oneshot;
            out.push_back(a);
        }
    }
    return out;
}

MdpModel::MdpModel(SystemConfig cfg, StateSpace space, std::vector<Action> actions, ConditionalModel cond,
                   RewardTables rewards)
    : cfg_(std::move(cfg)), space_(std::move(space)), actions_(std::move(actions)), cond_(std::move(cond)),
      rewards_(std::move(rewards)) {}

CsiTuple MdpModel::tuple(const MdpState &s, const Action &a) const {
    const PairRecord &r = s.records.at(a.pair);
    return {r.past_fine_i, r.past_fine_j, r.past_coarse_i, r.past_coarse_j, s.cur.at(a.i), s.cur.at(a.j)};
}

std::vector<double> MdpModel::reward(const MdpState &s, std::size_t action) const {
    const Action &a = actions_.at(action);
    std::vector<double> out(static_cast<std::size_t>(cfg_.num_users), 0.0);
    const std::array<double, 2> r = a.kind == Action::Kind::pair ? rewards_.pair_rates(tuple(s, a))
                                                                 : rewards_.oneshot_rates(s.cur[a.i], s.cur[a.j]);
    out[a.i] = r[0];
    out[a.j] = r[1];
    return out;
}

double MdpModel::weighted_reward(const MdpState &s, std::size_t action, const std::vector<double> &q) const {
    const Action &a = actions_.at(action);
    const std::array<double, 2> r = a.kind == Action::Kind::pair ? rewards_.pair_rates(tuple(s, a))
                                                                 : rewards_.oneshot_rates(s.cur[a.i], s.cur[a.j]);
    return q.at(a.i) * r[0] + q.at(a.j) * r[1];
}

std::vector<Successor> MdpModel::successors(std::uint64_t state, std::size_t action) const {
    const Action &a = actions_.at(action);
    const MdpState s = space_.decode(state);
    const std::size_t nc = space_.num_coarse();
    const std::size_t nf = space_.num_fine();
    const std::size_t n = s.cur.size();

    std::vector<std::pair<PairRecord, double>> records;
    if (a.kind == Action::Kind::pair) {
        const std::uint32_t ci = s.cur[a.i], cj = s.cur[a.j];
        for (std::uint32_t fi = 0; fi < nf; ++fi)
            for (std::uint32_t fj = 0; fj < nf; ++fj) {
                const double p = cond_.p_fine(ci, fi) * cond_.p_fine(cj, fj);
                if (p > 0.0)
                    records.push_back({{fi, fj, ci, cj}, p});
            }
    } else {
        records.push_back({s.records[a.pair], 1.0});
    }

    std::vector<Successor> out;
    MdpState next = s;
    std::vector<std::uint32_t> cur(n, 0);
    for (const auto &[rec, p_rec] : records) {
        next.records[a.pair] = rec;
        std::fill(cur.begin(), cur.end(), 0u);
        while (true) {
            double p = p_rec;
            for (std::size_t u = 0; u < n; ++u)
                p *= cond_.pi_coarse[cur[u]];
            if (p > 0.0) {
                next.cur = cur;
                out.push_back({space_.encode(next), p});
            }
            std::size_t u = 0;
            while (u < n && ++cur[u] == nc)
                cur[u++] = 0;
            if (u == n)
                break;
        }
    }
    return out;
}

double MdpModel::transition_probability(std::uint64_t from, std::size_t action, std::uint64_t to) const {
    const Action &a = actions_.at(action);
    const MdpState s = space_.decode(from);
    const MdpState t = space_.decode(to);
    for (std::size_t p = 0; p < s.records.size(); ++p)
        if (p != a.pair && !(s.records[p] == t.records[p]))
            return 0.0;
    double prob = 1.0;
    const PairRecord &r = t.records[a.pair];
    if (a.kind == Action::Kind::pair) {
        if (r.past_coarse_i != s.cur[a.i] || r.past_coarse_j != s.cur[a.j])
            return 0.0;
        prob *= cond_.p_fine(s.cur[a.i], r.past_fine_i) * cond_.p_fine(s.cur[a.j], r.past_fine_j);
    } else if (!(r == s.records[a.pair])) {
        return 0.0;
    }
    for (std::uint32_t c : t.cur)
        prob *= cond_.pi_coarse[c];
    return prob;
}

MdpState MdpModel::sample_next(const MdpState &s, std::size_t action, RngStream &rng) const {
    const Action &a = actions_.at(action);
    MdpState next = s;
    const std::size_t nf = space_.num_fine();
    if (a.kind == Action::Kind::pair) {
        const std::uint32_t ci = s.cur[a.i], cj = s.cur[a.j];
        PairRecord &r = next.records[a.pair];
        r.past_fine_i = sample_categorical(&cond_.p_fine_given_coarse[ci * nf], nf, rng);
        r.past_fine_j = sample_categorical(&cond_.p_fine_given_coarse[cj * nf], nf, rng);
        r.past_coarse_i = ci;
        r.past_coarse_j = cj;
    }
    for (std::uint32_t &c : next.cur)
        c = sample_categorical(cond_.pi_coarse.data(), cond_.pi_coarse.size(), rng);
    return next;
}

MdpModel build_model(const SystemConfig &cfg, const Codebooks &codebooks, const ConditionalModel &cond,
                     const RewardPools &pools) {
    StateSpace space(cfg);
    return MdpModel(cfg, std::move(space), build_actions(cfg), cond, build_reward_tables(cfg, codebooks, pools));
}

MdpModel build_model(const SystemConfig &cfg, const Codebooks &codebooks, const ConditionalModel &cond) {
    return build_model(cfg, codebooks, cond, build_reward_pools(cfg, codebooks));
}

double TabularMdp::weighted_reward(std::size_t s, std::size_t a, const std::vector<double> &q) const {
    double acc = 0.0;
    for (std::size_t n = 0; n < num_users; ++n)
        acc += q[n] * reward(s, a, n);
    return acc;
}

TabularMdp TabularMdp::from_dense(const std::vector<std::vector<std::vector<double>>> &kernel,
                                  const std::vector<std::vector<std::vector<double>>> &rewards) {
    TabularMdp m;
    m.num_states = kernel.size();
    m.num_actions = kernel.empty() ? 0 : kernel[0].size();
    m.num_users = (rewards.empty() || rewards[0].empty()) ? 0 : rewards[0][0].size();
    m.offset.push_back(0);
    for (std::size_t s = 0; s < m.num_states; ++s)
        for (std::size_t a = 0; a < m.num_actions; ++a) {
            for (std::size_t t = 0; t < m.num_states; ++t)
                if (kernel[s][a][t] > 0.0)
                    m.succ.push_back({t, kernel[s][a][t]});
            m.offset.push_back(m.succ.size());
            for (std::size_t n = 0; n < m.num_users; ++n)
                m.rewards.push_back(rewards[s][a][n]);
        }
    return m;
}

TabularMdp tabulate(const MdpModel &model) {
    const std::uint64_t total = model.space().total_states();
    if (total > kMaxTabularStates)
        throw TooLarge("state space too large to tabulate", static_cast<double>(total));
    TabularMdp m;
    m.num_states = static_cast<std::size_t>(total);
    m.num_actions = model.num_actions();
    m.num_users = static_cast<std::size_t>(model.num_users());
    m.offset.push_back(0);
    m.rewards.reserve(m.num_states * m.num_actions * m.num_users);
    for (std::size_t s = 0; s < m.num_states; ++s) {
        const MdpState st = model.space().decode(s);
        for (std::size_t a = 0; a < m.num_actions; ++a) {
            for (const Successor &x : model.successors(s, a))
                m.succ.push_back(x);
            m.offset.push_back(m.succ.size());
            for (double r : model.reward(st, a))
                m.rewards.push_back(r);
        }
    }
    return m;
}

} // namespace hybridsched
