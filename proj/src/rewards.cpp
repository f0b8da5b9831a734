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

#include "hybridsched/rewards.hpp"

#include "hybridsched/errors.hpp"

#include <algorithm>
#include <cstring>

namespace hybridsched {

namespace {

constexpr std::uint64_t kPoolStream = 0x504f;
constexpr std::size_t kTupleChunk = 16;

struct PairGeometry {
    CMatrix w_i;
    CMatrix w_j;
};

} // namespace

RewardPools build_reward_pools(const SystemConfig &cfg, const Codebooks &codebooks) {
    const RngStream base(cfg.seed, kPoolStream);
    const std::size_t per_cell = static_cast<std::size_t>(cfg.mc_samples_reward);
    RewardPools pools;
    std::array<ConditionalPool *, 4> roles{&pools.past_i, &pools.past_j, &pools.now_i, &pools.now_j};
    parallel_for(roles.size(), [&](std::size_t r) { *roles[r] = ConditionalPool(cfg, codebooks, per_cell, base.child(r)); });
    return pools;
}

RewardTables::RewardTables(std::size_t num_coarse, std::size_t num_fine, bool ignore_current)
    : nc_(num_coarse), nf_(num_fine), ignore_current_(ignore_current) {
    const std::size_t ncur = ignore_current ? 1 : nc_;
    const std::size_t n = nf_ * nf_ * nc_ * nc_ * ncur * ncur;
    pair_.assign(n, {0.0, 0.0});
    feasible_.assign(n, 1);
    oneshot_.assign(nc_ * nc_, {0.0, 0.0});
}

std::size_t RewardTables::tuple_index(const CsiTuple &t) const {
    if (t.past_fine_i >= nf_ || t.past_fine_j >= nf_ || t.past_coarse_i >= nc_ || t.past_coarse_j >= nc_ ||
        t.cur_coarse_i >= nc_ || t.cur_coarse_j >= nc_)
        throw InvalidInput("CSI tuple id out of range");
    const std::size_t ncur = ignore_current_ ? 1 : nc_;
    const std::size_t ci = ignore_current_ ? 0 : t.cur_coarse_i;
    const std::size_t cj = ignore_current_ ? 0 : t.cur_coarse_j;
    return ((((t.past_fine_i * nf_ + t.past_fine_j) * nc_ + t.past_coarse_i) * nc_ + t.past_coarse_j) * ncur + ci) *
               ncur +
           cj;
}

CsiTuple RewardTables::tuple_at(std::size_t index) const {
    const std::size_t ncur = ignore_current_ ? 1 : nc_;
    CsiTuple t;
    t.cur_coarse_j = static_cast<std::uint32_t>(index % ncur);
    index /= ncur;
    t.cur_coarse_i = static_cast<std::uint32_t>(index % ncur);
    index /= ncur;
    t.past_coarse_j = static_cast<std::uint32_t>(index % nc_);
    index /= nc_;
    t.past_coarse_i = static_cast<std::uint32_t>(index % nc_);
    index /= nc_;
    t.past_fine_j = static_cast<std::uint32_t>(index % nf_);
    index /= nf_;
    t.past_fine_i = static_cast<std::uint32_t>(index);
    return t;
}

std::uint64_t RewardTables::hash() const {
    std::uint64_t h = fnv1a64(std::span(reinterpret_cast<const unsigned char *>(pair_.data()),
                                        pair_.size() * sizeof(pair_[0])));
    h = fnv1a64(std::span(feasible_.data(), feasible_.size()), h);
    return fnv1a64(
        std::span(reinterpret_cast<const unsigned char *>(oneshot_.data()), oneshot_.size() * sizeof(oneshot_[0])), h);
}

std::vector<std::array<double, 2>> pair_rate_assignments(const SystemConfig &cfg, const Codebooks &codebooks) {
    const std::size_t nc = codebooks.coarse.size();
    std::vector<std::array<double, 2>> out(nc * nc);
    parallel_for(out.size(), [&](std::size_t k) {
        out[k] = assigned_pair_rates(static_cast<std::uint32_t>(k / nc), static_cast<std::uint32_t>(k % nc), cfg,
                                     codebooks);
    });
    return out;
}

RewardTables build_reward_tables(const SystemConfig &cfg, const Codebooks &codebooks, const RewardPools &pools) {
    const std::size_t nc = codebooks.coarse.size();
    const std::size_t nf = codebooks.fine.size();
    const bool ignore_current = cfg.csi_mode == CsiMode::delayed_only;
    const bool optimal = cfg.rate_mode == RateMode::optimal_filter;
    const bool conservative = cfg.rate_mode == RateMode::conservative;
    const std::size_t n_samples = static_cast<std::size_t>(cfg.mc_samples_reward);
    RewardTables tables(nc, nf, ignore_current);

    std::vector<PairGeometry> geometry(nc * nc);
    std::vector<CVector> directions(nc * nc);
    for (std::size_t a = 0; a < nc; ++a)
        for (std::size_t b = 0; b < nc; ++b) {
            auto [wi, wj] = slot1_precoders(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), cfg, codebooks);
            geometry[a * nc + b] = {std::move(wi), std::move(wj)};
            directions[a * nc + b] =
                resolution_direction(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), cfg, codebooks);
        }
    std::vector<std::array<double, 2>> assigned;
    if (conservative)
        assigned = pair_rate_assignments(cfg, codebooks);

    // Fine estimates per pool entry, computed once.
    auto fine_of = [&](const ConditionalPool &pool) {
        std::vector<std::vector<CRow>> out(nc * nf);
        for (std::uint32_t c = 0; c < nc; ++c)
            for (std::uint32_t f = 0; f < nf; ++f)
                for (const ChannelDraw &d : pool.joint(c, f))
                    out[c * nf + f].push_back(fine_estimate(d, cfg, codebooks));
        return out;
    };
    const auto fine_i = fine_of(pools.past_i);
    const auto fine_j = fine_of(pools.past_j);

    auto &pair = tables.pair_table();
    auto &feasible = tables.feasible_table();
    const std::size_t n_tuples = pair.size();
    const std::size_t n_chunks = (n_tuples + kTupleChunk - 1) / kTupleChunk;
    parallel_for(n_chunks, [&](std::size_t chunk) {
        std::vector<double> ri(n_samples), rj(n_samples);
        const std::size_t end = std::min(n_tuples, (chunk + 1) * kTupleChunk);
        for (std::size_t idx = chunk * kTupleChunk; idx < end; ++idx) {
            const CsiTuple t = tables.tuple_at(idx);
            const auto &pi = pools.past_i.joint(t.past_coarse_i, t.past_fine_i);
            const auto &pj = pools.past_j.joint(t.past_coarse_j, t.past_fine_j);
            const auto &ni = ignore_current ? pools.now_i.unconditioned() : pools.now_i.by_coarse(t.cur_coarse_i);
            const auto &nj = ignore_current ? pools.now_j.unconditioned() : pools.now_j.by_coarse(t.cur_coarse_j);
            if (pi.empty() || pj.empty() || ni.empty() || nj.empty()) {
                pair[idx] = {0.0, 0.0};
                feasible[idx] = 0;
                continue;
            }
            const auto &fi = fine_i[t.past_coarse_i * nf + t.past_fine_i];
            const auto &fj = fine_j[t.past_coarse_j * nf + t.past_fine_j];
            const PairGeometry &g = geometry[t.past_coarse_i * nc + t.past_coarse_j];
            const CVector &dir = directions[t.cur_coarse_i * nc + t.cur_coarse_j];
            double si = 0.0, sj = 0.0;
            for (std::size_t s = 0; s < n_samples; ++s) {
                const std::size_t a = s % pi.size();
                const std::size_t b = s % pj.size();
                const PairRealization real{pi[a].h, pj[b].h, ni[s % ni.size()].h, nj[s % nj.size()].h, fi[a], fj[b]};
                const auto r = pair_instantaneous_rates(real, g.w_i, g.w_j, dir, cfg.power_budget, optimal);
                ri[s] = r[0];
                rj[s] = r[1];
                si += r[0];
                sj += r[1];
            }
            if (conservative) {
                const auto &r = assigned[t.past_coarse_i * nc + t.past_coarse_j];
                pair[idx] = {outage_reward(ri, r[0]), outage_reward(rj, r[1])};
            } else {
                pair[idx] = {si / static_cast<double>(n_samples), sj / static_cast<double>(n_samples)};
            }
        }
    });

    auto &oneshot = tables.oneshot_table();
    parallel_for(nc * nc, [&](std::size_t k) {
        const auto ci = static_cast<std::uint32_t>(k / nc);
        const auto cj = static_cast<std::uint32_t>(k % nc);
        const auto &hi = pools.now_i.by_coarse(ci);
        const auto &hj = pools.now_j.by_coarse(cj);
        if (hi.empty() || hj.empty()) {
            oneshot[k] = {0.0, 0.0};
            return;
        }
        const auto [w_i, w_j] = oneshot_zf_precoders(ci, cj, cfg, codebooks);
        std::vector<double> ri(n_samples), rj(n_samples);
        double si = 0.0, sj = 0.0;
        for (std::size_t s = 0; s < n_samples; ++s) {
            ri[s] = oneshot_rate(hi[s % hi.size()].h, w_i, w_j);
            rj[s] = oneshot_rate(hj[s % hj.size()].h, w_j, w_i);
            si += ri[s];
            sj += rj[s];
        }
        if (conservative) {
            const auto r = assigned_oneshot_rates(ci, cj, cfg, codebooks);
            oneshot[k] = {outage_reward(ri, r[0]), outage_reward(rj, r[1])};
        } else {
            oneshot[k] = {si / static_cast<double>(n_samples), sj / static_cast<double>(n_samples)};
        }
    });
    return tables;
}

} // namespace hybridsched
