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

#pragma once

#include "hybridsched/channel_model.hpp"
#include "hybridsched/config.hpp"
#include "hybridsched/transmission.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace hybridsched {

/// Conditional channel draws shared by every reward table of one configuration.
///
/// The four roles (past/current channel of the first/second user of a pair) come from
/// independent streams, so the two users of a tuple never share a draw. Pools do not
/// depend on the power budget and are reused across SNR points.
struct RewardPools {
    ConditionalPool past_i;
    ConditionalPool past_j;
    ConditionalPool now_i;
    ConditionalPool now_j;
};

RewardPools build_reward_pools(const SystemConfig &cfg, const Codebooks &codebooks);

/// Expected per-user rates keyed by CSI 6-tuple (pair actions) and by current coarse
/// ids (one-shot actions).
class RewardTables {
public:
    RewardTables() = default;
    RewardTables(std::size_t num_coarse, std::size_t num_fine, bool ignore_current);

    std::size_t num_coarse() const { return nc_; }
    std::size_t num_fine() const { return nf_; }
    bool ignores_current() const { return ignore_current_; }
    std::size_t num_tuples() const { return pair_.size(); }

    std::size_t tuple_index(const CsiTuple &t) const;
    CsiTuple tuple_at(std::size_t index) const;

    const std::array<double, 2> &pair_rates(const CsiTuple &t) const { return pair_[tuple_index(t)]; }
    bool pair_feasible(const CsiTuple &t) const { return feasible_[tuple_index(t)] != 0; }
    const std::array<double, 2> &oneshot_rates(std::uint32_t cur_i, std::uint32_t cur_j) const {
        return oneshot_[cur_i * nc_ + cur_j];
    }

    std::vector<std::array<double, 2>> &pair_table() { return pair_; }
    const std::vector<std::array<double, 2>> &pair_table() const { return pair_; }
    std::vector<std::uint8_t> &feasible_table() { return feasible_; }
    const std::vector<std::uint8_t> &feasible_table() const { return feasible_; }
    std::vector<std::array<double, 2>> &oneshot_table() { return oneshot_; }
    const std::vector<std::array<double, 2>> &oneshot_table() const { return oneshot_; }

    std::uint64_t hash() const;

private:
    std::size_t nc_ = 0;
    std::size_t nf_ = 0;
    bool ignore_current_ = false;
    std::vector<std::array<double, 2>> pair_;
    std::vector<std::uint8_t> feasible_;
    std::vector<std::array<double, 2>> oneshot_;
};

/// Conservative-mode assigned rates per (past coarse i, past coarse j), computed once
/// from fixed streams; identical to what expected_pair_rates uses.
std::vector<std::array<double, 2>> pair_rate_assignments(const SystemConfig &cfg, const Codebooks &codebooks);

/// Fills every table entry by Monte-Carlo over the pools. Entries are pure functions of
/// the pools, so the result does not depend on the thread count. Tuples whose
/// conditioning cell holds no draws get rate 0 and are flagged infeasible.
RewardTables build_reward_tables(const SystemConfig &cfg, const Codebooks &codebooks, const RewardPools &pools);

} // namespace hybridsched
