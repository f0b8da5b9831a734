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
#include "hybridsched/rewards.hpp"
#include "hybridsched/transmission.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace hybridsched {

/// Estimates held for one unordered pair (i < j) since it was last served.
struct PairRecord {
    std::uint32_t past_fine_i = 0;
    std::uint32_t past_fine_j = 0;
    std::uint32_t past_coarse_i = 0;
    std::uint32_t past_coarse_j = 0;
    bool operator==(const PairRecord &) const = default;
};

struct MdpState {
    std::vector<PairRecord> records; // one per pair, lexicographic pair order
    std::vector<std::uint32_t> cur;  // current coarse id per user
    bool operator==(const MdpState &) const = default;
};

/// Mixed-radix layout of the state: every pair record (fine i, fine j, coarse i,
/// coarse j), then each user's current coarse id. The first digit is least significant.
class StateSpace {
public:
    StateSpace() = default;
    explicit StateSpace(const SystemConfig &cfg); // throws TooLarge

    // (|C_f|^2 |C_c|^2)^{N(N-1)/2} |C_c|^N as a double, for reporting.
    static double count_states(const SystemConfig &cfg);

    int num_users() const { return num_users_; }
    std::size_t num_pairs() const { return pairs_.size(); }
    std::size_t num_coarse() const { return nc_; }
    std::size_t num_fine() const { return nf_; }
    std::uint64_t total_states() const { return total_; }
    const std::vector<std::pair<int, int>> &pairs() const { return pairs_; }
    std::size_t pair_index(int i, int j) const;

    std::uint64_t encode(const MdpState &s) const;
    MdpState decode(std::uint64_t index) const;

private:
    int num_users_ = 0;
    std::size_t nc_ = 0;
    std::size_t nf_ = 0;
    std::uint64_t total_ = 0;
    std::vector<std::pair<int, int>> pairs_;
};

StateSpace build_state_space(const SystemConfig &cfg);

struct Action {
    enum class Kind { pair, oneshot };
    Kind kind = Kind::pair;
    int i = 0;
    int j = 1;
    std::size_t pair = 0; // index into StateSpace::pairs()
    bool operator==(const Action &) const = default;
};

std::string to_string(const Action &a);

/// Pair actions in lexicographic order, then the one-shot variants when enabled.
std::vector<Action> build_actions(const SystemConfig &cfg);

struct Successor {
    std::uint64_t state;
    double probability;
};

/// The scheduling MDP with factorized transitions and rewards keyed by 6-tuple.
class MdpModel {
public:
    MdpModel() = default;
    MdpModel(SystemConfig cfg, StateSpace space, std::vector<Action> actions, ConditionalModel cond,
             RewardTables rewards);

    const SystemConfig &config() const { return cfg_; }
    const StateSpace &space() const { return space_; }
    const std::vector<Action> &actions() const { return actions_; }
    const ConditionalModel &conditional() const { return cond_; }
    const RewardTables &rewards() const { return rewards_; }
    std::size_t num_actions() const { return actions_.size(); }
    int num_users() const { return cfg_.num_users; }

    CsiTuple tuple(const MdpState &s, const Action &a) const;

    // Per-user expected rates; zero for users outside the action's pair.
    std::vector<double> reward(const MdpState &s, std::size_t action) const;
    double weighted_reward(const MdpState &s, std::size_t action, const std::vector<double> &q) const;

    // All successors with positive probability, in a fixed enumeration order.
    std::vector<Successor> successors(std::uint64_t state, std::size_t action) const;
    double transition_probability(std::uint64_t from, std::size_t action, std::uint64_t to) const;

    // Samples the next state: current ids from pi, refreshed fine ids for a served pair.
    MdpState sample_next(const MdpState &s, std::size_t action, RngStream &rng) const;

private:
    SystemConfig cfg_;
    StateSpace space_;
    std::vector<Action> actions_;
    ConditionalModel cond_;
    RewardTables rewards_;
};

MdpModel build_model(const SystemConfig &cfg, const Codebooks &codebooks, const ConditionalModel &cond,
                     const RewardPools &pools);
MdpModel build_model(const SystemConfig &cfg, const Codebooks &codebooks, const ConditionalModel &cond);

/// Explicit sparse kernel and reward matrix of an MDP; the form the LP and exact
/// policy evaluation work on. Also used directly for hand-built test MDPs.
struct TabularMdp {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t num_users = 0;
    // successors of (s, a) are succ[offset[s*A + a] .. offset[s*A + a + 1])
    std::vector<std::size_t> offset;
    std::vector<Successor> succ;
    std::vector<double> rewards; // ((s * A) + a) * N + n

    double reward(std::size_t s, std::size_t a, std::size_t n) const {
        return rewards[(s * num_actions + a) * num_users + n];
    }
    double weighted_reward(std::size_t s, std::size_t a, const std::vector<double> &q) const;

    // Builder for tests: kernel[s][a] is a dense row over next states.
    static TabularMdp from_dense(const std::vector<std::vector<std::vector<double>>> &kernel,
                                 const std::vector<std::vector<std::vector<double>>> &rewards);
};

inline constexpr std::uint64_t kMaxTabularStates = 1u << 16;

// Throws TooLarge when the state space exceeds kMaxTabularStates.
TabularMdp tabulate(const MdpModel &model);

} // namespace hybridsched
