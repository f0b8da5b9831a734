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

#include "hybridsched/mdp.hpp"
#include "hybridsched/simplex.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace hybridsched {

/// Long-run state-action occupancy x(s, a) of a stationary policy.
struct StateActionFrequency {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> x; // s * A + a
    double objective = 0.0;

    double at(std::size_t s, std::size_t a) const { return x[s * num_actions + a]; }
    double state_mass(std::size_t s) const;
};

struct StationaryPolicy {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> prob; // s * A + a
    bool deterministic = false;

    double at(std::size_t s, std::size_t a) const { return prob[s * num_actions + a]; }
    // Most likely action of state s (lowest index on ties); the action for deterministic rows.
    std::size_t action(std::size_t s) const;
    std::size_t sample(std::size_t s, RngStream &rng) const;
    static StationaryPolicy deterministic_from(std::size_t num_actions, const std::vector<std::size_t> &actions);
};

// Cap on states x (states * actions) for the dense constraint matrix, about 32 MB.
inline constexpr std::uint64_t kMaxLpEntries = std::uint64_t{1} << 22;

/// The occupancy-measure LP of one MDP. The constraint polytope (normalization plus
/// balance, with the last balance row dropped) is factored once; every solve() is then
/// phase 2 from the same feasible basis and hence a pure function of q. Throws TooLarge
/// beyond kMaxLpEntries.
class SafSolver {
public:
    explicit SafSolver(const TabularMdp &mdp);

    const TabularMdp &mdp() const { return *mdp_; }
    StateActionFrequency solve(const std::vector<double> &q) const;
    std::size_t solve_count() const { return solves_; }

private:
    const TabularMdp *mdp_;
    std::unique_ptr<DenseSimplex> simplex_;
    mutable std::size_t solves_ = 0;
};

StateActionFrequency solve_saf_lp(const std::vector<double> &q, const TabularMdp &mdp);

// Normalization and worst balance-equation violation of x.
double normalization_residual(const StateActionFrequency &x);
double balance_residual(const StateActionFrequency &x, const TabularMdp &mdp);

StationaryPolicy extract_policy(const StateActionFrequency &x);
// As above, but zero-mass states take an action that leads into the support of x
// (best q-weighted reward among those), so the chain cannot stay outside it.
StationaryPolicy extract_policy(const StateActionFrequency &x, const TabularMdp &mdp, const std::vector<double> &q);

/// Per-state argmax of x (zero-mass states routed into the support as above), verified by exact evaluation:
/// some recurrent class of the result must reach the LP objective within 1e-6, else
/// DerandomizationFailure.
StationaryPolicy derandomize(const StateActionFrequency &x, const TabularMdp &mdp, const std::vector<double> &q);

struct RecurrentClass {
    std::vector<std::size_t> states;
    std::vector<double> stationary; // aligned with states
    std::vector<double> rates;      // per user
    double mass = 0.0;              // absorption probability from the uniform initial law
};

struct PolicyEvaluation {
    std::vector<RecurrentClass> classes;
    std::vector<double> rates; // mass-weighted over classes
    bool unichain() const { return classes.size() == 1; }
    double best_weighted(const std::vector<double> &q) const;
};

/// Exact long-run rates of a policy. Recurrent classes are the closed strongly
/// connected components of the induced chain; each gets its stationary law by a dense
/// solve, and transient states are split among classes by absorption probabilities.
PolicyEvaluation evaluate_policy(const StationaryPolicy &policy, const TabularMdp &mdp);

std::vector<double> lp_rates(const StateActionFrequency &x, const TabularMdp &mdp);

// Sum over classes of (x-mass inside the class) * class rates.
std::vector<double> occupancy_weighted_rates(const PolicyEvaluation &eval, const StateActionFrequency &x);

/// Phase-1 residual of {x in polytope : lp_rates(x) = rates}; ~0 iff the rate vector
/// is achievable by some stationary randomized policy.
double region_membership_residual(const TabularMdp &mdp, const std::vector<double> &rates);

} // namespace hybridsched
