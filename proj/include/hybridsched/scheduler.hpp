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
#include "hybridsched/mdp.hpp"
#include "hybridsched/saf.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace hybridsched {

struct VirtualQueues {
    std::vector<double> q;

    explicit VirtualQueues(std::size_t n = 0) : q(n, 0.0) {}
    double total() const;
    double lyapunov() const; // sum(Q_n^2) / 2
};

// Utility of an average-rate vector: sum, sum log2(1 + r_n), or weighted sum.
double utility_value(const std::vector<double> &rates, const FrameConfig &fc);

/// argmax_{0 <= r <= r_max} V U(r) - sum_n Q_n r_n, coordinate by coordinate.
std::vector<double> solve_virtual_arrivals(const std::vector<double> &q, const FrameConfig &fc);

/// One coordinate of the arrival problem for any concave nondecreasing utility given its
/// derivative: bisection on V u'(r) = Q over [0, r_max] to 1e-9.
double solve_separable_arrival(const std::function<double(double)> &marginal_utility, double v, double q,
                               double r_max);

// (Q - R)^+ + r, componentwise.
std::vector<double> queue_update(const std::vector<double> &q, const std::vector<double> &service,
                                 const std::vector<double> &arrivals);

/// Live record of a pair: quantized ids plus the channels behind them, which only the
/// instantaneous-service option reads.
struct LivePairRecord {
    PairRecord ids;
    std::int64_t kappa = -1; // interval the pair was last served
    CRow h_i, h_j;
    CRow fine_i, fine_j;
};

struct SchedulerState {
    std::vector<LivePairRecord> records;
    std::vector<ChannelDraw> now; // per user, current interval
    VirtualQueues queues;
    std::vector<double> arrivals;
    // Frame-policy data refreshed at frame boundaries.
    StationaryPolicy policy;
    StateActionFrequency frame_x;
    std::vector<double> frame_rstar;
    std::size_t lp_solves = 0;

    MdpState mdp_state() const;
};

/// Serves every pair once, in index order, on fresh channels; returns the records.
std::vector<LivePairRecord> setup_phase(const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng);

/// Frame controller: at k = 0 mod T recompute arrivals and re-solve the occupancy LP
/// with q = Q, then act by the (derandomized) policy at the live state.
std::size_t frame_policy_step(SchedulerState &st, std::int64_t k, const MdpModel &model, const SafSolver &solver,
                              const FrameConfig &fc, RngStream &rng);

/// argmax_a Q' R(s, a), lowest action on ties; arrivals refreshed every interval.
std::size_t myopic_step(SchedulerState &st, const MdpModel &model, const FrameConfig &fc);

/// One-shot pair maximizing queue-weighted expected one-shot rates from current coarse
/// ids. Pairs whose current coarse ids coincide are skipped unless every pair has them.
Action conventional_step(SchedulerState &st, const MdpModel &model, const FrameConfig &fc);

} // namespace hybridsched
