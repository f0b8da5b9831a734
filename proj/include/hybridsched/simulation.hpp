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
#include "hybridsched/rewards.hpp"
#include "hybridsched/saf.hpp"
#include "hybridsched/scheduler.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hybridsched {

enum class PolicyKind { frame, myopic, conventional };

std::string to_string(PolicyKind p);
PolicyKind parse_policy_kind(const std::string &s);

struct IntervalRecord {
    std::int64_t k = 0;
    std::uint64_t state = 0;
    Action action;
    std::vector<double> rate;
    std::vector<double> queue; // after the update
};

struct TrajectoryMetrics {
    std::int64_t intervals = 0;
    std::vector<double> cumulative_service;
    std::vector<double> throughput;
    double sum_rate = 0.0;
    double utility = 0.0;
    double queue_mean = 0.0; // time average of sum_n Q_n
    double queue_max = 0.0;
    double lyapunov_final = 0.0;
    double queue_third_quarter = 0.0; // average of sum_n Q_n over [J/2, 3J/4)
    double queue_last_half = 0.0;     // average over [J/2, J)
    std::vector<double> queue_user_last_half;
    std::vector<double> frame_deviations;
    std::size_t lp_solves = 0;
    std::vector<IntervalRecord> log;

    double mean_frame_deviation() const;
};

/// Everything a trajectory needs besides its own random stream.
struct SimulationContext {
    const Codebooks *codebooks = nullptr;
    const MdpModel *model = nullptr;
    const SafSolver *solver = nullptr; // frame policy only
};

/// Set-up phase, then J intervals of the chosen policy on simulated channels.
TrajectoryMetrics run_trajectory(const SimulationContext &ctx, const FrameConfig &fc, PolicyKind policy,
                                 std::int64_t intervals, RngStream rng, bool keep_log = false);

/// Metrics recomputed from a log alone; used to check the accounting identities.
TrajectoryMetrics metrics_from_log(const std::vector<IntervalRecord> &log, int num_users, const FrameConfig &fc);

struct SweepPolicy {
    PolicyKind kind = PolicyKind::myopic;
    CsiMode csi = CsiMode::hybrid;
    std::string label() const;
};

// "frame", "myopic", "conventional", optionally suffixed ":hybrid", ":delayed-only" or
// ":perfect-delayed".
SweepPolicy parse_sweep_policy(const std::string &s);

struct SweepPlan {
    std::vector<double> snr_db;
    std::vector<SweepPolicy> policies;
    std::int64_t intervals = 1000;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    FrameConfig frame;
};

SweepPlan sweep_plan_from_json(const nlohmann::json &j);

struct SweepRow {
    double snr_db = 0.0;
    std::string policy;
    double mean_sum_rate = 0.0;
    double stderr_sum_rate = 0.0;
    double utility = 0.0;
    std::size_t seed_count = 0;
    std::string error; // empty when the cell succeeded
};

/// Every (SNR, policy) cell over all seeds. Codebooks, the conditional model and the
/// reward pools are built once; only reward tables change with SNR. Cells that fail
/// report NaN with the error text.
std::vector<SweepRow> snr_sweep(const SweepPlan &plan, const SystemConfig &base);

struct ConvergenceReport {
    std::vector<int> frame_lengths;
    std::vector<double> deviation_mean;
    std::vector<double> deviation_stderr;
    std::vector<double> v_values;
    std::vector<double> utility_mean;
    std::vector<double> utility_stderr;
    std::vector<double> utility_bound; // U(r*) with r* the arrivals at the time-averaged queues
    std::vector<double> backlog;       // last-half average of sum Q
    std::vector<double> stability_ratio; // last-half / third-quarter average of sum Q
};

struct ConvergenceOptions {
    std::vector<int> frame_lengths{10, 50, 200};
    std::size_t frames_per_length = 400;
    std::vector<double> v_values{1.0, 10.0, 100.0};
    int utility_frame_length = 100;
    std::int64_t utility_intervals = 100000;
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

/// Frame-concentration deviations for each T (from states in the support of the q = 1
/// LP solution) and achieved utility for each V with the frame controller.
ConvergenceReport convergence_report(const SimulationContext &ctx, const FrameConfig &base,
                                     const ConvergenceOptions &opt);

// Next state drawn from the explicit kernel.
std::size_t sample_successor(const TabularMdp &mdp, std::size_t s, std::size_t a, RngStream &rng);

void write_trajectory_log(std::ostream &out, const std::vector<IntervalRecord> &log, const std::string &manifest);
void write_metrics_csv(std::ostream &out, const std::vector<TrajectoryMetrics> &runs,
                       const std::vector<std::uint64_t> &seeds, const std::string &manifest);
void write_sweep_csv(std::ostream &out, const std::vector<SweepRow> &rows, const std::string &manifest);

// Shortest decimal text that reads back as the same double.
std::string format_double(double v);

} // namespace hybridsched
