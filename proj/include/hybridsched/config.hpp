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

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace hybridsched {

enum class RateMode { optimistic, conservative, optimal_filter };

// Which CSI the EMAT transmission may use.
//   hybrid:          coarse-current + fine-delayed (multicast beam from current coarse ids)
//   delayed_only:    fine-delayed only; resolution beam fixed to the first antenna and
//                    rewards averaged over the unknown current channel
//   perfect_delayed: hybrid, with the exact past channel substituted for the fine estimate
enum class CsiMode { hybrid, delayed_only, perfect_delayed };

enum class UtilityKind { sum, log1p, weighted_sum };

struct SystemConfig {
    int num_users = 3;
    int num_tx_antennas = 2;
    double power_budget = 10.0; // linear, unit noise
    double pathloss_delta = 1.0;
    int coarse_bits = 0;
    int fine_bits = 1;
    int norm_levels = 1;
    double est_noise_coarse = 0.1; // variance
    double est_noise_fine = 0.01;  // variance
    RateMode rate_mode = RateMode::optimistic;
    CsiMode csi_mode = CsiMode::hybrid;
    bool enable_oneshot_actions = false;
    std::int64_t mc_samples_model = 100000;
    std::int64_t mc_samples_reward = 2000;
    std::uint64_t seed = 1;

    // Offline noise scalars of the slot-1 precoder design.
    double precoder_c2 = 1.0;
    double precoder_c3 = 1.0;
    double outage_epsilon = 0.1;
    int codebook_candidates = 200;
    int lloyd_sweeps = 100;
    int multicast_grid = 64;
    std::int64_t pool_max_draws = 20000000;

    std::int64_t num_pairs() const { return static_cast<std::int64_t>(num_users) * (num_users - 1) / 2; }
    std::size_t coarse_size() const { return std::size_t{1} << coarse_bits; }
    std::size_t fine_size() const { return std::size_t{1} << fine_bits; }

    // Throws ConfigError naming the offending field.
    void validate() const;
};

struct FrameConfig {
    int frame_length = 100;
    double v = 10.0;
    double r_max = 10.0;
    UtilityKind utility = UtilityKind::log1p;
    std::vector<double> weights; // weighted_sum only; empty means all ones
    bool randomized_policy = false;     // sample from the LP policy instead of derandomizing
    bool instantaneous_service = false; // serve realized rates rather than table expectations

    void validate(int num_users) const;
};

std::string to_string(RateMode m);
std::string to_string(CsiMode m);
std::string to_string(UtilityKind u);
RateMode parse_rate_mode(const std::string &s);
CsiMode parse_csi_mode(const std::string &s);
UtilityKind parse_utility(const std::string &s);

nlohmann::json to_json(const SystemConfig &c);
nlohmann::json to_json(const FrameConfig &c);
SystemConfig system_config_from_json(const nlohmann::json &j);
FrameConfig frame_config_from_json(const nlohmann::json &j);

// Hash over the canonical JSON form of everything that affects a model build.
std::uint64_t config_hash(const SystemConfig &c);

// Reads a JSON file; `//` and `/* */` comments are allowed.
nlohmann::json read_config_file(const std::string &path);

} // namespace hybridsched
