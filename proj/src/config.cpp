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

#include "hybridsched/config.hpp"

#include "hybridsched/errors.hpp"
#include "hybridsched/numerics.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hybridsched {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string &field, const std::string &msg) {
    throw ConfigError("config field '" + field + "': " + msg);
}

void reject_unknown(const json &j, const std::set<std::string> &known, const std::string &section) {
    if (!j.is_object())
        field_error(section, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            field_error(section + "." + it.key(), "unknown field");
}

template <typename T>
void read_field(const json &j, const char *key, T &out, const std::string &section) {
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception &e) {
        field_error(section + "." + key, std::string("wrong type (") + e.what() + ")");
    }
}

void read_enum_string(const json &j, const char *key, std::string &out, const std::string &section) {
    if (!j.contains(key))
        return;
    if (!j.at(key).is_string())
        field_error(section + "." + key, "expected a string");
    out = j.at(key).get<std::string>();
}

} // namespace

std::string to_string(RateMode m) {
    switch (m) {
    case RateMode::optimistic:
        return "optimistic";
    case RateMode::conservative:
        return "conservative";
    case RateMode::optimal_filter:
        return "optimal-filter";
    }
    return "?";
}

std::string to_string(CsiMode m) {
    switch (m) {
    case CsiMode::hybrid:
        return "hybrid";
    case CsiMode::delayed_only:
        return "delayed-only";
    case CsiMode::perfect_delayed:
        return "perfect-delayed";
    }
    return "?";
}

std::string to_string(UtilityKind u) {
    switch (u) {
    case UtilityKind::sum:
        return "sum";
    case UtilityKind::log1p:
        return "log1p";
    case UtilityKind::weighted_sum:
        return "weighted-sum";
    }
    return "?";
}

RateMode parse_rate_mode(const std::string &s) {
    if (s == "optimistic")
        return RateMode::optimistic;
    if (s == "conservative")
        return RateMode::conservative;
    if (s == "optimal-filter")
        return RateMode::optimal_filter;
    throw ConfigError("unknown rate mode '" + s + "' (optimistic | conservative | optimal-filter)");
}

CsiMode parse_csi_mode(const std::string &s) {
    if (s == "hybrid")
        return CsiMode::hybrid;
    if (s == "delayed-only")
        return CsiMode::delayed_only;
    if (s == "perfect-delayed")
        return CsiMode::perfect_delayed;
    throw ConfigError("unknown csi mode '" + s + "' (hybrid | delayed-only | perfect-delayed)");
}

UtilityKind parse_utility(const std::string &s) {
    if (s == "sum")
        return UtilityKind::sum;
    if (s == "log1p")
        return UtilityKind::log1p;
    if (s == "weighted-sum")
        return UtilityKind::weighted_sum;
    throw ConfigError("unknown utility '" + s + "' (sum | log1p | weighted-sum)");
}

void SystemConfig::validate() const {
    if (num_users < 2)
        field_error("system.num_users", "must be >= 2");
    if (num_tx_antennas < 2 || num_tx_antennas > kMaxDim)
        field_error("system.num_tx_antennas", "must be in [2, 8]");
    if (!(power_budget > 0.0) || !std::isfinite(power_budget))
        field_error("system.power_budget", "must be positive and finite");
    if (!(pathloss_delta > 0.0))
        field_error("system.pathloss_delta", "must be positive");
    if (coarse_bits < 0 || coarse_bits > 16)
        field_error("system.coarse_bits", "must be in [0, 16]");
    if (fine_bits < coarse_bits || fine_bits > 20)
        field_error("system.fine_bits", "must be in [coarse_bits, 20]");
    if (norm_levels < 1)
        field_error("system.norm_levels", "must be >= 1");
    if (est_noise_coarse < 0.0)
        field_error("system.est_noise_coarse", "must be >= 0");
    if (est_noise_fine < 0.0 || est_noise_fine > est_noise_coarse)
        field_error("system.est_noise_fine", "must be in [0, est_noise_coarse]");
    if (mc_samples_model < 1)
        field_error("system.mc_samples_model", "must be >= 1");
    if (mc_samples_reward < 1)
        field_error("system.mc_samples_reward", "must be >= 1");
    if (precoder_c2 < 0.0 || precoder_c3 <= 0.0)
        field_error("system.precoder_c2/c3", "c2 must be >= 0 and c3 > 0");
    if (outage_epsilon < 0.0 || outage_epsilon > 1.0)
        field_error("system.outage_epsilon", "must be in [0, 1]");
    if (codebook_candidates < 1)
        field_error("system.codebook_candidates", "must be >= 1");
    if (lloyd_sweeps < 0)
        field_error("system.lloyd_sweeps", "must be >= 0");
    if (multicast_grid < 1)
        field_error("system.multicast_grid", "must be >= 1");
    if (pool_max_draws < 1)
        field_error("system.pool_max_draws", "must be >= 1");
}

void FrameConfig::validate(int num_users) const {
    if (frame_length < 1)
        field_error("frame.frame_length", "must be >= 1");
    if (!(v > 0.0))
        field_error("frame.v", "must be positive");
    if (!(r_max > 0.0))
        field_error("frame.r_max", "must be positive");
    if (utility == UtilityKind::weighted_sum && !weights.empty()) {
        if (static_cast<int>(weights.size()) != num_users)
            field_error("frame.weights", "needs one weight per user");
        for (double w : weights)
            if (w < 0.0)
                field_error("frame.weights", "weights must be nonnegative");
    }
}

json to_json(const SystemConfig &c) {
    return json{{"num_users", c.num_users},
                {"num_tx_antennas", c.num_tx_antennas},
                {"power_budget", c.power_budget},
                {"pathloss_delta", c.pathloss_delta},
                {"coarse_bits", c.coarse_bits},
                {"fine_bits", c.fine_bits},
                {"norm_levels", c.norm_levels},
                {"est_noise_coarse", c.est_noise_coarse},
                {"est_noise_fine", c.est_noise_fine},
                {"rate_mode", to_string(c.rate_mode)},
                {"csi_mode", to_string(c.csi_mode)},
                {"enable_oneshot_actions", c.enable_oneshot_actions},
                {"mc_samples_model", c.mc_samples_model},
                {"mc_samples_reward", c.mc_samples_reward},
                {"seed", c.seed},
                {"precoder_c2", c.precoder_c2},
                {"precoder_c3", c.precoder_c3},
                {"outage_epsilon", c.outage_epsilon},
                {"codebook_candidates", c.codebook_candidates},
                {"lloyd_sweeps", c.lloyd_sweeps},
                {"multicast_grid", c.multicast_grid},
                {"pool_max_draws", c.pool_max_draws}};
}

json to_json(const FrameConfig &c) {
    return json{{"frame_length", c.frame_length},
                {"v", c.v},
                {"r_max", c.r_max},
                {"utility", to_string(c.utility)},
                {"weights", c.weights},
                {"randomized_policy", c.randomized_policy},
                {"instantaneous_service", c.instantaneous_service}};
}

SystemConfig system_config_from_json(const json &j) {
    const std::string sec = "system";
    reject_unknown(j,
                   {"num_users", "num_tx_antennas", "power_budget", "snr_db", "pathloss_delta", "coarse_bits",
                    "fine_bits", "norm_levels", "est_noise_coarse", "est_noise_fine", "rate_mode", "csi_mode",
                    "enable_oneshot_actions", "mc_samples_model", "mc_samples_reward", "seed", "precoder_c2",
                    "precoder_c3", "outage_epsilon", "codebook_candidates", "lloyd_sweeps", "multicast_grid",
                    "pool_max_draws"},
                   sec);
    SystemConfig c;
    read_field(j, "num_users", c.num_users, sec);
    read_field(j, "num_tx_antennas", c.num_tx_antennas, sec);
    read_field(j, "power_budget", c.power_budget, sec);
    if (j.contains("snr_db")) {
        if (j.contains("power_budget"))
            field_error("system.snr_db", "give either snr_db or power_budget, not both");
        double db = 0.0;
        read_field(j, "snr_db", db, sec);
        c.power_budget = std::pow(10.0, db / 10.0);
    }
    read_field(j, "pathloss_delta", c.pathloss_delta, sec);
    read_field(j, "coarse_bits", c.coarse_bits, sec);
    read_field(j, "fine_bits", c.fine_bits, sec);
    read_field(j, "norm_levels", c.norm_levels, sec);
    // Estimation noise defaults scale with the pathloss unless given explicitly.
    c.est_noise_coarse = 0.1 * c.pathloss_delta * c.pathloss_delta;
    c.est_noise_fine = 0.01 * c.pathloss_delta * c.pathloss_delta;
    read_field(j, "est_noise_coarse", c.est_noise_coarse, sec);
    read_field(j, "est_noise_fine", c.est_noise_fine, sec);
    std::string s;
    read_enum_string(j, "rate_mode", s, sec);
    if (!s.empty())
        c.rate_mode = parse_rate_mode(s);
    s.clear();
    read_enum_string(j, "csi_mode", s, sec);
    if (!s.empty())
        c.csi_mode = parse_csi_mode(s);
    read_field(j, "enable_oneshot_actions", c.enable_oneshot_actions, sec);
    read_field(j, "mc_samples_model", c.mc_samples_model, sec);
    read_field(j, "mc_samples_reward", c.mc_samples_reward, sec);
    read_field(j, "seed", c.seed, sec);
    read_field(j, "precoder_c2", c.precoder_c2, sec);
    read_field(j, "precoder_c3", c.precoder_c3, sec);
    read_field(j, "outage_epsilon", c.outage_epsilon, sec);
    read_field(j, "codebook_candidates", c.codebook_candidates, sec);
    read_field(j, "lloyd_sweeps", c.lloyd_sweeps, sec);
    read_field(j, "multicast_grid", c.multicast_grid, sec);
    read_field(j, "pool_max_draws", c.pool_max_draws, sec);
    c.validate();
    return c;
}

FrameConfig frame_config_from_json(const json &j) {
    const std::string sec = "frame";
    reject_unknown(j, {"frame_length", "v", "r_max", "utility", "weights", "randomized_policy", "instantaneous_service"},
                  sec);
    FrameConfig c;
    read_field(j, "frame_length", c.frame_length, sec);
    read_field(j, "v", c.v, sec);
    read_field(j, "r_max", c.r_max, sec);
    std::string s;
    read_enum_string(j, "utility", s, sec);
    if (!s.empty())
        c.utility = parse_utility(s);
    read_field(j, "weights", c.weights, sec);
    read_field(j, "randomized_policy", c.randomized_policy, sec);
    read_field(j, "instantaneous_service", c.instantaneous_service, sec);
    return c;
}

std::uint64_t config_hash(const SystemConfig &c) { return fnv1a64(to_json(c).dump()); }

json read_config_file(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str(), nullptr, true, true);
    } catch (const json::parse_error &e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

} // namespace hybridsched
