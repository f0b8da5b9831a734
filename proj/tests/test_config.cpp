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

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

using namespace hybridsched;
using nlohmann::json;

TEST_CASE("system config round-trips through JSON") {
    SystemConfig c;
    c.num_users = 4;
    c.coarse_bits = 2;
    c.fine_bits = 3;
    c.rate_mode = RateMode::conservative;
    c.csi_mode = CsiMode::delayed_only;
    c.seed = 99;
    const SystemConfig back = system_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(config_hash(back) == config_hash(c));
    c.seed = 100;
    CHECK(config_hash(back) != config_hash(c));
}

TEST_CASE("frame config round-trips through JSON") {
    FrameConfig f;
    f.frame_length = 7;
    f.utility = UtilityKind::weighted_sum;
    f.weights = {1.0, 2.0};
    f.randomized_policy = true;
    const FrameConfig back = frame_config_from_json(to_json(f));
    CHECK(to_json(back) == to_json(f));
}

TEST_CASE("errors name the offending field") {
    auto message = [](const json &j) {
        try {
            system_config_from_json(j);
        } catch (const ConfigError &e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(json{{"num_users", 1}}).find("system.num_users") != std::string::npos);
    CHECK(message(json{{"fine_bits", 0}, {"coarse_bits", 1}}).find("system.fine_bits") != std::string::npos);
    CHECK(message(json{{"colour", 3}}).find("system.colour") != std::string::npos);
    CHECK(message(json{{"num_users", "three"}}).find("wrong type") != std::string::npos);
    CHECK(message(json{{"rate_mode", "greedy"}}).find("greedy") != std::string::npos);
    CHECK(message(json{{"snr_db", 10}, {"power_budget", 3}}).find("system.snr_db") != std::string::npos);
    CHECK_THROWS_AS(frame_config_from_json(json{{"T", 3}}), ConfigError);
}

TEST_CASE("snr_db sets the linear power budget") {
    const SystemConfig c = system_config_from_json(json{{"snr_db", 30.0}});
    CHECK(c.power_budget == doctest::Approx(1000.0));
}

TEST_CASE("config files may carry comments") {
    const std::string path = "test_config_comments.json";
    {
        std::ofstream out(path);
        out << "// leading comment\n{ \"system\": { /* inline */ \"num_users\": 3 } }\n";
    }
    const json j = read_config_file(path);
    CHECK(j.at("system").at("num_users") == 3);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_config_file("does/not/exist.json"), ConfigError);
}

TEST_CASE("enum names parse back") {
    for (RateMode m : {RateMode::optimistic, RateMode::conservative, RateMode::optimal_filter})
        CHECK(parse_rate_mode(to_string(m)) == m);
    for (CsiMode m : {CsiMode::hybrid, CsiMode::delayed_only, CsiMode::perfect_delayed})
        CHECK(parse_csi_mode(to_string(m)) == m);
    for (UtilityKind u : {UtilityKind::sum, UtilityKind::log1p, UtilityKind::weighted_sum})
        CHECK(parse_utility(to_string(u)) == u);
}
