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


#include "hybridsched/errors.hpp"
#include "hybridsched/simulation.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

using namespace hybridsched;

namespace {

struct Desk {
    SystemConfig cfg;
    Codebooks cb;
    MdpModel model;
    TabularMdp mdp;
    std::unique_ptr<SafSolver> solver;

    Desk() {
        cfg.mc_samples_model = 20000;
        cfg.mc_samples_reward = 200;
        cfg.enable_oneshot_actions = true;
        cb = build_codebooks(cfg);
        RngStream crng(cfg.seed, 1);
        model = build_model(cfg, cb, estimate_conditional_model(cfg, cb, crng));
        mdp = tabulate(model);
        solver = std::make_unique<SafSolver>(mdp);
    }
    SimulationContext ctx() const { return {&cb, &model, solver.get()}; }
};

const Desk &desk() {
    static const Desk d;
    return d;
}

} // namespace

TEST_CASE("trajectory metrics agree with their own log") {
    FrameConfig fc;
    fc.frame_length = 20;
    for (PolicyKind p : {PolicyKind::frame, PolicyKind::myopic, PolicyKind::conventional}) {
        const TrajectoryMetrics m = run_trajectory(desk().ctx(), fc, p, 400, RngStream(5, 0x5452), true);
        REQUIRE(m.log.size() == 400);
        const TrajectoryMetrics r = metrics_from_log(m.log, 3, fc);
        double sum = 0.0;
        for (int n = 0; n < 3; ++n) {
            CHECK(m.cumulative_service[n] == r.cumulative_service[n]);
            CHECK(m.throughput[n] == r.throughput[n]);
            CHECK(m.throughput[n] == m.cumulative_service[n] / 400.0);
            sum += m.throughput[n];
        }
        CHECK(m.sum_rate == doctest::Approx(sum).epsilon(1e-15));
        CHECK(m.utility == r.utility);
        CHECK(m.queue_last_half == r.queue_last_half);
        CHECK(m.lyapunov_final == r.lyapunov_final);
        for (const IntervalRecord &rec : m.log) {
            int served = 0;
            for (double v : rec.rate) {
                CHECK(v >= 0.0);
                served += v > 0.0;
            }
            CHECK(served <= 2);
        }
    }
}

TEST_CASE("a user that is never served has zero throughput") {
    std::vector<IntervalRecord> log;
    for (int k = 0; k < 50; ++k) {
        IntervalRecord r;
        r.k = k;
        r.rate = {1.5, 0.25 * (k % 3), 0.0};
        r.queue = {1.0, 2.0, double(k)};
        log.push_back(r);
    }
    FrameConfig fc;
    const TrajectoryMetrics m = metrics_from_log(log, 3, fc);
    CHECK(m.throughput[2] == 0.0);
    CHECK(m.cumulative_service[2] == 0.0);
    CHECK(m.throughput[0] == 1.5);
    CHECK(m.queue_max == doctest::Approx(52.0));
}

TEST_CASE("identical seeds give identical trajectories") {
    FrameConfig fc;
    fc.frame_length = 10;
    for (PolicyKind p : {PolicyKind::frame, PolicyKind::myopic}) {
        const TrajectoryMetrics a = run_trajectory(desk().ctx(), fc, p, 300, RngStream(9, 0x5452), true);
        const TrajectoryMetrics b = run_trajectory(desk().ctx(), fc, p, 300, RngStream(9, 0x5452), true);
        const TrajectoryMetrics c = run_trajectory(desk().ctx(), fc, p, 300, RngStream(10, 0x5452), true);
        CHECK(a.throughput == b.throughput);
        CHECK(a.utility == b.utility);
        CHECK(a.lp_solves == b.lp_solves);
        bool same_states = true;
        for (std::size_t k = 0; k < a.log.size(); ++k)
            same_states = same_states && a.log[k].state == c.log[k].state;
        CHECK_FALSE(same_states);
    }
}

TEST_CASE("frame policy solves once per frame") {
    FrameConfig fc;
    fc.frame_length = 25;
    const TrajectoryMetrics m = run_trajectory(desk().ctx(), fc, PolicyKind::frame, 100, RngStream(2, 0x5452));
    CHECK(m.lp_solves == 4);
    CHECK(m.frame_deviations.size() == 4);
    CHECK(m.log.empty());
}

TEST_CASE("run_trajectory input checks") {
    FrameConfig fc;
    SimulationContext ctx = desk().ctx();
    CHECK_THROWS_AS(run_trajectory(ctx, fc, PolicyKind::myopic, 0, RngStream(1, 1)), InvalidInput);
    ctx.solver = nullptr;
    CHECK_THROWS_AS(run_trajectory(ctx, fc, PolicyKind::frame, 10, RngStream(1, 1)), InvalidInput);
    CHECK_NOTHROW(run_trajectory(ctx, fc, PolicyKind::myopic, 10, RngStream(1, 1)));
}

TEST_CASE("sweep policy labels") {
    CHECK(parse_sweep_policy("myopic").label() == "myopic:hybrid");
    CHECK(parse_sweep_policy("frame:delayed-only").label() == "frame:delayed-only");
    CHECK(parse_sweep_policy("myopic:perfect-delayed").csi == CsiMode::perfect_delayed);
    CHECK(parse_sweep_policy("conventional").label() == "conventional");
    CHECK_THROWS_AS(parse_sweep_policy("greedy"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_policy("myopic:psychic"), ConfigError);
}

TEST_CASE("sweep plan parsing") {
    const auto j = nlohmann::json::parse(
        R"({"snr_db": [0, 10], "policies": ["myopic", "conventional"], "intervals": 50, "seeds": [4]})");
    const SweepPlan s = sweep_plan_from_json(j);
    CHECK(s.snr_db == std::vector<double>{0.0, 10.0});
    CHECK(s.policies.size() == 2);
    CHECK(s.intervals == 50);
    CHECK(s.seeds == std::vector<std::uint64_t>{4});
    CHECK_THROWS_AS(sweep_plan_from_json(nlohmann::json::parse(R"({"snr_db": [], "policies": ["myopic"]})")),
                    ConfigError);
    CHECK_THROWS_AS(sweep_plan_from_json(nlohmann::json::parse(R"({"snr_db": [1], "policies": ["x"]})")),
                    ConfigError);
    CHECK_THROWS_AS(
        sweep_plan_from_json(nlohmann::json::parse(R"({"snr_db": [1], "policies": ["myopic"], "bogus": 1})")),
        ConfigError);
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02e23, 5e-324}) {
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("sweep keeps going when one cell cannot be built") {
    SystemConfig base;
    base.coarse_bits = 1;
    base.fine_bits = 2;
    base.mc_samples_model = 5000;
    base.mc_samples_reward = 20;
    SweepPlan plan;
    plan.snr_db = {10.0};
    plan.policies = {parse_sweep_policy("frame"), parse_sweep_policy("myopic")};
    plan.intervals = 30;
    plan.seeds = {1, 2};
    const std::vector<SweepRow> rows = snr_sweep(plan, base);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].policy == "frame:hybrid");
    CHECK(std::isnan(rows[0].mean_sum_rate));
    CHECK_FALSE(rows[0].error.empty());
    INFO(rows[1].error);
    CHECK(rows[1].error.empty());
    CHECK(rows[1].seed_count == 2);
    CHECK(std::isfinite(rows[1].mean_sum_rate));
    CHECK(rows[1].mean_sum_rate > 0.0);

    std::ostringstream out;
    write_sweep_csv(out, rows, "m");
    const std::string csv = out.str();
    CHECK(csv.rfind("snr_db,policy,mean_sum_rate,stderr,utility,seed_count\n", 0) == 0);
    CHECK(csv.find("10,frame:hybrid,nan,nan,nan,0\n") != std::string::npos);
}

TEST_CASE("sweep is deterministic and reward tables depend on SNR") {
    SystemConfig base;
    base.mc_samples_model = 5000;
    base.mc_samples_reward = 100;
    SweepPlan plan;
    plan.snr_db = {0.0, 30.0};
    plan.policies = {parse_sweep_policy("myopic"), parse_sweep_policy("conventional")};
    plan.intervals = 100;
    plan.seeds = {1, 2};
    const std::vector<SweepRow> a = snr_sweep(plan, base);
    const std::vector<SweepRow> b = snr_sweep(plan, base);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean_sum_rate == b[i].mean_sum_rate);
        CHECK(a[i].stderr_sum_rate == b[i].stderr_sum_rate);
        CHECK(a[i].utility == b[i].utility);
    }
    CHECK(a[2].snr_db == 30.0);
    CHECK(a[2].mean_sum_rate > a[0].mean_sum_rate);
}
