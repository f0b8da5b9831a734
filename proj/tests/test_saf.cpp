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
#include "hybridsched/mdp.hpp"
#include "hybridsched/saf.hpp"
#include "hybridsched/simplex.hpp"

#include <doctest.h>

#include <cmath>

using namespace hybridsched;

namespace {

using Kernel = std::vector<std::vector<std::vector<double>>>;

// Two states, one user. Staying in 0 pays 1, alternating pays 0 then 3, staying in 1
// pays 1.4: alternating is optimal at 1.5.
TabularMdp alternating() {
    const Kernel k{{{1.0, 0.0}, {0.0, 1.0}}, {{1.0, 0.0}, {0.0, 1.0}}};
    const Kernel r{{{1.0}, {0.0}}, {{3.0}, {1.4}}};
    return TabularMdp::from_dense(k, r);
}

TabularMdp random_mdp(std::size_t S, std::size_t A, std::size_t N, RngStream &rng) {
    Kernel k(S, std::vector<std::vector<double>>(A, std::vector<double>(S, 0.0)));
    Kernel r(S, std::vector<std::vector<double>>(A, std::vector<double>(N, 0.0)));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            // Sparse rows so that many policies are multichain.
            double total = 0.0;
            for (std::size_t t = 0; t < S; ++t)
                if (rng.uniform() < 0.4 || t == (s + a) % S) {
                    k[s][a][t] = rng.uniform();
                    total += k[s][a][t];
                }
            for (double &p : k[s][a])
                p /= total;
            for (double &v : r[s][a])
                v = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
        }
    return TabularMdp::from_dense(k, r);
}

// Best gain over every deterministic stationary policy, maximized over recurrent classes.
double enumerate_best(const TabularMdp &m, const std::vector<double> &q) {
    std::vector<std::size_t> act(m.num_states, 0);
    double best = -1.0;
    while (true) {
        const auto eval = evaluate_policy(StationaryPolicy::deterministic_from(m.num_actions, act), m);
        best = std::max(best, eval.best_weighted(q));
        std::size_t s = 0;
        while (s < m.num_states && ++act[s] == m.num_actions)
            act[s++] = 0;
        if (s == m.num_states)
            return best;
    }
}

} // namespace

TEST_CASE("simplex solves a textbook LP") {
    // max 3x + 2y  s.t.  x + y + s1 = 4,  x + 3y + s2 = 6
    Eigen::MatrixXd a(2, 4);
    a << 1, 1, 1, 0, 1, 3, 0, 1;
    Eigen::VectorXd b(2), c(4);
    b << 4, 6;
    c << 3, 2, 0, 0;
    const DenseSimplex lp(a, b);
    const LpSolution s = lp.maximize(c);
    CHECK(s.objective == doctest::Approx(12.0));
    CHECK(s.x(0) == doctest::Approx(4.0));
}

TEST_CASE("simplex reports infeasible, unbounded and dependent rows") {
    Eigen::MatrixXd a(2, 2);
    a << 1, 1, 1, 1;
    Eigen::VectorXd b(2);
    b << 1, 2;
    const DenseSimplex bad(a, b);
    CHECK_FALSE(bad.feasible());
    CHECK_THROWS_AS(bad.maximize(Eigen::VectorXd::Ones(2)), SolverError);

    Eigen::MatrixXd u(1, 2);
    u << 1, -1;
    Eigen::VectorXd ub(1);
    ub << 0;
    CHECK_THROWS_AS(DenseSimplex(u, ub).maximize(Eigen::VectorXd::Ones(2)), SolverError);

    Eigen::MatrixXd d(3, 3);
    d << 1, 1, 0, 0, 1, 1, 1, 2, 1;
    Eigen::VectorXd db(3);
    db << 1, 1, 2;
    const DenseSimplex dep(d, db);
    CHECK(dep.feasible());
    CHECK(dep.dropped_rows().size() == 1);
    CHECK(dep.maximize(Eigen::Vector3d(1, 0, 1)).objective == doctest::Approx(2.0));
}

TEST_CASE("occupancy LP on a hand-solved MDP") {
    const TabularMdp m = alternating();
    const StateActionFrequency x = solve_saf_lp({1.0}, m);
    CHECK(x.objective == doctest::Approx(1.5));
    CHECK(x.at(0, 1) == doctest::Approx(0.5));
    CHECK(x.at(1, 0) == doctest::Approx(0.5));
    CHECK(normalization_residual(x) < 1e-12);
    CHECK(balance_residual(x, m) < 1e-12);
    const StationaryPolicy p = derandomize(x, m, {1.0});
    CHECK(p.action(0) == 1);
    CHECK(p.action(1) == 0);
    const PolicyEvaluation e = evaluate_policy(p, m);
    CHECK(e.unichain());
    CHECK(e.rates[0] == doctest::Approx(1.5));
}

TEST_CASE("LP optimum equals exhaustive policy search on random MDPs") {
    RngStream rng(77, 0);
    for (int trial = 0; trial < 25; ++trial) {
        const TabularMdp m = random_mdp(5, 3, 2, rng);
        const std::vector<double> q{rng.uniform(), rng.uniform()};
        const SafSolver solver(m);
        const StateActionFrequency x = solver.solve(q);
        CHECK(x.objective == doctest::Approx(enumerate_best(m, q)).epsilon(1e-9));
        CHECK(normalization_residual(x) < 1e-9);
        CHECK(balance_residual(x, m) < 1e-9);
        const StationaryPolicy p = derandomize(x, m, q);
        CHECK(p.deterministic);
        CHECK(evaluate_policy(p, m).best_weighted(q) >= x.objective - 1e-9);
        const std::vector<double> lp = lp_rates(x, m);
        const std::vector<double> ev = occupancy_weighted_rates(evaluate_policy(extract_policy(x), m), x);
        for (std::size_t n = 0; n < lp.size(); ++n)
            CHECK(ev[n] == doctest::Approx(lp[n]).epsilon(1e-9));
        CHECK(region_membership_residual(m, lp) < 1e-9);
        CHECK(region_membership_residual(m, {10.0, 10.0}) > 1e-3);
    }
}

TEST_CASE("routed policy drains every state into the LP support") {
    RngStream rng(5, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const TabularMdp m = random_mdp(6, 2, 1, rng);
        const StateActionFrequency x = solve_saf_lp({1.0}, m);
        const StationaryPolicy p = derandomize(x, m, {1.0});
        const PolicyEvaluation e = evaluate_policy(p, m);
        CHECK(e.rates[0] == doctest::Approx(x.objective).epsilon(1e-9));
        const StationaryPolicy r = extract_policy(x, m, {1.0});
        CHECK(evaluate_policy(r, m).rates[0] == doctest::Approx(x.objective).epsilon(1e-9));
    }
}

TEST_CASE("solver validates queue weights and counts solves") {
    const TabularMdp m = alternating();
    const SafSolver solver(m);
    CHECK_THROWS_AS(solver.solve({-1.0}), InvalidInput);
    CHECK_THROWS_AS(solver.solve({1.0, 1.0}), InvalidInput);
    CHECK_THROWS_AS(solver.solve({std::nan("")}), InvalidInput);
    solver.solve({2.0});
    solver.solve({0.0});
    CHECK(solver.solve_count() == 2);
    CHECK(solver.solve({2.0}).objective == doctest::Approx(3.0));
}

TEST_CASE("multichain evaluation splits mass by absorption") {
    // State 0 moves to 1 or 2 with equal probability; 1 and 2 are absorbing.
    const Kernel k{{{0.0, 0.5, 0.5}}, {{0.0, 1.0, 0.0}}, {{0.0, 0.0, 1.0}}};
    const Kernel r{{{0.0}}, {{1.0}}, {{3.0}}};
    const TabularMdp m = TabularMdp::from_dense(k, r);
    const PolicyEvaluation e = evaluate_policy(StationaryPolicy::deterministic_from(1, {0, 0, 0}), m);
    CHECK(e.classes.size() == 2);
    CHECK_FALSE(e.unichain());
    CHECK(e.rates[0] == doctest::Approx(2.0));
    CHECK(e.best_weighted({1.0}) == doctest::Approx(3.0));
}

TEST_CASE("randomized policies sample their action law") {
    StationaryPolicy p;
    p.num_states = 1;
    p.num_actions = 2;
    p.prob = {0.25, 0.75};
    RngStream rng(3, 3);
    int ones = 0;
    for (int i = 0; i < 20000; ++i)
        ones += p.sample(0, rng) == 1;
    CHECK(ones / 20000.0 == doctest::Approx(0.75).epsilon(0.02));
    CHECK(p.action(0) == 1);
}

TEST_CASE("oversized LPs are refused before allocation") {
    TabularMdp big;
    big.num_states = 4096;
    big.num_actions = 3;
    big.num_users = 1;
    try {
        SafSolver solver(big);
        FAIL("expected TooLarge");
    } catch (const TooLarge &e) {
        CHECK(e.count() == 4096.0);
    }
}

TEST_CASE("deterministic policy rates lie in the LP region on the desk model") {
    SystemConfig cfg;
    cfg.mc_samples_model = 20000;
    cfg.mc_samples_reward = 200;
    const Codebooks cb = build_codebooks(cfg);
    RngStream crng(cfg.seed, 1);
    const TabularMdp m = tabulate(build_model(cfg, cb, estimate_conditional_model(cfg, cb, crng)));
    std::vector<std::vector<std::size_t>> policies;
    for (std::size_t a = 0; a < m.num_actions; ++a)
        policies.emplace_back(m.num_states, a);
    RngStream rng(17, 0);
    for (int k = 0; k < 200; ++k) {
        std::vector<std::size_t> acts(m.num_states);
        for (std::size_t &a : acts)
            a = rng.index(m.num_actions);
        policies.push_back(acts);
    }
    double worst = 0.0;
    for (const auto &acts : policies) {
        const PolicyEvaluation e = evaluate_policy(StationaryPolicy::deterministic_from(m.num_actions, acts), m);
        worst = std::max(worst, region_membership_residual(m, e.rates));
    }
    CHECK(worst <= 1e-6);
}
