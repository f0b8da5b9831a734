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

#include "hybridsched/saf.hpp"

#include "hybridsched/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hybridsched {

namespace {

constexpr double kZeroMass = 1e-12;

// Rows: balance for states 0..S-2 (the last is implied), then normalization.
void polytope_rows(const TabularMdp &mdp, Eigen::MatrixXd &a, Eigen::VectorXd &b, Eigen::Index extra_rows) {
    const auto S = static_cast<Eigen::Index>(mdp.num_states);
    const auto A = static_cast<Eigen::Index>(mdp.num_actions);
    a = Eigen::MatrixXd::Zero(S + extra_rows, S * A);
    b = Eigen::VectorXd::Zero(S + extra_rows);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index act = 0; act < A; ++act) {
            const Eigen::Index col = s * A + act;
            if (s < S - 1)
                a(s, col) += 1.0;
            const std::size_t k = static_cast<std::size_t>(col);
            for (std::size_t e = mdp.offset[k]; e < mdp.offset[k + 1]; ++e) {
                const auto t = static_cast<Eigen::Index>(mdp.succ[e].state);
                if (t < S - 1)
                    a(t, col) -= mdp.succ[e].probability;
            }
            a(S - 1, col) = 1.0;
        }
    b(S - 1) = 1.0;
}

// Iterative Tarjan; returns the component id of every node.
std::vector<std::size_t> strongly_connected(const std::vector<std::vector<std::size_t>> &adj,
                                            std::size_t &num_components) {
    const std::size_t n = adj.size();
    constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::pair<std::size_t, std::size_t>> call; // node, next edge
    std::size_t counter = 0;
    num_components = 0;
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != kUnset)
            continue;
        call.push_back({root, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto &[v, e] = call.back();
            if (e < adj[v].size()) {
                const std::size_t w = adj[v][e++];
                if (index[w] == kUnset) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            const std::size_t done = v;
            call.pop_back();
            if (!call.empty())
                low[call.back().first] = std::min(low[call.back().first], low[done]);
            if (low[done] == index[done]) {
                while (true) {
                    const std::size_t w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = num_components;
                    if (w == done)
                        break;
                }
                ++num_components;
            }
        }
    }
    return comp;
}

} // namespace

double StateActionFrequency::state_mass(std::size_t s) const {
    double m = 0.0;
    for (std::size_t a = 0; a < num_actions; ++a)
        m += at(s, a);
    return m;
}

std::size_t StationaryPolicy::action(std::size_t s) const {
    std::size_t best = 0;
    for (std::size_t a = 1; a < num_actions; ++a)
        if (at(s, a) > at(s, best))
            best = a;
    return best;
}

std::size_t StationaryPolicy::sample(std::size_t s, RngStream &rng) const {
    if (deterministic)
        return action(s);
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t a = 0; a < num_actions; ++a) {
        acc += at(s, a);
        if (u < acc)
            return a;
    }
    return action(s);
}

StationaryPolicy StationaryPolicy::deterministic_from(std::size_t num_actions, const std::vector<std::size_t> &actions) {
    StationaryPolicy p;
    p.num_states = actions.size();
    p.num_actions = num_actions;
    p.prob.assign(p.num_states * num_actions, 0.0);
    for (std::size_t s = 0; s < actions.size(); ++s)
        p.prob[s * num_actions + actions[s]] = 1.0;
    p.deterministic = true;
    return p;
}

SafSolver::SafSolver(const TabularMdp &mdp) : mdp_(&mdp) {
    const double entries = static_cast<double>(mdp.num_states) * static_cast<double>(mdp.num_states * mdp.num_actions);
    if (entries > static_cast<double>(kMaxLpEntries))
        throw TooLarge("occupancy LP too large for the dense simplex", static_cast<double>(mdp.num_states));
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    polytope_rows(mdp, a, b, 0);
    simplex_ = std::make_unique<DenseSimplex>(a, b);
    if (!simplex_->feasible())
        throw SolverError("occupancy polytope is empty (phase-1 residual " +
                          std::to_string(simplex_->phase1_residual()) + ")");
}

StateActionFrequency SafSolver::solve(const std::vector<double> &q) const {
    const TabularMdp &m = *mdp_;
    if (q.size() != m.num_users)
        throw InvalidInput("queue vector length does not match the number of users");
    for (double v : q)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidInput("queue weights must be finite and nonnegative");
    Eigen::VectorXd c(static_cast<Eigen::Index>(m.num_states * m.num_actions));
    for (std::size_t s = 0; s < m.num_states; ++s)
        for (std::size_t a = 0; a < m.num_actions; ++a)
            c(static_cast<Eigen::Index>(s * m.num_actions + a)) = m.weighted_reward(s, a, q);
    const LpSolution sol = simplex_->maximize(c);
    ++solves_;
    StateActionFrequency x;
    x.num_states = m.num_states;
    x.num_actions = m.num_actions;
    x.x.assign(sol.x.data(), sol.x.data() + sol.x.size());
    x.objective = sol.objective;
    return x;
}

StateActionFrequency solve_saf_lp(const std::vector<double> &q, const TabularMdp &mdp) {
    return SafSolver(mdp).solve(q);
}

double normalization_residual(const StateActionFrequency &x) {
    double s = 0.0;
    for (double v : x.x)
        s += v;
    return std::abs(s - 1.0);
}

double balance_residual(const StateActionFrequency &x, const TabularMdp &mdp) {
    std::vector<double> inflow(mdp.num_states, 0.0);
    for (std::size_t k = 0; k < mdp.num_states * mdp.num_actions; ++k)
        for (std::size_t e = mdp.offset[k]; e < mdp.offset[k + 1]; ++e)
            inflow[mdp.succ[e].state] += mdp.succ[e].probability * x.x[k];
    double worst = 0.0;
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        worst = std::max(worst, std::abs(x.state_mass(s) - inflow[s]));
    return worst;
}

StationaryPolicy extract_policy(const StateActionFrequency &x) {
    StationaryPolicy p;
    p.num_states = x.num_states;
    p.num_actions = x.num_actions;
    p.prob.assign(x.x.size(), 0.0);
    bool det = true;
    for (std::size_t s = 0; s < x.num_states; ++s) {
        const double mass = x.state_mass(s);
        if (mass <= kZeroMass) {
            p.prob[s * x.num_actions] = 1.0;
            continue;
        }
        std::size_t support = 0;
        for (std::size_t a = 0; a < x.num_actions; ++a) {
            const double v = std::max(0.0, x.at(s, a)) / mass;
            p.prob[s * x.num_actions + a] = v;
            if (v > 0.0)
                ++support;
        }
        det = det && support == 1;
    }
    p.deterministic = det;
    return p;
}

// Zero-mass states get, layer by layer, the best q-weighted action that can step into
// states already covered, so every state drains into the support of x.
static void route_to_support(StationaryPolicy &p, const StateActionFrequency &x, const TabularMdp &mdp,
                      const std::vector<double> &q) {
    const std::size_t S = x.num_states;
    const std::size_t A = x.num_actions;
    std::vector<char> covered(S, 0);
    for (std::size_t s = 0; s < S; ++s)
        covered[s] = x.state_mass(s) > kZeroMass;
    while (true) {
        std::vector<std::pair<std::size_t, std::size_t>> layer;
        for (std::size_t s = 0; s < S; ++s) {
            if (covered[s])
                continue;
            std::size_t best = A;
            double best_value = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                bool enters = false;
                for (std::size_t k = mdp.offset[s * A + a]; k < mdp.offset[s * A + a + 1]; ++k)
                    enters = enters || (mdp.succ[k].probability > 0.0 && covered[mdp.succ[k].state]);
                if (!enters)
                    continue;
                const double v = mdp.weighted_reward(s, a, q);
                if (best == A || v > best_value) {
                    best = a;
                    best_value = v;
                }
            }
            if (best < A)
                layer.emplace_back(s, best);
        }
        if (layer.empty())
            return;
        for (const auto &[s, a] : layer) {
            std::fill_n(p.prob.begin() + static_cast<std::ptrdiff_t>(s * A), A, 0.0);
            p.prob[s * A + a] = 1.0;
            covered[s] = 1;
        }
    }
}

StationaryPolicy extract_policy(const StateActionFrequency &x, const TabularMdp &mdp, const std::vector<double> &q) {
    StationaryPolicy p = extract_policy(x);
    route_to_support(p, x, mdp, q);
    return p;
}

StationaryPolicy derandomize(const StateActionFrequency &x, const TabularMdp &mdp, const std::vector<double> &q) {
    std::vector<std::size_t> actions(x.num_states, 0);
    for (std::size_t s = 0; s < x.num_states; ++s) {
        if (x.state_mass(s) <= kZeroMass)
            continue;
        std::size_t best = 0;
        for (std::size_t a = 1; a < x.num_actions; ++a)
            if (x.at(s, a) > x.at(s, best))
                best = a;
        actions[s] = best;
    }
    StationaryPolicy p = StationaryPolicy::deterministic_from(x.num_actions, actions);
    route_to_support(p, x, mdp, q);
    const PolicyEvaluation eval = evaluate_policy(p, mdp);
    const double value = eval.best_weighted(q);
    if (value < x.objective - 1e-6) {
        std::ostringstream msg;
        msg << "derandomized policy reaches " << value << " against LP objective " << x.objective;
        throw DerandomizationFailure(msg.str());
    }
    return p;
}

double PolicyEvaluation::best_weighted(const std::vector<double> &q) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const RecurrentClass &c : classes) {
        double v = 0.0;
        for (std::size_t n = 0; n < c.rates.size(); ++n)
            v += q[n] * c.rates[n];
        best = std::max(best, v);
    }
    return best;
}

PolicyEvaluation evaluate_policy(const StationaryPolicy &policy, const TabularMdp &mdp) {
    const std::size_t S = mdp.num_states;
    const std::size_t A = mdp.num_actions;
    const std::size_t N = mdp.num_users;
    if (policy.num_states != S || policy.num_actions != A)
        throw InvalidInput("policy shape does not match the MDP");

    // Induced chain as sparse rows, duplicates merged.
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(S);
    std::vector<std::vector<double>> reward(S, std::vector<double>(N, 0.0));
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<std::pair<std::size_t, double>> &row = rows[s];
        for (std::size_t a = 0; a < A; ++a) {
            const double pa = policy.at(s, a);
            if (pa <= 0.0)
                continue;
            for (std::size_t n = 0; n < N; ++n)
                reward[s][n] += pa * mdp.reward(s, a, n);
            const std::size_t k = s * A + a;
            for (std::size_t e = mdp.offset[k]; e < mdp.offset[k + 1]; ++e)
                row.push_back({mdp.succ[e].state, pa * mdp.succ[e].probability});
        }
        std::sort(row.begin(), row.end());
        std::vector<std::pair<std::size_t, double>> merged;
        for (const auto &[t, p] : row) {
            if (!merged.empty() && merged.back().first == t)
                merged.back().second += p;
            else
                merged.push_back({t, p});
        }
        row = std::move(merged);
    }

    std::vector<std::vector<std::size_t>> adj(S);
    for (std::size_t s = 0; s < S; ++s)
        for (const auto &[t, p] : rows[s])
            if (p > 0.0)
                adj[s].push_back(t);
    std::size_t ncomp = 0;
    const std::vector<std::size_t> comp = strongly_connected(adj, ncomp);
    std::vector<bool> closed(ncomp, true);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t t : adj[s])
            if (comp[t] != comp[s])
                closed[comp[s]] = false;

    PolicyEvaluation out;
    std::vector<std::size_t> class_of(ncomp, static_cast<std::size_t>(-1));
    for (std::size_t s = 0; s < S; ++s) {
        const std::size_t c = comp[s];
        if (!closed[c])
            continue;
        if (class_of[c] == static_cast<std::size_t>(-1)) {
            class_of[c] = out.classes.size();
            out.classes.emplace_back();
        }
        out.classes[class_of[c]].states.push_back(s);
    }
    // Classes in order of their lowest state, which the scan above already gives.

    std::vector<std::size_t> local(S, 0);
    for (RecurrentClass &rc : out.classes) {
        const auto m = static_cast<Eigen::Index>(rc.states.size());
        for (std::size_t k = 0; k < rc.states.size(); ++k)
            local[rc.states[k]] = k;
        // mu (P - I) = 0 with the last equation replaced by sum(mu) = 1.
        Eigen::MatrixXd sys = -Eigen::MatrixXd::Identity(m, m);
        for (std::size_t k = 0; k < rc.states.size(); ++k)
            for (const auto &[t, p] : rows[rc.states[k]])
                sys(static_cast<Eigen::Index>(local[t]), static_cast<Eigen::Index>(k)) += p;
        sys.row(m - 1).setOnes();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        rhs(m - 1) = 1.0;
        const Eigen::VectorXd mu = sys.partialPivLu().solve(rhs);
        rc.stationary.assign(mu.data(), mu.data() + m);
        rc.rates.assign(N, 0.0);
        for (std::size_t k = 0; k < rc.states.size(); ++k)
            for (std::size_t n = 0; n < N; ++n)
                rc.rates[n] += rc.stationary[k] * reward[rc.states[k]][n];
    }

    // Absorption of the transient states into each class.
    std::vector<std::size_t> transient;
    std::vector<std::size_t> tindex(S, static_cast<std::size_t>(-1));
    for (std::size_t s = 0; s < S; ++s)
        if (!closed[comp[s]]) {
            tindex[s] = transient.size();
            transient.push_back(s);
        }
    const std::size_t nt = transient.size();
    const std::size_t nclass = out.classes.size();
    std::vector<double> absorbed(nclass, 0.0);
    for (std::size_t c = 0; c < nclass; ++c)
        absorbed[c] = static_cast<double>(out.classes[c].states.size());
    if (nt > 0) {
        std::vector<std::size_t> class_of_state(S, static_cast<std::size_t>(-1));
        for (std::size_t c = 0; c < nclass; ++c)
            for (std::size_t s : out.classes[c].states)
                class_of_state[s] = c;
        Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nt));
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nclass));
        for (std::size_t k = 0; k < nt; ++k)
            for (const auto &[t, p] : rows[transient[k]]) {
                if (tindex[t] != static_cast<std::size_t>(-1))
                    lhs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(tindex[t])) -= p;
                else
                    rhs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(class_of_state[t])) += p;
            }
        const Eigen::MatrixXd b = lhs.partialPivLu().solve(rhs);
        for (std::size_t c = 0; c < nclass; ++c)
            absorbed[c] += b.col(static_cast<Eigen::Index>(c)).sum();
    }
    out.rates.assign(N, 0.0);
    for (std::size_t c = 0; c < nclass; ++c) {
        out.classes[c].mass = absorbed[c] / static_cast<double>(S);
        for (std::size_t n = 0; n < N; ++n)
            out.rates[n] += out.classes[c].mass * out.classes[c].rates[n];
    }
    return out;
}

std::vector<double> lp_rates(const StateActionFrequency &x, const TabularMdp &mdp) {
    std::vector<double> r(mdp.num_users, 0.0);
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        for (std::size_t a = 0; a < mdp.num_actions; ++a) {
            const double v = x.at(s, a);
            if (v == 0.0)
                continue;
            for (std::size_t n = 0; n < mdp.num_users; ++n)
                r[n] += mdp.reward(s, a, n) * v;
        }
    return r;
}

std::vector<double> occupancy_weighted_rates(const PolicyEvaluation &eval, const StateActionFrequency &x) {
    const std::size_t N = eval.classes.empty() ? 0 : eval.classes.front().rates.size();
    std::vector<double> r(N, 0.0);
    for (const RecurrentClass &c : eval.classes) {
        double mass = 0.0;
        for (std::size_t s : c.states)
            mass += x.state_mass(s);
        for (std::size_t n = 0; n < N; ++n)
            r[n] += mass * c.rates[n];
    }
    return r;
}

double region_membership_residual(const TabularMdp &mdp, const std::vector<double> &rates) {
    if (rates.size() != mdp.num_users)
        throw InvalidInput("rate vector length does not match the number of users");
    const auto S = static_cast<Eigen::Index>(mdp.num_states);
    const auto A = static_cast<Eigen::Index>(mdp.num_actions);
    const auto N = static_cast<Eigen::Index>(mdp.num_users);
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    polytope_rows(mdp, a, b, N);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index act = 0; act < A; ++act)
            for (Eigen::Index n = 0; n < N; ++n)
                a(S + n, s * A + act) = mdp.reward(static_cast<std::size_t>(s), static_cast<std::size_t>(act),
                                                   static_cast<std::size_t>(n));
    for (Eigen::Index n = 0; n < N; ++n)
        b(S + n) = rates[static_cast<std::size_t>(n)];
    return DenseSimplex(a, b).phase1_residual();
}

} // namespace hybridsched
