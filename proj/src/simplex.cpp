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


#include "hybridsched/simplex.hpp"

#include "hybridsched/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hybridsched {

namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kRatioTieTol = 1e-12;
constexpr double kFeasTol = 1e-11;
constexpr double kZeroTol = 1e-12;
constexpr double kPerturbation = 1e-7;

// Revised simplex over the columns of `a`. The basis matrix is refactored from the
// original data at every pivot, so round-off never accumulates across iterations.
struct Revised {
    const Eigen::MatrixXd &a;
    const Eigen::VectorXd &b;
    std::vector<std::size_t> basis;
    std::size_t iterations = 0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::VectorXd xb;

    Revised(const Eigen::MatrixXd &a_, const Eigen::VectorXd &b_) : a(a_), b(b_) {}

    void factor() {
        const Eigen::Index m = a.rows();
        Eigen::MatrixXd bm(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            bm.col(i) = a.col(static_cast<Eigen::Index>(basis[static_cast<std::size_t>(i)]));
        lu.compute(bm);
        xb = lu.solve(b);
        for (Eigen::Index i = 0; i < m; ++i)
            if (std::abs(xb(i)) < kFeasTol)
                xb(i) = 0.0;
    }

    // Maximizes c'x over columns [0, allowed); `stop_at_zero` ends once c'x >= -kFeasTol.
    void run(const Eigen::VectorXd &c, Eigen::Index allowed, std::size_t max_iter, bool stop_at_zero = false) {
        const Eigen::Index m = a.rows();
        std::vector<char> in_basis(static_cast<std::size_t>(a.cols()), 0);
        bool bland = false;
        while (true) {
            factor();
            std::fill(in_basis.begin(), in_basis.end(), 0);
            Eigen::VectorXd cb(m);
            for (Eigen::Index i = 0; i < m; ++i) {
                const std::size_t j = basis[static_cast<std::size_t>(i)];
                in_basis[j] = 1;
                cb(i) = c(static_cast<Eigen::Index>(j));
            }
            if (stop_at_zero && cb.dot(xb) >= -kFeasTol)
                return;
            const Eigen::VectorXd y = lu.transpose().solve(cb);
            // Largest reduced cost after an improving step; Bland's lowest index while
            // the objective is stalled, which rules out cycling.
            Eigen::Index enter = -1;
            double best_rc = kReducedCostTol;
            for (Eigen::Index j = 0; j < allowed; ++j) {
                if (in_basis[static_cast<std::size_t>(j)])
                    continue;
                const double rc = c(j) - y.dot(a.col(j));
                if (rc > best_rc) {
                    enter = j;
                    best_rc = rc;
                    if (bland)
                        break;
                }
            }
            if (enter < 0)
                return;
            const Eigen::VectorXd u = lu.solve(a.col(enter));
            Eigen::Index leave = -1;
            double best = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (u(i) <= kPivotTol)
                    continue;
                const double ratio = std::max(0.0, xb(i)) / u(i);
                if (leave < 0 || ratio < best - kRatioTieTol) {
                    best = ratio;
                    leave = i;
                } else if (ratio <= best + kRatioTieTol &&
                           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]) {
                    leave = i;
                }
            }
            if (leave < 0)
                throw SolverError("simplex: objective unbounded along column " + std::to_string(enter));
            bland = best <= kRatioTieTol;
            basis[static_cast<std::size_t>(leave)] = static_cast<std::size_t>(enter);
            if (++iterations > max_iter) {
                std::ostringstream msg;
                msg << "simplex: iteration limit " << max_iter << " reached; basis size " << basis.size();
                throw SolverError(msg.str());
            }
        }
    }
};

// Dual simplex from a dual-feasible basis of (a, b) until the basic values are
// nonnegative. Leaving row: lowest basic index among negative values; entering column:
// smallest |reduced cost / pivot|, lowest index on ties.
void dual_cleanup(Revised &r, const Eigen::VectorXd &c, std::size_t max_iter) {
    const Eigen::MatrixXd &a = r.a;
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    std::vector<char> in_basis(static_cast<std::size_t>(n), 0);
    while (true) {
        r.factor();
        Eigen::Index leave = -1;
        for (Eigen::Index i = 0; i < m; ++i)
            if (r.xb(i) < -kFeasTol &&
                (leave < 0 || r.basis[static_cast<std::size_t>(i)] < r.basis[static_cast<std::size_t>(leave)]))
                leave = i;
        if (leave < 0)
            return;
        std::fill(in_basis.begin(), in_basis.end(), 0);
        Eigen::VectorXd cb(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            in_basis[r.basis[static_cast<std::size_t>(i)]] = 1;
            cb(i) = c(static_cast<Eigen::Index>(r.basis[static_cast<std::size_t>(i)]));
        }
        const Eigen::VectorXd y = r.lu.transpose().solve(cb);
        Eigen::VectorXd er = Eigen::VectorXd::Zero(m);
        er(leave) = 1.0;
        const Eigen::VectorXd row = r.lu.transpose().solve(er);
        Eigen::Index enter = -1;
        double best = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (in_basis[static_cast<std::size_t>(j)])
                continue;
            const double alpha = row.dot(a.col(j));
            if (alpha >= -kPivotTol)
                continue;
            const double ratio = std::max(0.0, y.dot(a.col(j)) - c(j)) / -alpha;
            if (enter < 0 || ratio < best - kRatioTieTol) {
                enter = j;
                best = ratio;
            }
        }
        if (enter < 0)
            throw SolverError("simplex: constraints infeasible during dual cleanup");
        r.basis[static_cast<std::size_t>(leave)] = static_cast<std::size_t>(enter);
        if (++r.iterations > max_iter)
            throw SolverError("simplex: iteration limit " + std::to_string(max_iter) + " reached in dual cleanup");
    }
}

// Small distinct positive amounts, one per row.
Eigen::VectorXd lift_vector(Eigen::Index m) {
    Eigen::VectorXd lift(m);
    for (Eigen::Index i = 0; i < m; ++i)
        lift(i) = kPerturbation * (1.0 + std::fmod(0.6180339887498949 * static_cast<double>(i + 1), 1.0));
    return lift;
}

std::size_t iteration_limit(Eigen::Index rows, Eigen::Index cols) {
    return 50 * static_cast<std::size_t>(rows + cols) + 1000;
}

} // namespace

DenseSimplex::DenseSimplex(const Eigen::MatrixXd &a, const Eigen::VectorXd &b) {
    if (a.rows() != b.size())
        throw InvalidInput("simplex: A and b disagree in row count");
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    n_ = static_cast<std::size_t>(n);
    Eigen::MatrixXd af(m, n + m);
    Eigen::VectorXd bf = b;
    af.leftCols(n) = a;
    af.rightCols(m).setIdentity();
    for (Eigen::Index i = 0; i < m; ++i)
        if (bf(i) < 0.0) {
            af.row(i).head(n) *= -1.0;
            bf(i) *= -1.0;
        }

    // Phase 1: maximize -sum(artificials) from the all-artificial basis, lifted and
    // cleaned up the same way as phase 2.
    const Eigen::VectorXd b1 = bf + lift_vector(m);
    Revised lifted(af, b1);
    lifted.basis.resize(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i)
        lifted.basis[static_cast<std::size_t>(i)] = static_cast<std::size_t>(n + i);
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n + m);
    c1.tail(m).setConstant(-1.0);
    lifted.run(c1, n, iteration_limit(m, n + m));
    Revised p1(af, bf);
    p1.basis = lifted.basis;
    dual_cleanup(p1, c1, iteration_limit(m, n + m));
    p1.run(c1, n, iteration_limit(m, n + m), true);
    p1.factor();
    residual_ = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        if (p1.basis[static_cast<std::size_t>(i)] >= n_)
            residual_ += std::max(0.0, p1.xb(i));

    // Swap basic artificials for structural columns; a row where no swap exists is a
    // linear combination of the others and is dropped with its artificial.
    std::vector<std::size_t> basis = p1.basis;
    std::vector<char> dropped(static_cast<std::size_t>(m), 0);
    for (Eigen::Index r = 0; r < m; ++r) {
        if (basis[static_cast<std::size_t>(r)] < n_)
            continue;
        Eigen::MatrixXd bm(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            bm.col(i) = af.col(static_cast<Eigen::Index>(basis[static_cast<std::size_t>(i)]));
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(bm);
        Eigen::VectorXd er = Eigen::VectorXd::Zero(m);
        er(r) = 1.0;
        const Eigen::VectorXd row = lu.transpose().solve(er); // row r of B^-1
        Eigen::Index col = -1;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::find(basis.begin(), basis.end(), static_cast<std::size_t>(j)) != basis.end())
                continue;
            if (std::abs(row.dot(af.col(j))) > kPivotTol) {
                col = j;
                break;
            }
        }
        if (col >= 0)
            basis[static_cast<std::size_t>(r)] = static_cast<std::size_t>(col);
        else
            dropped[static_cast<std::size_t>(basis[static_cast<std::size_t>(r)] - n_)] = 1;
    }

    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (dropped[static_cast<std::size_t>(i)])
            dropped_.push_back(static_cast<std::size_t>(i));
        else
            rows.push_back(i);
    }
    a_.resize(static_cast<Eigen::Index>(rows.size()), n);
    b_.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        a_.row(static_cast<Eigen::Index>(k)) = af.row(rows[k]).head(n);
        b_(static_cast<Eigen::Index>(k)) = bf(rows[k]);
    }
    for (std::size_t j : basis)
        if (j < n_)
            basis_.push_back(j);
    if (basis_.size() != rows.size() && feasible())
        throw SolverError("simplex: could not complete a structural basis after phase 1");
}

LpSolution DenseSimplex::maximize(const Eigen::VectorXd &c) const {
    if (!feasible())
        throw SolverError("simplex: constraints infeasible (phase-1 residual " + std::to_string(residual_) + ")");
    if (static_cast<std::size_t>(c.size()) != n_)
        throw InvalidInput("simplex: objective length mismatch");
    const Eigen::Index n = static_cast<Eigen::Index>(n_);
    // Reduced-cost tolerances are absolute, so pivot on the objective scaled to unit size.
    const double scale = c.lpNorm<Eigen::Infinity>();
    const Eigen::VectorXd cs = scale > 0.0 ? Eigen::VectorXd(c / scale) : c;
    // Degenerate vertices stall any pivoting rule, so phase 2 runs with the starting
    // basic values lifted by small distinct amounts; the dual pass then restores
    // feasibility for the true right-hand side from the optimal basis.
    const Eigen::Index m = a_.rows();
    Eigen::MatrixXd b0(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        b0.col(i) = a_.col(static_cast<Eigen::Index>(basis_[static_cast<std::size_t>(i)]));
    const Eigen::VectorXd b_lifted = b_ + b0 * lift_vector(m);
    Revised lifted(a_, b_lifted);
    lifted.basis = basis_;
    lifted.run(cs, n, iteration_limit(m, n));
    Revised p2(a_, b_);
    p2.basis = lifted.basis;
    p2.iterations = lifted.iterations;
    dual_cleanup(p2, cs, lifted.iterations + iteration_limit(m, n));
    p2.factor();

    LpSolution sol;
    sol.basis = p2.basis;
    sol.iterations = p2.iterations;
    sol.x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
        const double v = p2.xb(i);
        // Degenerate basics come back as round-off; keep them exactly zero.
        sol.x(static_cast<Eigen::Index>(p2.basis[static_cast<std::size_t>(i)])) = std::abs(v) < kZeroTol ? 0.0 : v;
    }
    sol.objective = c.dot(sol.x);
    return sol;
}

} // namespace hybridsched
