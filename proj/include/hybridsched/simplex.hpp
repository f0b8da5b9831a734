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

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace hybridsched {

struct LpSolution {
    Eigen::VectorXd x;
    double objective = 0.0;
    std::vector<std::size_t> basis;
    std::size_t iterations = 0;
};

/// Dense two-phase revised simplex for  max c'x  s.t.  A x = b, x >= 0.
///
/// Entering columns follow the largest reduced cost after an improving pivot and Bland's
/// rule (lowest index) along any run of degenerate pivots; leaving rows break ratio ties
/// by lowest basic index. The method therefore never cycles and the result is a
/// deterministic function of (A, b, c). Phase 1 runs once in the constructor; each
/// maximize() call starts phase 2 from the stored feasible basis. The basis matrix is
/// refactored from A at every pivot.
class DenseSimplex {
public:
    DenseSimplex(const Eigen::MatrixXd &a, const Eigen::VectorXd &b);

    // Sum of artificial variables left at the end of phase 1 (0 when feasible).
    double phase1_residual() const { return residual_; }
    bool feasible(double tol = 1e-9) const { return residual_ <= tol; }
    std::size_t num_rows() const { return static_cast<std::size_t>(a_.rows()); }
    std::size_t num_cols() const { return n_; }
    // Constraint rows that phase 1 found linearly dependent and discarded.
    const std::vector<std::size_t> &dropped_rows() const { return dropped_; }

    // Throws SolverError when infeasible, unbounded or out of iterations.
    LpSolution maximize(const Eigen::VectorXd &c) const;

private:
    Eigen::MatrixXd a_; // independent constraint rows, flipped so b >= 0
    Eigen::VectorXd b_;
    std::size_t n_ = 0;
    std::vector<std::size_t> basis_; // feasible basis found by phase 1
    std::vector<std::size_t> dropped_;
    double residual_ = 0.0;
};

} // namespace hybridsched
