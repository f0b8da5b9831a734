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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>

namespace hybridsched {

using cplx = std::complex<double>;

// Small dense kernels only: every complex array here is at most 8 x 8, so storage is
// inline and the Monte-Carlo loops never touch the heap.
inline constexpr int kMaxDim = 8;

// Column vectors hold codewords and precoding vectors; channels are rows (1 x M_t).
using CVector = Eigen::Matrix<cplx, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using CRow = Eigen::Matrix<cplx, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxDim>;
using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using RVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

inline constexpr double kHermitianTol = 1e-9;

/// Reproducible random stream keyed by (seed, stream).
///
/// The engine state is a pure function of the key, so a Monte-Carlo task that
/// owns its stream produces the same samples regardless of which thread runs it
/// or in what order tasks complete.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    // Independent child stream; children with distinct ids never share a key.
    RngStream child(std::uint64_t id) const;

    double uniform();
    double normal();
    std::size_t index(std::size_t n);
    std::mt19937_64 &engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a over raw bytes; used for config/codebook hashes and cache checksums.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text);

/// Circularly-symmetric complex Gaussian vector with per-entry variance `variance`.
CVector sample_cn(std::size_t dim, double variance, RngStream &rng);

/// log2 det(I + M) for Hermitian PSD M.
///
/// M is symmetrized as (M + M^H)/2 before a Cholesky factorization of I + M.
/// Throws InvalidInput when M deviates from Hermitian by more than 1e-9.
double logdet_id_plus(const CMatrix &m);

struct SvdResult {
    CMatrix u;
    RVector singular_values; // descending
    CMatrix v;
};

SvdResult svd_thin(const CMatrix &a);

// Largest |M - M^H| entry.
double hermitian_defect(const CMatrix &m);

// Thread cap for library-internal parallel loops; defaults to HYBRIDSCHED_THREADS
// or the hardware concurrency.
unsigned thread_count();
void set_thread_count(unsigned n);

/// Runs fn(task) for task in [0, n_tasks). Tasks must write disjoint outputs;
/// callers reduce in task order afterwards so results do not depend on scheduling.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)> &fn);

} // namespace hybridsched
