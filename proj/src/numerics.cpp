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

#include "hybridsched/numerics.hpp"

#include "hybridsched/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>
#include <vector>

namespace hybridsched {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream ^ 0x5851f42d4c957f2dULL));
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(stream_key(seed, stream)) {}

RngStream RngStream::child(std::uint64_t id) const {
    return RngStream(seed_, splitmix64(stream_ * 0x2545f4914f6cdd1dULL + id + 1));
}

double RngStream::uniform() { return uniform_(engine_); }

double RngStream::normal() { return normal_(engine_); }

std::size_t RngStream::index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(engine_);
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view text) {
    return fnv1a64(std::span<const unsigned char>(reinterpret_cast<const unsigned char *>(text.data()), text.size()));
}

CVector sample_cn(std::size_t dim, double variance, RngStream &rng) {
    if (!(variance > 0.0))
        throw InvalidInput("sample_cn: variance must be positive");
    if (dim > static_cast<std::size_t>(kMaxDim))
        throw InvalidInput("sample_cn: dimension exceeds 8");
    const double s = std::sqrt(variance / 2.0);
    CVector v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double re = rng.normal();
        const double im = rng.normal();
        v(i) = cplx(s * re, s * im);
    }
    return v;
}

double hermitian_defect(const CMatrix &m) {
    if (m.rows() != m.cols())
        return std::numeric_limits<double>::infinity();
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double logdet_id_plus(const CMatrix &m) {
    if (m.rows() != m.cols())
        throw InvalidInput("logdet_id_plus: matrix must be square");
    if (m.size() == 0)
        return 0.0;
    if (hermitian_defect(m) > kHermitianTol)
        throw InvalidInput("logdet_id_plus: matrix is not Hermitian");
    CMatrix a = 0.5 * (m + m.adjoint());
    a.diagonal().array() += 1.0;
    Eigen::LLT<CMatrix> llt(a);
    if (llt.info() != Eigen::Success)
        throw InvalidInput("logdet_id_plus: I + M is not positive definite");
    double acc = 0.0;
    const CMatrix &l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i)
        acc += std::log2(l(i, i).real());
    return 2.0 * acc;
}

SvdResult svd_thin(const CMatrix &a) {
    Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

namespace {

unsigned default_threads() {
    if (const char *env = std::getenv("HYBRIDSCHED_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0)
            return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<unsigned> g_threads{0};

} // namespace

unsigned thread_count() {
    unsigned n = g_threads.load();
    if (n == 0) {
        n = default_threads();
        g_threads.store(n);
    }
    return n;
}

void set_thread_count(unsigned n) { g_threads.store(std::max(1u, n)); }

void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)> &fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n_tasks));
    if (workers <= 1) {
        for (std::size_t t = 0; t < n_tasks; ++t)
            fn(t);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t t = next.fetch_add(1);
                if (t >= n_tasks)
                    return;
                try {
                    fn(t);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error)
                        first_error = std::current_exception();
                }
            }
        });
    }
    for (auto &th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace hybridsched
