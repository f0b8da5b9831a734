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


#include "hybridsched/channel_model.hpp"
#include "hybridsched/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace hybridsched;

namespace {

SystemConfig small_config() {
    SystemConfig c;
    c.coarse_bits = 2;
    c.fine_bits = 3;
    c.mc_samples_model = 20000;
    return c;
}

CVector basis_vector(int dim, int k) {
    CVector v = CVector::Zero(dim);
    v(k) = 1.0;
    return v;
}

// Coarse and fine codebooks made of the same two axes, observed without noise: a
// channel's coarse and fine ids always coincide.
Codebooks axis_codebooks() {
    Codebooks cb;
    cb.coarse.kind = CodebookKind::coarse;
    cb.fine.kind = CodebookKind::fine;
    cb.coarse.bits = cb.fine.bits = 1;
    for (Codebook *book : {&cb.coarse, &cb.fine}) {
        book->directions = {basis_vector(2, 0), basis_vector(2, 1)};
        book->norm_levels = {1.0};
    }
    return cb;
}

} // namespace

TEST_CASE("codebooks hold unit directions and are reproducible") {
    const SystemConfig cfg = small_config();
    const Codebooks a = build_codebooks(cfg);
    const Codebooks b = build_codebooks(cfg);
    CHECK(a.coarse.size() == 4);
    CHECK(a.fine.size() == 8);
    for (const auto &d : a.coarse.directions)
        CHECK(d.norm() == doctest::Approx(1.0));
    for (const auto &d : a.fine.directions)
        CHECK(d.norm() == doctest::Approx(1.0));
    CHECK(a.coarse.hash() == b.coarse.hash());
    CHECK(a.fine.hash() == b.fine.hash());
    CHECK(a.coarse.hash() != a.fine.hash());
    SystemConfig other = cfg;
    other.seed = 2;
    CHECK(build_codebooks(other).coarse.hash() != a.coarse.hash());
}

TEST_CASE("designed coarse codebook is better spread than a random draw") {
    const SystemConfig cfg = small_config();
    const Codebooks cb = build_codebooks(cfg);
    // Four lines in C^2 cannot be further apart than sqrt(2/3).
    CHECK(cb.coarse.min_chordal_distance() <= std::sqrt(2.0 / 3.0) + 1e-9);
    CHECK(cb.coarse.min_chordal_distance() > 0.75);
}

TEST_CASE("chordal distance basics") {
    const CVector e0 = basis_vector(2, 0), e1 = basis_vector(2, 1);
    CHECK(chordal_distance(e0, e0) == doctest::Approx(0.0));
    CHECK(chordal_distance(e0, e1) == doctest::Approx(1.0));
    const CVector phased = cplx(0.0, 1.0) * e0;
    CHECK(chordal_distance(e0, phased) == doctest::Approx(0.0));
}

TEST_CASE("quantization picks the codeword of largest gain") {
    const SystemConfig cfg = small_config();
    const Codebooks cb = build_codebooks(cfg);
    RngStream rng(4, 4);
    for (int trial = 0; trial < 500; ++trial) {
        const CRow h = sample_cn(2, 1.0, rng).transpose();
        const QuantizedCsi q = quantize_observation(h, cb.fine);
        for (std::size_t i = 0; i < cb.fine.size(); ++i)
            CHECK(direction_gain(h, cb.fine.directions[q.direction_id]) >=
                  direction_gain(h, cb.fine.directions[i]) - 1e-12);
    }
    CHECK_THROWS_AS(quantize_observation(CRow::Zero(2), cb.fine), InvalidInput);
}

TEST_CASE("aligned reconstruction keeps norm and phase reference") {
    const SystemConfig cfg = small_config();
    const Codebooks cb = build_codebooks(cfg);
    RngStream rng(8, 1);
    const CRow h = sample_cn(2, 1.0, rng).transpose();
    const QuantizedCsi q = quantize_observation(h, cb.fine);
    const CRow r = reconstruct_aligned(h, q.direction_id, cb.fine);
    CHECK(r.norm() == doctest::Approx(h.norm()));
    const cplx inner = (r * h.adjoint())(0, 0);
    CHECK(std::abs(inner.imag()) < 1e-12);
    CHECK(inner.real() > 0.0);
}

TEST_CASE("conditional model rows are distributions") {
    const SystemConfig cfg = small_config();
    const Codebooks cb = build_codebooks(cfg);
    RngStream rng(cfg.seed, 1);
    const ConditionalModel m = estimate_conditional_model(cfg, cb, rng);
    CHECK(std::accumulate(m.pi_coarse.begin(), m.pi_coarse.end(), 0.0) == doctest::Approx(1.0));
    for (std::size_t c = 0; c < m.num_coarse; ++c) {
        double row = 0.0;
        for (std::size_t f = 0; f < m.num_fine; ++f)
            row += m.p_fine(c, f);
        CHECK(row == doctest::Approx(1.0));
    }
    RngStream again(cfg.seed, 1);
    CHECK(estimate_conditional_model(cfg, cb, again).p_fine_given_coarse == m.p_fine_given_coarse);
}

TEST_CASE("rejection sampler acceptance matches the fine-given-coarse law") {
    SystemConfig cfg;
    cfg.coarse_bits = 0;
    cfg.fine_bits = 1;
    cfg.mc_samples_model = 200000;
    const Codebooks cb = build_codebooks(cfg);
    RngStream mrng(cfg.seed, 1);
    const ConditionalModel m = estimate_conditional_model(cfg, cb, mrng);
    RngStream rng(12, 12);
    const int n = 20000;
    int accepted = 0;
    for (int i = 0; i < n; ++i) {
        const ChannelDraw d = draw_channel(cfg, cb, rng);
        accepted += d.fine_id == 1;
    }
    CHECK(static_cast<double>(accepted) / n == doctest::Approx(m.p_fine(0, 1)).epsilon(0.02));
    for (int i = 0; i < 200; ++i) {
        const ChannelDraw d = sample_true_given_estimates(0, 1u, cfg, cb, rng);
        CHECK(d.coarse_id == 0);
        CHECK(d.fine_id == 1);
    }
}

TEST_CASE("impossible conditioning cells are reported") {
    SystemConfig cfg;
    cfg.coarse_bits = 1;
    cfg.fine_bits = 1;
    cfg.est_noise_coarse = 0.0;
    cfg.est_noise_fine = 0.0;
    const Codebooks cb = axis_codebooks();
    RngStream rng(2, 2);
    CHECK_NOTHROW(sample_true_given_estimates(0, 0u, cfg, cb, rng));
    CHECK_THROWS_AS(sample_true_given_estimates(0, 1u, cfg, cb, rng, 20000), InfeasibleConditioning);
    CHECK_THROWS_AS(sample_true_given_estimates(5, std::nullopt, cfg, cb, rng), InvalidInput);
}

TEST_CASE("conditional pools only hold matching draws") {
    SystemConfig cfg = small_config();
    cfg.fine_bits = 2;
    const Codebooks cb = build_codebooks(cfg);
    const ConditionalPool pool(cfg, cb, 20, RngStream(3, 3));
    for (std::uint32_t c = 0; c < cb.coarse.size(); ++c) {
        for (const ChannelDraw &d : pool.by_coarse(c))
            CHECK(d.coarse_id == c);
        for (std::uint32_t f = 0; f < cb.fine.size(); ++f) {
            CHECK(pool.joint(c, f).size() <= 20);
            for (const ChannelDraw &d : pool.joint(c, f)) {
                CHECK(d.coarse_id == c);
                CHECK(d.fine_id == f);
            }
        }
    }
    CHECK(pool.unconditioned().size() == 20);
}
