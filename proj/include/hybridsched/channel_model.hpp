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

#include "hybridsched/config.hpp"
#include "hybridsched/numerics.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hybridsched {

enum class CodebookKind : std::uint8_t { coarse = 0, fine = 1 };

/// Finite set of unit-norm channel directions plus scalar norm levels.
struct Codebook {
    CodebookKind kind = CodebookKind::coarse;
    int bits = 0;
    std::vector<CVector> directions;
    std::vector<double> norm_levels; // ascending, positive

    std::size_t size() const { return directions.size(); }
    std::size_t dim() const { return directions.empty() ? 0 : static_cast<std::size_t>(directions.front().size()); }
    double min_chordal_distance() const;
    std::uint64_t hash() const;
};

struct Codebooks {
    Codebook coarse;
    Codebook fine;
};

struct QuantizedCsi {
    std::uint32_t direction_id = 0;
    std::uint32_t norm_id = 0;
    bool operator==(const QuantizedCsi &) const = default;
};

/// pi(coarse) and P(fine | coarse) of the estimation chain.
struct ConditionalModel {
    std::vector<double> pi_coarse;
    // Row-major, coarse rows x fine columns.
    std::vector<double> p_fine_given_coarse;
    std::size_t num_coarse = 0;
    std::size_t num_fine = 0;
    // Coarse rows that saw no samples and were replaced by the uniform distribution.
    std::vector<bool> zero_support;

    double p_fine(std::size_t coarse, std::size_t fine) const { return p_fine_given_coarse[coarse * num_fine + fine]; }
    double joint(std::size_t coarse, std::size_t fine) const { return pi_coarse[coarse] * p_fine(coarse, fine); }
};

double chordal_distance(const CVector &u, const CVector &v);

// |<c, h>| / ||h|| for a row channel h against codeword c.
double direction_gain(const CRow &h, const CVector &c);

std::vector<CRow> sample_true_channels(const SystemConfig &cfg, RngStream &rng);

Codebook build_coarse_codebook(const SystemConfig &cfg, RngStream &rng);
Codebook build_fine_codebook(const SystemConfig &cfg, RngStream &rng);
// Both codebooks from fixed children of (cfg.seed, stream 0).
Codebooks build_codebooks(const SystemConfig &cfg);

// Noisy observation h + CN(0, noise_var I); noise_var == 0 returns h.
CRow observe(const CRow &h, double noise_var, RngStream &rng);
// Nearest codeword and norm level of an observation; ties go to the lowest index.
QuantizedCsi quantize_observation(const CRow &obs, const Codebook &codebook);
QuantizedCsi quantize(const CRow &h, double noise_var, const Codebook &codebook, RngStream &rng);

// norm_level x direction, as a row.
CRow reconstruct(const QuantizedCsi &q, const Codebook &codebook);
// Reconstruction carrying the observation's exact norm and phase reference along the
// quantized direction.
CRow reconstruct_aligned(const CRow &obs, std::uint32_t direction_id, const Codebook &codebook);

ConditionalModel estimate_conditional_model(const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng);

/// One draw of the generative estimation chain for a single user and interval.
struct ChannelDraw {
    CRow h;
    CRow obs_coarse;
    CRow obs_fine;
    std::uint32_t coarse_id = 0;
    std::uint32_t fine_id = 0;
};

ChannelDraw draw_channel(const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng);

/// Rejection sampler: true channel conditioned on its coarse id (and fine id if given).
/// Throws InfeasibleConditioning after 10^6 attempts.
ChannelDraw sample_true_given_estimates(std::uint32_t coarse_id, std::optional<std::uint32_t> fine_id,
                                        const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng,
                                        std::int64_t max_attempts = 1000000);

/// Exact conditional draws bucketed by (coarse, fine) and by coarse id.
///
/// Filled from a single generative stream; every bucket entry is therefore an
/// independent draw from its conditional law. Buckets that cannot be filled within
/// the draw budget keep whatever they got; empty buckets mark infeasible cells.
class ConditionalPool {
public:
    ConditionalPool() = default;
    ConditionalPool(const SystemConfig &cfg, const Codebooks &codebooks, std::size_t per_cell, RngStream rng);

    const std::vector<ChannelDraw> &joint(std::uint32_t coarse, std::uint32_t fine) const {
        return joint_[coarse * num_fine_ + fine];
    }
    const std::vector<ChannelDraw> &by_coarse(std::uint32_t coarse) const { return by_coarse_[coarse]; }
    const std::vector<ChannelDraw> &unconditioned() const { return any_; }
    std::size_t per_cell() const { return per_cell_; }
    std::int64_t draws_used() const { return draws_used_; }

private:
    std::size_t num_fine_ = 0;
    std::size_t per_cell_ = 0;
    std::int64_t draws_used_ = 0;
    std::vector<std::vector<ChannelDraw>> joint_;
    std::vector<std::vector<ChannelDraw>> by_coarse_;
    std::vector<ChannelDraw> any_;
};

} // namespace hybridsched
