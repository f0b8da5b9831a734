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

#include "hybridsched/channel_model.hpp"
#include "hybridsched/config.hpp"
#include "hybridsched/numerics.hpp"

#include <array>
#include <cstdint>
#include <utility>

namespace hybridsched {

/// Quantized CSI the scheduler holds for an ordered pair (i, j): fine and coarse ids
/// from the interval the pair was last served, plus current coarse ids.
struct CsiTuple {
    std::uint32_t past_fine_i = 0;
    std::uint32_t past_fine_j = 0;
    std::uint32_t past_coarse_i = 0;
    std::uint32_t past_coarse_j = 0;
    std::uint32_t cur_coarse_i = 0;
    std::uint32_t cur_coarse_j = 0;
    bool operator==(const CsiTuple &) const = default;
};

/// Slot-1 precoders (M_t x 2 each) and the slot-2/3 resolution vectors.
struct PrecoderSet {
    CMatrix w_i;
    CMatrix w_j;
    CVector z2; // carries fine_i * x_j (resolves user i's interference)
    CVector z3; // carries fine_j * x_i
    double slot1_power = 0.0;
    double slot2_power = 0.0;
    double slot3_power = 0.0;
};

/// Per-user equivalent channel after the three slots.
struct EffectiveChannel {
    enum class Variant { suboptimal, optimal };
    Variant variant = Variant::suboptimal;
    // suboptimal: G (2 x 2) and the diagonal noise-plus-interference covariance
    CMatrix g;
    CMatrix gamma;
    cplx delta{0.0, 0.0};
    CRow h_error;
    // optimal: rows [h(kappa); 0; delta * fine_partner] and [h(kappa); (h(k) z_res) * fine_self; 0]
    CMatrix f;
    CMatrix f_tilde;
};

/// Channels one user needs to evaluate its rate. `z_resolve` is the slot vector that
/// carries the user's own fine estimate times the partner's symbols; `z_useful` carries
/// the partner's fine estimate times the user's symbols.
struct UserObservationInputs {
    CRow h_past;       // h_u[kappa]
    CRow h_now;        // h_u[k]
    CRow fine_self;    // fine estimate of h_u[kappa]
    CRow fine_partner; // fine estimate of the partner's channel at kappa
    const CMatrix *w_self = nullptr;
    const CMatrix *w_partner = nullptr;
    const CVector *z_resolve = nullptr;
    const CVector *z_useful = nullptr;
};

inline constexpr double kDegenerateTol = 1e-12;

/// Waterfilled point-to-point precoders for the naive channel [c_i; c_j] with noise
/// diag(1 + c2, c3); power P/2 per user.
std::pair<CMatrix, CMatrix> slot1_precoders(std::uint32_t coarse_i, std::uint32_t coarse_j, const SystemConfig &cfg,
                                            const Codebooks &codebooks);

/// Unit vector maximizing min(|c_i z|, |c_j z|) over z ~ u_i + e^{j phi} u_j on a phase grid.
CVector multicast_direction(std::uint32_t coarse_i, std::uint32_t coarse_j, const Codebooks &codebooks,
                            int grid = 64);

/// Scales `direction` to ||z2|| = sqrt(P)/||fine_i W_j|| and ||z3|| = sqrt(P)/||fine_j W_i||.
/// Throws DegeneratePrecoder on a vanishing denominator.
std::pair<CVector, CVector> resolution_precoders(const CVector &direction, const CRow &fine_i, const CRow &fine_j,
                                                 const CMatrix &w_i, const CMatrix &w_j, double power);

PrecoderSet make_precoder_set(CMatrix w_i, CMatrix w_j, const CVector &direction, const CRow &fine_i,
                              const CRow &fine_j, double power);

EffectiveChannel effective_channel_suboptimal(const UserObservationInputs &in);
EffectiveChannel effective_channel_optimal(const UserObservationInputs &in);

/// (1/3) log2|I + Gamma^{-1} G G^H| with G, Gamma taken from `eff` (optimal variant:
/// Gamma = I + F~ W_j W_j^H F~^H and G = F W_i).
double instantaneous_rate(const EffectiveChannel &eff, const CMatrix &w_i, const CMatrix &w_j);

/// Rate of one user; degenerate geometry counts as rate 0.
double user_rate(const UserObservationInputs &in, bool optimal_filter);

/// Everything needed to evaluate both users of a pair in one realization.
struct PairRealization {
    CRow h_past_i, h_past_j;
    CRow h_now_i, h_now_j;
    CRow fine_i, fine_j;
};

/// Instantaneous rates (I_i, I_j) of a pair; degenerate precoders give (0, 0).
std::array<double, 2> pair_instantaneous_rates(const PairRealization &r, const CMatrix &w_i, const CMatrix &w_j,
                                                const CVector &direction, double power, bool optimal_filter);

// Fine estimate a rate evaluation uses for a past draw (the exact channel in bypass mode).
CRow fine_estimate(const ChannelDraw &d, const SystemConfig &cfg, const Codebooks &codebooks);

// r * (1 - empirical P(I < r))
double outage_reward(const std::vector<double> &samples, double r);

// Empirical epsilon-quantile (smallest sample with empirical CDF >= epsilon);
// epsilon <= 0 or >= 1 yields 0.
double outage_quantile(std::vector<double> samples, double epsilon);

/// Conditional-expectation rewards of one pair action for the tuple, by rejection sampling.
std::array<double, 2> expected_pair_rates(const CsiTuple &t, const SystemConfig &cfg, const Codebooks &codebooks,
                                          const ConditionalModel &model, RngStream &rng);

/// epsilon-outage rate assigned to (user i, user j) from the past coarse ids alone.
std::array<double, 2> rate_assignment(std::uint32_t past_coarse_i, std::uint32_t past_coarse_j,
                                      const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng);

/// rate_assignment evaluated on a fixed stream keyed by the pair of ids, so the
/// mapping is deterministic and shared by every caller.
std::array<double, 2> assigned_pair_rates(std::uint32_t past_coarse_i, std::uint32_t past_coarse_j,
                                          const SystemConfig &cfg, const Codebooks &codebooks);
std::array<double, 2> assigned_oneshot_rates(std::uint32_t cur_coarse_i, std::uint32_t cur_coarse_j,
                                             const SystemConfig &cfg, const Codebooks &codebooks);

/// Zero-forcing beams from the coarse estimates, power P/2 each; collinear estimates
/// serve user i alone with full power.
std::pair<CVector, CVector> oneshot_zf_precoders(std::uint32_t coarse_i, std::uint32_t coarse_j,
                                                 const SystemConfig &cfg, const Codebooks &codebooks);

// log2(1 + |h w_self|^2 / (1 + |h w_other|^2))
double oneshot_rate(const CRow &h, const CVector &w_self, const CVector &w_other);

std::array<double, 2> expected_oneshot_rates(std::uint32_t cur_coarse_i, std::uint32_t cur_coarse_j,
                                             const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng);

// Direction used for slots 2/3 under the configured CSI mode.
CVector resolution_direction(std::uint32_t cur_coarse_i, std::uint32_t cur_coarse_j, const SystemConfig &cfg,
                             const Codebooks &codebooks);

} // namespace hybridsched
