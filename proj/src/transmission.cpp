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

#include "hybridsched/transmission.hpp"

#include "hybridsched/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hybridsched {

namespace {

double coarse_level(const Codebook &cb) {
    double acc = 0.0;
    for (double l : cb.norm_levels)
        acc += l;
    return acc / static_cast<double>(cb.norm_levels.size());
}

CRow coarse_row(std::uint32_t id, const Codebook &cb) {
    return coarse_level(cb) * cb.directions.at(id).transpose();
}

// Waterfilling over eigenmode gains g (descending) with total power budget.
std::vector<double> waterfill(const std::vector<double> &gains, double budget) {
    std::vector<double> p(gains.size(), 0.0);
    std::size_t active = 0;
    while (active < gains.size() && gains[active] > 1e-300)
        ++active;
    for (std::size_t m = active; m >= 1; --m) {
        double inv_sum = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            inv_sum += 1.0 / gains[k];
        const double level = (budget + inv_sum) / static_cast<double>(m);
        if (level > 1.0 / gains[m - 1]) {
            for (std::size_t k = 0; k < m; ++k)
                p[k] = level - 1.0 / gains[k];
            return p;
        }
    }
    return p;
}

CMatrix naive_precoder(const CRow &self, const CRow &other, const SystemConfig &cfg) {
    const Eigen::Index mt = self.size();
    CMatrix h(2, mt);
    h.row(0) = self / std::sqrt(1.0 + cfg.precoder_c2);
    h.row(1) = other / std::sqrt(cfg.precoder_c3);
    const SvdResult svd = svd_thin(h);
    std::vector<double> gains;
    for (Eigen::Index k = 0; k < svd.singular_values.size(); ++k)
        gains.push_back(svd.singular_values(k) * svd.singular_values(k));
    const std::vector<double> p = waterfill(gains, cfg.power_budget / 2.0);
    CMatrix w = CMatrix::Zero(mt, 2);
    for (std::size_t k = 0; k < p.size() && k < 2; ++k)
        w.col(static_cast<Eigen::Index>(k)) = std::sqrt(p[k]) * svd.v.col(static_cast<Eigen::Index>(k));
    return w;
}

bool precoders_degenerate(const CRow &fine_i, const CRow &fine_j, const CMatrix &w_i, const CMatrix &w_j) {
    return (fine_i * w_j).norm() < kDegenerateTol || (fine_j * w_i).norm() < kDegenerateTol;
}

std::uint64_t assignment_key(std::uint32_t a, std::uint32_t b) { return (std::uint64_t{a} << 32) | b; }

// Fixed streams make the assigned rate a deterministic function of the ids.
constexpr std::uint64_t kPairAssignmentStream = 0x5241;
constexpr std::uint64_t kOneshotAssignmentStream = 0x4f53;

std::array<double, 2> oneshot_rate_assignment(std::uint32_t cc_i, std::uint32_t cc_j, const SystemConfig &cfg,
                                              const Codebooks &cb, RngStream &rng) {
    const auto [w_i, w_j] = oneshot_zf_precoders(cc_i, cc_j, cfg, cb);
    const std::size_t n = static_cast<std::size_t>(cfg.mc_samples_reward);
    std::vector<double> ri(n), rj(n);
    for (std::size_t s = 0; s < n; ++s) {
        const ChannelDraw di = sample_true_given_estimates(cc_i, std::nullopt, cfg, cb, rng);
        const ChannelDraw dj = sample_true_given_estimates(cc_j, std::nullopt, cfg, cb, rng);
        ri[s] = oneshot_rate(di.h, w_i, w_j);
        rj[s] = oneshot_rate(dj.h, w_j, w_i);
    }
    return {outage_quantile(std::move(ri), cfg.outage_epsilon), outage_quantile(std::move(rj), cfg.outage_epsilon)};
}

} // namespace

CRow fine_estimate(const ChannelDraw &d, const SystemConfig &cfg, const Codebooks &codebooks) {
    if (cfg.csi_mode == CsiMode::perfect_delayed)
        return d.h;
    return reconstruct_aligned(d.obs_fine, d.fine_id, codebooks.fine);
}

double outage_reward(const std::vector<double> &samples, double r) {
    if (samples.empty())
        return 0.0;
    std::size_t ok = 0;
    for (double x : samples)
        if (!(x < r))
            ++ok;
    return r * static_cast<double>(ok) / static_cast<double>(samples.size());
}

std::pair<CMatrix, CMatrix> slot1_precoders(std::uint32_t coarse_i, std::uint32_t coarse_j, const SystemConfig &cfg,
                                            const Codebooks &codebooks) {
    const CRow hi = coarse_row(coarse_i, codebooks.coarse);
    const CRow hj = coarse_row(coarse_j, codebooks.coarse);
    return {naive_precoder(hi, hj, cfg), naive_precoder(hj, hi, cfg)};
}

CVector multicast_direction(std::uint32_t coarse_i, std::uint32_t coarse_j, const Codebooks &codebooks, int grid) {
    const CVector &ci = codebooks.coarse.directions.at(coarse_i);
    const CVector &cj = codebooks.coarse.directions.at(coarse_j);
    const CVector ui = ci.conjugate() / ci.norm();
    const CVector uj = cj.conjugate() / cj.norm();
    CVector best = ui;
    double best_gain = -1.0;
    for (int k = 0; k < grid; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / grid;
        CVector z = ui + std::polar(1.0, phi) * uj;
        const double n = z.norm();
        if (n < 1e-9)
            continue;
        z /= n;
        const double g = std::min(std::abs((ci.transpose() * z)(0, 0)), std::abs((cj.transpose() * z)(0, 0)));
        if (g > best_gain + 1e-12) {
            best_gain = g;
            best = z;
        }
    }
    return best;
}

std::pair<CVector, CVector> resolution_precoders(const CVector &direction, const CRow &fine_i, const CRow &fine_j,
                                                 const CMatrix &w_i, const CMatrix &w_j, double power) {
    const double den2 = (fine_i * w_j).norm();
    const double den3 = (fine_j * w_i).norm();
    if (den2 < kDegenerateTol || den3 < kDegenerateTol)
        throw DegeneratePrecoder("resolution precoder: fine estimate is orthogonal to the co-scheduled precoder");
    const CVector unit = direction / direction.norm();
    return {unit * (std::sqrt(power) / den2), unit * (std::sqrt(power) / den3)};
}

PrecoderSet make_precoder_set(CMatrix w_i, CMatrix w_j, const CVector &direction, const CRow &fine_i,
                              const CRow &fine_j, double power) {
    PrecoderSet s;
    auto [z2, z3] = resolution_precoders(direction, fine_i, fine_j, w_i, w_j, power);
    s.slot1_power = w_i.squaredNorm() + w_j.squaredNorm();
    s.slot2_power = z2.squaredNorm() * (fine_i * w_j).squaredNorm();
    s.slot3_power = z3.squaredNorm() * (fine_j * w_i).squaredNorm();
    s.w_i = std::move(w_i);
    s.w_j = std::move(w_j);
    s.z2 = std::move(z2);
    s.z3 = std::move(z3);
    return s;
}

EffectiveChannel effective_channel_suboptimal(const UserObservationInputs &in) {
    const cplx hz_res = (in.h_now * *in.z_resolve)(0, 0);
    const cplx hz_use = (in.h_now * *in.z_useful)(0, 0);
    if (std::abs(hz_res) < kDegenerateTol || std::abs(hz_use) < kDegenerateTol)
        throw DegenerateGeometry("effective channel: current channel nearly orthogonal to a resolution precoder");
    EffectiveChannel e;
    e.variant = EffectiveChannel::Variant::suboptimal;
    e.delta = hz_use;
    e.h_error = in.h_past - in.fine_self;
    const CMatrix &w = *in.w_self;
    e.g.resize(2, w.cols());
    e.g.row(0) = in.h_past * w;
    e.g.row(1) = e.delta * (in.fine_partner * w);
    e.gamma = CMatrix::Zero(2, 2);
    e.gamma(0, 0) = 1.0 + (e.h_error * *in.w_partner).squaredNorm() + 1.0 / std::norm(hz_res);
    e.gamma(1, 1) = 1.0;
    return e;
}

EffectiveChannel effective_channel_optimal(const UserObservationInputs &in) {
    const cplx hz_res = (in.h_now * *in.z_resolve)(0, 0);
    const cplx hz_use = (in.h_now * *in.z_useful)(0, 0);
    const Eigen::Index mt = in.h_past.size();
    EffectiveChannel e;
    e.variant = EffectiveChannel::Variant::optimal;
    e.delta = hz_use;
    e.h_error = in.h_past - in.fine_self;
    e.f = CMatrix::Zero(3, mt);
    e.f.row(0) = in.h_past;
    e.f.row(2) = hz_use * in.fine_partner;
    e.f_tilde = CMatrix::Zero(3, mt);
    e.f_tilde.row(0) = in.h_past;
    e.f_tilde.row(1) = hz_res * in.fine_self;
    return e;
}

double instantaneous_rate(const EffectiveChannel &eff, const CMatrix &w_i, const CMatrix &w_j) {
    if (eff.variant == EffectiveChannel::Variant::suboptimal) {
        CMatrix scaled = eff.g;
        for (Eigen::Index r = 0; r < scaled.rows(); ++r)
            scaled.row(r) /= std::sqrt(eff.gamma(r, r).real());
        const CMatrix m = scaled * scaled.adjoint();
        return std::max(0.0, logdet_id_plus(m) / 3.0);
    }
    const CMatrix interference = eff.f_tilde * w_j;
    const CMatrix signal = eff.f * w_i;
    const CMatrix ii = interference * interference.adjoint();
    const CMatrix total = ii + signal * signal.adjoint();
    return std::max(0.0, (logdet_id_plus(total) - logdet_id_plus(ii)) / 3.0);
}

double user_rate(const UserObservationInputs &in, bool optimal_filter) {
    if (optimal_filter)
        return instantaneous_rate(effective_channel_optimal(in), *in.w_self, *in.w_partner);
    const cplx hz_res = (in.h_now * *in.z_resolve)(0, 0);
    const cplx hz_use = (in.h_now * *in.z_useful)(0, 0);
    if (std::abs(hz_res) < kDegenerateTol || std::abs(hz_use) < kDegenerateTol)
        return 0.0;
    return instantaneous_rate(effective_channel_suboptimal(in), *in.w_self, *in.w_partner);
}

std::array<double, 2> pair_instantaneous_rates(const PairRealization &r, const CMatrix &w_i, const CMatrix &w_j,
                                                const CVector &direction, double power, bool optimal_filter) {
    if (precoders_degenerate(r.fine_i, r.fine_j, w_i, w_j))
        return {0.0, 0.0};
    const auto [z2, z3] = resolution_precoders(direction, r.fine_i, r.fine_j, w_i, w_j, power);
    UserObservationInputs ui{r.h_past_i, r.h_now_i, r.fine_i, r.fine_j, &w_i, &w_j, &z2, &z3};
    UserObservationInputs uj{r.h_past_j, r.h_now_j, r.fine_j, r.fine_i, &w_j, &w_i, &z3, &z2};
    return {user_rate(ui, optimal_filter), user_rate(uj, optimal_filter)};
}

double outage_quantile(std::vector<double> samples, double epsilon) {
    if (samples.empty() || epsilon <= 0.0 || epsilon >= 1.0)
        return 0.0;
    std::sort(samples.begin(), samples.end());
    const double pos = std::ceil(epsilon * static_cast<double>(samples.size()));
    const std::size_t idx = static_cast<std::size_t>(std::clamp(pos, 1.0, static_cast<double>(samples.size()))) - 1;
    return samples[idx];
}

CVector resolution_direction(std::uint32_t cur_coarse_i, std::uint32_t cur_coarse_j, const SystemConfig &cfg,
                             const Codebooks &codebooks) {
    if (cfg.csi_mode == CsiMode::delayed_only)
        return CVector::Unit(cfg.num_tx_antennas, 0);
    return multicast_direction(cur_coarse_i, cur_coarse_j, codebooks, cfg.multicast_grid);
}

std::array<double, 2> rate_assignment(std::uint32_t past_coarse_i, std::uint32_t past_coarse_j,
                                      const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng) {
    const auto [w_i, w_j] = slot1_precoders(past_coarse_i, past_coarse_j, cfg, codebooks);
    const std::size_t n = static_cast<std::size_t>(cfg.mc_samples_reward);
    std::vector<double> ri(n), rj(n);
    for (std::size_t s = 0; s < n; ++s) {
        const ChannelDraw pi = sample_true_given_estimates(past_coarse_i, std::nullopt, cfg, codebooks, rng);
        const ChannelDraw pj = sample_true_given_estimates(past_coarse_j, std::nullopt, cfg, codebooks, rng);
        const ChannelDraw ni = draw_channel(cfg, codebooks, rng);
        const ChannelDraw nj = draw_channel(cfg, codebooks, rng);
        const PairRealization real{pi.h, pj.h, ni.h, nj.h, fine_estimate(pi, cfg, codebooks),
                                   fine_estimate(pj, cfg, codebooks)};
        const CVector dir = resolution_direction(ni.coarse_id, nj.coarse_id, cfg, codebooks);
        const auto rates = pair_instantaneous_rates(real, w_i, w_j, dir, cfg.power_budget, false);
        ri[s] = rates[0];
        rj[s] = rates[1];
    }
    return {outage_quantile(std::move(ri), cfg.outage_epsilon), outage_quantile(std::move(rj), cfg.outage_epsilon)};
}

std::array<double, 2> expected_pair_rates(const CsiTuple &t, const SystemConfig &cfg, const Codebooks &codebooks,
                                          const ConditionalModel &model, RngStream &rng) {
    if (model.joint(t.past_coarse_i, t.past_fine_i) <= 0.0 || model.joint(t.past_coarse_j, t.past_fine_j) <= 0.0)
        throw InfeasibleConditioning("pair tuple has a zero-probability (coarse, fine) cell");
    const auto [w_i, w_j] = slot1_precoders(t.past_coarse_i, t.past_coarse_j, cfg, codebooks);
    const bool hybrid = cfg.csi_mode != CsiMode::delayed_only;
    const CVector dir = resolution_direction(t.cur_coarse_i, t.cur_coarse_j, cfg, codebooks);
    const bool optimal = cfg.rate_mode == RateMode::optimal_filter;
    const std::size_t n = static_cast<std::size_t>(cfg.mc_samples_reward);
    std::vector<double> ri(n), rj(n);
    for (std::size_t s = 0; s < n; ++s) {
        const ChannelDraw pi = sample_true_given_estimates(t.past_coarse_i, t.past_fine_i, cfg, codebooks, rng);
        const ChannelDraw pj = sample_true_given_estimates(t.past_coarse_j, t.past_fine_j, cfg, codebooks, rng);
        const ChannelDraw ni = hybrid ? sample_true_given_estimates(t.cur_coarse_i, std::nullopt, cfg, codebooks, rng)
                                      : draw_channel(cfg, codebooks, rng);
        const ChannelDraw nj = hybrid ? sample_true_given_estimates(t.cur_coarse_j, std::nullopt, cfg, codebooks, rng)
                                      : draw_channel(cfg, codebooks, rng);
        const PairRealization real{pi.h, pj.h, ni.h, nj.h, fine_estimate(pi, cfg, codebooks),
                                   fine_estimate(pj, cfg, codebooks)};
        const auto rates = pair_instantaneous_rates(real, w_i, w_j, dir, cfg.power_budget, optimal);
        ri[s] = rates[0];
        rj[s] = rates[1];
    }
    if (cfg.rate_mode == RateMode::conservative) {
        const auto r = assigned_pair_rates(t.past_coarse_i, t.past_coarse_j, cfg, codebooks);
        return {outage_reward(ri, r[0]), outage_reward(rj, r[1])};
    }
    double si = 0.0, sj = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        si += ri[s];
        sj += rj[s];
    }
    return {si / static_cast<double>(n), sj / static_cast<double>(n)};
}

std::array<double, 2> assigned_pair_rates(std::uint32_t past_coarse_i, std::uint32_t past_coarse_j,
                                          const SystemConfig &cfg, const Codebooks &codebooks) {
    RngStream rng = RngStream(cfg.seed, kPairAssignmentStream).child(assignment_key(past_coarse_i, past_coarse_j));
    return rate_assignment(past_coarse_i, past_coarse_j, cfg, codebooks, rng);
}

std::array<double, 2> assigned_oneshot_rates(std::uint32_t cur_coarse_i, std::uint32_t cur_coarse_j,
                                             const SystemConfig &cfg, const Codebooks &codebooks) {
    RngStream rng = RngStream(cfg.seed, kOneshotAssignmentStream).child(assignment_key(cur_coarse_i, cur_coarse_j));
    return oneshot_rate_assignment(cur_coarse_i, cur_coarse_j, cfg, codebooks, rng);
}

std::pair<CVector, CVector> oneshot_zf_precoders(std::uint32_t coarse_i, std::uint32_t coarse_j,
                                                 const SystemConfig &cfg, const Codebooks &codebooks) {
    const CVector hi = coarse_row(coarse_i, codebooks.coarse).adjoint();
    const CVector hj = coarse_row(coarse_j, codebooks.coarse).adjoint();
    const CVector pi = hi - hj * (hj.dot(hi) / hj.squaredNorm());
    const CVector pj = hj - hi * (hi.dot(hj) / hi.squaredNorm());
    const double p = cfg.power_budget;
    if (pi.norm() < 1e-9 * hi.norm() || pj.norm() < 1e-9 * hj.norm())
        return {hi * (std::sqrt(p) / hi.norm()), CVector::Zero(hi.size())};
    return {pi * (std::sqrt(p / 2.0) / pi.norm()), pj * (std::sqrt(p / 2.0) / pj.norm())};
}

double oneshot_rate(const CRow &h, const CVector &w_self, const CVector &w_other) {
    const double s = std::norm((h * w_self)(0, 0));
    const double i = std::norm((h * w_other)(0, 0));
    return std::log2(1.0 + s / (1.0 + i));
}

std::array<double, 2> expected_oneshot_rates(std::uint32_t cur_coarse_i, std::uint32_t cur_coarse_j,
                                             const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng) {
    const auto [w_i, w_j] = oneshot_zf_precoders(cur_coarse_i, cur_coarse_j, cfg, codebooks);
    const std::size_t n = static_cast<std::size_t>(cfg.mc_samples_reward);
    std::vector<double> ri(n), rj(n);
    for (std::size_t s = 0; s < n; ++s) {
        const ChannelDraw di = sample_true_given_estimates(cur_coarse_i, std::nullopt, cfg, codebooks, rng);
        const ChannelDraw dj = sample_true_given_estimates(cur_coarse_j, std::nullopt, cfg, codebooks, rng);
        ri[s] = oneshot_rate(di.h, w_i, w_j);
        rj[s] = oneshot_rate(dj.h, w_j, w_i);
    }
    if (cfg.rate_mode == RateMode::conservative) {
        const auto r = assigned_oneshot_rates(cur_coarse_i, cur_coarse_j, cfg, codebooks);
        return {outage_reward(ri, r[0]), outage_reward(rj, r[1])};
    }
    double si = 0.0, sj = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        si += ri[s];
        sj += rj[s];
    }
    return {si / static_cast<double>(n), sj / static_cast<double>(n)};
}

} // namespace hybridsched
