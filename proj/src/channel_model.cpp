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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hybridsched {

namespace {

constexpr double kTieTol = 1e-12;

CVector isotropic_direction(std::size_t dim, RngStream &rng) {
    CVector v = sample_cn(dim, 1.0, rng);
    return v / v.norm();
}

double min_distance(const std::vector<CVector> &dirs) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < dirs.size(); ++a)
        for (std::size_t b = a + 1; b < dirs.size(); ++b)
            best = std::min(best, chordal_distance(dirs[a], dirs[b]));
    return best;
}

// One Gauss-Seidel sweep pushing each codeword away from its closest neighbours.
std::vector<CVector> repel(std::vector<CVector> dirs, double step) {
    for (std::size_t a = 0; a < dirs.size(); ++a) {
        double closest = 0.0;
        for (std::size_t b = 0; b < dirs.size(); ++b)
            if (b != a)
                closest = std::max(closest, std::norm(dirs[b].dot(dirs[a])));
        if (closest <= 0.0)
            continue;
        CVector force = CVector::Zero(dirs[a].size());
        for (std::size_t b = 0; b < dirs.size(); ++b) {
            if (b == a)
                continue;
            const cplx ip = dirs[b].dot(dirs[a]);
            const double w = std::pow(std::norm(ip) / closest, 8.0);
            force += w * ip * dirs[b];
        }
        CVector moved = dirs[a] - step * force;
        const double n = moved.norm();
        if (n > 1e-12)
            dirs[a] = moved / n;
    }
    return dirs;
}

std::vector<double> build_norm_levels(const SystemConfig &cfg, RngStream &rng) {
    const double rms = std::sqrt(static_cast<double>(cfg.num_tx_antennas)) * cfg.pathloss_delta;
    if (cfg.norm_levels == 1)
        return {rms};
    // Conditional means of equiprobable bins of the channel-norm law.
    constexpr std::size_t n = 20000;
    std::vector<double> norms(n);
    for (auto &x : norms)
        x = sample_cn(static_cast<std::size_t>(cfg.num_tx_antennas), cfg.pathloss_delta * cfg.pathloss_delta, rng)
                .norm();
    std::sort(norms.begin(), norms.end());
    std::vector<double> levels;
    const std::size_t l = static_cast<std::size_t>(cfg.norm_levels);
    for (std::size_t i = 0; i < l; ++i) {
        const std::size_t lo = i * n / l, hi = (i + 1) * n / l;
        levels.push_back(std::accumulate(norms.begin() + lo, norms.begin() + hi, 0.0) / static_cast<double>(hi - lo));
    }
    return levels;
}

} // namespace

double chordal_distance(const CVector &u, const CVector &v) {
    const double c = std::norm(u.dot(v)) / (u.squaredNorm() * v.squaredNorm());
    return std::sqrt(std::max(0.0, 1.0 - c));
}

double direction_gain(const CRow &h, const CVector &c) {
    const double n = h.norm();
    if (n == 0.0)
        return 0.0;
    return std::abs(c.dot(h.transpose())) / n;
}

double Codebook::min_chordal_distance() const { return min_distance(directions); }

std::uint64_t Codebook::hash() const {
    std::uint64_t h = fnv1a64(std::span<const unsigned char>(reinterpret_cast<const unsigned char *>(&kind), 1));
    for (const auto &d : directions)
        h = fnv1a64(std::span<const unsigned char>(reinterpret_cast<const unsigned char *>(d.data()),
                                                   sizeof(cplx) * static_cast<std::size_t>(d.size())),
                    h);
    h = fnv1a64(std::span<const unsigned char>(reinterpret_cast<const unsigned char *>(norm_levels.data()),
                                               sizeof(double) * norm_levels.size()),
                h);
    return h;
}

std::vector<CRow> sample_true_channels(const SystemConfig &cfg, RngStream &rng) {
    std::vector<CRow> out;
    out.reserve(static_cast<std::size_t>(cfg.num_users));
    const double var = cfg.pathloss_delta * cfg.pathloss_delta;
    for (int n = 0; n < cfg.num_users; ++n)
        out.push_back(sample_cn(static_cast<std::size_t>(cfg.num_tx_antennas), var, rng).transpose());
    return out;
}

Codebook build_coarse_codebook(const SystemConfig &cfg, RngStream &rng) {
    if (cfg.coarse_bits < 0)
        throw InvalidInput("coarse_bits must be >= 0");
    const std::size_t k = std::size_t{1} << cfg.coarse_bits;
    const std::size_t dim = static_cast<std::size_t>(cfg.num_tx_antennas);

    std::vector<CVector> best;
    double best_d = -1.0;
    for (int r = 0; r < cfg.codebook_candidates; ++r) {
        std::vector<CVector> cand;
        cand.reserve(k);
        for (std::size_t i = 0; i < k; ++i)
            cand.push_back(isotropic_direction(dim, rng));
        const double d = k > 1 ? min_distance(cand) : 0.0;
        if (d > best_d) {
            best_d = d;
            best = std::move(cand);
        }
        if (k == 1)
            break;
    }
    if (k > 1) {
        double step = 1.0;
        for (int sweep = 0; sweep < cfg.lloyd_sweeps; ++sweep) {
            auto trial = repel(best, step);
            const double d = min_distance(trial);
            if (d > best_d) {
                best_d = d;
                best = std::move(trial);
            } else {
                step *= 0.5;
            }
        }
    }
    Codebook cb;
    cb.kind = CodebookKind::coarse;
    cb.bits = cfg.coarse_bits;
    cb.directions = std::move(best);
    cb.norm_levels = build_norm_levels(cfg, rng);
    return cb;
}

Codebook build_fine_codebook(const SystemConfig &cfg, RngStream &rng) {
    const std::size_t k = std::size_t{1} << cfg.fine_bits;
    Codebook cb;
    cb.kind = CodebookKind::fine;
    cb.bits = cfg.fine_bits;
    cb.directions.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        cb.directions.push_back(isotropic_direction(static_cast<std::size_t>(cfg.num_tx_antennas), rng));
    cb.norm_levels = build_norm_levels(cfg, rng);
    return cb;
}

Codebooks build_codebooks(const SystemConfig &cfg) {
    RngStream root(cfg.seed, 0);
    RngStream coarse_rng = root.child(1);
    RngStream fine_rng = root.child(2);
    return {build_coarse_codebook(cfg, coarse_rng), build_fine_codebook(cfg, fine_rng)};
}

CRow observe(const CRow &h, double noise_var, RngStream &rng) {
    if (noise_var <= 0.0)
        return h;
    return h + sample_cn(static_cast<std::size_t>(h.size()), noise_var, rng).transpose();
}

QuantizedCsi quantize_observation(const CRow &obs, const Codebook &codebook) {
    const double n = obs.norm();
    if (!(n > 0.0))
        throw InvalidInput("quantize: channel must be nonzero");
    QuantizedCsi q;
    double best = -1.0;
    for (std::size_t i = 0; i < codebook.directions.size(); ++i) {
        const double g = std::abs(codebook.directions[i].dot(obs.transpose()));
        if (g > best + kTieTol * n) {
            best = g;
            q.direction_id = static_cast<std::uint32_t>(i);
        }
    }
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < codebook.norm_levels.size(); ++i) {
        const double gap = std::abs(codebook.norm_levels[i] - n);
        if (gap < best_gap - kTieTol) {
            best_gap = gap;
            q.norm_id = static_cast<std::uint32_t>(i);
        }
    }
    return q;
}

QuantizedCsi quantize(const CRow &h, double noise_var, const Codebook &codebook, RngStream &rng) {
    if (!(h.norm() > 0.0))
        throw InvalidInput("quantize: channel must be nonzero");
    return quantize_observation(observe(h, noise_var, rng), codebook);
}

CRow reconstruct(const QuantizedCsi &q, const Codebook &codebook) {
    return codebook.norm_levels.at(q.norm_id) * codebook.directions.at(q.direction_id).transpose();
}

CRow reconstruct_aligned(const CRow &obs, std::uint32_t direction_id, const Codebook &codebook) {
    const CVector &c = codebook.directions.at(direction_id);
    const cplx proj = c.dot(obs.transpose());
    const double mag = std::abs(proj);
    const cplx phase = mag > 0.0 ? proj / mag : cplx(1.0, 0.0);
    return obs.norm() * phase * c.transpose();
}

ChannelDraw draw_channel(const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng) {
    ChannelDraw d;
    d.h = sample_cn(static_cast<std::size_t>(cfg.num_tx_antennas), cfg.pathloss_delta * cfg.pathloss_delta, rng)
              .transpose();
    d.obs_coarse = observe(d.h, cfg.est_noise_coarse, rng);
    d.obs_fine = observe(d.h, cfg.est_noise_fine, rng);
    d.coarse_id = quantize_observation(d.obs_coarse, codebooks.coarse).direction_id;
    d.fine_id = quantize_observation(d.obs_fine, codebooks.fine).direction_id;
    return d;
}

ConditionalModel estimate_conditional_model(const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng) {
    const std::size_t nc = codebooks.coarse.size(), nf = codebooks.fine.size();
    const std::size_t total = static_cast<std::size_t>(cfg.mc_samples_model);
    constexpr std::size_t chunk = 4096;
    const std::size_t tasks = (total + chunk - 1) / chunk;
    std::vector<std::vector<std::int64_t>> counts(tasks, std::vector<std::int64_t>(nc * nf, 0));
    parallel_for(tasks, [&](std::size_t t) {
        RngStream local = rng.child(t);
        const std::size_t n = std::min(chunk, total - t * chunk);
        for (std::size_t i = 0; i < n; ++i) {
            const ChannelDraw d = draw_channel(cfg, codebooks, local);
            ++counts[t][d.coarse_id * nf + d.fine_id];
        }
    });
    std::vector<std::int64_t> merged(nc * nf, 0);
    for (const auto &c : counts)
        for (std::size_t i = 0; i < merged.size(); ++i)
            merged[i] += c[i];

    ConditionalModel m;
    m.num_coarse = nc;
    m.num_fine = nf;
    m.pi_coarse.assign(nc, 0.0);
    m.p_fine_given_coarse.assign(nc * nf, 0.0);
    m.zero_support.assign(nc, false);
    for (std::size_t c = 0; c < nc; ++c) {
        std::int64_t row = 0;
        for (std::size_t f = 0; f < nf; ++f)
            row += merged[c * nf + f];
        m.pi_coarse[c] = static_cast<double>(row) / static_cast<double>(total);
        if (row == 0) {
            m.zero_support[c] = true;
            for (std::size_t f = 0; f < nf; ++f)
                m.p_fine_given_coarse[c * nf + f] = 1.0 / static_cast<double>(nf);
        } else {
            for (std::size_t f = 0; f < nf; ++f)
                m.p_fine_given_coarse[c * nf + f] =
                    static_cast<double>(merged[c * nf + f]) / static_cast<double>(row);
        }
    }
    return m;
}

ChannelDraw sample_true_given_estimates(std::uint32_t coarse_id, std::optional<std::uint32_t> fine_id,
                                        const SystemConfig &cfg, const Codebooks &codebooks, RngStream &rng,
                                        std::int64_t max_attempts) {
    if (coarse_id >= codebooks.coarse.size() || (fine_id && *fine_id >= codebooks.fine.size()))
        throw InvalidInput("sample_true_given_estimates: id out of range");
    for (std::int64_t attempt = 0; attempt < max_attempts; ++attempt) {
        ChannelDraw d = draw_channel(cfg, codebooks, rng);
        if (d.coarse_id == coarse_id && (!fine_id || d.fine_id == *fine_id))
            return d;
    }
    throw InfeasibleConditioning("no channel matched coarse id " + std::to_string(coarse_id) +
                                 (fine_id ? " / fine id " + std::to_string(*fine_id) : std::string()) + " within " +
                                 std::to_string(max_attempts) + " attempts");
}

ConditionalPool::ConditionalPool(const SystemConfig &cfg, const Codebooks &codebooks, std::size_t per_cell,
                                 RngStream rng)
    : num_fine_(codebooks.fine.size()), per_cell_(per_cell) {
    const std::size_t nc = codebooks.coarse.size();
    const std::size_t cells = nc * num_fine_;
    joint_.assign(cells, {});
    by_coarse_.assign(nc, {});
    std::size_t full = 0;
    // Rare cells stop being waited for after this many draws and keep what they got.
    const std::int64_t budget =
        std::min<std::int64_t>(cfg.pool_max_draws, static_cast<std::int64_t>(64 * per_cell * (cells + nc)));
    while (full < cells && draws_used_ < budget) {
        ChannelDraw d = draw_channel(cfg, codebooks, rng);
        ++draws_used_;
        if (any_.size() < per_cell_)
            any_.push_back(d);
        auto &c = by_coarse_[d.coarse_id];
        if (c.size() < per_cell_)
            c.push_back(d);
        auto &j = joint_[d.coarse_id * num_fine_ + d.fine_id];
        if (j.size() < per_cell_) {
            j.push_back(std::move(d));
            if (j.size() == per_cell_)
                ++full;
        }
    }
}

} // namespace hybridsched
