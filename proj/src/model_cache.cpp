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

#include "hybridsched/model_cache.hpp"

#include "hybridsched/errors.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace hybridsched {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'H', 'S', 'C', 'H', 'E', 'D', 'M', '1'};

class Writer {
public:
    std::vector<unsigned char> bytes;

    template <class T> void pod(const T &v) {
        const auto *p = reinterpret_cast<const unsigned char *>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void u64(std::uint64_t v) { pod(v); }
    void f64(double v) { pod(v); }
    void str(const std::string &s) {
        u64(s.size());
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
    void doubles(const std::vector<double> &v) {
        u64(v.size());
        for (double x : v)
            f64(x);
    }
    void codebook(const Codebook &cb) {
        u64(static_cast<std::uint64_t>(cb.kind));
        u64(static_cast<std::uint64_t>(cb.bits));
        u64(cb.size());
        u64(cb.dim());
        for (const CVector &d : cb.directions)
            for (Eigen::Index m = 0; m < d.size(); ++m) {
                f64(d(m).real());
                f64(d(m).imag());
            }
        doubles(cb.norm_levels);
    }
};

class Reader {
public:
    explicit Reader(const std::vector<unsigned char> &b, std::size_t end) : bytes_(b), end_(end) {}

    template <class T> T pod() {
        if (pos_ + sizeof(T) > end_)
            throw CacheError("model cache truncated");
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::uint64_t u64() { return pod<std::uint64_t>(); }
    double f64() { return pod<double>(); }
    std::uint64_t count(std::uint64_t limit) {
        const std::uint64_t n = u64();
        if (n > limit)
            throw CacheError("model cache holds an implausible length");
        return n;
    }
    std::string str() {
        const std::uint64_t n = count(end_ - pos_);
        std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }
    std::vector<double> doubles() {
        const std::uint64_t n = count((end_ - pos_) / 8);
        std::vector<double> v(n);
        for (double &x : v)
            x = f64();
        return v;
    }
    Codebook codebook() {
        Codebook cb;
        cb.kind = static_cast<CodebookKind>(u64());
        cb.bits = static_cast<int>(u64());
        const std::uint64_t n = count((end_ - pos_) / 16);
        const std::uint64_t dim = count(kMaxDim);
        cb.directions.resize(n);
        for (CVector &d : cb.directions) {
            d.resize(static_cast<Eigen::Index>(dim));
            for (Eigen::Index m = 0; m < d.size(); ++m) {
                const double re = f64();
                const double im = f64();
                d(m) = cplx(re, im);
            }
        }
        cb.norm_levels = doubles();
        return cb;
    }
    bool done() const { return pos_ == end_; }

private:
    const std::vector<unsigned char> &bytes_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

} // namespace

ModelBundle build_bundle(const SystemConfig &cfg) {
    cfg.validate();
    ModelBundle b;
    b.cfg = cfg;
    // The state-space check runs first so that oversized configurations fail fast.
    (void)build_state_space(cfg);
    b.codebooks = build_codebooks(cfg);
    RngStream rng(cfg.seed, 1);
    b.cond = estimate_conditional_model(cfg, b.codebooks, rng);
    b.model = build_model(cfg, b.codebooks, b.cond);
    return b;
}

std::vector<unsigned char> serialize_bundle(const ModelBundle &b) {
    Writer w;
    w.bytes.insert(w.bytes.end(), std::begin(kMagic), std::end(kMagic));
    w.pod(kCacheVersion);
    w.u64(config_hash(b.cfg));
    w.u64(b.codebooks.coarse.hash());
    w.u64(b.codebooks.fine.hash());
    w.str(to_json(b.cfg).dump());
    w.codebook(b.codebooks.coarse);
    w.codebook(b.codebooks.fine);
    w.u64(b.cond.num_coarse);
    w.u64(b.cond.num_fine);
    w.doubles(b.cond.pi_coarse);
    w.doubles(b.cond.p_fine_given_coarse);
    w.u64(b.cond.zero_support.size());
    for (bool z : b.cond.zero_support)
        w.pod(static_cast<std::uint8_t>(z));
    const RewardTables &t = b.model.rewards();
    w.u64(t.num_coarse());
    w.u64(t.num_fine());
    w.pod(static_cast<std::uint8_t>(t.ignores_current()));
    w.u64(t.pair_table().size());
    for (const auto &r : t.pair_table()) {
        w.f64(r[0]);
        w.f64(r[1]);
    }
    for (std::uint8_t f : t.feasible_table())
        w.pod(f);
    w.u64(t.oneshot_table().size());
    for (const auto &r : t.oneshot_table()) {
        w.f64(r[0]);
        w.f64(r[1]);
    }
    const std::uint64_t sum = fnv1a64(std::span<const unsigned char>(w.bytes));
    w.u64(sum);
    return w.bytes;
}

ModelBundle deserialize_bundle(const std::vector<unsigned char> &bytes) {
    if (bytes.size() < sizeof(kMagic) + 8)
        throw CacheError("model cache too short");
    const std::size_t body = bytes.size() - 8;
    std::uint64_t stored_sum;
    std::memcpy(&stored_sum, bytes.data() + body, 8);
    if (fnv1a64(std::span<const unsigned char>(bytes.data(), body)) != stored_sum)
        throw CacheError("model cache checksum mismatch");
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw CacheError("not a model cache file");
    Reader r(bytes, body);
    for (std::size_t i = 0; i < sizeof(kMagic); ++i)
        (void)r.pod<char>();
    const auto version = r.pod<std::uint32_t>();
    if (version != kCacheVersion)
        throw CacheError("model cache version " + std::to_string(version) + " is not supported");
    const std::uint64_t cfg_hash = r.u64();
    const std::uint64_t coarse_hash = r.u64();
    const std::uint64_t fine_hash = r.u64();

    ModelBundle b;
    try {
        b.cfg = system_config_from_json(nlohmann::json::parse(r.str()));
    } catch (const nlohmann::json::exception &e) {
        throw CacheError(std::string("model cache holds an unreadable configuration: ") + e.what());
    }
    if (config_hash(b.cfg) != cfg_hash)
        throw CacheError("model cache configuration hash mismatch");
    b.codebooks.coarse = r.codebook();
    b.codebooks.fine = r.codebook();
    if (b.codebooks.coarse.hash() != coarse_hash || b.codebooks.fine.hash() != fine_hash)
        throw CacheError("model cache codebook hash mismatch");
    b.cond.num_coarse = r.u64();
    b.cond.num_fine = r.u64();
    b.cond.pi_coarse = r.doubles();
    b.cond.p_fine_given_coarse = r.doubles();
    const std::uint64_t nz = r.count(b.cond.num_coarse);
    for (std::uint64_t i = 0; i < nz; ++i)
        b.cond.zero_support.push_back(r.pod<std::uint8_t>() != 0);

    const std::uint64_t nc = r.u64();
    const std::uint64_t nf = r.u64();
    const bool ignore = r.pod<std::uint8_t>() != 0;
    if (nc != b.codebooks.coarse.size() || nf != b.codebooks.fine.size() || b.cond.num_coarse != nc ||
        b.cond.num_fine != nf || b.cond.pi_coarse.size() != nc || b.cond.p_fine_given_coarse.size() != nc * nf)
        throw CacheError("model cache tables disagree with the codebooks");
    RewardTables tables(nc, nf, ignore);
    if (r.u64() != tables.pair_table().size())
        throw CacheError("model cache reward table has the wrong size");
    for (auto &v : tables.pair_table()) {
        v[0] = r.f64();
        v[1] = r.f64();
    }
    for (auto &f : tables.feasible_table())
        f = r.pod<std::uint8_t>();
    if (r.u64() != tables.oneshot_table().size())
        throw CacheError("model cache one-shot table has the wrong size");
    for (auto &v : tables.oneshot_table()) {
        v[0] = r.f64();
        v[1] = r.f64();
    }
    if (!r.done())
        throw CacheError("model cache has trailing bytes");
    b.model = MdpModel(b.cfg, StateSpace(b.cfg), build_actions(b.cfg), b.cond, std::move(tables));
    return b;
}

void write_model_cache(const std::string &path, const ModelBundle &b) {
    if (std::filesystem::exists(path))
        throw CacheError("refusing to overwrite existing cache " + path);
    const std::vector<unsigned char> bytes = serialize_bundle(b);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw CacheError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw CacheError("failed writing " + path);
}

ModelBundle read_model_cache(const std::string &path, const SystemConfig *expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CacheError("cannot open model cache " + path);
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ModelBundle b = deserialize_bundle(bytes);
    if (expected && config_hash(*expected) != config_hash(b.cfg))
        throw CacheError("model cache was built from a different configuration");
    return b;
}

std::uint64_t bundle_checksum(const ModelBundle &b) {
    const std::vector<unsigned char> bytes = serialize_bundle(b);
    std::uint64_t sum;
    std::memcpy(&sum, bytes.data() + bytes.size() - 8, 8);
    return sum;
}

} // namespace hybridsched
