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
#include "hybridsched/mdp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hybridsched {

inline constexpr std::uint32_t kCacheVersion = 1;

/// A built model with everything it was derived from.
struct ModelBundle {
    SystemConfig cfg;
    Codebooks codebooks;
    ConditionalModel cond;
    MdpModel model;
};

// Codebooks (stream 0), conditional model (stream 1), pools and reward tables.
ModelBundle build_bundle(const SystemConfig &cfg);

/// Versioned little-endian binary image: magic, version, config and codebook hashes,
/// the config text, codebooks, conditional model, reward tables, then an FNV-1a
/// checksum of everything before it.
std::vector<unsigned char> serialize_bundle(const ModelBundle &b);
ModelBundle deserialize_bundle(const std::vector<unsigned char> &bytes);

// Refuses to overwrite an existing file.
void write_model_cache(const std::string &path, const ModelBundle &b);

/// Throws CacheError on a bad checksum, version or hash; when `expected` is given its
/// hash must match the stored configuration too.
ModelBundle read_model_cache(const std::string &path, const SystemConfig *expected = nullptr);

std::uint64_t bundle_checksum(const ModelBundle &b);

} // namespace hybridsched
