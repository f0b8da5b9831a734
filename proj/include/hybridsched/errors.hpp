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

#include <stdexcept>
#include <string>

namespace hybridsched {

// Base of every error thrown by the library. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Rejection sampling could not produce a channel consistent with the requested ids.
class InfeasibleConditioning : public Error {
public:
    using Error::Error;
};

// Resolution precoder norm has a vanishing denominator.
class DegeneratePrecoder : public Error {
public:
    using Error::Error;
};

// |h z| too small to invert inside the effective channel.
class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

// State space does not fit into a 64-bit index.
class TooLarge : public Error {
public:
    TooLarge(const std::string &what, double count) : Error(what), count_(count) {}
    double count() const { return count_; }

private:
    double count_;
};

class SolverError : public Error {
public:
    using Error::Error;
};

class DerandomizationFailure : public Error {
public:
    using Error::Error;
};

class CacheError : public Error {
public:
    using Error::Error;
};

} // namespace hybridsched
