// Copyright 2026 The adutest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace adutest {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (malformed ADU, bad argument).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Topology is inconsistent or an edge is unmapped.
class TopologyError : public Error {
 public:
  using Error::Error;
};

// An ADU exceeded the traversal bound.
class LoopError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent configuration (NF config, run config, faults).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Policy scenario references unknown NFs or context tokens.
class PolicyError : public Error {
 public:
  using Error::Error;
};

// A monitor log cannot be turned into paths.
class CorruptLogError : public Error {
 public:
  using Error::Error;
};

}  // namespace adutest
