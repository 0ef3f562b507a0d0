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

#include "adutest/adu.hpp"
#include "adutest/errors.hpp"
#include "adutest/harness.hpp"
#include "adutest/network.hpp"
#include "adutest/nf.hpp"
#include "adutest/nf_library.hpp"
#include "adutest/pipeline.hpp"
#include "adutest/planner.hpp"
#include "adutest/policy.hpp"
#include "adutest/topology.hpp"
#include "adutest/translator.hpp"
#include "adutest/validator.hpp"
