// Copyright 2026 The SA-DPSGD Authors
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

#include "sadp/accountant.hpp"
#include "sadp/annealer.hpp"
#include "sadp/data.hpp"
#include "sadp/dp_optimizer.hpp"
#include "sadp/error.hpp"
#include "sadp/harness/compare.hpp"
#include "sadp/harness/config.hpp"
#include "sadp/harness/trace.hpp"
#include "sadp/harness/train.hpp"
#include "sadp/models.hpp"
#include "sadp/rng.hpp"
#include "sadp/types.hpp"
