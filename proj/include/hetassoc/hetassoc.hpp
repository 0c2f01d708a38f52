// Copyright 2026 The hetassoc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#pragma once

#include "hetassoc/assignment.hpp"
#include "hetassoc/config.hpp"
#include "hetassoc/ctmc.hpp"
#include "hetassoc/errors.hpp"
#include "hetassoc/load_aggregation.hpp"
#include "hetassoc/monte_carlo.hpp"
#include "hetassoc/parallel.hpp"
#include "hetassoc/policy_game.hpp"
#include "hetassoc/report.hpp"
#include "hetassoc/state_space.hpp"
#include "hetassoc/threshold_control.hpp"
#include "hetassoc/transient.hpp"
