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

#pragma once

#include <string>

#include "hetassoc/hetassoc.hpp"

namespace fixtures {

inline std::string config_path(const std::string& name) {
  return std::string(HETASSOC_CONFIG_DIR) + "/" + name;
}

// One class, one cell: D = 2, t_min = 1, t_max = 2, lambda = mu = 1. At most
// two users fit, so the chain is the Erlang loss system with two servers.
inline hetassoc::NetworkConfig erlang() {
  hetassoc::NetworkConfig cfg;
  cfg.system_names = {"cell"};
  cfg.class_names = {"all"};
  cfg.peak_rate = {{2.0}};
  cfg.t_min = 1.0;
  cfg.t_max = 2.0;
  cfg.arrival_rate = {1.0};
  cfg.service_rate = 1.0;
  cfg.thresholds = {{0.3, 0.7}};
  return cfg;
}

inline hetassoc::NetworkConfig hsdpa_lte() { return hetassoc::load_config_file(config_path("hsdpa_lte.json")); }

inline hetassoc::NetworkConfig two_cell() {
  return hetassoc::load_config_file(config_path("two_cell.json"));
}

// Two identical systems, one class.
inline hetassoc::NetworkConfig twins(double erlangs = 1.5) {
  hetassoc::NetworkConfig cfg;
  cfg.system_names = {"a", "b"};
  cfg.class_names = {"u"};
  cfg.peak_rate = {{2.0, 2.0}};
  cfg.t_min = 1.0;
  cfg.t_max = 2.0;
  cfg.arrival_rate = {erlangs};
  cfg.service_rate = 1.0;
  cfg.thresholds = {{0.3, 0.7}, {0.3, 0.7}};
  return cfg;
}

}  // namespace fixtures
