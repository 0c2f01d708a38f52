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

// The broadcast map f: state -> aggregated load label.
//
// Each system reports one of three levels. A system's load is the fraction
// of its minimum-rate capacity in use, sum_n M_n^s * t_min / D_n^s, capped at
// one. The level is `low` when load <= low threshold, `medium` when
// load <= high threshold and `high` otherwise. The label index is the level
// vector read as a base-3 number with the first system most significant, so
// index order equals lexicographic order of the level vectors.

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "hetassoc/config.hpp"
#include "hetassoc/state_space.hpp"

namespace hetassoc {

enum class LoadLevel { low = 0, medium = 1, high = 2 };

inline constexpr int kLevels = 3;

// Loads are sums of t_min/D terms; a threshold like 0.3 reached by three
// users at 0.1 must compare as equal.
inline constexpr double kThresholdTol = 1e-9;

inline char level_letter(LoadLevel level) {
  switch (level) {
    case LoadLevel::low:
      return 'L';
    case LoadLevel::medium:
      return 'M';
    case LoadLevel::high:
      return 'H';
  }
  return '?';
}

struct LoadLabel {
  std::vector<LoadLevel> levels;  // one per system
  int index = 0;

  std::string to_string() const {
    std::string out;
    for (LoadLevel lv : levels) out += level_letter(lv);
    return out;
  }
};

inline double system_load(const NetworkConfig& cfg, const NetworkState& m, int s) {
  double load = 0.0;
  for (int n = 0; n < cfg.num_classes(); ++n)
    load += m.count(n, s) * cfg.t_min / cfg.peak_rate[n][s];
  return std::min(1.0, load);
}

class AggregationScheme {
 public:
  AggregationScheme() = default;
  explicit AggregationScheme(std::vector<Thresholds> thresholds)
      : thresholds_(std::move(thresholds)) {
    for (const auto& th : thresholds_)
      if (!(th.low >= 0.0 && th.low <= th.high && th.high <= 1.0))
        throw ValidationError("thresholds must satisfy 0 <= low <= high <= 1");
  }

  static AggregationScheme from_config(const NetworkConfig& cfg) {
    return AggregationScheme(cfg.thresholds);
  }

  int num_systems() const { return static_cast<int>(thresholds_.size()); }
  int num_labels() const {
    int L = 1;
    for (int s = 0; s < num_systems(); ++s) L *= kLevels;
    return L;
  }
  const std::vector<Thresholds>& thresholds() const { return thresholds_; }

  LoadLevel level(double load, int s) const {
    const Thresholds& th = thresholds_[static_cast<std::size_t>(s)];
    if (load <= th.low + kThresholdTol) return LoadLevel::low;
    if (load <= th.high + kThresholdTol) return LoadLevel::medium;
    return LoadLevel::high;
  }

  // "[low,high,low,high,...]" in system order.
  std::string to_string() const {
    std::string out = "[";
    for (std::size_t s = 0; s < thresholds_.size(); ++s) {
      if (s) out += ',';
      out += format_number(thresholds_[s].low) + ',' + format_number(thresholds_[s].high);
    }
    return out + "]";
  }

  friend bool operator==(const AggregationScheme&, const AggregationScheme&) = default;

 private:
  static std::string format_number(double v) {
    std::string text = std::to_string(v);
    text.erase(text.find_last_not_of('0') + 1);
    if (!text.empty() && text.back() == '.') text.pop_back();
    return text;
  }

  std::vector<Thresholds> thresholds_;
};

inline int label_index(const std::vector<LoadLevel>& levels) {
  int index = 0;
  for (LoadLevel lv : levels) index = index * kLevels + static_cast<int>(lv);
  return index;
}

inline LoadLabel label_from_index(int index, int num_systems) {
  LoadLabel label;
  label.index = index;
  label.levels.assign(static_cast<std::size_t>(num_systems), LoadLevel::low);
  for (int s = num_systems - 1; s >= 0; --s) {
    label.levels[static_cast<std::size_t>(s)] = static_cast<LoadLevel>(index % kLevels);
    index /= kLevels;
  }
  return label;
}

inline LoadLabel label_of(const AggregationScheme& scheme, const NetworkConfig& cfg,
                          const NetworkState& m) {
  LoadLabel label;
  for (int s = 0; s < cfg.num_systems(); ++s)
    label.levels.push_back(scheme.level(system_load(cfg, m, s), s));
  label.index = label_index(label.levels);
  return label;
}

// Label index of every state in the space, in id order.
inline std::vector<int> label_table(const AggregationScheme& scheme, const StateSpace& space) {
  std::vector<int> labels(static_cast<std::size_t>(space.size()));
  for (int id = 0; id < space.size(); ++id)
    labels[static_cast<std::size_t>(id)] = label_of(scheme, space.config(), space.state(id)).index;
  return labels;
}

// Labels that contain at least one feasible state.
inline std::vector<bool> structural_label_mask(const std::vector<int>& labels, int num_labels) {
  std::vector<bool> mask(static_cast<std::size_t>(num_labels), false);
  for (int l : labels) mask[static_cast<std::size_t>(l)] = true;
  return mask;
}

}  // namespace hetassoc
