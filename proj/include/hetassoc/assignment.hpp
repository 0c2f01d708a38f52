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

// Assignment rules: the decision sigma(n, M) taken by an arriving user and
// the admission step that turns it into a target system or a rejection.

#pragma once

#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "hetassoc/config.hpp"
#include "hetassoc/load_aggregation.hpp"
#include "hetassoc/state_space.hpp"

namespace hetassoc {

// Users follow a policy table indexed by the broadcast load label.
struct PolicyRule {
  Policy policy;
  AggregationScheme scheme;
};

// Users join the system with the best peak rate, ignoring load.
struct PeakRateRule {};

// Users see the full occupancy and join the system maximizing D/(1 + k).
struct InstantaneousRateRule {};

using AssignmentRule = std::variant<PolicyRule, PeakRateRule, InstantaneousRateRule>;

// What happens when the preferred system cannot admit the user.
enum class Admission {
  redirect,  // network moves the user to the lowest-index system with room
  strict,    // the call is lost
};

inline constexpr int kReject = -1;

inline std::string fingerprint(const AssignmentRule& rule) {
  return std::visit(
      [](const auto& r) -> std::string {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PolicyRule>)
          return "policy:" + r.policy.to_string() + "@" + r.scheme.to_string();
        else if constexpr (std::is_same_v<T, PeakRateRule>)
          return "peak_rate";
        else
          return "instantaneous_rate";
      },
      rule);
}

inline int best_peak_rate_system(const NetworkConfig& cfg, int n) {
  int best = 0;
  for (int s = 1; s < cfg.num_systems(); ++s)
    if (cfg.peak_rate[n][s] > cfg.peak_rate[n][best]) best = s;
  return best;
}

inline int best_instantaneous_system(const NetworkConfig& cfg, const NetworkState& m, int n) {
  int best = 0;
  double best_rate = -1.0;
  for (int s = 0; s < cfg.num_systems(); ++s) {
    const double estimate = cfg.peak_rate[n][s] / (1.0 + sharing_count(cfg, m, s));
    if (estimate > best_rate) {
      best_rate = estimate;
      best = s;
    }
  }
  return best;
}

// Preferred system of a class-n arrival in state `id`. `labels` is the
// scheme's label table when the rule is a PolicyRule.
inline int preferred_system(const AssignmentRule& rule, const StateSpace& space,
                            const std::vector<int>& labels, int id, int n) {
  return std::visit(
      [&](const auto& r) -> int {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PolicyRule>)
          return r.policy.at(n, labels[static_cast<std::size_t>(id)]);
        else if constexpr (std::is_same_v<T, PeakRateRule>)
          return best_peak_rate_system(space.config(), n);
        else
          return best_instantaneous_system(space.config(), space.state(id), n);
      },
      rule);
}

// Applies admission control to a preference: the preferred system if the
// arrival stays feasible, else (redirect mode) the first other system in
// index order that can take the user, else kReject.
inline int admit(const StateSpace& space, int id, int n, int preferred, Admission mode) {
  if (space.arrival(id, n, preferred) != StateSpace::kNone) return preferred;
  if (mode == Admission::strict) return kReject;
  for (int s = 0; s < space.num_systems(); ++s)
    if (s != preferred && space.arrival(id, n, s) != StateSpace::kNone) return s;
  return kReject;
}

// Admitted system (or kReject) for every (class, state), laid out
// [n * size + id].
class AdmissionTable {
 public:
  AdmissionTable() = default;
  AdmissionTable(const StateSpace& space, const AssignmentRule& rule, Admission mode)
      : AdmissionTable(space, rule, mode,
                       std::holds_alternative<PolicyRule>(rule)
                           ? label_table(std::get<PolicyRule>(rule).scheme, space)
                           : std::vector<int>{}) {}

  AdmissionTable(const StateSpace& space, const AssignmentRule& rule, Admission mode,
                 const std::vector<int>& labels)
      : size_(space.size()), classes_(space.num_classes()) {
    preferred_.resize(static_cast<std::size_t>(size_ * classes_));
    target_.resize(preferred_.size());
    for (int n = 0; n < classes_; ++n)
      for (int id = 0; id < size_; ++id) {
        const int pref = preferred_system(rule, space, labels, id, n);
        preferred_[slot(n, id)] = pref;
        target_[slot(n, id)] = admit(space, id, n, pref, mode);
      }
  }

  int target(int n, int id) const { return target_[slot(n, id)]; }
  int preferred(int n, int id) const { return preferred_[slot(n, id)]; }
  bool blocks(int n, int id) const { return target(n, id) == kReject; }

 private:
  std::size_t slot(int n, int id) const { return static_cast<std::size_t>(n * size_ + id); }

  int size_ = 0;
  int classes_ = 0;
  std::vector<int> preferred_;
  std::vector<int> target_;
};

}  // namespace hetassoc
