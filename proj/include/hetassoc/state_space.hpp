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

#include <algorithm>
#include <cstddef>
#include <deque>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "hetassoc/config.hpp"

namespace hetassoc {

inline constexpr std::size_t kDefaultStateCeiling = 1'000'000;

// Relative slack on the t_min comparison so that exact boundary states such
// as D/k == t_min are not lost to rounding in D * gain / k.
inline constexpr double kFeasibilityRelTol = 1e-12;

// Number of users sharing with a user of system s under the config's scope.
inline int sharing_count(const NetworkConfig& cfg, const NetworkState& m, int s) {
  return cfg.sharing_scope == SharingScope::per_system ? m.system_total(s) : m.total();
}

// Instantaneous throughput of a class-n user in system s. The user must
// already be counted in `m`.
inline double throughput(const NetworkConfig& cfg, const NetworkState& m, int n, int s) {
  const int k = std::max(1, sharing_count(cfg, m, s));
  return std::min(cfg.peak_rate[n][s] * cfg.gain(k) / k, cfg.t_max);
}

// Admission constraint: every active user receives at least t_min.
inline bool is_feasible(const NetworkConfig& cfg, const NetworkState& m) {
  const double floor = cfg.t_min * (1.0 - kFeasibilityRelTol);
  for (int s = 0; s < cfg.num_systems(); ++s)
    for (int n = 0; n < cfg.num_classes(); ++n) {
      if (m.count(n, s) < 0) return false;
      if (m.count(n, s) > 0 && throughput(cfg, m, n, s) < floor) return false;
    }
  return true;
}

// The materialized feasible space with dense ids in lexicographic order of
// the occupancy vector, plus precomputed neighbour and throughput tables.
class StateSpace {
 public:
  static constexpr int kNone = -1;

  const NetworkConfig& config() const { return config_; }
  int size() const { return static_cast<int>(states_.size()); }
  int num_classes() const { return config_.num_classes(); }
  int num_systems() const { return config_.num_systems(); }
  int num_pairs() const { return num_classes() * num_systems(); }
  int pair(int n, int s) const { return n * num_systems() + s; }

  const std::vector<NetworkState>& states() const { return states_; }
  const NetworkState& state(int id) const { return states_[static_cast<std::size_t>(id)]; }

  // Dense id of `m`, or kNone if it is not in the space.
  int index_of(const NetworkState& m) const {
    auto it = std::lower_bound(states_.begin(), states_.end(), m);
    return (it != states_.end() && *it == m) ? static_cast<int>(it - states_.begin()) : kNone;
  }
  bool contains(const NetworkState& m) const { return index_of(m) != kNone; }

  // Id of G_n^s(M), or kNone when the arrival would leave the space.
  int arrival(int id, int n, int s) const { return arrival_[flat(id, n, s)]; }
  // Id of D_n^s(M), or kNone when M_n^s = 0.
  int departure(int id, int n, int s) const { return departure_[flat(id, n, s)]; }
  // t_n^s(M) when M_n^s > 0, otherwise 0.
  double rate(int id, int n, int s) const { return rate_[flat(id, n, s)]; }

  int count(int id, int n, int s) const { return state(id).count(n, s); }
  int zero_state() const { return 0; }

  friend StateSpace enumerate(const NetworkConfig& cfg, std::size_t ceiling);

 private:
  std::size_t flat(int id, int n, int s) const {
    return static_cast<std::size_t>(id) * static_cast<std::size_t>(num_pairs()) +
           static_cast<std::size_t>(pair(n, s));
  }

  NetworkConfig config_;
  std::vector<NetworkState> states_;
  std::vector<int> arrival_;
  std::vector<int> departure_;
  std::vector<double> rate_;
};

// Breadth-first closure of the zero state under single admissible arrivals.
inline StateSpace enumerate(const NetworkConfig& cfg,
                            std::size_t ceiling = kDefaultStateCeiling) {
  const int N = cfg.num_classes();
  const int S = cfg.num_systems();
  std::set<NetworkState> seen;
  std::deque<NetworkState> frontier;
  NetworkState zero(N, S);
  seen.insert(zero);
  frontier.push_back(zero);
  while (!frontier.empty()) {
    const NetworkState m = frontier.front();
    frontier.pop_front();
    for (int s = 0; s < S; ++s)
      for (int n = 0; n < N; ++n) {
        NetworkState next = m.with_arrival(n, s);
        if (seen.count(next) || !is_feasible(cfg, next)) continue;
        if (seen.size() >= ceiling)
          throw CapacityError("feasible state space exceeds the ceiling of " +
                              std::to_string(ceiling) + " states");
        seen.insert(next);
        frontier.push_back(std::move(next));
      }
  }

  StateSpace space;
  space.config_ = cfg;
  space.states_.assign(seen.begin(), seen.end());
  const std::size_t P = static_cast<std::size_t>(N * S);
  const std::size_t total = space.states_.size() * P;
  space.arrival_.assign(total, StateSpace::kNone);
  space.departure_.assign(total, StateSpace::kNone);
  space.rate_.assign(total, 0.0);
  for (int id = 0; id < space.size(); ++id) {
    const NetworkState& m = space.state(id);
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s) {
        const std::size_t k = space.flat(id, n, s);
        space.arrival_[k] = space.index_of(m.with_arrival(n, s));
        if (m.count(n, s) > 0) {
          space.departure_[k] = space.index_of(m.with_departure(n, s));
          space.rate_[k] = throughput(cfg, m, n, s);
        }
      }
  }
  return space;
}

// CSV table: id, M_1^1 .. M_N^S, then t_n^s per (n, s) (0 where M_n^s = 0).
inline void write_state_table(std::ostream& os, const StateSpace& space) {
  const auto& cfg = space.config();
  os << "id";
  for (int s = 0; s < space.num_systems(); ++s)
    for (int n = 0; n < space.num_classes(); ++n)
      os << ",M_" << cfg.class_names[n] << '_' << cfg.system_names[s];
  for (int s = 0; s < space.num_systems(); ++s)
    for (int n = 0; n < space.num_classes(); ++n)
      os << ",t_" << cfg.class_names[n] << '_' << cfg.system_names[s];
  os << '\n';
  for (int id = 0; id < space.size(); ++id) {
    os << id;
    for (int v : space.state(id).occupancy()) os << ',' << v;
    for (int s = 0; s < space.num_systems(); ++s)
      for (int n = 0; n < space.num_classes(); ++n) os << ',' << space.rate(id, n, s);
    os << '\n';
  }
}

}  // namespace hetassoc
