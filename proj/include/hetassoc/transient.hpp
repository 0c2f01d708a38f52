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

// Expected volume delivered by a tagged user over the rest of his call.
//
// The chain is restricted to states holding at least one (n, s) user and
// gets an absorbing state A reached at rate mu when the tagged user leaves.
// The other (n, s) users then leave at (M_n^s - 1) mu, every other rate is
// copied from the rule's generator, and diagonals are unchanged. The volume
// I(M) accumulated before absorption solves
//
//   sum_M' q~(M, M') I(M') = -t_n^s(M),   I(A) = 0.

#pragma once

#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "hetassoc/assignment.hpp"
#include "hetassoc/ctmc.hpp"
#include "hetassoc/state_space.hpp"

namespace hetassoc {

struct TaggedGenerator {
  int tagged_class = 0;
  int tagged_system = 0;
  std::vector<int> ids;         // restricted state ids, increasing
  std::vector<int> local;       // state id -> row, or -1 outside the restriction
  SparseMatrix q;               // q~ over the restricted rows/columns
  std::vector<double> absorb;   // q~(M, A) per row

  int size() const { return static_cast<int>(ids.size()); }
};

inline TaggedGenerator build_tagged_generator(const StateSpace& space,
                                              const AdmissionTable& admission, int n, int s) {
  const auto& cfg = space.config();
  const int N = space.num_classes();
  const int S = space.num_systems();
  const double mu = cfg.service_rate;

  TaggedGenerator tg;
  tg.tagged_class = n;
  tg.tagged_system = s;
  tg.local.assign(static_cast<std::size_t>(space.size()), -1);
  for (int id = 0; id < space.size(); ++id)
    if (space.count(id, n, s) > 0) {
      tg.local[static_cast<std::size_t>(id)] = tg.size();
      tg.ids.push_back(id);
    }

  std::vector<Eigen::Triplet<double>> entries;
  tg.absorb.assign(tg.ids.size(), mu);
  for (int row = 0; row < tg.size(); ++row) {
    const int id = tg.ids[static_cast<std::size_t>(row)];
    double out = 0.0;
    for (int c = 0; c < N; ++c) {
      const int target = admission.target(c, id);
      if (target != kReject && cfg.arrival_rate[c] > 0.0) {
        const int to = tg.local[static_cast<std::size_t>(space.arrival(id, c, target))];
        entries.emplace_back(row, to, cfg.arrival_rate[c]);
        out += cfg.arrival_rate[c];
      }
      for (int r = 0; r < S; ++r) {
        const int count = space.count(id, c, r);
        if (count == 0) continue;
        out += count * mu;
        const int others = (c == n && r == s) ? count - 1 : count;
        if (others == 0) continue;
        const int to = tg.local[static_cast<std::size_t>(space.departure(id, c, r))];
        entries.emplace_back(row, to, others * mu);
      }
    }
    entries.emplace_back(row, row, -out);
  }
  tg.q.resize(tg.size(), tg.size());
  tg.q.setFromTriplets(entries.begin(), entries.end());
  return tg;
}

// I_n^s over the whole space; zero (and masked out) where M_n^s = 0.
struct VolumeTable {
  int tagged_class = 0;
  int tagged_system = 0;
  std::vector<double> volume;  // megabits
  std::vector<bool> defined;
};

inline VolumeTable solve_volume(const StateSpace& space, const TaggedGenerator& tg) {
  const int n = tg.tagged_class;
  const int s = tg.tagged_system;
  VolumeTable table;
  table.tagged_class = n;
  table.tagged_system = s;
  table.volume.assign(static_cast<std::size_t>(space.size()), 0.0);
  table.defined.assign(static_cast<std::size_t>(space.size()), false);
  if (tg.size() == 0) return table;

  Eigen::SparseMatrix<double> a = tg.q;
  a.makeCompressed();
  Eigen::VectorXd rhs(tg.size());
  for (int row = 0; row < tg.size(); ++row)
    rhs(row) = -space.rate(tg.ids[static_cast<std::size_t>(row)], n, s);

  // Absorption at rate mu > 0 from every row makes -q~ strictly diagonally
  // dominant, so a singular system here is a construction bug.
  const Eigen::VectorXd x = direct_solve(a, rhs, "tagged chain");

  Eigen::VectorXd r = a * x - rhs;
  if (r.cwiseAbs().maxCoeff() > kResidualTol * std::max(1.0, x.cwiseAbs().maxCoeff()))
    throw SolverError("tagged-chain residual exceeds tolerance");

  for (int row = 0; row < tg.size(); ++row) {
    const auto id = static_cast<std::size_t>(tg.ids[static_cast<std::size_t>(row)]);
    table.volume[id] = x(row);
    table.defined[id] = true;
  }
  return table;
}

inline VolumeTable solve_volume(const StateSpace& space, const AdmissionTable& admission, int n,
                                int s) {
  return solve_volume(space, build_tagged_generator(space, admission, n, s));
}

// One VolumeTable per (class, system) pair for a single rule.
class UtilityTable {
 public:
  UtilityTable() = default;
  UtilityTable(const StateSpace& space, const AdmissionTable& admission)
      : systems_(space.num_systems()) {
    for (int n = 0; n < space.num_classes(); ++n)
      for (int s = 0; s < space.num_systems(); ++s)
        tables_.push_back(solve_volume(space, admission, n, s));
  }
  // Tables in (n, s) row-major order.
  UtilityTable(int num_systems, std::vector<VolumeTable> tables)
      : systems_(num_systems), tables_(std::move(tables)) {}

  const VolumeTable& volumes(int n, int s) const {
    return tables_[static_cast<std::size_t>(n * systems_ + s)];
  }

  // I_n^s(M) for a state already holding the tagged user.
  double volume(int id, int n, int s) const {
    return volumes(n, s).volume[static_cast<std::size_t>(id)];
  }

 private:
  int systems_ = 0;
  std::vector<VolumeTable> tables_;
};

// u_n^s(M) = I_n^s(G_n^s(M)): what a class-n arrival in state `id` gets by
// joining system s.
inline double arrival_utility(const StateSpace& space, const UtilityTable& table, int id, int n,
                              int s) {
  const int next = space.arrival(id, n, s);
  if (next == StateSpace::kNone)
    throw InfeasibleTargetError("system " + space.config().system_names[s] +
                                " cannot admit a class " + space.config().class_names[n] +
                                " user in state " + space.state(id).to_string());
  return table.volume(next, n, s);
}

// Thread-safe memo of volume tables keyed by (rule fingerprint, n, s).
class VolumeCache {
 public:
  std::shared_ptr<const VolumeTable> get_or_solve(const std::string& rule_key,
                                                  const StateSpace& space,
                                                  const AdmissionTable& admission, int n, int s) {
    const auto key = std::make_tuple(rule_key, n, s);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto table = std::make_shared<const VolumeTable>(solve_volume(space, admission, n, s));
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.emplace(key, std::move(table)).first->second;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::tuple<std::string, int, int>, std::shared_ptr<const VolumeTable>> entries_;
};

// Mean volume of a call admitted to s by class n, averaged over the arrival
// states that send it there (PASTA). Indexed n * S + s; NaN when no
// stationary state routes class n to s.
inline std::vector<double> mean_call_volume(const StateSpace& space,
                                            const AdmissionTable& admission,
                                            const SteadyState& ss, const UtilityTable& table) {
  const int S = space.num_systems();
  std::vector<double> num(static_cast<std::size_t>(space.num_classes() * S), 0.0);
  std::vector<double> den(num.size(), 0.0);
  for (int id = 0; id < space.size(); ++id) {
    const double p = ss.pi[static_cast<std::size_t>(id)];
    if (p == 0.0) continue;
    for (int n = 0; n < space.num_classes(); ++n) {
      const int s = admission.target(n, id);
      if (s == kReject) continue;
      const auto k = static_cast<std::size_t>(n * S + s);
      num[k] += p * arrival_utility(space, table, id, n, s);
      den[k] += p;
    }
  }
  for (std::size_t k = 0; k < num.size(); ++k)
    num[k] = den[k] > 0.0 ? num[k] / den[k] : std::numeric_limits<double>::quiet_NaN();
  return num;
}

// CSV rows "state_id,n,s,volume" for every defined entry.
inline void write_volumes(std::ostream& os, const StateSpace& space, const UtilityTable& table) {
  os.precision(17);
  os << "state_id,class,system,volume_mbit\n";
  for (int n = 0; n < space.num_classes(); ++n)
    for (int s = 0; s < space.num_systems(); ++s) {
      const auto& vt = table.volumes(n, s);
      for (int id = 0; id < space.size(); ++id)
        if (vt.defined[static_cast<std::size_t>(id)])
          os << id << ',' << space.config().class_names[n] << ','
             << space.config().system_names[s] << ',' << vt.volume[static_cast<std::size_t>(id)]
             << '\n';
    }
}

}  // namespace hetassoc
