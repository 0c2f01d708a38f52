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

// Generator construction, stationary distribution and blocking metrics for
// the association CTMC.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "hetassoc/assignment.hpp"
#include "hetassoc/state_space.hpp"

namespace hetassoc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline constexpr double kResidualTol = 1e-10;
inline constexpr double kNormalizationTol = 1e-12;

// Below this order a dense partial-pivoting LU is several times faster than
// the supernodal sparse factorization.
inline constexpr int kDenseSolveLimit = 400;

// Direct solve of a x = b; throws SolverError when `a` is singular.
inline Eigen::VectorXd direct_solve(const Eigen::SparseMatrix<double>& a,
                                    const Eigen::VectorXd& b, const char* what) {
  if (a.rows() <= kDenseSolveLimit) {
    const Eigen::MatrixXd dense(a);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
    Eigen::VectorXd x = lu.solve(b);
    if (!x.allFinite()) throw SolverError(std::string(what) + " is singular");
    return x;
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success)
    throw SolverError(std::string(what) + " is singular: " + lu.lastErrorMessage());
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success) throw SolverError(std::string(what) + ": solve failed");
  return x;
}

struct Generator {
  SparseMatrix q;  // q(M, M') over dense ids; rows sum to zero

  int size() const { return static_cast<int>(q.rows()); }
};

// Arrival edges follow the admission table; departures of class (n, s)
// leave at rate M_n^s * mu; the diagonal balances each row.
inline Generator build_generator(const StateSpace& space, const AdmissionTable& admission) {
  const auto& cfg = space.config();
  const int N = space.num_classes();
  const int S = space.num_systems();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(space.size()) * (2 * N * S + 1));
  for (int id = 0; id < space.size(); ++id) {
    double out = 0.0;
    for (int n = 0; n < N; ++n) {
      const int s = admission.target(n, id);
      if (s != kReject && cfg.arrival_rate[n] > 0.0) {
        entries.emplace_back(id, space.arrival(id, n, s), cfg.arrival_rate[n]);
        out += cfg.arrival_rate[n];
      }
      for (int r = 0; r < S; ++r) {
        const int c = space.count(id, n, r);
        if (c == 0) continue;
        const double rate = c * cfg.service_rate;
        entries.emplace_back(id, space.departure(id, n, r), rate);
        out += rate;
      }
    }
    entries.emplace_back(id, id, -out);
  }
  Generator gen;
  gen.q.resize(space.size(), space.size());
  gen.q.setFromTriplets(entries.begin(), entries.end());
  return gen;
}

inline Generator build_generator(const StateSpace& space, const AssignmentRule& rule,
                                 Admission mode = Admission::redirect) {
  return build_generator(space, AdmissionTable(space, rule, mode));
}

struct SteadyState {
  std::vector<double> pi;       // stationary probability per state id
  std::vector<bool> reachable;  // recurrent class of the zero state
  double residual = 0.0;        // max-norm of pi * Q
};

// States reachable from the zero state along positive-rate edges. Every
// state reaches the zero state through departures, so this set is the
// unique closed class and all other states are transient.
inline std::vector<bool> reachable_from_zero(const Generator& gen) {
  std::vector<bool> seen(static_cast<std::size_t>(gen.size()), false);
  std::vector<int> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const int row = stack.back();
    stack.pop_back();
    for (SparseMatrix::InnerIterator it(gen.q, row); it; ++it) {
      const auto col = static_cast<std::size_t>(it.col());
      if (it.col() != row && it.value() > 0.0 && !seen[col]) {
        seen[col] = true;
        stack.push_back(static_cast<int>(it.col()));
      }
    }
  }
  return seen;
}

inline double balance_residual(const Generator& gen, const std::vector<double>& pi) {
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(pi.data(), gen.size());
  Eigen::VectorXd r = gen.q.transpose() * x;
  return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

// Solves pi * Q = 0, sum(pi) = 1 on the closed class of the zero state by
// replacing the zero state's balance equation with the normalization row.
// Transient states get probability zero.
inline SteadyState solve_steady_state(const Generator& gen) {
  SteadyState ss;
  ss.reachable = reachable_from_zero(gen);
  std::vector<int> local(static_cast<std::size_t>(gen.size()), -1);
  std::vector<int> ids;
  for (int id = 0; id < gen.size(); ++id)
    if (ss.reachable[static_cast<std::size_t>(id)]) {
      local[static_cast<std::size_t>(id)] = static_cast<int>(ids.size());
      ids.push_back(id);
    }
  const int R = static_cast<int>(ids.size());

  // A = Q_R^T with row 0 (the zero state) replaced by ones.
  std::vector<Eigen::Triplet<double>> entries;
  for (int i = 0; i < R; ++i) {
    const int row = ids[static_cast<std::size_t>(i)];
    for (SparseMatrix::InnerIterator it(gen.q, row); it; ++it) {
      const int j = local[static_cast<std::size_t>(it.col())];
      if (j > 0) entries.emplace_back(j, i, it.value());
    }
    entries.emplace_back(0, i, 1.0);
  }
  Eigen::SparseMatrix<double> a(R, R);
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(R);
  rhs(0) = 1.0;

  const Eigen::VectorXd x = direct_solve(a, rhs, "steady-state system");

  ss.pi.assign(static_cast<std::size_t>(gen.size()), 0.0);
  double total = 0.0;
  for (int i = 0; i < R; ++i) {
    double p = x(i);
    if (p < 0.0) {
      if (p < -kResidualTol) throw SolverError("steady-state solve produced a negative mass");
      p = 0.0;
    }
    ss.pi[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])] = p;
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw SolverError("steady-state normalization drifted");
  for (double& p : ss.pi) p /= total;
  ss.residual = balance_residual(gen, ss.pi);
  if (!(ss.residual <= kResidualTol))
    throw SolverError("steady-state residual " + std::to_string(ss.residual) +
                      " exceeds tolerance");
  return ss;
}

// m_l = sum of pi over the states of each label.
inline std::vector<double> label_masses(const SteadyState& ss, const std::vector<int>& labels,
                                        int num_labels) {
  std::vector<double> mass(static_cast<std::size_t>(num_labels), 0.0);
  for (std::size_t id = 0; id < ss.pi.size(); ++id)
    mass[static_cast<std::size_t>(labels[id])] += ss.pi[id];
  return mass;
}

// Labels that the closed class never visits.
inline std::vector<bool> empty_labels(const SteadyState& ss, const std::vector<int>& labels,
                                      int num_labels) {
  std::vector<bool> empty(static_cast<std::size_t>(num_labels), true);
  for (std::size_t id = 0; id < ss.pi.size(); ++id)
    if (ss.reachable[id] && ss.pi[id] > 0.0) empty[static_cast<std::size_t>(labels[id])] = false;
  return empty;
}

enum class BlockingNumerator {
  label_restricted,  // blocking states inside the label only: a conditional probability
  verbatim,          // every blocking state, divided by the label mass
};

struct LabelBlocking {
  std::vector<double> rate;  // b_n(l)
  std::vector<bool> empty;   // labels with zero mass (rate reported as 0)
};

inline LabelBlocking blocking_by_label(const AdmissionTable& admission,
                                       const std::vector<int>& labels, int num_labels,
                                       const SteadyState& ss, int n,
                                       BlockingNumerator numerator =
                                           BlockingNumerator::label_restricted) {
  LabelBlocking out;
  out.empty = empty_labels(ss, labels, num_labels);
  const auto mass = label_masses(ss, labels, num_labels);
  std::vector<double> blocked(static_cast<std::size_t>(num_labels), 0.0);
  double blocked_anywhere = 0.0;
  for (std::size_t id = 0; id < ss.pi.size(); ++id) {
    if (!admission.blocks(n, static_cast<int>(id))) continue;
    blocked[static_cast<std::size_t>(labels[id])] += ss.pi[id];
    blocked_anywhere += ss.pi[id];
  }
  out.rate.assign(static_cast<std::size_t>(num_labels), 0.0);
  for (std::size_t l = 0; l < out.rate.size(); ++l) {
    if (out.empty[l]) continue;
    const double num = numerator == BlockingNumerator::verbatim ? blocked_anywhere : blocked[l];
    out.rate[l] = num / mass[l];
  }
  return out;
}

// Probability that an arriving class-n call is blocked (PASTA).
inline double class_blocking(const AdmissionTable& admission, const SteadyState& ss, int n) {
  double b = 0.0;
  for (std::size_t id = 0; id < ss.pi.size(); ++id)
    if (admission.blocks(n, static_cast<int>(id))) b += ss.pi[id];
  return b;
}

// Arrival-weighted blocking over all classes.
inline double overall_blocking(const StateSpace& space, const SteadyState& ss,
                               const AdmissionTable& admission) {
  const auto& cfg = space.config();
  const double total = cfg.total_arrival_rate();
  double b = 0.0;
  for (int n = 0; n < space.num_classes(); ++n)
    b += cfg.arrival_rate[n] / total * class_blocking(admission, ss, n);
  return b;
}

// Coordinate triplets "row col rate", one per nonzero.
inline void write_generator_triplets(std::ostream& os, const Generator& gen) {
  os.precision(17);
  for (int row = 0; row < gen.size(); ++row)
    for (SparseMatrix::InnerIterator it(gen.q, row); it; ++it)
      os << row << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace hetassoc
