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

// Simulation versus analytic comparison shared by the Monte Carlo unit tests
// and the acceptance binary.

#pragma once

#include <string>
#include <vector>

#include <boost/math/distributions/poisson.hpp>

#include "hetassoc/hetassoc.hpp"

namespace mc_check {

// Below this many observed events a batch-means interval is not
// trustworthy (a state never entered yields 0 +- 0), so the observed count
// is tested against its Poisson expectation instead.
inline constexpr std::uint64_t kSparseCount = 1000;

struct Comparison {
  std::string quantity;
  std::string key;
  double analytic = 0.0;
  hetassoc::Estimate estimate;
  bool count_test = false;
  bool passed = false;
  bool inside() const { return passed; }
};

// Two-sided exact Poisson p-value of observing k with mean `expected`.
inline double poisson_p_value(std::uint64_t k, double expected) {
  if (expected <= 0.0) return k == 0 ? 1.0 : 0.0;
  const boost::math::poisson_distribution<double> d(expected);
  const double kd = static_cast<double>(k);
  const double lower = boost::math::cdf(d, kd);
  const double upper = k == 0 ? 1.0 : boost::math::cdf(boost::math::complement(d, kd - 1.0));
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

struct Outcome {
  hetassoc::SimReport report;
  std::vector<Comparison> rows;
  int outside = 0;
  double per_estimate_confidence = 0.0;
};

// Runs the simulator and compares every occupancy probability, class
// blocking, per-pair mean volume and entry-state volume with the analytic
// value. Intervals are widened Bonferroni style so that the family as a
// whole holds at `family_confidence`.
inline Outcome run(const hetassoc::StateSpace& space, const hetassoc::AdmissionTable& admission,
                   std::uint64_t events, std::uint64_t seed, double family_confidence = 0.99) {
  using namespace hetassoc;
  const int N = space.num_classes();
  const int S = space.num_systems();
  const auto ss = solve_steady_state(build_generator(space, admission));
  const UtilityTable table(space, admission);
  const auto mean_volume = mean_call_volume(space, admission, ss, table);

  const int family = space.size() + N + N * S + space.size() * N * S;
  Outcome out;
  out.per_estimate_confidence = 1.0 - (1.0 - family_confidence) / family;
  SimOptions opt;
  opt.events = events;
  opt.seed = seed;
  opt.confidence = out.per_estimate_confidence;
  out.report = simulate(space, admission, opt);

  const double alpha = (1.0 - family_confidence) / family;
  const auto gen = build_generator(space, admission);
  const auto add = [&](std::string quantity, std::string key, double analytic, Estimate est,
                       std::uint64_t count, double expected) {
    Comparison c{std::move(quantity), std::move(key), analytic, est};
    c.count_test = count < kSparseCount;
    c.passed = c.count_test ? poisson_p_value(count, expected) >= alpha : est.contains(analytic);
    out.rows.push_back(std::move(c));
  };
  for (int id = 0; id < space.size(); ++id) {
    const double p = ss.pi[static_cast<std::size_t>(id)];
    // Sojourns expected over the run: pi * T * total exit rate.
    add("occupancy", std::to_string(id), p, out.report.occupancy[static_cast<std::size_t>(id)],
        out.report.visits[static_cast<std::size_t>(id)],
        p * out.report.simulated_time * -gen.q.coeff(id, id));
  }
  for (int n = 0; n < N; ++n) {
    const double b = class_blocking(admission, ss, n);
    const auto& est = out.report.blocking[static_cast<std::size_t>(n)];
    add("blocking", std::to_string(n), b, est,
        static_cast<std::uint64_t>(std::llround(est.mean * static_cast<double>(est.samples))),
        b * static_cast<double>(est.samples));
  }
  for (int k = 0; k < N * S; ++k)
    if (!std::isnan(mean_volume[static_cast<std::size_t>(k)]))
      out.rows.push_back({"mean_volume", std::to_string(k), mean_volume[static_cast<std::size_t>(k)],
                          out.report.volume[static_cast<std::size_t>(k)], false,
                          out.report.volume[static_cast<std::size_t>(k)].contains(
                              mean_volume[static_cast<std::size_t>(k)])});
  for (const auto& [key, est] : out.report.entry_volume) {
    const auto [n, s, entry] = key;
    out.rows.push_back({"entry_volume",
                        std::to_string(n) + "/" + std::to_string(s) + "/" + std::to_string(entry),
                        table.volume(entry, n, s), est, false,
                        est.contains(table.volume(entry, n, s))});
  }
  for (const auto& r : out.rows) out.outside += r.inside() ? 0 : 1;
  return out;
}

}  // namespace mc_check
