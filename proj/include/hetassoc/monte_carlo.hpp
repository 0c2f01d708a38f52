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

// Discrete-event simulator of the association system. It shares only the
// state-space tables and the admission decision with the analytic solver;
// dynamics, sojourn volumes and blocking are measured directly.

#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "hetassoc/assignment.hpp"
#include "hetassoc/state_space.hpp"

namespace hetassoc {

inline constexpr std::uint64_t kMinReliableEvents = 100000;

// Batch-means estimate with a two-sided confidence interval.
struct Estimate {
  double mean = 0.0;
  double half_width = std::numeric_limits<double>::infinity();
  int batches = 0;          // batches that contributed
  std::uint64_t samples = 0;

  double low() const { return mean - half_width; }
  double high() const { return mean + half_width; }
  bool contains(double x) const { return x >= low() && x <= high(); }
};

struct SimOptions {
  std::uint64_t events = 1000000;
  std::uint64_t seed = 1;
  int batches = 20;
  double confidence = 0.99;
};

struct SimReport {
  std::uint64_t seed = 0;
  std::uint64_t events = 0;
  int batches = 0;
  double confidence = 0.0;
  double simulated_time = 0.0;
  std::uint64_t arrivals = 0;
  std::uint64_t blocked = 0;
  std::uint64_t departures = 0;
  std::vector<Estimate> occupancy;  // per state id, time-weighted
  std::vector<std::uint64_t> visits;  // sojourns started in each state
  std::vector<Estimate> blocking;   // per class, fraction of arrivals lost
  std::vector<Estimate> volume;     // per (n, s) pair n * S + s, megabits per call
  // Mean volume of calls whose admission put the system in `entry` state,
  // keyed by (n, s, entry id). Comparable with I_n^s(entry).
  std::map<std::tuple<int, int, int>, Estimate> entry_volume;
  std::vector<std::string> warnings;
};

namespace detail {

// Sample variance of per-batch means turned into a Student-t interval. Only
// batches with `weight > 0` count; point estimate is supplied by the caller.
inline double batch_half_width(const std::vector<double>& means, const std::vector<double>& weight,
                               double confidence, int* used) {
  double sum = 0.0;
  int k = 0;
  for (std::size_t b = 0; b < means.size(); ++b)
    if (weight[b] > 0.0) {
      sum += means[b];
      ++k;
    }
  *used = k;
  if (k < 2) return std::numeric_limits<double>::infinity();
  const double avg = sum / k;
  double ss = 0.0;
  for (std::size_t b = 0; b < means.size(); ++b)
    if (weight[b] > 0.0) ss += (means[b] - avg) * (means[b] - avg);
  const double sd = std::sqrt(ss / (k - 1));
  const boost::math::students_t dist(k - 1);
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
  return t * sd / std::sqrt(static_cast<double>(k));
}

struct RatioAccumulator {
  std::vector<double> num;
  std::vector<double> den;
  explicit RatioAccumulator(int batches = 0)
      : num(static_cast<std::size_t>(batches), 0.0), den(static_cast<std::size_t>(batches), 0.0) {}

  Estimate finish(double confidence) const {
    Estimate e;
    double total_num = 0.0;
    double total_den = 0.0;
    std::vector<double> means(num.size(), 0.0);
    for (std::size_t b = 0; b < num.size(); ++b) {
      total_num += num[b];
      total_den += den[b];
      if (den[b] > 0.0) means[b] = num[b] / den[b];
    }
    e.mean = total_den > 0.0 ? total_num / total_den : 0.0;
    e.half_width = batch_half_width(means, den, confidence, &e.batches);
    return e;
  }
};

}  // namespace detail

// Simulates `options.events` events (arrivals, including blocked ones, and
// departures) of the chain driven by `admission`. Deterministic given the
// seed.
inline SimReport simulate(const StateSpace& space, const AdmissionTable& admission,
                          const SimOptions& options) {
  const auto& cfg = space.config();
  const int N = space.num_classes();
  const int S = space.num_systems();
  const int B = std::max(2, options.batches);
  const double mu = cfg.service_rate;
  const double arrival_total = cfg.total_arrival_rate();

  SimReport report;
  report.seed = options.seed;
  report.events = options.events;
  report.batches = B;
  report.confidence = options.confidence;
  if (options.events < kMinReliableEvents)
    report.warnings.push_back("horizon below " + std::to_string(kMinReliableEvents) +
                              " events; confidence intervals are unreliable");

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct ActiveUser {
    int entry;
    int batch;
    double start_credit;
  };
  std::vector<std::vector<ActiveUser>> active(static_cast<std::size_t>(N * S));
  // credit[n*S+s]: volume a (n, s) user present since t = 0 would have sent.
  std::vector<double> credit(static_cast<std::size_t>(N * S), 0.0);

  std::vector<std::vector<double>> state_time(static_cast<std::size_t>(space.size()),
                                              std::vector<double>(static_cast<std::size_t>(B), 0.0));
  std::vector<double> batch_time(static_cast<std::size_t>(B), 0.0);
  std::vector<detail::RatioAccumulator> blocked(static_cast<std::size_t>(N),
                                                detail::RatioAccumulator(B));
  std::vector<detail::RatioAccumulator> volume(static_cast<std::size_t>(N * S),
                                               detail::RatioAccumulator(B));
  std::map<std::tuple<int, int, int>, detail::RatioAccumulator> entry_volume;

  int id = space.zero_state();
  int users = 0;
  report.visits.assign(static_cast<std::size_t>(space.size()), 0);
  ++report.visits[static_cast<std::size_t>(id)];
  for (std::uint64_t k = 0; k < options.events; ++k) {
    const int batch = static_cast<int>(k * static_cast<std::uint64_t>(B) / options.events);
    const double total_rate = arrival_total + users * mu;
    const double dt = -std::log1p(-unit(rng)) / total_rate;
    report.simulated_time += dt;
    state_time[static_cast<std::size_t>(id)][static_cast<std::size_t>(batch)] += dt;
    batch_time[static_cast<std::size_t>(batch)] += dt;
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s)
        if (space.count(id, n, s) > 0)
          credit[static_cast<std::size_t>(n * S + s)] += space.rate(id, n, s) * dt;

    double x = unit(rng) * total_rate;
    if (x < arrival_total) {
      int n = N - 1;
      for (int c = 0; c < N; ++c) {
        if (x < cfg.arrival_rate[c]) {
          n = c;
          break;
        }
        x -= cfg.arrival_rate[c];
      }
      ++report.arrivals;
      auto& acc = blocked[static_cast<std::size_t>(n)];
      acc.den[static_cast<std::size_t>(batch)] += 1.0;
      const int s = admission.target(n, id);
      if (s == kReject) {
        ++report.blocked;
        acc.num[static_cast<std::size_t>(batch)] += 1.0;
        continue;
      }
      id = space.arrival(id, n, s);
      ++report.visits[static_cast<std::size_t>(id)];
      ++users;
      active[static_cast<std::size_t>(n * S + s)].push_back(
          {id, batch, credit[static_cast<std::size_t>(n * S + s)]});
      continue;
    }

    x -= arrival_total;
    int pick_n = 0;
    int pick_s = 0;
    bool chosen = false;
    for (int n = 0; n < N && !chosen; ++n)
      for (int s = 0; s < S; ++s) {
        const double rate = space.count(id, n, s) * mu;
        if (x < rate) {
          pick_n = n;
          pick_s = s;
          chosen = true;
          break;
        }
        x -= rate;
      }
    if (!chosen) {
      // Rounding at the top of the range: take the last occupied pair.
      for (int n = 0; n < N; ++n)
        for (int s = 0; s < S; ++s)
          if (space.count(id, n, s) > 0) {
            pick_n = n;
            pick_s = s;
          }
    }
    auto& pool = active[static_cast<std::size_t>(pick_n * S + pick_s)];
    std::uniform_int_distribution<std::size_t> which(0, pool.size() - 1);
    const std::size_t victim = which(rng);
    const ActiveUser user = pool[victim];
    pool[victim] = pool.back();
    pool.pop_back();
    const double sent = credit[static_cast<std::size_t>(pick_n * S + pick_s)] - user.start_credit;
    const auto ub = static_cast<std::size_t>(user.batch);
    auto& vol = volume[static_cast<std::size_t>(pick_n * S + pick_s)];
    vol.num[ub] += sent;
    vol.den[ub] += 1.0;
    auto [it, inserted] = entry_volume.try_emplace({pick_n, pick_s, user.entry},
                                                   detail::RatioAccumulator(B));
    it->second.num[ub] += sent;
    it->second.den[ub] += 1.0;
    ++report.departures;
    id = space.departure(id, pick_n, pick_s);
    ++report.visits[static_cast<std::size_t>(id)];
    --users;
  }

  report.occupancy.resize(static_cast<std::size_t>(space.size()));
  for (int i = 0; i < space.size(); ++i) {
    detail::RatioAccumulator acc(B);
    acc.num = state_time[static_cast<std::size_t>(i)];
    acc.den = batch_time;
    report.occupancy[static_cast<std::size_t>(i)] = acc.finish(options.confidence);
  }
  for (const auto& acc : blocked) {
    report.blocking.push_back(acc.finish(options.confidence));
    report.blocking.back().samples = static_cast<std::uint64_t>(
        std::accumulate(acc.den.begin(), acc.den.end(), 0.0));
  }
  for (const auto& acc : volume) {
    report.volume.push_back(acc.finish(options.confidence));
    report.volume.back().samples = static_cast<std::uint64_t>(
        std::accumulate(acc.den.begin(), acc.den.end(), 0.0));
  }
  for (const auto& [key, acc] : entry_volume) {
    Estimate e = acc.finish(options.confidence);
    e.samples = static_cast<std::uint64_t>(std::accumulate(acc.den.begin(), acc.den.end(), 0.0));
    report.entry_volume.emplace(key, e);
  }
  return report;
}

inline SimReport simulate(const StateSpace& space, const AssignmentRule& rule, Admission mode,
                          const SimOptions& options) {
  return simulate(space, AdmissionTable(space, rule, mode), options);
}

}  // namespace hetassoc
