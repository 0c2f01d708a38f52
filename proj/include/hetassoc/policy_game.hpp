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

// Global and individual utilities of an assignment rule, the globally
// optimal policy, pure Nash equilibria of the (class, label) game and the
// two information-free / full-information baselines.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hetassoc/assignment.hpp"
#include "hetassoc/ctmc.hpp"
#include "hetassoc/load_aggregation.hpp"
#include "hetassoc/parallel.hpp"
#include "hetassoc/state_space.hpp"
#include "hetassoc/transient.hpp"

namespace hetassoc {

inline constexpr double kEquilibriumTol = 1e-9;  // megabits

// Payoff of deviating to a system that cannot admit the user in some state
// of the label.
enum class DeviationPayoff {
  redirect,  // utility of the system the network actually assigns; 0 if blocked
  exclude,   // drop such states from the conditional average
};

struct GameOptions {
  Admission admission = Admission::redirect;
  BlockingNumerator blocking_numerator = BlockingNumerator::label_restricted;
  DeviationPayoff deviation = DeviationPayoff::redirect;
  double epsilon = kEquilibriumTol;
};

// Everything the game layer needs about one rule: stationary law, blocking
// per (class, label), utility tables and the derived utilities.
struct PolicyEvaluation {
  std::optional<Policy> policy;  // absent for the baselines
  std::string rule;              // fingerprint
  int num_classes = 0;
  int num_systems = 0;
  int num_labels = 0;
  std::vector<int> labels;  // label of each state
  SteadyState steady;
  std::vector<double> label_mass;
  std::vector<bool> empty_label;            // zero stationary mass
  std::vector<std::vector<double>> blocking;  // [n][l]
  std::vector<double> class_blocking;       // [n]
  double overall_blocking = 0.0;
  double global_utility = 0.0;
  // U_nl^s, flattened [n][l][s]; NaN on empty labels (and on excluded
  // deviations with no admissible state).
  std::vector<double> individual;

  double individual_utility(int n, int l, int s) const {
    return individual[static_cast<std::size_t>((n * num_labels + l) * num_systems + s)];
  }
};

// Global utility: sum_n w_n sum_l (1 - b_n(l)) sum_{M in l, admitted}
// u_n^{target}(M) pi(M), with w_n = lambda_n / sum lambda. The inner sum is
// deliberately not normalized by the label mass.
inline double global_utility(const StateSpace& space, const std::vector<int>& labels,
                             const SteadyState& ss,
                             const std::vector<std::vector<double>>& blocking,
                             const AdmissionTable& admission, const UtilityTable& table) {
  const auto& cfg = space.config();
  const double total = cfg.total_arrival_rate();
  double u = 0.0;
  for (int n = 0; n < space.num_classes(); ++n) {
    if (cfg.arrival_rate[n] == 0.0) continue;
    std::vector<double> per_label(blocking[static_cast<std::size_t>(n)].size(), 0.0);
    for (int id = 0; id < space.size(); ++id) {
      const double p = ss.pi[static_cast<std::size_t>(id)];
      const int s = admission.target(n, id);
      if (p == 0.0 || s == kReject) continue;
      per_label[static_cast<std::size_t>(labels[static_cast<std::size_t>(id)])] +=
          arrival_utility(space, table, id, n, s) * p;
    }
    double class_sum = 0.0;
    for (std::size_t l = 0; l < per_label.size(); ++l)
      class_sum += (1.0 - blocking[static_cast<std::size_t>(n)][l]) * per_label[l];
    u += cfg.arrival_rate[n] / total * class_sum;
  }
  return u;
}

// U_nl^s: expected utility of a class-n user joining s when label l is
// broadcast and everybody else follows the rule. Throws EmptyLabelError when
// the label has no stationary mass.
inline double individual_utility(const StateSpace& space, const std::vector<int>& labels,
                                 const SteadyState& ss, const UtilityTable& table, int n, int l,
                                 int s, Admission admission, DeviationPayoff deviation) {
  double num = 0.0;
  double den = 0.0;
  double mass = 0.0;
  for (int id = 0; id < space.size(); ++id) {
    if (labels[static_cast<std::size_t>(id)] != l) continue;
    const double p = ss.pi[static_cast<std::size_t>(id)];
    if (p == 0.0) continue;
    mass += p;
    if (space.arrival(id, n, s) != StateSpace::kNone) {
      num += arrival_utility(space, table, id, n, s) * p;
      den += p;
    } else if (deviation == DeviationPayoff::redirect) {
      const int joined = admit(space, id, n, s, admission);
      if (joined != kReject) num += arrival_utility(space, table, id, n, joined) * p;
      den += p;
    }
  }
  if (mass == 0.0) throw EmptyLabelError("label " + std::to_string(l) + " has no stationary mass");
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return num / den;
}

// Full evaluation of an arbitrary rule under a given labelling of states.
inline PolicyEvaluation evaluate_rule(const StateSpace& space, const AssignmentRule& rule,
                                      const std::vector<int>& labels, int num_labels,
                                      const GameOptions& options, bool with_individual = true,
                                      VolumeCache* cache = nullptr) {
  const int N = space.num_classes();
  const int S = space.num_systems();
  PolicyEvaluation ev;
  if (const auto* pr = std::get_if<PolicyRule>(&rule)) ev.policy = pr->policy;
  ev.rule = fingerprint(rule);
  ev.num_classes = N;
  ev.num_systems = S;
  ev.num_labels = num_labels;
  ev.labels = labels;

  const AdmissionTable admission(space, rule, options.admission, labels);
  ev.steady = solve_steady_state(build_generator(space, admission));
  ev.label_mass = label_masses(ev.steady, labels, num_labels);
  ev.empty_label = empty_labels(ev.steady, labels, num_labels);
  for (int n = 0; n < N; ++n) {
    ev.blocking.push_back(
        blocking_by_label(admission, labels, num_labels, ev.steady, n, options.blocking_numerator)
            .rate);
    ev.class_blocking.push_back(class_blocking(admission, ev.steady, n));
  }
  ev.overall_blocking = overall_blocking(space, ev.steady, admission);

  UtilityTable table;
  if (cache) {
    std::vector<VolumeTable> tables;
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s)
        tables.push_back(*cache->get_or_solve(ev.rule, space, admission, n, s));
    table = UtilityTable(S, std::move(tables));
  } else {
    table = UtilityTable(space, admission);
  }
  ev.global_utility = global_utility(space, labels, ev.steady, ev.blocking, admission, table);

  if (with_individual) {
    ev.individual.assign(static_cast<std::size_t>(N * num_labels * S),
                         std::numeric_limits<double>::quiet_NaN());
    for (int n = 0; n < N; ++n)
      for (int l = 0; l < num_labels; ++l) {
        if (ev.empty_label[static_cast<std::size_t>(l)]) continue;
        for (int s = 0; s < S; ++s)
          ev.individual[static_cast<std::size_t>((n * num_labels + l) * S + s)] =
              individual_utility(space, labels, ev.steady, table, n, l, s, options.admission,
                                 options.deviation);
      }
  }
  return ev;
}

// The label structure a policy game is played on.
struct GameContext {
  const StateSpace* space = nullptr;
  AggregationScheme scheme;
  std::vector<int> labels;
  int num_labels = 0;
  std::vector<bool> structural;  // labels holding at least one feasible state
  std::vector<std::pair<int, int>> free_entries;  // (n, l) over structural labels

  GameContext(const StateSpace& sp, AggregationScheme sc)
      : space(&sp), scheme(std::move(sc)), labels(label_table(scheme, sp)),
        num_labels(scheme.num_labels()), structural(structural_label_mask(labels, num_labels)) {
    if (scheme.num_systems() != sp.num_systems())
      throw ValidationError("aggregation scheme must have one threshold pair per system");
    for (int n = 0; n < sp.num_classes(); ++n)
      for (int l = 0; l < num_labels; ++l)
        if (structural[static_cast<std::size_t>(l)]) free_entries.emplace_back(n, l);
  }

  // S^(free entries), saturating at UINT64_MAX.
  std::uint64_t policy_count() const {
    std::uint64_t count = 1;
    const auto S = static_cast<std::uint64_t>(space->num_systems());
    for (std::size_t i = 0; i < free_entries.size(); ++i) {
      if (count > std::numeric_limits<std::uint64_t>::max() / S)
        return std::numeric_limits<std::uint64_t>::max();
      count *= S;
    }
    return count;
  }

  // The index-th canonical policy in lexicographic order of the flattened
  // table; entries on structurally empty labels stay at system 0.
  Policy policy_at(std::uint64_t index) const {
    Policy p(space->num_classes(), num_labels, 0);
    const auto S = static_cast<std::uint64_t>(space->num_systems());
    for (std::size_t i = free_entries.size(); i-- > 0;) {
      p.set(free_entries[i].first, free_entries[i].second, static_cast<int>(index % S));
      index /= S;
    }
    return p;
  }

  PolicyEvaluation evaluate(const Policy& policy, const GameOptions& options,
                            bool with_individual = true) const {
    return evaluate_rule(*space, PolicyRule{policy, scheme}, labels, num_labels, options,
                         with_individual);
  }
};

// Sets entries on labels with zero stationary mass to system 0. Such labels
// are never visited in steady state, so the stationary law is unchanged.
inline Policy canonicalize(const Policy& policy, const std::vector<bool>& empty_label) {
  Policy out = policy;
  for (int n = 0; n < out.num_classes(); ++n)
    for (int l = 0; l < out.num_labels(); ++l)
      if (empty_label[static_cast<std::size_t>(l)]) out.set(n, l, 0);
  return out;
}

struct NashCheck {
  bool canonical = true;     // no non-zero entry on a zero-mass label
  bool equilibrium = true;   // no profitable unilateral deviation
  double max_regret = 0.0;   // max_s U_nl^s - U_nl^{P_nl} over non-empty labels

  bool ok() const { return canonical && equilibrium; }
};

// Checks U_nl^{P_nl}(P) >= U_nl^s(P) - epsilon for all n, non-empty l, s.
inline NashCheck check_nash(const PolicyEvaluation& ev, double epsilon) {
  NashCheck check;
  const Policy& p = *ev.policy;
  for (int n = 0; n < ev.num_classes; ++n)
    for (int l = 0; l < ev.num_labels; ++l) {
      if (ev.empty_label[static_cast<std::size_t>(l)]) {
        if (p.at(n, l) != 0) check.canonical = false;
        continue;
      }
      const double own = ev.individual_utility(n, l, p.at(n, l));
      for (int s = 0; s < ev.num_systems; ++s) {
        const double alt = ev.individual_utility(n, l, s);
        if (std::isnan(alt)) continue;
        const double regret = std::isnan(own) ? std::numeric_limits<double>::infinity()
                                              : alt - own;
        check.max_regret = std::max(check.max_regret, regret);
        if (regret > epsilon) check.equilibrium = false;
      }
    }
  return check;
}

// Re-solves every chain for `policy` from scratch and checks the
// equilibrium inequalities.
inline NashCheck verify_nash(const StateSpace& space, const AggregationScheme& scheme,
                             const Policy& policy, const GameOptions& options = {}) {
  const auto labels = label_table(scheme, space);
  const auto ev = evaluate_rule(space, PolicyRule{policy, scheme}, labels, scheme.num_labels(),
                                options, true);
  return check_nash(ev, options.epsilon);
}

enum class SearchMode { automatic, exhaustive, best_response };

struct SearchOptions {
  SearchMode mode = SearchMode::automatic;
  // `automatic` enumerates when the canonical policy space is at most this.
  std::uint64_t nash_exhaustive_limit = std::uint64_t{1} << 12;
  std::uint64_t optimal_exhaustive_limit = std::uint64_t{1} << 20;
  int restarts = 64;
  std::uint64_t seed = 1;
  int jobs = 0;
  int max_steps = 100000;  // per restart
  bool trace = false;
};

struct BestResponseStep {
  int restart = 0;
  int n = 0;
  int l = 0;
  int from = 0;
  int to = 0;
  double payoff_from = 0.0;  // U_nl^from under the policy before the step
  double payoff_to = 0.0;    // U_nl^to under the same policy
};

struct NashResult {
  std::vector<PolicyEvaluation> equilibria;  // sorted by policy, distinct
  SearchMode mode_used = SearchMode::exhaustive;
  std::uint64_t policy_space = 0;
  std::uint64_t evaluations = 0;
  int converged_restarts = 0;
  int cycling_restarts = 0;
  std::vector<BestResponseStep> trace;
};

namespace detail {

inline std::vector<PolicyEvaluation> sorted_unique(std::vector<PolicyEvaluation> evs) {
  std::sort(evs.begin(), evs.end(),
            [](const auto& a, const auto& b) { return *a.policy < *b.policy; });
  evs.erase(std::unique(evs.begin(), evs.end(),
                        [](const auto& a, const auto& b) { return *a.policy == *b.policy; }),
            evs.end());
  return evs;
}

// Memo of evaluations keyed by policy, shared across best-response restarts.
class EvaluationCache {
 public:
  EvaluationCache(const GameContext& ctx, const GameOptions& options)
      : ctx_(ctx), options_(options) {}

  std::shared_ptr<const PolicyEvaluation> get(const Policy& policy) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (auto it = memo_.find(policy); it != memo_.end()) return it->second;
    }
    auto ev = std::make_shared<const PolicyEvaluation>(ctx_.evaluate(policy, options_));
    std::lock_guard<std::mutex> lock(mutex_);
    return memo_.emplace(policy, std::move(ev)).first->second;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return memo_.size();
  }

 private:
  const GameContext& ctx_;
  const GameOptions& options_;
  mutable std::mutex mutex_;
  std::map<Policy, std::shared_ptr<const PolicyEvaluation>> memo_;
};

struct RestartOutcome {
  std::optional<Policy> equilibrium;
  bool cycled = false;
  std::vector<BestResponseStep> trace;
};

// Gauss-Seidel best response: visit the free (n, l) entries in
// lexicographic order, switch an entry only when another system beats the
// current one by more than epsilon (lowest index among the maximizers),
// and stop after a full sweep without changes. Revisiting a
// (policy, position) pair means the dynamics cycle.
inline RestartOutcome best_response_run(const GameContext& ctx, const GameOptions& options,
                                        const SearchOptions& search, EvaluationCache& cache,
                                        Policy start, int restart) {
  RestartOutcome out;
  const int S = ctx.space->num_systems();
  Policy p = canonicalize(start, cache.get(start)->empty_label);
  std::set<std::pair<Policy, std::size_t>> visited;
  std::size_t since_change = 0;
  std::size_t pos = 0;
  const std::size_t entries = ctx.free_entries.size();
  for (int step = 0; step < search.max_steps; ++step) {
    if (since_change >= entries) {
      out.equilibrium = p;
      return out;
    }
    if (!visited.emplace(p, pos).second) {
      out.cycled = true;
      return out;
    }
    const auto ev = cache.get(p);
    const auto [n, l] = ctx.free_entries[pos];
    bool changed = false;
    if (!ev->empty_label[static_cast<std::size_t>(l)]) {
      const int cur = p.at(n, l);
      const double own = ev->individual_utility(n, l, cur);
      int best = cur;
      double best_val = own;
      for (int s = 0; s < S; ++s) {
        const double v = ev->individual_utility(n, l, s);
        if (std::isnan(v)) continue;
        if (std::isnan(best_val) || v > best_val + options.epsilon) {
          best = s;
          best_val = v;
        }
      }
      if (best != cur) {
        // Lowest-index maximizer within epsilon of the best value.
        for (int s = 0; s < S; ++s) {
          const double v = ev->individual_utility(n, l, s);
          if (!std::isnan(v) && v >= best_val - options.epsilon) {
            best = s;
            break;
          }
        }
      }
      if (best != cur) {
        if (search.trace)
          out.trace.push_back({restart, n, l, cur, best, own, ev->individual_utility(n, l, best)});
        p.set(n, l, best);
        p = canonicalize(p, cache.get(p)->empty_label);
        changed = true;
      }
    }
    since_change = changed ? 0 : since_change + 1;
    pos = (pos + 1) % entries;
  }
  out.cycled = true;
  return out;
}

}  // namespace detail

// Pure Nash equilibria among canonical policies (entries on labels with
// zero stationary mass fixed to system 0). An empty result is legal.
inline NashResult find_nash(const GameContext& ctx, const GameOptions& options = {},
                            const SearchOptions& search = {}) {
  NashResult result;
  result.policy_space = ctx.policy_count();
  SearchMode mode = search.mode;
  if (mode == SearchMode::automatic)
    mode = result.policy_space <= search.nash_exhaustive_limit ? SearchMode::exhaustive
                                                                : SearchMode::best_response;
  result.mode_used = mode;

  if (ctx.free_entries.empty()) mode = SearchMode::exhaustive;

  if (mode == SearchMode::exhaustive) {
    if (result.policy_space > search.optimal_exhaustive_limit)
      throw SearchCapError("exhaustive equilibrium search over " +
                           std::to_string(result.policy_space) + " policies exceeds the cap of " +
                           std::to_string(search.optimal_exhaustive_limit));
    const auto count = static_cast<std::size_t>(result.policy_space);
    std::vector<std::optional<PolicyEvaluation>> found(count);
    parallel_for(count, search.jobs, [&](std::size_t i) {
      auto ev = ctx.evaluate(ctx.policy_at(i), options);
      if (check_nash(ev, options.epsilon).ok()) found[i] = std::move(ev);
    });
    for (auto& f : found)
      if (f) result.equilibria.push_back(std::move(*f));
    result.evaluations = count;
    result.equilibria = detail::sorted_unique(std::move(result.equilibria));
    return result;
  }

  detail::EvaluationCache cache(ctx, options);
  const auto restarts = static_cast<std::size_t>(std::max(1, search.restarts));
  std::vector<detail::RestartOutcome> outcomes(restarts);
  parallel_for(restarts, search.jobs, [&](std::size_t r) {
    std::mt19937_64 rng(search.seed + 0x9E3779B97F4A7C15ull * (r + 1));
    std::uniform_int_distribution<int> pick(0, ctx.space->num_systems() - 1);
    Policy start(ctx.space->num_classes(), ctx.num_labels, 0);
    for (const auto& [n, l] : ctx.free_entries) start.set(n, l, pick(rng));
    outcomes[r] = detail::best_response_run(ctx, options, search, cache, start,
                                            static_cast<int>(r));
  });
  for (auto& o : outcomes) {
    result.trace.insert(result.trace.end(), o.trace.begin(), o.trace.end());
    if (o.cycled) {
      ++result.cycling_restarts;
      continue;
    }
    ++result.converged_restarts;
    auto ev = *cache.get(*o.equilibrium);
    if (check_nash(ev, options.epsilon).ok()) result.equilibria.push_back(std::move(ev));
  }
  result.evaluations = cache.size();
  result.equilibria = detail::sorted_unique(std::move(result.equilibria));
  return result;
}

struct OptimalResult {
  PolicyEvaluation best;
  std::vector<Policy> ties;  // every policy within epsilon of the maximum, sorted
  bool exhaustive = true;
  std::uint64_t policy_space = 0;
  std::uint64_t evaluations = 0;
};

// argmax of the global utility over canonical policies. Exhaustive when the
// space fits under the cap; otherwise coordinate ascent from random starts
// (then only a local optimum is guaranteed).
inline OptimalResult optimal_policy(const GameContext& ctx, const GameOptions& options = {},
                                    const SearchOptions& search = {}) {
  OptimalResult result;
  result.policy_space = ctx.policy_count();
  bool exhaustive = search.mode != SearchMode::best_response &&
                    result.policy_space <= search.optimal_exhaustive_limit;
  if (search.mode == SearchMode::exhaustive && !exhaustive)
    throw SearchCapError("exhaustive optimal-policy search over " +
                         std::to_string(result.policy_space) + " policies exceeds the cap of " +
                         std::to_string(search.optimal_exhaustive_limit));
  result.exhaustive = exhaustive;

  if (exhaustive) {
    const auto count = static_cast<std::size_t>(result.policy_space);
    std::vector<double> utility(count);
    parallel_for(count, search.jobs, [&](std::size_t i) {
      utility[i] = ctx.evaluate(ctx.policy_at(i), options, false).global_utility;
    });
    const double best = *std::max_element(utility.begin(), utility.end());
    for (std::size_t i = 0; i < count; ++i)
      if (utility[i] >= best - options.epsilon) result.ties.push_back(ctx.policy_at(i));
    result.best = ctx.evaluate(result.ties.front(), options);
    result.evaluations = count;
    return result;
  }

  std::map<Policy, double> seen;
  const auto utility_of = [&](const Policy& p) {
    auto it = seen.find(p);
    if (it == seen.end())
      it = seen.emplace(p, ctx.evaluate(p, options, false).global_utility).first;
    return it->second;
  };
  std::mt19937_64 rng(search.seed);
  std::uniform_int_distribution<int> pick(0, ctx.space->num_systems() - 1);
  for (int r = 0; r < std::max(1, search.restarts); ++r) {
    Policy p(ctx.space->num_classes(), ctx.num_labels, 0);
    for (const auto& [n, l] : ctx.free_entries) p.set(n, l, pick(rng));
    double value = utility_of(p);
    for (bool improved = true; improved;) {
      improved = false;
      for (const auto& [n, l] : ctx.free_entries)
        for (int s = 0; s < ctx.space->num_systems(); ++s) {
          if (s == p.at(n, l)) continue;
          Policy q = p;
          q.set(n, l, s);
          const double v = utility_of(q);
          if (v > value + options.epsilon) {
            p = q;
            value = v;
            improved = true;
          }
        }
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [p, v] : seen) best = std::max(best, v);
  for (const auto& [p, v] : seen)
    if (v >= best - options.epsilon) result.ties.push_back(p);
  result.best = ctx.evaluate(result.ties.front(), options);
  result.evaluations = seen.size();
  return result;
}

enum class Baseline { peak_rate, instantaneous_rate };

inline std::string_view to_string(Baseline which) {
  return which == Baseline::peak_rate ? "peak_rate" : "instantaneous_rate";
}

// Runs a baseline rule through the same pipeline. The peak-rate rule uses
// no load information (one label); the instantaneous-rate rule sees the
// exact state (one label per state).
inline PolicyEvaluation evaluate_baseline(const StateSpace& space, Baseline which,
                                          const GameOptions& options = {}) {
  if (which == Baseline::peak_rate) {
    const std::vector<int> labels(static_cast<std::size_t>(space.size()), 0);
    return evaluate_rule(space, PeakRateRule{}, labels, 1, options, false);
  }
  std::vector<int> labels(static_cast<std::size_t>(space.size()));
  for (int id = 0; id < space.size(); ++id) labels[static_cast<std::size_t>(id)] = id;
  return evaluate_rule(space, InstantaneousRateRule{}, labels, space.size(), options, false);
}

}  // namespace hetassoc
