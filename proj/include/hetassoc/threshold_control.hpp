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

// The operator's outer problem: choose broadcast thresholds so that the
// equilibrium the users settle in has the lowest blocking.

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hetassoc/load_aggregation.hpp"
#include "hetassoc/parallel.hpp"
#include "hetassoc/policy_game.hpp"
#include "hetassoc/state_space.hpp"

namespace hetassoc {

// Which equilibrium stands for P*(f) when a scheme has several.
enum class EquilibriumSelection {
  best_utility,    // highest global utility (ties: lowest blocking, then policy order)
  worst_blocking,  // highest overall blocking
};

inline std::string_view to_string(EquilibriumSelection sel) {
  return sel == EquilibriumSelection::best_utility ? "best_utility" : "worst_blocking";
}

// Index of the selected equilibrium in `equilibria` (non-empty).
inline std::size_t select_equilibrium(const std::vector<PolicyEvaluation>& equilibria,
                                      EquilibriumSelection rule) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < equilibria.size(); ++i) {
    const auto& a = equilibria[i];
    const auto& b = equilibria[best];
    if (rule == EquilibriumSelection::best_utility) {
      if (a.global_utility > b.global_utility ||
          (a.global_utility == b.global_utility && a.overall_blocking < b.overall_blocking))
        best = i;
    } else if (a.overall_blocking > b.overall_blocking) {
      best = i;
    }
  }
  return best;
}

struct SchemeOutcome {
  AggregationScheme scheme;
  std::size_t equilibrium_count = 0;
  std::optional<Policy> selected;
  double blocking = std::numeric_limits<double>::quiet_NaN();  // b(P*(f))
  double inverse_blocking = std::numeric_limits<double>::quiet_NaN();  // 1 / b
  double utility = std::numeric_limits<double>::quiet_NaN();
  // The other selection rule's blocking, reported side by side.
  double alternative_blocking = std::numeric_limits<double>::quiet_NaN();
  SearchMode mode_used = SearchMode::exhaustive;
  std::string note;
};

struct ControlResult {
  std::vector<SchemeOutcome> outcomes;  // grid order
  std::optional<std::size_t> best;      // argmin blocking
  std::vector<std::size_t> ties;        // every scheme attaining the minimum
  EquilibriumSelection selection = EquilibriumSelection::best_utility;
  std::vector<std::string> warnings;
};

struct ControlOptions {
  EquilibriumSelection selection = EquilibriumSelection::best_utility;
  double tie_tolerance = 1e-12;
  int jobs = 0;  // grid points evaluated in parallel
};

// Every per-system (low, high) pair on a lattice of the given step, crossed
// over the systems. With `symmetric` all systems share one pair.
inline std::vector<AggregationScheme> threshold_grid(int num_systems, double step,
                                                     bool symmetric = false) {
  if (!(step > 0.0) || step > 1.0) throw ValidationError("grid step must lie in (0, 1]");
  const int ticks = static_cast<int>(std::floor(1.0 / step + 1e-9));
  std::vector<Thresholds> pairs;
  for (int i = 0; i <= ticks; ++i)
    for (int j = i; j <= ticks; ++j)
      pairs.push_back({std::round(i * step * 1e9) / 1e9, std::round(j * step * 1e9) / 1e9});
  std::vector<std::vector<Thresholds>> schemes{{}};
  if (symmetric) {
    schemes.clear();
    for (const auto& p : pairs)
      schemes.emplace_back(static_cast<std::size_t>(num_systems), p);
  }
  for (int s = 0; s < (symmetric ? 0 : num_systems); ++s) {
    std::vector<std::vector<Thresholds>> next;
    for (const auto& prefix : schemes)
      for (const auto& p : pairs) {
        auto v = prefix;
        v.push_back(p);
        next.push_back(std::move(v));
      }
    schemes = std::move(next);
  }
  std::vector<AggregationScheme> grid;
  for (auto& v : schemes) grid.emplace_back(std::move(v));
  return grid;
}

// Parses "l1,h1,l2,h2[;l1,h1,...]" into schemes with one pair per system.
inline std::vector<AggregationScheme> parse_schemes(const std::string& text, int num_systems) {
  std::vector<AggregationScheme> out;
  std::stringstream outer(text);
  std::string item;
  while (std::getline(outer, item, ';')) {
    std::stringstream inner(item);
    std::string tok;
    std::vector<double> values;
    while (std::getline(inner, tok, ',')) {
      try {
        values.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ParseError("bad threshold value '" + tok + "'");
      }
    }
    if (static_cast<int>(values.size()) != 2 * num_systems)
      throw ParseError("threshold vector '" + item + "' needs " +
                       std::to_string(2 * num_systems) + " values");
    std::vector<Thresholds> pairs;
    for (int s = 0; s < num_systems; ++s) pairs.push_back({values[2 * s], values[2 * s + 1]});
    out.emplace_back(std::move(pairs));
  }
  if (out.empty()) throw ParseError("no threshold vectors given");
  return out;
}

inline SchemeOutcome evaluate_scheme(const StateSpace& space, const AggregationScheme& scheme,
                                     const GameOptions& game, const SearchOptions& search,
                                     EquilibriumSelection selection) {
  SchemeOutcome out;
  out.scheme = scheme;
  const GameContext ctx(space, scheme);
  const NashResult nash = find_nash(ctx, game, search);
  out.mode_used = nash.mode_used;
  out.equilibrium_count = nash.equilibria.size();
  if (nash.equilibria.empty()) {
    out.note = "no pure equilibrium found";
    return out;
  }
  const auto& chosen = nash.equilibria[select_equilibrium(nash.equilibria, selection)];
  const auto other = selection == EquilibriumSelection::best_utility
                         ? EquilibriumSelection::worst_blocking
                         : EquilibriumSelection::best_utility;
  out.selected = chosen.policy;
  out.blocking = chosen.overall_blocking;
  out.inverse_blocking =
      chosen.overall_blocking > 0.0 ? 1.0 / chosen.overall_blocking
                                    : std::numeric_limits<double>::infinity();
  out.utility = chosen.global_utility;
  out.alternative_blocking =
      nash.equilibria[select_equilibrium(nash.equilibria, other)].overall_blocking;
  if (nash.equilibria.size() > 1)
    out.note = std::to_string(nash.equilibria.size()) + " equilibria; selected by " +
               std::string(to_string(selection));
  return out;
}

// Runs the equilibrium search for every scheme and picks the one whose
// selected equilibrium blocks least (equivalently, maximizes 1/b).
inline ControlResult optimize_thresholds(const StateSpace& space,
                                         const std::vector<AggregationScheme>& grid,
                                         const GameOptions& game = {},
                                         const SearchOptions& search = {},
                                         const ControlOptions& control = {}) {
  ControlResult result;
  result.selection = control.selection;
  result.outcomes.resize(grid.size());
  SearchOptions inner = search;
  if (grid.size() > 1) inner.jobs = 1;
  parallel_for(grid.size(), grid.size() > 1 ? control.jobs : 1, [&](std::size_t i) {
    result.outcomes[i] = evaluate_scheme(space, grid[i], game, inner, control.selection);
  });

  double min_b = std::numeric_limits<double>::infinity();
  double max_inv = -1.0;
  std::optional<std::size_t> by_inverse;
  for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
    const auto& o = result.outcomes[i];
    if (!o.selected) {
      result.warnings.push_back("scheme " + o.scheme.to_string() +
                                " has no pure equilibrium; excluded");
      continue;
    }
    if (o.blocking < min_b) {
      min_b = o.blocking;
      result.best = i;
    }
    if (o.inverse_blocking > max_inv) {
      max_inv = o.inverse_blocking;
      by_inverse = i;
    }
  }
  if (result.best && by_inverse &&
      result.outcomes[*by_inverse].blocking != result.outcomes[*result.best].blocking)
    throw SolverError("argmin of blocking and argmax of 1/blocking disagree");
  for (std::size_t i = 0; i < result.outcomes.size(); ++i)
    if (result.outcomes[i].selected && result.outcomes[i].blocking <= min_b + control.tie_tolerance)
      result.ties.push_back(i);
  return result;
}

}  // namespace hetassoc
