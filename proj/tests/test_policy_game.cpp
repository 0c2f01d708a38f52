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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "hetassoc/policy_game.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace hetassoc;

namespace {

std::vector<std::vector<int>> as_table(const Policy& p) {
  std::vector<std::vector<int>> t(static_cast<std::size_t>(p.num_classes()));
  for (int n = 0; n < p.num_classes(); ++n)
    for (int l = 0; l < p.num_labels(); ++l) t[static_cast<std::size_t>(n)].push_back(p.at(n, l));
  return t;
}

Policy random_policy(const GameContext& ctx, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, ctx.space->num_systems() - 1);
  Policy p(ctx.space->num_classes(), ctx.num_labels, 0);
  for (const auto& [n, l] : ctx.free_entries) p.set(n, l, pick(rng));
  return p;
}

}  // namespace

TEST(GlobalUtility, ErlangPeakRateBaseline) {
  const auto space = enumerate(fixtures::erlang());
  const auto ev = evaluate_baseline(space, Baseline::peak_rate);
  // One label with b = 0.2: 0.8 * (0.4 * 5/3 + 0.4 * 4/3).
  EXPECT_NEAR(ev.global_utility, 0.8 * (0.4 * 5.0 / 3.0 + 0.4 * 4.0 / 3.0), 1e-10);
  EXPECT_NEAR(ev.overall_blocking, 0.2, 1e-10);
}

TEST(GlobalUtility, ErlangUnderShippedThresholds) {
  const auto space = enumerate(fixtures::erlang());
  const GameContext ctx(space, AggregationScheme({{0.3, 0.7}}));
  const auto ev = ctx.evaluate(Policy(1, 3, 0), {});
  // Loads 0, 0.5, 1 fall in L, M, H; only H blocks, and H contributes no
  // admitted arrivals.
  EXPECT_NEAR(ev.global_utility, 0.4 * 5.0 / 3.0 + 0.4 * 4.0 / 3.0, 1e-10);
  EXPECT_NEAR(ev.blocking[0][0], 0.0, 1e-12);
  EXPECT_NEAR(ev.blocking[0][2], 1.0, 1e-12);
  EXPECT_NEAR(ev.individual_utility(0, 0, 0), 5.0 / 3.0, 1e-10);
  EXPECT_NEAR(ev.individual_utility(0, 1, 0), 4.0 / 3.0, 1e-10);
  EXPECT_NEAR(ev.individual_utility(0, 2, 0), 0.0, 1e-12);
}

TEST(IndividualUtility, BlockedDeviationPayoffModes) {
  const auto space = enumerate(fixtures::erlang());
  const GameContext ctx(space, AggregationScheme({{1.0, 1.0}}));  // a single label
  GameOptions opt;
  const auto with_zero = ctx.evaluate(Policy(1, 3, 0), opt);
  EXPECT_NEAR(with_zero.individual_utility(0, 0, 0), 1.2, 1e-10);
  opt.deviation = DeviationPayoff::exclude;
  const auto excluded = ctx.evaluate(Policy(1, 3, 0), opt);
  EXPECT_NEAR(excluded.individual_utility(0, 0, 0), 1.2 / 0.8, 1e-10);
  EXPECT_TRUE(excluded.empty_label[1]);
  EXPECT_TRUE(std::isnan(excluded.individual_utility(0, 1, 0)));
}

TEST(IndividualUtility, MatchesOracleOnTwinsAndRandomPolicies) {
  const auto cfg = fixtures::twins();
  const auto space = enumerate(cfg);
  const GameContext ctx(space, AggregationScheme::from_config(cfg));
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Policy p = random_policy(ctx, rng);
    const auto ev = ctx.evaluate(p, {});
    const auto choose = oracle::table_chooser(cfg, cfg.thresholds, as_table(p));
    const auto chain = oracle::build_chain(cfg, choose);
    const auto pi = oracle::stationary(chain);
    for (int l = 0; l < ctx.num_labels; ++l)
      for (int s = 0; s < 2; ++s) {
        const double want = oracle::individual(cfg, cfg.thresholds, chain, pi, choose, 0, l, s);
        const double got = ev.individual_utility(0, l, s);
        if (std::isnan(want)) {
          EXPECT_TRUE(ev.empty_label[static_cast<std::size_t>(l)]);
        } else {
          EXPECT_NEAR(got, want, 1e-9) << p.to_string() << " l=" << l << " s=" << s;
        }
      }
  }
}

TEST(Nash, SingleSystemIsTrivial) {
  const auto space = enumerate(fixtures::erlang());
  const GameContext ctx(space, AggregationScheme({{0.3, 0.7}}));
  const auto result = find_nash(ctx);
  ASSERT_EQ(result.equilibria.size(), 1u);
  EXPECT_EQ(result.policy_space, 1u);
  EXPECT_DOUBLE_EQ(check_nash(result.equilibria[0], kEquilibriumTol).max_regret, 0.0);
}

TEST(Nash, EveryoneOnOneTwinIsNotAnEquilibrium) {
  const auto cfg = fixtures::twins();
  const auto space = enumerate(cfg);
  const auto scheme = AggregationScheme::from_config(cfg);
  // In an empty network the second twin keeps its user alone for longer.
  const auto check = verify_nash(space, scheme, Policy(1, 9, 0));
  EXPECT_TRUE(check.canonical);
  EXPECT_FALSE(check.equilibrium);
  EXPECT_GT(check.max_regret, 1e-6);
}

TEST(Nash, ExhaustiveResultsVerifyFromScratch) {
  for (double erlangs : {0.5, 1.5, 3.0}) {
    const auto cfg = fixtures::twins(erlangs);
    const auto space = enumerate(cfg);
    const GameContext ctx(space, AggregationScheme::from_config(cfg));
    SearchOptions so;
    so.mode = SearchMode::exhaustive;
    const auto result = find_nash(ctx, {}, so);
    EXPECT_EQ(result.evaluations, ctx.policy_count());
    for (const auto& eq : result.equilibria) {
      EXPECT_TRUE(verify_nash(space, ctx.scheme, *eq.policy).ok());
      EXPECT_EQ(canonicalize(*eq.policy, eq.empty_label), *eq.policy);
    }
    // Brute force over the whole table, canonical or not, agrees once
    // non-canonical equilibria are folded onto their canonical form.
    std::set<Policy> brute;
    for (std::uint64_t i = 0; i < ctx.policy_count(); ++i) {
      const auto ev = ctx.evaluate(ctx.policy_at(i), {});
      if (check_nash(ev, kEquilibriumTol).equilibrium && check_nash(ev, kEquilibriumTol).canonical)
        brute.insert(*ev.policy);
    }
    std::set<Policy> found;
    for (const auto& eq : result.equilibria) found.insert(*eq.policy);
    EXPECT_EQ(found, brute);
  }
}

TEST(Nash, BestResponseFindsSubsetOfExhaustive) {
  std::mt19937_64 rng(23);
  int compared = 0;
  for (int i = 0; i < 40 && compared < 15; ++i) {
    const auto cfg = oracle::random_instance(rng, 120);
    if (cfg.num_systems() < 2) continue;
    const auto space = enumerate(cfg);
    const GameContext ctx(space, AggregationScheme::from_config(cfg));
    if (ctx.policy_count() > (1u << 12)) continue;
    SearchOptions ex;
    ex.mode = SearchMode::exhaustive;
    SearchOptions br;
    br.mode = SearchMode::best_response;
    br.restarts = 16;
    br.trace = true;
    const auto a = find_nash(ctx, {}, ex);
    const auto b = find_nash(ctx, {}, br);
    std::set<Policy> all;
    for (const auto& e : a.equilibria) all.insert(*e.policy);
    for (const auto& e : b.equilibria) EXPECT_TRUE(all.count(*e.policy)) << e.policy->to_string();
    EXPECT_EQ(b.converged_restarts + b.cycling_restarts, 16);
    for (const auto& step : b.trace) EXPECT_GT(step.payoff_to, step.payoff_from + kEquilibriumTol);
    ++compared;
  }
  EXPECT_GE(compared, 5);
}

TEST(Nash, BestResponseIsDeterministicForASeed) {
  const auto cfg = fixtures::two_cell();
  const auto space = enumerate(cfg);
  const GameContext ctx(space, AggregationScheme::from_config(cfg));
  SearchOptions so;
  so.mode = SearchMode::best_response;
  so.seed = 99;
  so.trace = true;
  const auto a = find_nash(ctx, {}, so);
  so.jobs = 1;
  const auto b = find_nash(ctx, {}, so);
  ASSERT_EQ(a.equilibria.size(), b.equilibria.size());
  for (std::size_t i = 0; i < a.equilibria.size(); ++i)
    EXPECT_EQ(*a.equilibria[i].policy, *b.equilibria[i].policy);
  EXPECT_EQ(a.trace.size(), b.trace.size());
}

TEST(Optimal, DominatesEveryPolicyAndEveryEquilibrium) {
  const auto cfg = fixtures::twins(2.0);
  const auto space = enumerate(cfg);
  const GameContext ctx(space, AggregationScheme::from_config(cfg));
  const auto opt = optimal_policy(ctx);
  ASSERT_TRUE(opt.exhaustive);
  for (std::uint64_t i = 0; i < ctx.policy_count(); ++i)
    EXPECT_LE(ctx.evaluate(ctx.policy_at(i), {}, false).global_utility,
              opt.best.global_utility + 1e-12);
  for (const auto& eq : find_nash(ctx).equilibria)
    EXPECT_LE(eq.global_utility, opt.best.global_utility + 1e-12);
}

TEST(Optimal, BeatsRandomPoliciesOnTwoCells) {
  const auto cfg = fixtures::two_cell();
  const auto space = enumerate(cfg);
  const GameContext ctx(space, AggregationScheme::from_config(cfg));
  SearchOptions so;
  so.optimal_exhaustive_limit = 1u << 14;
  const auto opt = optimal_policy(ctx, {}, so);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i)
    EXPECT_LE(ctx.evaluate(random_policy(ctx, rng), {}, false).global_utility,
              opt.best.global_utility + (opt.exhaustive ? 1e-12 : 1e-3));
}

TEST(Baseline, PeakRateMatchesOracleChain) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 10; ++i) {
    const auto cfg = oracle::random_instance(rng, 200);
    const auto space = enumerate(cfg);
    const auto ev = evaluate_baseline(space, Baseline::peak_rate);
    const auto choose = oracle::peak_rate_chooser(cfg);
    const auto chain = oracle::build_chain(cfg, choose);
    const auto pi = oracle::stationary(chain);
    double lost = 0.0;
    for (std::size_t k = 0; k < chain.states.size(); ++k)
      for (int n = 0; n < cfg.num_classes(); ++n)
        if (choose(n, chain.states[k]) < 0) lost += cfg.arrival_rate[n] * pi[k];
    EXPECT_NEAR(ev.overall_blocking, lost / cfg.total_arrival_rate(), 1e-9);
    EXPECT_EQ(ev.num_labels, 1);
  }
}

TEST(Baseline, InstantaneousRateTieBreaksToFirstSystem) {
  const auto cfg = fixtures::twins();
  const auto space = enumerate(cfg);
  const AdmissionTable admission(space, InstantaneousRateRule{}, Admission::redirect);
  EXPECT_EQ(admission.target(0, 0), 0);
  NetworkState m(1, 2);
  m.set(0, 0, 1);
  EXPECT_EQ(admission.target(0, space.index_of(m)), 1);
  const auto ev = evaluate_baseline(space, Baseline::instantaneous_rate);
  EXPECT_EQ(ev.num_labels, space.size());
}
