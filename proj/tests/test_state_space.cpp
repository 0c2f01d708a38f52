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

#include <random>
#include <set>

#include "hetassoc/state_space.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace hetassoc;

namespace {

NetworkState occupancy(int N, int S, std::initializer_list<int> values) {
  NetworkState m(N, S);
  int i = 0;
  for (int v : values) {
    m.set(i % N, i / N, v);
    ++i;
  }
  return m;
}

}  // namespace

TEST(Throughput, SpecExamples) {
  auto cfg = fixtures::erlang();
  EXPECT_DOUBLE_EQ(throughput(cfg, occupancy(1, 1, {1}), 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(throughput(cfg, occupancy(1, 1, {2}), 0, 0), 1.0);
  cfg.peak_rate = {{10.0}};
  EXPECT_DOUBLE_EQ(throughput(cfg, occupancy(1, 1, {3}), 0, 0), 2.0);  // t_max binds
}

TEST(Throughput, SharingScope) {
  auto cfg = fixtures::twins();
  const auto m = occupancy(1, 2, {1, 1});
  EXPECT_DOUBLE_EQ(throughput(cfg, m, 0, 0), 2.0);
  cfg.sharing_scope = SharingScope::network_wide;
  EXPECT_DOUBLE_EQ(throughput(cfg, m, 0, 0), 1.0);
}

TEST(Throughput, GainTable) {
  auto cfg = fixtures::erlang();
  cfg.scheduler_gain = {1.0, 1.5};
  cfg.t_max = 5.0;
  EXPECT_DOUBLE_EQ(throughput(cfg, occupancy(1, 1, {2}), 0, 0), 1.5);
  EXPECT_DOUBLE_EQ(throughput(cfg, occupancy(1, 1, {3}), 0, 0), 1.0);
}

TEST(Feasibility, SpecExamples) {
  const auto cfg = fixtures::erlang();
  EXPECT_TRUE(is_feasible(cfg, occupancy(1, 1, {0})));
  EXPECT_TRUE(is_feasible(cfg, occupancy(1, 1, {2})));
  EXPECT_FALSE(is_feasible(cfg, occupancy(1, 1, {3})));

  NetworkConfig two = cfg;
  two.class_names = {"a", "b"};
  two.peak_rate = {{2.0}, {1.2}};
  two.arrival_rate = {1.0, 1.0};
  EXPECT_FALSE(is_feasible(two, occupancy(2, 1, {1, 1})));
  EXPECT_TRUE(is_feasible(two, occupancy(2, 1, {1, 0})));
}

TEST(Enumerate, ErlangFixtureHasThreeStates) {
  const auto space = enumerate(fixtures::erlang());
  ASSERT_EQ(space.size(), 3);
  EXPECT_EQ(space.state(0).total(), 0);
  EXPECT_EQ(space.state(2).count(0, 0), 2);
  EXPECT_EQ(space.arrival(2, 0, 0), StateSpace::kNone);
  EXPECT_EQ(space.arrival(0, 0, 0), 1);
  EXPECT_EQ(space.departure(0, 0, 0), StateSpace::kNone);
  EXPECT_DOUBLE_EQ(space.rate(2, 0, 0), 1.0);
}

TEST(Enumerate, IndependentCopiesMultiply) {
  EXPECT_EQ(enumerate(fixtures::twins()).size(), 9);
}

TEST(Enumerate, RatesAtTheFloorAllowOneUserPerSystem) {
  auto cfg = fixtures::twins();
  cfg.t_min = cfg.t_max = 2.0;
  const auto space = enumerate(cfg);
  EXPECT_EQ(space.size(), 4);
  for (const auto& m : space.states()) EXPECT_LE(m.system_total(0), 1);
}

TEST(Enumerate, SingleClassCapacityFormula) {
  for (double d : {1.0, 2.5, 3.0, 7.9, 12.0}) {
    auto cfg = fixtures::erlang();
    cfg.peak_rate = {{d}};
    cfg.t_max = 100.0;
    int brute = 0;
    for (int k = 0; k <= 100; ++k)
      if (is_feasible(cfg, occupancy(1, 1, {k}))) ++brute;
    EXPECT_EQ(enumerate(cfg).size(), static_cast<int>(std::floor(d / cfg.t_min + 1e-12)) + 1);
    EXPECT_EQ(enumerate(cfg).size(), brute);
  }
}

TEST(Enumerate, CeilingRaisesCapacityError) {
  EXPECT_THROW(enumerate(fixtures::hsdpa_lte(), 10), CapacityError);
}

TEST(Enumerate, MatchesBruteForceAndIsDeterministic) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    const auto cfg = oracle::random_instance(rng);
    const auto space = enumerate(cfg);
    const auto brute = oracle::all_states(cfg);
    ASSERT_EQ(space.size(), static_cast<int>(brute.size()));
    for (int id = 0; id < space.size(); ++id)
      EXPECT_EQ(space.state(id).occupancy(), brute[static_cast<std::size_t>(id)]);
    const auto again = enumerate(cfg);
    EXPECT_EQ(again.states(), space.states());
  }
}

TEST(Enumerate, PaperInstanceSize) {
  const auto space = enumerate(fixtures::hsdpa_lte());
  EXPECT_EQ(space.size(), static_cast<int>(oracle::all_states(fixtures::hsdpa_lte()).size()));
  EXPECT_EQ(space.index_of(space.state(17)), 17);
  EXPECT_FALSE(space.contains(space.state(space.size() - 1).with_arrival(1, 0)));
}

TEST(StateTable, CsvHasOneRowPerState) {
  std::ostringstream os;
  write_state_table(os, enumerate(fixtures::erlang()));
  EXPECT_EQ(os.str(), "id,M_all_cell,t_all_cell\n0,0,0\n1,1,2\n2,2,1\n");
}
