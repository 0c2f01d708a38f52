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

#include "hetassoc/monte_carlo.hpp"
#include "support/fixtures.hpp"
#include "support/mc_check.hpp"

using namespace hetassoc;

TEST(MonteCarlo, ErlangBlockingAndVolumes) {
  const auto space = enumerate(fixtures::erlang());
  const AdmissionTable admission(space, PeakRateRule{}, Admission::redirect);
  const auto out = mc_check::run(space, admission, 1000000, 7);
  EXPECT_NEAR(out.report.blocking[0].mean, 0.2, 0.005);
  EXPECT_EQ(out.report.arrivals + out.report.departures, 1000000u);
  const auto& e1 = out.report.entry_volume.at({0, 0, 1});
  EXPECT_TRUE(e1.contains(5.0 / 3.0)) << e1.mean << " +- " << e1.half_width;
  const auto& e2 = out.report.entry_volume.at({0, 0, 2});
  EXPECT_TRUE(e2.contains(4.0 / 3.0)) << e2.mean << " +- " << e2.half_width;
  for (const auto& r : out.rows)
    EXPECT_TRUE(r.inside()) << r.quantity << ' ' << r.key << ": " << r.analytic << " vs "
                            << r.estimate.mean << " +- " << r.estimate.half_width;
  EXPECT_TRUE(out.report.warnings.empty());
}

TEST(MonteCarlo, TwoCellPolicyInsideFamilyIntervals) {
  const auto cfg = fixtures::two_cell();
  const auto space = enumerate(cfg);
  const auto scheme = AggregationScheme::from_config(cfg);
  Policy p(2, 9, 0);
  for (int l = 0; l < 9; ++l) p.set(1, l, 1);  // far users prefer B
  const AdmissionTable admission(space, PolicyRule{p, scheme}, Admission::redirect);
  const auto out = mc_check::run(space, admission, 1000000, 2024);
  for (const auto& r : out.rows)
    EXPECT_TRUE(r.inside()) << r.quantity << ' ' << r.key << ": " << r.analytic << " vs "
                            << r.estimate.mean << " +- " << r.estimate.half_width;
}

TEST(MonteCarlo, SameSeedSameReport) {
  const auto space = enumerate(fixtures::twins());
  const AdmissionTable admission(space, InstantaneousRateRule{}, Admission::redirect);
  SimOptions opt;
  opt.events = 200000;
  opt.seed = 5;
  const auto a = simulate(space, admission, opt);
  const auto b = simulate(space, admission, opt);
  EXPECT_EQ(a.simulated_time, b.simulated_time);
  EXPECT_EQ(a.blocked, b.blocked);
  for (int id = 0; id < space.size(); ++id)
    EXPECT_EQ(a.occupancy[static_cast<std::size_t>(id)].mean,
              b.occupancy[static_cast<std::size_t>(id)].mean);
  opt.seed = 6;
  EXPECT_NE(simulate(space, admission, opt).simulated_time, a.simulated_time);
}

TEST(MonteCarlo, ShortHorizonWarns) {
  const auto space = enumerate(fixtures::erlang());
  SimOptions opt;
  opt.events = 5000;
  const auto r = simulate(space, PeakRateRule{}, Admission::redirect, opt);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("unreliable"), std::string::npos);
}

TEST(MonteCarlo, OccupancySumsToOne) {
  const auto space = enumerate(fixtures::two_cell());
  SimOptions opt;
  opt.events = 100000;
  const auto r = simulate(space, PeakRateRule{}, Admission::strict, opt);
  double total = 0.0;
  for (const auto& e : r.occupancy) total += e.mean;
  EXPECT_NEAR(total, 1.0, 1e-12);
}
