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

#include "hetassoc/ctmc.hpp"
#include "hetassoc/load_aggregation.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace hetassoc;

namespace {

Eigen::MatrixXd dense(const Generator& gen) { return Eigen::MatrixXd(gen.q); }

}  // namespace

TEST(Generator, ErlangBirthDeath) {
  const auto space = enumerate(fixtures::erlang());
  const auto q = dense(build_generator(space, PeakRateRule{}));
  Eigen::MatrixXd expected(3, 3);
  expected << -1, 1, 0,  //
      1, -2, 1,          //
      0, 2, -2;
  EXPECT_LT((q - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SteadyState, ErlangB) {
  const auto space = enumerate(fixtures::erlang());
  const AdmissionTable admission(space, PeakRateRule{}, Admission::redirect);
  const auto ss = solve_steady_state(build_generator(space, admission));
  // Erlang loss with rho = 1, c = 2: pi_k = (1/k!) / (1 + 1 + 1/2).
  const double z = 1.0 + 1.0 + 0.5;
  EXPECT_NEAR(ss.pi[0], 1.0 / z, 1e-12);
  EXPECT_NEAR(ss.pi[1], 1.0 / z, 1e-12);
  EXPECT_NEAR(ss.pi[2], 0.5 / z, 1e-12);
  EXPECT_LE(ss.residual, kResidualTol);
  EXPECT_NEAR(class_blocking(admission, ss, 0), 0.2, 1e-12);
  const std::vector<int> one_label(3, 0);
  const auto b = blocking_by_label(admission, one_label, 1, ss, 0);
  EXPECT_NEAR(b.rate[0], 0.2, 1e-12);
}

TEST(SteadyState, LightTrafficConcentratesOnEmptyState) {
  auto cfg = fixtures::erlang();
  cfg.arrival_rate = {1e-9};
  const auto space = enumerate(cfg);
  const auto ss = solve_steady_state(build_generator(space, PeakRateRule{}));
  EXPECT_NEAR(ss.pi[0], 1.0, 1e-8);
}

TEST(SteadyState, IndependentSystemsFactorize) {
  // Class 0 only fits system 0 well, class 1 only system 1; the peak-rate
  // rule splits them disjointly.
  NetworkConfig cfg;
  cfg.system_names = {"a", "b"};
  cfg.class_names = {"x", "y"};
  cfg.peak_rate = {{3.0, 0.5}, {0.5, 2.0}};
  cfg.t_min = 1.0;
  cfg.t_max = 3.0;
  cfg.arrival_rate = {1.3, 0.7};
  cfg.service_rate = 1.0;
  cfg.thresholds = {{0.3, 0.7}, {0.3, 0.7}};
  const auto space = enumerate(cfg);
  const auto ss = solve_steady_state(build_generator(space, PeakRateRule{}, Admission::strict));
  // Marginals: Erlang loss with 3 servers at rho 1.3 and 2 servers at 0.7.
  auto erlang = [](double rho, int c) {
    std::vector<double> p(static_cast<std::size_t>(c + 1));
    double term = 1.0, z = 0.0;
    for (int k = 0; k <= c; ++k) {
      if (k) term *= rho / k;
      p[static_cast<std::size_t>(k)] = term;
      z += term;
    }
    for (double& v : p) v /= z;
    return p;
  };
  const auto pa = erlang(1.3, 3);
  const auto pb = erlang(0.7, 2);
  double total = 0.0;
  for (int id = 0; id < space.size(); ++id) {
    const auto& m = space.state(id);
    const double expected = m.count(1, 0) == 0 && m.count(0, 1) == 0
                                ? pa[static_cast<std::size_t>(m.count(0, 0))] *
                                      pb[static_cast<std::size_t>(m.count(1, 1))]
                                : 0.0;
    EXPECT_NEAR(ss.pi[static_cast<std::size_t>(id)], expected, 1e-10) << m.to_string();
    total += ss.pi[static_cast<std::size_t>(id)];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Generator, RedirectionAndBlockingEdges) {
  const auto cfg = fixtures::twins();
  const auto space = enumerate(cfg);
  // Everyone prefers system a.
  const AggregationScheme scheme = AggregationScheme::from_config(cfg);
  const PolicyRule rule{Policy(1, 9, 0), scheme};
  const AdmissionTable redirect(space, rule, Admission::redirect);
  const AdmissionTable strict(space, rule, Admission::strict);
  NetworkState full_a(1, 2);
  full_a.set(0, 0, 2);
  const int id = space.index_of(full_a);
  EXPECT_EQ(redirect.target(0, id), 1);
  EXPECT_EQ(strict.target(0, id), kReject);
  NetworkState full(1, 2);
  full.set(0, 0, 2);
  full.set(0, 1, 2);
  const int top = space.index_of(full);
  EXPECT_TRUE(redirect.blocks(0, top));

  const auto q = dense(build_generator(space, redirect));
  EXPECT_DOUBLE_EQ(q(id, space.index_of(full_a.with_arrival(0, 1))), cfg.arrival_rate[0]);
  double up = 0.0;
  for (int j = 0; j < space.size(); ++j)
    if (space.state(j).total() > full.total()) up += q(top, j);
  EXPECT_EQ(up, 0.0);
}

TEST(Generator, MatchesDenseOracle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 25; ++i) {
    const auto cfg = oracle::random_instance(rng);
    const auto space = enumerate(cfg);
    for (const auto mode : {Admission::redirect, Admission::strict}) {
      const AdmissionTable admission(space, PeakRateRule{}, mode);
      const auto gen = build_generator(space, admission);
      const auto chain =
          oracle::build_chain(cfg, oracle::peak_rate_chooser(cfg, mode == Admission::strict));
      ASSERT_EQ(chain.q.rows(), space.size());
      EXPECT_LT((dense(gen) - chain.q).cwiseAbs().maxCoeff(), 1e-12);
      const auto ss = solve_steady_state(gen);
      const auto pi = oracle::stationary(chain);
      for (int id = 0; id < space.size(); ++id)
        EXPECT_NEAR(ss.pi[static_cast<std::size_t>(id)], pi[static_cast<std::size_t>(id)], 1e-10);
    }
  }
}

TEST(SteadyState, UnreachableStatesGetNoMass) {
  // Strict admission to system a only: system b is never used.
  const auto cfg = fixtures::twins();
  const auto space = enumerate(cfg);
  const PolicyRule rule{Policy(1, 9, 0), AggregationScheme::from_config(cfg)};
  const auto ss = solve_steady_state(build_generator(space, rule, Admission::strict));
  for (int id = 0; id < space.size(); ++id) {
    const bool uses_b = space.state(id).count(0, 1) > 0;
    EXPECT_EQ(ss.reachable[static_cast<std::size_t>(id)], !uses_b);
    if (uses_b) EXPECT_EQ(ss.pi[static_cast<std::size_t>(id)], 0.0);
  }
  EXPECT_LE(ss.residual, kResidualTol);
}

TEST(Blocking, LabelsAndNumerators) {
  const auto cfg = fixtures::twins(3.0);
  const auto space = enumerate(cfg);
  const auto scheme = AggregationScheme::from_config(cfg);
  const auto labels = label_table(scheme, space);
  const AdmissionTable admission(space, PeakRateRule{}, Admission::redirect);
  const auto ss = solve_steady_state(build_generator(space, admission));
  const auto restricted = blocking_by_label(admission, labels, 9, ss, 0);
  const auto verbatim =
      blocking_by_label(admission, labels, 9, ss, 0, BlockingNumerator::verbatim);
  const auto mass = label_masses(ss, labels, 9);
  double total_mass = 0.0;
  for (double m : mass) total_mass += m;
  EXPECT_NEAR(total_mass, 1.0, 1e-12);
  // Only the fully loaded label HH blocks; the empty-state label LL never.
  EXPECT_EQ(restricted.rate[0], 0.0);
  EXPECT_NEAR(restricted.rate[8], 1.0, 1e-12);
  const double b = class_blocking(admission, ss, 0);
  for (int l = 0; l < 9; ++l) {
    const auto k = static_cast<std::size_t>(l);
    EXPECT_GE(restricted.rate[k], 0.0);
    EXPECT_LE(restricted.rate[k], 1.0);
    if (!verbatim.empty[k]) EXPECT_NEAR(verbatim.rate[k], b / mass[k], 1e-12);
  }
  EXPECT_NEAR(overall_blocking(space, ss, admission), b, 1e-15);
}

TEST(Generator, RowsSumToZeroAndTripletsExport) {
  const auto space = enumerate(fixtures::hsdpa_lte());
  const auto gen = build_generator(space, InstantaneousRateRule{});
  const Eigen::VectorXd sums = gen.q * Eigen::VectorXd::Ones(space.size());
  EXPECT_LE(sums.cwiseAbs().maxCoeff(), 1e-12);
  std::ostringstream os;
  write_generator_triplets(os, build_generator(enumerate(fixtures::erlang()), PeakRateRule{}));
  EXPECT_EQ(os.str(), "0 0 -1\n0 1 1\n1 0 1\n1 1 -2\n1 2 1\n2 1 2\n2 2 -2\n");
}
