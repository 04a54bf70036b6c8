#include <gtest/gtest.h>

#include <phca/phca.hpp>

#include "support/fixtures.hpp"

// Randomised checks of invariants that must hold for any input.

TEST(Property, GeneratorOutputAlwaysValid) {
  const auto inst = fixtures::feeder6();
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto set = phca::generate_synthetic(inst.net, 2, 1 + seed % 30, seed);
    EXPECT_TRUE(phca::check_scenarios(set, inst.net).empty()) << "seed " << seed;
    for (const auto& day : set.days)
      for (double a : day.alpha.data) {
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
      }
  }
}

TEST(Property, ScenarioRoundTripForRandomShapes) {
  phca::Rng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const auto net = fixtures::random_radial(rng, 4 + rng.index(8));
    const auto set = phca::generate_synthetic(net, 1 + rng.index(4), 1 + rng.index(6), rng.split());
    fixtures::TempDir dir("prop_rt");
    phca::write_scenarios(dir.path(), set);
    EXPECT_EQ(phca::load_scenarios(dir.path(), net), set);
  }
}

TEST(Property, NetworkJsonRoundTrip) {
  phca::Rng rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    const auto net = fixtures::random_radial(rng, 3 + rng.index(20));
    EXPECT_EQ(phca::network_from_json(phca::to_json(net)), net);
  }
}

TEST(Property, InjectionsAreLinearInPsi) {
  const auto inst = fixtures::feeder6();
  phca::Rng rng(13);
  const auto& day = inst.scenarios.days[3];
  for (int rep = 0; rep < 20; ++rep) {
    const auto t = rng.index(day.snapshots());
    const std::vector<double> a{rng.uniform(0, 1.2), rng.uniform(0, 1.2)}, b{rng.uniform(0, 1.2), rng.uniform(0, 1.2)};
    const std::vector<double> ab{a[0] + b[0], a[1] + b[1]}, zero{0.0, 0.0};
    const auto ia = phca::injection_vectors(inst.net, a, day.alpha.row(t), day.d.row(t), day.e.row(t));
    const auto ib = phca::injection_vectors(inst.net, b, day.alpha.row(t), day.d.row(t), day.e.row(t));
    const auto iab = phca::injection_vectors(inst.net, ab, day.alpha.row(t), day.d.row(t), day.e.row(t));
    const auto i0 = phca::injection_vectors(inst.net, zero, day.alpha.row(t), day.d.row(t), day.e.row(t));
    for (std::size_t j = 0; j < i0.p.size(); ++j) {
      EXPECT_NEAR(iab.p[j] - i0.p[j], (ia.p[j] - i0.p[j]) + (ib.p[j] - i0.p[j]), 1e-12);
      EXPECT_NEAR(iab.q[j] - i0.q[j], (ia.q[j] - i0.q[j]) + (ib.q[j] - i0.q[j]), 1e-12);
    }
  }
}

TEST(Property, FeasiblePsiScoresRawCapacity) {
  const auto inst = fixtures::feeder6();
  phca::RiskEvaluator eval(inst.net, inst.scenarios);
  phca::Rng rng(14);
  int feasible = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const std::vector<double> psi{rng.uniform(0, 0.6), rng.uniform(0, 0.6)};
    const auto res = eval.penalized_objective(psi, fixtures::kFeederEpsBar);
    if (res.eps_hat <= fixtures::kFeederEpsBar) {
      ++feasible;
      EXPECT_EQ(res.objective, psi[0] + psi[1]);
    } else {
      EXPECT_LT(res.objective, psi[0] + psi[1]);
    }
  }
  EXPECT_GT(feasible, 30);
}

TEST(Property, ViolationProbabilityMonotoneAlongRay) {
  // More of the same installation never repairs a day on this feeder.
  const auto inst = fixtures::feeder6();
  phca::RiskEvaluator eval(inst.net, inst.scenarios);
  phca::Rng rng(15);
  for (int rep = 0; rep < 5; ++rep) {
    const double a = rng.uniform(), b = rng.uniform();
    double prev = 0.0;
    for (double s = 0.0; s <= 1.2; s += 0.1) {
      const std::vector<double> psi{s * a, s * b};
      const double e = eval.violation_probability(psi).eps_hat;
      EXPECT_GE(e, prev);
      prev = e;
    }
  }
}

TEST(Property, PenaltyNeverRewardsViolation) {
  phca::Rng rng(16);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t N = 1 + rng.index(200), L = 1 + rng.index(6);
    const double eps_bar = rng.uniform(0.01, 0.5), raw = rng.uniform(0, 10);
    const std::size_t k = rng.index(N + 1);
    const double c = phca::penalized_value(raw, k, N, eps_bar, L);
    if (static_cast<double>(k) <= eps_bar * static_cast<double>(N))
      EXPECT_EQ(c, raw);
    else
      EXPECT_LT(c, raw);
  }
}
