#include <gtest/gtest.h>

#include <algorithm>

#include <phca/network.hpp>

#include "support/fixtures.hpp"

using phca::Network;

namespace {

Network path3() {
  Network net;
  net.nodes = {{0, 0.81, 1.21}, {1, 0.81, 1.21}, {2, 0.81, 1.21}};
  net.lines = {{0, 1, 0.01, 0.02, 1.0}, {1, 2, 0.01, 0.02, 1.0}};
  net.candidates = {2};
  net.psi_max = {1.0};
  net.eta = {0.0};
  return net;
}

bool mentions(const std::vector<std::string>& errs, const std::string& needle) {
  return std::any_of(errs.begin(), errs.end(), [&](const auto& e) { return e.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Validate, MinimalPathIsValid) { EXPECT_TRUE(phca::validate(path3()).empty()); }

TEST(Validate, TriangleReportsCycleAndEdgeCount) {
  auto net = path3();
  net.lines.push_back({2, 0, 0.01, 0.01, 1.0});
  const auto errs = phca::validate(net);
  EXPECT_TRUE(mentions(errs, "cycle"));
  EXPECT_TRUE(mentions(errs, "not a tree"));
}

TEST(Validate, EqualBoundsRejected) {
  auto net = path3();
  net.nodes[1].v_max = net.nodes[1].v_min;
  EXPECT_TRUE(mentions(phca::validate(net), "voltage bounds"));
}

TEST(Validate, DisconnectedNodeReported) {
  auto net = path3();
  net.nodes.push_back({3, 0.81, 1.21});
  net.lines.push_back({3, 3, 0.01, 0.01, 1.0});
  const auto errs = phca::validate(net);
  EXPECT_TRUE(mentions(errs, "node 3 is not connected"));
  EXPECT_TRUE(mentions(errs, "self loop"));
}

TEST(Validate, DuplicateAndSubstationCandidates) {
  auto net = path3();
  net.candidates = {2, 2};
  net.psi_max = {1, 1};
  net.eta = {0, 0};
  EXPECT_TRUE(mentions(phca::validate(net), "duplicate candidate"));
  net.candidates = {0};
  net.psi_max = {1};
  net.eta = {0};
  EXPECT_TRUE(mentions(phca::validate(net), "not a non-substation node"));
}

TEST(Validate, LineParameterChecks) {
  auto net = path3();
  net.lines[0].r = 0.0;
  net.lines[0].x = 0.0;
  net.lines[1].s_max = 0.0;
  const auto errs = phca::validate(net);
  EXPECT_TRUE(mentions(errs, "line 0: impedance"));
  EXPECT_TRUE(mentions(errs, "line 1: s_max"));
}

TEST(Validate, PerCandidateVectorSizes) {
  auto net = path3();
  net.psi_max = {1.0, 2.0};
  net.eta = {};
  const auto errs = phca::validate(net);
  EXPECT_TRUE(mentions(errs, "psi_max has 2 entries"));
  EXPECT_TRUE(mentions(errs, "eta has 0 entries"));
}

TEST(Topology, OrientsAwayFromSubstation) {
  auto net = path3();
  net.lines[1] = {2, 1, 0.01, 0.02, 1.0};  // written child -> parent
  const phca::RadialTopology topo(net);
  EXPECT_EQ(topo.parent[2], 1);
  EXPECT_EQ(topo.parent[1], 0);
  EXPECT_EQ(topo.line_child[1], 2);
  EXPECT_EQ(topo.order.front(), 0);
}

TEST(Topology, InvalidNetworkThrows) {
  auto net = path3();
  net.lines.pop_back();
  EXPECT_THROW(phca::RadialTopology{net}, phca::NetworkError);
}

TEST(Injections, ZeroInstallation) {
  const auto net = path3();
  const std::vector<double> psi{0.0}, alpha{0.7}, d{0.1, 0.2}, e{0.03, 0.04};
  const auto inj = phca::injection_vectors(net, psi, alpha, d, e);
  EXPECT_EQ(inj.p, (std::vector<double>{-0.1, -0.2}));
  EXPECT_EQ(inj.q, (std::vector<double>{-0.03, -0.04}));
}

TEST(Injections, NoSun) {
  const auto net = path3();
  const std::vector<double> psi{0.9}, alpha{0.0}, d{0.1, 0.2}, e{0.0, 0.0};
  EXPECT_EQ(phca::injection_vectors(net, psi, alpha, d, e).p, (std::vector<double>{-0.1, -0.2}));
}

TEST(Injections, HandExpansionTwoCandidates) {
  Network net;
  for (int i = 0; i < 4; ++i) net.nodes.push_back({i, 0.81, 1.21});
  net.lines = {{0, 1, 0.01, 0.01, 1}, {1, 2, 0.01, 0.01, 1}, {1, 3, 0.01, 0.01, 1}};
  net.candidates = {3, 1};
  net.psi_max = {5, 5};
  net.eta = {0, 0};
  const std::vector<double> psi{1.0, 2.0}, alpha{0.5, 1.0}, zero(3, 0.0);
  const auto inj = phca::injection_vectors(net, psi, alpha, zero, zero);
  EXPECT_EQ(inj.p, (std::vector<double>{2.0, 0.0, 0.5}));
  EXPECT_EQ(inj.q, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(Injections, ReactiveUsesPowerFactorRatio) {
  auto net = path3();
  net.eta = {0.25};
  const std::vector<double> psi{2.0}, alpha{0.5}, d{0, 0}, e{0.1, 0.1};
  const auto inj = phca::injection_vectors(net, psi, alpha, d, e);
  EXPECT_DOUBLE_EQ(inj.q[1], 0.25 * 1.0 - 0.1);
  EXPECT_DOUBLE_EQ(inj.q[0], -0.1);
}

TEST(Injections, DimensionMismatchThrows) {
  const auto net = path3();
  const std::vector<double> psi{1.0, 1.0}, alpha{1.0}, d{0, 0};
  EXPECT_THROW(phca::injection_vectors(net, psi, alpha, d, d), phca::DimensionError);
  const std::vector<double> psi1{1.0}, shortd{0.0};
  EXPECT_THROW(phca::injection_vectors(net, psi1, alpha, shortd, d), phca::DimensionError);
}

TEST(NetworkJson, RoundTripIsExact) {
  phca::Rng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    auto net = fixtures::random_radial(rng, 3 + rep);
    net.substation_v0 = rng.uniform(0.9, 1.1);
    net.eta = {rng.uniform()};
    const auto text = phca::to_json(net).dump();
    EXPECT_EQ(phca::network_from_json(nlohmann::json::parse(text)), net);
  }
}

TEST(NetworkJson, MissingFieldIsNetworkError) {
  auto j = phca::to_json(path3());
  j.erase("candidates");
  EXPECT_THROW(phca::network_from_json(j), phca::NetworkError);
}

TEST(NetworkJson, DefaultSubstationVoltage) {
  auto j = phca::to_json(path3());
  j.erase("substation_v0");
  EXPECT_EQ(phca::network_from_json(j).substation_v0, 1.0);
}

TEST(NetworkJson, BundledFeederIsValid) {
  const auto net = phca::read_network((fixtures::data_dir() / "feeder6" / "network.json").string());
  EXPECT_TRUE(phca::validate(net).empty());
  EXPECT_EQ(net.num_buses(), 5u);
  EXPECT_EQ(net.num_candidates(), 2u);
}
