#include "kinkfield/mps.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "kinkfield/oracle.hpp"

using namespace kinkfield;

namespace {

VectorXd unit_vector(int d, int k) {
  VectorXd v = VectorXd::Zero(d);
  v(k) = 1.0;
  return v;
}

}  // namespace

TEST(RandomMps, ProductStateNormalized) {
  ModelSpec spec{1.0, 0.0, 5, 2, Boundary::PBC};
  FiniteMPS psi = random_mps(spec, 1, 3);
  EXPECT_NEAR(overlap(psi, psi), 1.0, 1e-12);
}

TEST(RandomMps, DeterministicFromSeed) {
  ModelSpec spec{1.0, 0.0, 4, 3, Boundary::OBC};
  FiniteMPS a = random_mps(spec, 3, 42);
  FiniteMPS b = random_mps(spec, 3, 42);
  for (int x = 0; x < 4; ++x)
    for (std::size_t i = 0; i < a.sites[x].size(); ++i)
      EXPECT_EQ(a.sites[x][i], b.sites[x][i]);
  FiniteMPS c = random_mps(spec, 3, 43);
  EXPECT_NE(a.sites[0][0], c.sites[0][0]);
}

TEST(RandomMps, FullBondDimensionRoundTrip) {
  // chi = d^{L/2} represents any vector: dense -> MPS -> dense is exact
  ModelSpec spec{1.0, 0.0, 4, 2, Boundary::OBC};
  DeterministicRng rng(99);
  VectorXd target(16);
  for (int i = 0; i < 16; ++i) target(i) = rng.uniform();
  target.normalize();
  FiniteMPS psi = mps_from_dense(target, spec, 4);
  VectorXd back = mps_to_dense(psi);
  EXPECT_LT((back - target).norm(), 1e-12);
}

TEST(Canonicalize, GaugeIdentitiesHold) {
  ModelSpec spec{1.0, 0.0, 5, 2, Boundary::OBC};
  FiniteMPS psi = random_mps(spec, 3, 7);
  FiniteMPS left = canonicalize(psi, Gauge::left);
  for (int x = 0; x + 1 < 5; ++x) {
    const DenseTensor& m = left.sites[x];
    MatrixXd a = m.permuted({1, 0, 2})
                     .reshaped({m.extent(1) * m.extent(0), m.extent(2)})
                     .to_matrix(1);
    MatrixXd gram = a.transpose() * a;
    EXPECT_LT((gram - MatrixXd::Identity(gram.rows(), gram.cols()))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
  FiniteMPS right = canonicalize(psi, Gauge::right);
  for (int x = 1; x < 5; ++x) {
    const DenseTensor& m = right.sites[x];
    MatrixXd a = m.permuted({1, 0, 2})
                     .reshaped({m.extent(1), m.extent(0) * m.extent(2)})
                     .to_matrix(1);
    MatrixXd gram = a * a.transpose();
    EXPECT_LT((gram - MatrixXd::Identity(gram.rows(), gram.cols()))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(Canonicalize, PreservesStateAndIsIdempotent) {
  ModelSpec spec{1.0, 0.0, 4, 2, Boundary::OBC};
  FiniteMPS psi = random_mps(spec, 3, 11);
  VectorXd before = mps_to_dense(psi);
  FiniteMPS mixed = canonicalize(psi, Gauge::mixed, 2);
  VectorXd after = mps_to_dense(mixed);
  EXPECT_LT(std::abs(std::abs(before.dot(after)) /
                         (before.norm() * after.norm()) -
                     1.0),
            1e-10);
  EXPECT_LT((before - after).norm() / before.norm(), 1e-10);

  FiniteMPS again = canonicalize(mixed, Gauge::mixed, 2);
  for (int x = 0; x < 4; ++x)
    for (std::size_t i = 0; i < mixed.sites[x].size(); ++i)
      EXPECT_NEAR(again.sites[x][i], mixed.sites[x][i], 1e-12);
}

TEST(Canonicalize, RejectsPeriodicInput) {
  ModelSpec spec{1.0, 0.0, 4, 2, Boundary::PBC};
  FiniteMPS psi = random_mps(spec, 2, 5);
  EXPECT_THROW(canonicalize(psi, Gauge::left), UnsupportedGaugeError);
}

TEST(Overlap, SelfAndOrthogonal) {
  ModelSpec spec{1.0, 0.0, 4, 2, Boundary::OBC};
  FiniteMPS psi = random_mps(spec, 3, 21);
  EXPECT_NEAR(overlap(psi, psi), 1.0, 1e-12);

  std::vector<VectorXd> zeros(4, unit_vector(2, 0));
  std::vector<VectorXd> one_flip = zeros;
  one_flip[2] = unit_vector(2, 1);
  FiniteMPS a = product_mps(spec, zeros, 1, 0.0, 1);
  FiniteMPS b = product_mps(spec, one_flip, 1, 0.0, 1);
  EXPECT_NEAR(overlap(a, b), 0.0, 1e-14);
}

TEST(Overlap, MatchesDenseInnerProduct) {
  ModelSpec spec{1.0, 0.0, 5, 2, Boundary::OBC};
  FiniteMPS a = random_mps(spec, 3, 31);
  FiniteMPS b = random_mps(spec, 3, 32);
  double dense = mps_to_dense(a).dot(mps_to_dense(b));
  EXPECT_NEAR(overlap(a, b), dense, 1e-12);
  EXPECT_NEAR(overlap(a, b, /*right_to_left=*/true), dense, 1e-12);
}

TEST(Expectation, IdentityMpoIsOne) {
  ModelSpec spec{0.4, 1.0, 5, 3, Boundary::PBC};
  FiniteMPS psi = random_mps(spec, 4, 8);
  MPO id = build_product_mpo({}, spec);
  EXPECT_NEAR(expectation(psi, id), 1.0, 1e-12);
}

TEST(Expectation, HamiltonianMatchesDenseQuadraticForm) {
  for (Boundary b : {Boundary::OBC, Boundary::PBC, Boundary::TPBC}) {
    ModelSpec spec{-0.3, 1.2, 4, 3, b};
    FiniteMPS psi = random_mps(spec, 3, 13);
    MPO h = build_hamiltonian_mpo(spec);
    VectorXd v = mps_to_dense(psi);
    double dense_val = v.dot(dense_hamiltonian(spec) * v) / v.squaredNorm();
    EXPECT_NEAR(expectation(psi, h), dense_val, 1e-10) << to_string(b);
    EXPECT_NEAR(expectation(psi, h, true), dense_val, 1e-10) << to_string(b);
  }
}

TEST(Expectation, SingleExcitedSite) {
  // |1> at site 1, |0> elsewhere; with d = 3 the truncated phi^2 already
  // carries the full <1|phi^2|1> = 3/2
  ModelSpec spec{1.0, 0.0, 4, 3, Boundary::PBC};
  std::vector<VectorXd> locals(4, unit_vector(3, 0));
  locals[1] = unit_vector(3, 1);
  FiniteMPS psi = product_mps(spec, locals, 1, 0.0, 1);

  auto phi = local_operator(OpKind::phi, 3);
  auto phi2 = local_operator(OpKind::phi_sq, 3);
  MPO phi_mpo = build_product_mpo({{1, phi}}, spec);
  MPO phi2_mpo = build_product_mpo({{1, phi2}}, spec);
  EXPECT_NEAR(expectation(psi, phi_mpo), 0.0, 1e-13);
  EXPECT_NEAR(expectation(psi, phi2_mpo), 1.5, 1e-13);

  auto per_site = site_expectations(psi, phi2.matrix);
  EXPECT_NEAR(per_site[1], 1.5, 1e-13);
  EXPECT_NEAR(per_site[0], 0.5, 1e-13);  // <0|phi^2|0> at d = 3
}

TEST(Expectation, ProductMpoFactorizesOverProductStates) {
  ModelSpec spec{1.0, 0.0, 4, 3, Boundary::PBC};
  DeterministicRng rng(55);
  std::vector<VectorXd> locals;
  for (int x = 0; x < 4; ++x) {
    VectorXd v(3);
    for (int i = 0; i < 3; ++i) v(i) = rng.uniform();
    locals.push_back(v.normalized());
  }
  FiniteMPS psi = product_mps(spec, locals, 1, 0.0, 1);
  auto phi = local_operator(OpKind::phi, 3);
  MPO two = build_product_mpo({{0, phi}, {2, phi}}, spec);
  double expect = (locals[0].dot(phi.matrix * locals[0])) *
                  (locals[2].dot(phi.matrix * locals[2]));
  EXPECT_NEAR(expectation(psi, two), expect, 1e-13);
}

TEST(TwoPoint, VanishesOnProductStates) {
  ModelSpec spec{1.0, 0.0, 6, 2, Boundary::PBC};
  DeterministicRng rng(66);
  std::vector<VectorXd> locals;
  for (int x = 0; x < 6; ++x) {
    VectorXd v(2);
    v << 1.0, 0.3 * rng.uniform();
    locals.push_back(v.normalized());
  }
  FiniteMPS psi = product_mps(spec, locals, 1, 0.0, 1);
  for (double g : connected_two_point(psi, 5)) EXPECT_NEAR(g, 0.0, 1e-12);
}

TEST(TwoPoint, MatchesDenseOracle) {
  for (Boundary b : {Boundary::OBC, Boundary::PBC, Boundary::TPBC}) {
    ModelSpec spec{1.0, 0.0, 5, 2, b};
    FiniteMPS psi = random_mps(spec, 3, 77);
    DenseState st{mps_to_dense(psi).normalized(), spec};
    auto dense = dense_observables(st, 3);
    auto mps_g2 = connected_two_point(psi, 3);
    for (int r = 1; r <= 3; ++r)
      EXPECT_NEAR(mps_g2[r - 1], dense.g2[r - 1], 1e-10) << to_string(b) << " r=" << r;

    auto per_site = site_expectations(
        psi, local_operator(OpKind::phi, spec.d).matrix);
    for (int x = 0; x < spec.L; ++x)
      EXPECT_NEAR(per_site[x], dense.phi[x], 1e-11);
  }
}

TEST(TwoPoint, PeriodicReflectionSymmetry) {
  ModelSpec spec{1.0, 0.0, 6, 2, Boundary::PBC};
  FiniteMPS psi = random_mps(spec, 3, 88);
  auto g2 = connected_two_point(psi, 5);
  EXPECT_NEAR(g2[0], g2[4], 1e-12);  // r = 1 vs r = 5
  EXPECT_NEAR(g2[1], g2[3], 1e-12);  // r = 2 vs r = 4
}

TEST(TwoPoint, AsymptoticDecayBoundedByTransferGap) {
  // uniform periodic state: the decay rate approaches |lambda_2 / lambda_1|
  // of the single-site transfer map
  ModelSpec spec{1.0, 0.0, 40, 2, Boundary::PBC};
  FiniteMPS seed_state = random_mps(spec, 3, 5);
  for (int x = 1; x < spec.L; ++x) seed_state.sites[x] = seed_state.sites[0];

  MatrixXd e = mps_detail::norm_transfer_matrix(seed_state.sites[0],
                                                seed_state.sites[0]);
  auto apply = [&e](const VectorXd& v) { return VectorXd(e * v); };
  auto mags = top_eigenvalue_magnitudes(apply, e.rows(), 2, e.rows());
  const double kappa = mags[1] / mags[0];

  // subleading eigenvalues may form a complex pair, so G2 can oscillate
  // under the kappa^r envelope; check the envelope bound C kappa^r
  auto g2 = connected_two_point(seed_state, 16);
  double c_env = 0.0;
  for (int r = 1; r <= 6; ++r)
    c_env = std::max(c_env, std::abs(g2[r - 1]) / std::pow(kappa, r));
  c_env *= 3.0;
  for (int r = 8; r <= 14; ++r)
    EXPECT_LE(std::abs(g2[r - 1]), c_env * std::pow(kappa, r)) << "r=" << r;
}

TEST(Entropy, ProductStateIsZero) {
  ModelSpec spec{1.0, 0.0, 4, 2, Boundary::OBC};
  std::vector<VectorXd> locals(4, unit_vector(2, 0));
  FiniteMPS psi = product_mps(spec, locals, 1, 0.0, 1);
  EXPECT_NEAR(entanglement_entropy(psi, 2), 0.0, 1e-12);
}

TEST(Entropy, BellPairGivesLogTwo) {
  ModelSpec spec{1.0, 0.0, 2, 2, Boundary::OBC};
  FiniteMPS psi;
  psi.boundary = Boundary::OBC;
  psi.L = 2;
  psi.d = 2;
  DenseTensor m0({2, 1, 2}), m1({2, 2, 1});
  const double c = std::pow(0.5, 0.25);
  m0.at(0, 0, 0) = c;
  m0.at(1, 0, 1) = c;
  m1.at(0, 0, 0) = c;
  m1.at(1, 1, 0) = c;
  psi.sites = {m0, m1};
  EXPECT_NEAR(overlap(psi, psi), 1.0, 1e-12);
  EXPECT_NEAR(entanglement_entropy(psi, 1), std::log(2.0), 1e-12);
}

TEST(Entropy, BoundedByLogChi) {
  ModelSpec spec{1.0, 0.0, 6, 2, Boundary::OBC};
  FiniteMPS psi = random_mps(spec, 3, 123);
  for (int bond = 1; bond < 6; ++bond) {
    double s = entanglement_entropy(psi, bond);
    EXPECT_LE(s, std::log(3.0) + 1e-12);
    EXPECT_GE(s, 0.0);
  }
}

TEST(Gauge, ObservablesInvariantUnderBondGauge) {
  ModelSpec spec{-0.3, 1.1, 4, 2, Boundary::PBC};
  FiniteMPS psi = random_mps(spec, 3, 17);
  MPO h = build_hamiltonian_mpo(spec);

  MatrixXd g(3, 3);
  g << 1.1, 0.2, -0.1,
       0.0, 0.9, 0.3,
       0.1, -0.2, 1.2;  // well-conditioned, far from singular
  FiniteMPS twisted = insert_gauge(psi, 2, g);

  double e0 = expectation(psi, h), e1 = expectation(twisted, h);
  EXPECT_LT(std::abs(e1 - e0) / std::abs(e0), 1e-9);

  auto g2a = connected_two_point(psi, 3);
  auto g2b = connected_two_point(twisted, 3);
  for (int r = 0; r < 3; ++r)
    EXPECT_LT(std::abs(g2b[r] - g2a[r]) /
                  std::max(1e-6, std::abs(g2a[r])),
              1e-9);
}

TEST(Embed, PreservesRepresentedState) {
  ModelSpec spec{0.5, 1.0, 4, 2, Boundary::PBC};
  FiniteMPS psi = random_mps(spec, 2, 19);
  FiniteMPS grown = embed_mps(psi, 4, 1e-8, 3);
  EXPECT_EQ(grown.sites[0].extent(1), 4u);
  MPO h = build_hamiltonian_mpo(spec);
  EXPECT_NEAR(expectation(psi, h), expectation(grown, h), 1e-6);
}
