#include "kinkfield/mpo.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace kinkfield;

namespace {

// Hamiltonian assembled in the explicit gradient form
//   sum_x [ pi_x^2/2 + (phi_{x+1} - phi_x)^2/2 + mu0^2/2 phi_x^2 + lambda0/4! phi_x^4 ]
// which is an independent route from both the MPO and the h_x grouping.
MatrixXd gradient_form_hamiltonian(const ModelSpec& spec) {
  const std::size_t n = oracle_detail::pow_size(spec.d, spec.L);
  const MatrixXd pi2 = local_operator(OpKind::pi_sq, spec.d).matrix;
  const MatrixXd phi = local_operator(OpKind::phi, spec.d).matrix;
  const MatrixXd phi2 = local_operator(OpKind::phi_sq, spec.d).matrix;
  const MatrixXd phi4 = local_operator(OpKind::phi_4, spec.d).matrix;

  MatrixXd h = MatrixXd::Zero(n, n);
  VectorXd basis = VectorXd::Zero(n), col(n);
  auto apply = [&](const VectorXd& in, VectorXd& out) {
    out.setZero(n);
    for (int x = 0; x < spec.L; ++x) {
      oracle_detail::accumulate_local(pi2, x, spec, 0.5, in, out);
      oracle_detail::accumulate_local(phi2, x, spec, 0.5 * spec.mu0_sq, in, out);
      oracle_detail::accumulate_local(phi4, x, spec, spec.lambda0 / 24.0, in, out);
    }
    for (const auto& [x1, x2, sign] : oracle_detail::hamiltonian_bonds(spec).bonds) {
      // (phi_b - phi_a)^2 / 2 with the TPBC wrap bond using (phi_b + phi_a)^2 / 2
      oracle_detail::accumulate_local(phi2, x1, spec, 0.5, in, out);
      oracle_detail::accumulate_local(phi2, x2, spec, 0.5, in, out);
      oracle_detail::accumulate_pair(phi, x1, phi, x2, spec, -sign, in, out);
    }
  };
  for (std::size_t j = 0; j < n; ++j) {
    basis[j] = 1.0;
    apply(basis, col);
    h.col(j) = col;
    basis[j] = 0.0;
  }
  return h;
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

TEST(HamiltonianMpo, FreePbcMatchesGradientForm) {
  ModelSpec spec{0.5, 0.0, 4, 3, Boundary::PBC};
  MatrixXd dense = mpo_to_dense(build_hamiltonian_mpo(spec));
  MatrixXd direct = gradient_form_hamiltonian(spec);
  EXPECT_LT((dense - direct).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(HamiltonianMpo, AllBoundariesMatchKroneckerOracle) {
  for (Boundary b : {Boundary::OBC, Boundary::PBC, Boundary::TPBC}) {
    ModelSpec spec{-0.4, 1.3, 4, 3, b};
    MatrixXd dense = mpo_to_dense(build_hamiltonian_mpo(spec));
    MatrixXd direct = dense_hamiltonian(spec);
    EXPECT_LT((dense - direct).cwiseAbs().maxCoeff(), 1e-10) << to_string(b);
  }
}

TEST(HamiltonianMpo, PeriodicTwoSiteChainHasTwoBonds) {
  // L=2 PBC: the ring 1-2 and 2-1 bonds both survive, giving -2 phi phi
  ModelSpec spec{0.3, 0.7, 2, 3, Boundary::PBC};
  MatrixXd dense = mpo_to_dense(build_hamiltonian_mpo(spec));
  const MatrixXd h = local_operator(OpKind::h_onsite, spec).matrix;
  const MatrixXd phi = local_operator(OpKind::phi, 3).matrix;
  const MatrixXd id = MatrixXd::Identity(3, 3);
  MatrixXd expect = kron(h, id) + kron(id, h) - 2.0 * kron(phi, phi);
  EXPECT_LT((dense - expect).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(HamiltonianMpo, TwistFlipsOnlyTheWrapBond) {
  ModelSpec pbc{-0.6, 2.0, 4, 2, Boundary::PBC};
  ModelSpec tpbc = pbc;
  tpbc.boundary = Boundary::TPBC;
  MatrixXd diff = mpo_to_dense(build_hamiltonian_mpo(tpbc)) -
                  mpo_to_dense(build_hamiltonian_mpo(pbc));
  const MatrixXd phi = local_operator(OpKind::phi, 2).matrix;
  const MatrixXd id = MatrixXd::Identity(2, 2);
  MatrixXd expect = 2.0 * kron(phi, kron(id, kron(id, phi)));
  EXPECT_LT((diff - expect).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(HamiltonianMpo, DenseReconstructionExactlySymmetric) {
  ModelSpec spec{0.2, 1.1, 3, 2, Boundary::PBC};
  MatrixXd dense = mpo_to_dense(build_hamiltonian_mpo(spec));
  EXPECT_EQ((dense - dense.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HamiltonianMpo, InvariantUnderCyclicRelabeling) {
  ModelSpec spec{-0.3, 1.0, 4, 2, Boundary::PBC};
  MatrixXd h = mpo_to_dense(build_hamiltonian_mpo(spec));
  const std::size_t n = 16;
  // permutation sending site x to site x+1 (mod L)
  MatrixXd p = MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t digits[4];
    std::size_t v = i;
    for (int k = 3; k >= 0; --k) { digits[k] = v % 2; v /= 2; }
    std::size_t j = 0;
    for (int k = 0; k < 4; ++k) j = 2 * j + digits[(k + 3) % 4];
    p(j, i) = 1.0;
  }
  EXPECT_LT((p * h * p.transpose() - h).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(HamiltonianMpo, KinkSectorAboveVacuumSector) {
  ModelSpec pbc{-0.5, 1.0, 4, 3, Boundary::PBC};
  ModelSpec tpbc = pbc;
  tpbc.boundary = Boundary::TPBC;
  Eigen::SelfAdjointEigenSolver<MatrixXd> ep(mpo_to_dense(build_hamiltonian_mpo(pbc)));
  Eigen::SelfAdjointEigenSolver<MatrixXd> et(mpo_to_dense(build_hamiltonian_mpo(tpbc)));
  EXPECT_GE(et.eigenvalues()(0), ep.eigenvalues()(0) - 1e-12);
}

TEST(ProductMpo, IdentityReconstruction) {
  ModelSpec spec{1.0, 0.0, 3, 2, Boundary::PBC};
  MPO id_mpo = build_product_mpo({}, spec);
  EXPECT_LT((mpo_to_dense(id_mpo) - MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(),
            1e-14);
}

TEST(ProductMpo, TwoPointInsertion) {
  ModelSpec spec{1.0, 0.0, 3, 2, Boundary::PBC};
  auto phi_op = local_operator(OpKind::phi, 2);
  MPO two = build_product_mpo({{0, phi_op}, {2, phi_op}}, spec);
  const MatrixXd phi = phi_op.matrix;
  const MatrixXd id = MatrixXd::Identity(2, 2);
  MatrixXd expect = kron(phi, kron(id, phi));
  EXPECT_LT((mpo_to_dense(two) - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ProductMpo, RejectsOutOfRangeSite) {
  ModelSpec spec{1.0, 0.0, 3, 2, Boundary::PBC};
  auto phi_op = local_operator(OpKind::phi, 2);
  EXPECT_THROW(build_product_mpo({{3, phi_op}}, spec), ArgumentError);
  EXPECT_THROW(build_product_mpo({{-1, phi_op}}, spec), ArgumentError);
}

TEST(Mpo, SizeCapEnforced) {
  ModelSpec spec{1.0, 0.0, 14, 2, Boundary::PBC};
  EXPECT_THROW(mpo_to_dense(build_hamiltonian_mpo(spec)), SizeError);
}
