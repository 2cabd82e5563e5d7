#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "kinkfield/model.hpp"
#include "kinkfield/tensor.hpp"

namespace kinkfield {

/// Exact-diagonalization reference for small chains. Everything here works in
/// the full d^L space and exists to validate the tensor-network code paths.

struct DenseState {
  VectorXd amplitudes;  // length d^L, unit norm
  ModelSpec spec;
};

namespace oracle_detail {

inline std::size_t pow_size(int d, int L) {
  std::size_t n = 1;
  for (int i = 0; i < L; ++i) {
    n *= static_cast<std::size_t>(d);
    if (n > (std::size_t{1} << 40)) throw SizeError("oracle: d^L overflow");
  }
  return n;
}

/// out += c * (op acting on site x) * in, with the state viewed as
/// (pre, d, post) in row-major order.
inline void accumulate_local(const MatrixXd& op, int x, const ModelSpec& spec,
                             double c, const VectorXd& in, VectorXd& out) {
  const int d = spec.d;
  std::size_t pre = 1, post = 1;
  for (int k = 0; k < x; ++k) pre *= d;
  for (int k = x + 1; k < spec.L; ++k) post *= d;
  for (std::size_t p = 0; p < pre; ++p)
    for (int s = 0; s < d; ++s)
      for (int t = 0; t < d; ++t) {
        const double w = c * op(s, t);
        if (w == 0.0) continue;
        const std::size_t row = (p * d + s) * post;
        const std::size_t col = (p * d + t) * post;
        for (std::size_t q = 0; q < post; ++q) out[row + q] += w * in[col + q];
      }
}

/// out += c * (op1 at x1) (op2 at x2) * in, x1 < x2.
inline void accumulate_pair(const MatrixXd& op1, int x1, const MatrixXd& op2,
                            int x2, const ModelSpec& spec, double c,
                            const VectorXd& in, VectorXd& out) {
  const int d = spec.d;
  std::size_t pre = 1, mid = 1, post = 1;
  for (int k = 0; k < x1; ++k) pre *= d;
  for (int k = x1 + 1; k < x2; ++k) mid *= d;
  for (int k = x2 + 1; k < spec.L; ++k) post *= d;
  for (std::size_t p = 0; p < pre; ++p)
    for (int s1 = 0; s1 < d; ++s1)
      for (int t1 = 0; t1 < d; ++t1) {
        if (op1(s1, t1) == 0.0) continue;
        for (std::size_t m = 0; m < mid; ++m)
          for (int s2 = 0; s2 < d; ++s2)
            for (int t2 = 0; t2 < d; ++t2) {
              const double w = c * op1(s1, t1) * op2(s2, t2);
              if (w == 0.0) continue;
              const std::size_t row = (((p * d + s1) * mid + m) * d + s2) * post;
              const std::size_t col = (((p * d + t1) * mid + m) * d + t2) * post;
              for (std::size_t q = 0; q < post; ++q) out[row + q] += w * in[col + q];
            }
      }
}

struct BondList {
  // (x1, x2, sign) with coefficient sign * (-1) * phi_x1 phi_x2
  std::vector<std::tuple<int, int, double>> bonds;
};

inline BondList hamiltonian_bonds(const ModelSpec& spec) {
  BondList b;
  for (int x = 0; x + 1 < spec.L; ++x) b.bonds.emplace_back(x, x + 1, 1.0);
  if (spec.boundary == Boundary::PBC) b.bonds.emplace_back(0, spec.L - 1, 1.0);
  if (spec.boundary == Boundary::TPBC) b.bonds.emplace_back(0, spec.L - 1, -1.0);
  return b;
}

}  // namespace oracle_detail

/// H applied to a state vector without materializing the matrix.
inline void apply_hamiltonian(const ModelSpec& spec, const VectorXd& in, VectorXd& out) {
  using namespace oracle_detail;
  out.setZero(in.size());
  const MatrixXd h = local_operator(OpKind::h_onsite, spec).matrix;
  const MatrixXd phi = local_operator(OpKind::phi, spec.d).matrix;
  for (int x = 0; x < spec.L; ++x) accumulate_local(h, x, spec, 1.0, in, out);
  for (const auto& [x1, x2, sign] : hamiltonian_bonds(spec).bonds)
    accumulate_pair(phi, x1, phi, x2, spec, -sign, in, out);
}

/// Full d^L x d^L Hamiltonian, built from Kronecker-structured local actions.
inline MatrixXd dense_hamiltonian(const ModelSpec& spec, std::size_t cap = 4096) {
  const std::size_t n = oracle_detail::pow_size(spec.d, spec.L);
  if (n > cap) throw SizeError("dense_hamiltonian: d^L exceeds cap");
  MatrixXd h(n, n);
  VectorXd basis = VectorXd::Zero(n), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    basis[j] = 1.0;
    apply_hamiltonian(spec, basis, col);
    h.col(j) = col;
    basis[j] = 0.0;
  }
  return 0.5 * (h + h.transpose());
}

/// Lowest eigenpair of the lattice Hamiltonian. Dense diagonalization below
/// `dense_cap`, matrix-free Lanczos up to `iterative_cap`.
inline std::pair<double, DenseState> dense_ground(const ModelSpec& spec,
                                                  std::size_t dense_cap = 1024,
                                                  std::size_t iterative_cap = 20000) {
  const std::size_t n = oracle_detail::pow_size(spec.d, spec.L);
  DenseState state;
  state.spec = spec;
  if (n <= dense_cap) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(dense_hamiltonian(spec, dense_cap));
    state.amplitudes = es.eigenvectors().col(0);
    return {es.eigenvalues()(0), std::move(state)};
  }
  if (n > iterative_cap) throw SizeError("dense_ground: d^L exceeds iterative cap");
  auto apply = [&spec](const VectorXd& x) {
    VectorXd y;
    apply_hamiltonian(spec, x, y);
    return y;
  };
  auto res = eig_lowest_apply(apply, n, 1, 1e-12);
  state.amplitudes = res.eigenvectors.col(0);
  return {res.eigenvalues[0], std::move(state)};
}

struct DenseObservables {
  std::vector<double> phi;     // <phi_x> per site
  std::vector<double> phi_sq;  // <phi_x^2> per site
  std::vector<double> g2;      // connected two-point, r = 1..r_max
  double energy = 0.0;
};

namespace oracle_detail {

inline double pair_expectation(const DenseState& st, const MatrixXd& op1, int x1,
                               const MatrixXd& op2, int x2) {
  VectorXd out = VectorXd::Zero(st.amplitudes.size());
  if (x1 == x2) {
    accumulate_local(MatrixXd(op1 * op2), x1, st.spec, 1.0, st.amplitudes, out);
  } else {
    int a = std::min(x1, x2), b = std::max(x1, x2);
    accumulate_pair(x1 < x2 ? op1 : op2, a, x1 < x2 ? op2 : op1, b, st.spec, 1.0,
                    st.amplitudes, out);
  }
  return st.amplitudes.dot(out);
}

}  // namespace oracle_detail

inline double dense_site_expectation(const DenseState& st, const MatrixXd& op, int x) {
  VectorXd out = VectorXd::Zero(st.amplitudes.size());
  oracle_detail::accumulate_local(op, x, st.spec, 1.0, st.amplitudes, out);
  return st.amplitudes.dot(out);
}

/// Same observable definitions as the MPS layer: spatial average over the
/// reference site, connected subtraction with per-site means, minimal-image
/// separations for periodic chains and a -1 per twist-bond crossing for TPBC.
inline DenseObservables dense_observables(const DenseState& st, int r_max) {
  const ModelSpec& spec = st.spec;
  if (r_max < 0 || r_max >= spec.L)
    throw ArgumentError("dense_observables: r_max out of range");
  const MatrixXd phi = local_operator(OpKind::phi, spec.d).matrix;
  const MatrixXd phi2 = local_operator(OpKind::phi_sq, spec.d).matrix;

  DenseObservables obs;
  for (int x = 0; x < spec.L; ++x) {
    obs.phi.push_back(dense_site_expectation(st, phi, x));
    obs.phi_sq.push_back(dense_site_expectation(st, phi2, x));
  }
  const bool periodic = spec.boundary != Boundary::OBC;
  for (int r = 1; r <= r_max; ++r) {
    double acc = 0.0;
    int count = 0;
    const int x_end = periodic ? spec.L : spec.L - r;
    for (int x = 0; x < x_end; ++x) {
      int y = x + r;
      double sign = 1.0;
      if (y >= spec.L) {
        y -= spec.L;  // crosses the wrap bond once
        if (spec.boundary == Boundary::TPBC) sign = -1.0;
      }
      double c = sign * oracle_detail::pair_expectation(st, phi, x, phi, y) -
                 obs.phi[x] * obs.phi[y] * sign;
      acc += c;
      ++count;
    }
    obs.g2.push_back(acc / count);
  }
  VectorXd hpsi;
  apply_hamiltonian(spec, st.amplitudes, hpsi);
  obs.energy = st.amplitudes.dot(hpsi);
  return obs;
}

}  // namespace kinkfield
