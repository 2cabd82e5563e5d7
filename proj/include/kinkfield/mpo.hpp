#pragma once

#include <map>
#include <vector>

#include "kinkfield/model.hpp"
#include "kinkfield/oracle.hpp"
#include "kinkfield/tensor.hpp"

namespace kinkfield {

/// Matrix product operator: one rank-4 tensor per site with index order
/// (bra n, ket m, left virtual, right virtual). Periodic/twisted chains trace
/// the outer virtual bond; open chains cap it with extent-1 bonds.
struct MPO {
  Boundary boundary = Boundary::PBC;
  int L = 0;
  int d = 0;
  std::vector<DenseTensor> sites;

  std::size_t chi_w(int bond) const {
    // bond b sits between sites b-1 and b; bond 0 is the traced/capped edge
    if (bond == 0 || bond == L) return sites.front().extent(2);
    return sites[bond].extent(2);
  }
};

namespace mpo_detail {

/// Writes `op` into the (row, col) slot of an operator-valued W matrix.
inline void put(DenseTensor& w, std::size_t row, std::size_t col, const MatrixXd& op) {
  const std::size_t d = w.extent(0);
  for (std::size_t n = 0; n < d; ++n)
    for (std::size_t m = 0; m < d; ++m) w.at(n, m, row, col) = op(n, m);
}

}  // namespace mpo_detail

/// The phi^4 Hamiltonian as a chi_W = 3 MPO. Bulk sites carry the
/// tri-diagonal W = [[1,0,0],[-phi,0,0],[h,phi,1]]; the first site closes the
/// chain: the PBC boundary matrix [[0,phi,1],[0,0,-phi],[0,0,h]] reproduces
/// the -phi_L phi_1 wrap bond, and the TPBC variant flips that bond's sign
/// (the twist), leaving all on-site terms untouched. OBC caps with
/// w_1 = (h, phi, 1) and w_L = (1, -phi, h)^T.
inline MPO build_hamiltonian_mpo(const ModelSpec& spec_in) {
  const ModelSpec spec = validate(spec_in);
  const int d = spec.d, L = spec.L;
  const MatrixXd phi = local_operator(OpKind::phi, d).matrix;
  const MatrixXd h = local_operator(OpKind::h_onsite, spec).matrix;
  const MatrixXd id = MatrixXd::Identity(d, d);
  const std::size_t du = static_cast<std::size_t>(d);

  using mpo_detail::put;
  DenseTensor bulk({du, du, 3, 3});
  put(bulk, 0, 0, id);
  put(bulk, 1, 0, -phi);
  put(bulk, 2, 0, h);
  put(bulk, 2, 1, phi);
  put(bulk, 2, 2, id);

  MPO mpo;
  mpo.boundary = spec.boundary;
  mpo.L = L;
  mpo.d = d;
  mpo.sites.assign(L, bulk);

  switch (spec.boundary) {
    case Boundary::PBC:
    case Boundary::TPBC: {
      DenseTensor first({du, du, 3, 3});
      put(first, 0, 1, phi);
      put(first, 0, 2, id);
      put(first, 1, 2, spec.boundary == Boundary::TPBC ? phi : MatrixXd(-phi));
      put(first, 2, 2, h);
      mpo.sites[0] = std::move(first);
      break;
    }
    case Boundary::OBC: {
      DenseTensor first({du, du, 1, 3});
      put(first, 0, 0, h);
      put(first, 0, 1, phi);
      put(first, 0, 2, id);
      mpo.sites[0] = std::move(first);
      DenseTensor last({du, du, 3, 1});
      put(last, 0, 0, id);
      put(last, 1, 0, -phi);
      put(last, 2, 0, h);
      mpo.sites[L - 1] = std::move(last);
      break;
    }
  }
  return mpo;
}

/// chi_W = 1 MPO of a tensor-product operator; unlisted sites act as the
/// identity. Sites are 0-based.
inline MPO build_product_mpo(const std::map<int, LocalOperator>& ops,
                             const ModelSpec& spec) {
  const std::size_t du = static_cast<std::size_t>(spec.d);
  MPO mpo;
  mpo.boundary = spec.boundary;
  mpo.L = spec.L;
  mpo.d = spec.d;
  for (const auto& [site, op] : ops)
    if (site < 0 || site >= spec.L)
      throw ArgumentError("build_product_mpo: site " + std::to_string(site) +
                          " out of range");
  for (int x = 0; x < spec.L; ++x) {
    DenseTensor w({du, du, 1, 1});
    auto it = ops.find(x);
    const MatrixXd m = it == ops.end() ? MatrixXd::Identity(spec.d, spec.d)
                                       : it->second.matrix;
    mpo_detail::put(w, 0, 0, m);
    mpo.sites.push_back(std::move(w));
  }
  return mpo;
}

namespace mpo_detail {

/// acc += kron(a, v * op_slot): appends one site as the least significant
/// tensor factor, matching the row-major site ordering of DenseState.
inline void kron_accumulate(MatrixXd& acc, const MatrixXd& a, const DenseTensor& w,
                            std::size_t row, std::size_t col) {
  const std::size_t d = w.extent(0);
  const std::size_t dim = static_cast<std::size_t>(a.rows());
  if (acc.size() == 0) acc = MatrixXd::Zero(dim * d, dim * d);
  for (std::size_t nn = 0; nn < d; ++nn)
    for (std::size_t mm = 0; mm < d; ++mm) {
      const double v = w.at(nn, mm, row, col);
      if (v == 0.0) continue;
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
          const double aij = a(i, j);
          if (aij != 0.0) acc(i * d + nn, j * d + mm) += v * aij;
        }
    }
}

}  // namespace mpo_detail

/// Full d^L x d^L matrix of the MPO with the boundary trace/caps applied.
/// Intended for test support at small sizes.
inline MatrixXd mpo_to_dense(const MPO& mpo, std::size_t cap = 4096) {
  const std::size_t n = oracle_detail::pow_size(mpo.d, mpo.L);
  if (n > cap) throw SizeError("mpo_to_dense: d^L exceeds cap");
  const std::size_t w0 = mpo.sites.front().extent(2);  // edge bond extent
  if (mpo.sites.back().extent(3) != w0)
    throw DimensionError("mpo_to_dense: edge bond extents do not close");

  // grow a table T[a][c] of operator blocks site by site, a fixed at the edge
  // bond and c at the running right bond; empty matrices stand for zero
  std::vector<std::vector<MatrixXd>> blocks(w0, std::vector<MatrixXd>(w0));
  for (std::size_t a = 0; a < w0; ++a) blocks[a][a] = MatrixXd::Identity(1, 1);

  for (int x = 0; x < mpo.L; ++x) {
    const DenseTensor& w = mpo.sites[x];
    const std::size_t wm = w.extent(2), wr = w.extent(3);
    if (blocks[0].size() != wm)
      throw DimensionError("mpo_to_dense: adjacent virtual extents differ");
    const bool last = (x == mpo.L - 1);
    std::vector<std::vector<MatrixXd>> next(w0, std::vector<MatrixXd>(wr));
    for (std::size_t a = 0; a < w0; ++a)
      for (std::size_t c = 0; c < wr; ++c) {
        if (last && c != a) continue;  // only traced blocks survive
        for (std::size_t b = 0; b < wm; ++b) {
          if (blocks[a][b].size() == 0) continue;
          mpo_detail::kron_accumulate(next[a][c], blocks[a][b], w, b, c);
        }
      }
    blocks = std::move(next);
  }

  MatrixXd out = MatrixXd::Zero(n, n);
  for (std::size_t a = 0; a < w0; ++a)
    if (blocks[a][a].size() != 0) out += blocks[a][a];
  return out;
}

}  // namespace kinkfield
