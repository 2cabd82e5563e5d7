#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "kinkfield/model.hpp"
#include "kinkfield/mpo.hpp"
#include "kinkfield/tensor.hpp"

namespace kinkfield {

enum class Gauge { none, left, right, mixed };

/// Finite matrix product state. Site tensors have index order
/// (physical n, left virtual, right virtual). Open chains cap the edge bonds
/// at extent 1; periodic/twisted chains trace the edge bond. The physical
/// twist of TPBC lives entirely in the Hamiltonian, so TPBC states are plain
/// periodic MPS.
struct FiniteMPS {
  Boundary boundary = Boundary::OBC;
  int L = 0;
  int d = 0;
  std::vector<DenseTensor> sites;
  Gauge gauge = Gauge::none;
  int center = -1;  // meaningful for Gauge::mixed

  bool periodic() const { return boundary != Boundary::OBC; }

  std::size_t chi(int bond) const {  // bond x sits left of site x
    if (bond == L) return sites.back().extent(2);
    return sites[bond].extent(1);
  }

  std::size_t max_chi() const {
    std::size_t m = 1;
    for (const auto& s : sites) m = std::max(m, s.extent(2));
    return m;
  }
};

namespace mps_detail {

/// E[(a, abar), (b, bbar)] = sum_n ket^n(a,b) bra^n(abar,bbar), as a matrix on
/// the doubled virtual space.
inline MatrixXd norm_transfer_matrix(const DenseTensor& bra, const DenseTensor& ket) {
  // contract over the physical index, then interleave to (a abar),(b bbar)
  DenseTensor e = contract(ket, bra, {{0, 0}});      // (a, b, abar, bbar)
  DenseTensor p = e.permuted({0, 2, 1, 3});          // (a, abar, b, bbar)
  const std::size_t rows = p.extent(0) * p.extent(1);
  return p.reshaped({rows, p.size() / rows}).to_matrix(1);
}

/// Triple-layer transfer matrix E[(a w abar), (b w' bbar)] with the MPO
/// tensor sandwiched between ket and bra.
inline MatrixXd mpo_transfer_matrix(const DenseTensor& bra, const DenseTensor& ket,
                                    const DenseTensor& w) {
  DenseTensor kw = contract(ket, w, {{0, 1}});       // (a, b, n, wl, wr)
  DenseTensor e = contract(kw, bra, {{2, 0}});       // (a, b, wl, wr, abar, bbar)
  DenseTensor p = e.permuted({0, 2, 4, 1, 3, 5});    // (a, wl, abar, b, wr, bbar)
  const std::size_t rows = p.extent(0) * p.extent(1) * p.extent(2);
  return p.reshaped({rows, p.size() / rows}).to_matrix(1);
}

/// X <- X . E_x for X viewed as (rows, a, abar), exploiting the tensor
/// structure of the transfer matrix instead of a doubled-space GEMM.
inline DenseTensor apply_norm_transfer_right(const DenseTensor& x,
                                             const DenseTensor& bra,
                                             const DenseTensor& ket) {
  DenseTensor t = contract(x, ket, {{1, 1}});        // (rows, abar, n, b)
  DenseTensor u = contract(t, bra, {{1, 1}, {2, 0}});  // (rows, b, bbar)
  return u;
}

/// Same with the MPO layer: X viewed as (rows, a, w, abar).
inline DenseTensor apply_mpo_transfer_right(const DenseTensor& x,
                                            const DenseTensor& bra,
                                            const DenseTensor& ket,
                                            const DenseTensor& w) {
  DenseTensor t = contract(x, ket, {{1, 1}});          // (rows, w, abar, m, b)
  DenseTensor u = contract(t, w, {{1, 2}, {3, 1}});    // (rows, abar, b, n, wr)
  DenseTensor v = contract(u, bra, {{1, 1}, {3, 0}});  // (rows, b, wr, bbar)
  return v;
}

struct ScaledTrace {
  double mantissa = 0.0;
  double log_scale = 0.0;  // value = mantissa * exp(log_scale)

  double value() const { return mantissa * std::exp(log_scale); }
};

/// Trace of the ordered product of per-site norm transfer matrices, with
/// running rescaling so long chains cannot overflow.
inline ScaledTrace scaled_norm_trace(const FiniteMPS& bra, const FiniteMPS& ket,
                                     bool right_to_left = false) {
  const std::size_t db = bra.sites[0].extent(1), dk = ket.sites[0].extent(1);
  std::size_t rows = dk * db;
  DenseTensor x({rows, dk, db});
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t ab = 0; ab < db; ++ab) x.at(a * db + ab, a, ab) = 1.0;

  ScaledTrace out;
  if (!right_to_left) {
    for (int s = 0; s < ket.L; ++s) {
      x = apply_norm_transfer_right(x, bra.sites[s], ket.sites[s]);
      double nrm = x.norm();
      if (!(nrm > 0) || !std::isfinite(nrm)) return out;
      x *= 1.0 / nrm;
      out.log_scale += std::log(nrm);
    }
  } else {
    // build the same product by left-multiplication from the last site; the
    // stored row index then tracks the edge bond at the right end
    for (int s = ket.L - 1; s >= 0; --s) {
      MatrixXd e = norm_transfer_matrix(bra.sites[s], ket.sites[s]);
      MatrixXd xm = x.reshaped({rows, x.size() / rows}).to_matrix(1);
      MatrixXd prod = (e * xm.transpose()).transpose();
      x = DenseTensor::from_matrix(prod)
              .reshaped({rows, ket.sites[s].extent(1), bra.sites[s].extent(1)});
      double nrm = x.norm();
      if (!(nrm > 0) || !std::isfinite(nrm)) return out;
      x *= 1.0 / nrm;
      out.log_scale += std::log(nrm);
    }
  }
  // trace over the edge bond pair
  double tr = 0.0;
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t ab = 0; ab < db; ++ab) tr += x.at(a * db + ab, a, ab);
  out.mantissa = tr;
  return out;
}

inline ScaledTrace scaled_mpo_trace(const FiniteMPS& psi, const MPO& op,
                                    bool right_to_left = false) {
  const std::size_t c = psi.sites[0].extent(1);
  const std::size_t w0 = op.sites[0].extent(2);
  const std::size_t rows = c * w0 * c;
  DenseTensor x({rows, c, w0, c});
  for (std::size_t a = 0; a < c; ++a)
    for (std::size_t w = 0; w < w0; ++w)
      for (std::size_t ab = 0; ab < c; ++ab)
        x.at((a * w0 + w) * c + ab, a, w, ab) = 1.0;

  ScaledTrace out;
  if (!right_to_left) {
    for (int s = 0; s < psi.L; ++s) {
      x = apply_mpo_transfer_right(x, psi.sites[s], psi.sites[s], op.sites[s]);
      double nrm = x.norm();
      if (!(nrm > 0) || !std::isfinite(nrm)) return out;
      x *= 1.0 / nrm;
      out.log_scale += std::log(nrm);
    }
  } else {
    for (int s = psi.L - 1; s >= 0; --s) {
      MatrixXd e = mpo_transfer_matrix(psi.sites[s], psi.sites[s], op.sites[s]);
      MatrixXd xm = x.reshaped({rows, x.size() / rows}).to_matrix(1);
      MatrixXd prod = (e * xm.transpose()).transpose();
      x = DenseTensor::from_matrix(prod).reshaped(
          {rows, psi.sites[s].extent(1), op.sites[s].extent(2),
           psi.sites[s].extent(1)});
      double nrm = x.norm();
      if (!(nrm > 0) || !std::isfinite(nrm)) return out;
      x *= 1.0 / nrm;
      out.log_scale += std::log(nrm);
    }
  }
  double tr = 0.0;
  for (std::size_t a = 0; a < c; ++a)
    for (std::size_t w = 0; w < w0; ++w)
      for (std::size_t ab = 0; ab < c; ++ab)
        tr += x.at((a * w0 + w) * c + ab, a, w, ab);
  out.mantissa = tr;
  return out;
}

}  // namespace mps_detail

/// <phi|psi> by left-to-right transfer-matrix contraction.
inline double overlap(const FiniteMPS& phi, const FiniteMPS& psi,
                      bool right_to_left = false) {
  if (phi.L != psi.L || phi.d != psi.d || phi.periodic() != psi.periodic())
    throw DimensionError("overlap: incompatible states");
  auto tr = mps_detail::scaled_norm_trace(phi, psi, right_to_left);
  return tr.value();
}

/// Reproducible random MPS, normalized to unit norm.
inline FiniteMPS random_mps(const ModelSpec& spec, int chi, std::uint64_t seed) {
  if (chi < 1) throw ArgumentError("random_mps: chi must be >= 1");
  const std::size_t d = static_cast<std::size_t>(spec.d);
  const std::size_t c = static_cast<std::size_t>(chi);

  FiniteMPS psi;
  psi.boundary = spec.boundary;
  psi.L = spec.L;
  psi.d = spec.d;
  DeterministicRng rng(seed);

  auto bond = [&](int k) -> std::size_t {
    if (!psi.periodic()) {
      if (k == 0 || k == spec.L) return 1;
      double cap = std::pow(double(spec.d), std::min(k, spec.L - k));
      return std::min<std::size_t>(c, cap > 1e9 ? c : std::size_t(cap));
    }
    return c;
  };

  for (int x = 0; x < spec.L; ++x) {
    DenseTensor m({d, bond(x), bond(x + 1)});
    for (auto& v : m.data()) v = rng.uniform();
    double f = m.norm();
    m *= 1.0 / (f > 0 ? f : 1.0);
    psi.sites.push_back(std::move(m));
  }
  auto tr = mps_detail::scaled_norm_trace(psi, psi);
  if (!(tr.mantissa > 0.0))
    throw NumericError("random_mps: degenerate random draw");
  // norm^2 = mantissa * exp(log_scale); spread the rescaling over all sites
  const double log_norm_sq = std::log(tr.mantissa) + tr.log_scale;
  const double per_site = std::exp(-log_norm_sq / (2.0 * spec.L));
  for (auto& m : psi.sites) m *= per_site;
  return psi;
}

/// Product state from per-site local vectors, embedded at bond dimension chi
/// with small seeded noise on the padding.
inline FiniteMPS product_mps(const ModelSpec& spec,
                             const std::vector<VectorXd>& local_states, int chi,
                             double noise, std::uint64_t seed) {
  if (static_cast<int>(local_states.size()) != spec.L)
    throw ArgumentError("product_mps: need one local vector per site");
  const std::size_t d = static_cast<std::size_t>(spec.d);
  const std::size_t c = spec.boundary == Boundary::OBC ? 1 : static_cast<std::size_t>(chi);

  FiniteMPS psi;
  psi.boundary = spec.boundary;
  psi.L = spec.L;
  psi.d = spec.d;
  DeterministicRng rng(seed);
  for (int x = 0; x < spec.L; ++x) {
    VectorXd v = local_states[x].normalized();
    if (v.size() != spec.d) throw DimensionError("product_mps: local vector size");
    std::size_t cl = (spec.boundary == Boundary::OBC) ? 1 : c;
    DenseTensor m({d, cl, cl});
    for (std::size_t n = 0; n < d; ++n) {
      m.at(n, std::size_t{0}, std::size_t{0}) = v(n);
      for (std::size_t a = 0; a < cl; ++a)
        for (std::size_t b = 0; b < cl; ++b)
          if (a != 0 || b != 0) m.at(n, a, b) = noise * rng.uniform();
    }
    psi.sites.push_back(std::move(m));
  }
  auto tr = mps_detail::scaled_norm_trace(psi, psi);
  const double log_norm_sq = std::log(tr.mantissa) + tr.log_scale;
  const double per_site = std::exp(-log_norm_sq / (2.0 * spec.L));
  for (auto& m : psi.sites) m *= per_site;
  return psi;
}

inline FiniteMPS embed_mps(const FiniteMPS& psi, int new_chi, double noise,
                           std::uint64_t seed);

/// Product state embedded at bond dimension chi for any boundary condition.
inline FiniteMPS product_mps_embedded(const ModelSpec& spec,
                                      const std::vector<VectorXd>& local_states,
                                      int chi, double noise, std::uint64_t seed) {
  FiniteMPS base = product_mps(spec, local_states, chi, noise, seed);
  if (spec.boundary == Boundary::OBC && chi > 1)
    return embed_mps(base, chi, noise, seed + 1);
  return base;
}

/// Pads the virtual bonds of `psi` up to new_chi, filling the new directions
/// with noise-scale entries. The represented vector changes by O(noise).
inline FiniteMPS embed_mps(const FiniteMPS& psi, int new_chi, double noise = 1e-8,
                           std::uint64_t seed = 17) {
  FiniteMPS out = psi;
  DeterministicRng rng(seed);
  const std::size_t c = static_cast<std::size_t>(new_chi);
  for (int x = 0; x < psi.L; ++x) {
    const DenseTensor& m = psi.sites[x];
    std::size_t cl = psi.periodic() ? c : (x == 0 ? 1 : c);
    std::size_t cr = psi.periodic() ? c : (x == psi.L - 1 ? 1 : c);
    cl = std::max(cl, m.extent(1));
    cr = std::max(cr, m.extent(2));
    DenseTensor grown({m.extent(0), cl, cr});
    for (std::size_t n = 0; n < m.extent(0); ++n)
      for (std::size_t a = 0; a < cl; ++a)
        for (std::size_t b = 0; b < cr; ++b)
          grown.at(n, a, b) = (a < m.extent(1) && b < m.extent(2))
                                  ? m.at(n, a, b)
                                  : noise * rng.uniform();
    out.sites[x] = std::move(grown);
  }
  out.gauge = Gauge::none;
  out.center = -1;
  return out;
}

/// Left/right/mixed canonical form for open chains via QR sweeps. The state
/// is unchanged as a vector; periodic input is rejected (PBC conditioning is
/// handled by metric regularization in the sweep engine instead).
inline FiniteMPS canonicalize(const FiniteMPS& psi_in, Gauge gauge, int center = -1) {
  if (psi_in.periodic())
    throw UnsupportedGaugeError("canonicalize: periodic states are not gauge-fixed");
  if (gauge == Gauge::none) return psi_in;
  if (gauge == Gauge::left) center = psi_in.L - 1;
  if (gauge == Gauge::right) center = 0;
  if (center < 0 || center >= psi_in.L)
    throw ArgumentError("canonicalize: center out of range");

  FiniteMPS psi = psi_in;
  // left-orthonormalize sites 0..center-1
  for (int x = 0; x < center; ++x) {
    const DenseTensor& m = psi.sites[x];
    const std::size_t d = m.extent(0), l = m.extent(1), r = m.extent(2);
    MatrixXd a = m.permuted({1, 0, 2}).reshaped({l * d, r}).to_matrix(1);
    Eigen::HouseholderQR<MatrixXd> qr(a);
    const std::size_t k = std::min(l * d, r);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(l * d, k);
    MatrixXd rr = q.transpose() * a;  // upper-triangular up to roundoff
    psi.sites[x] = DenseTensor::from_matrix(q)
                       .reshaped({l, d, k})
                       .permuted({1, 0, 2});
    psi.sites[x + 1] =
        contract(DenseTensor::from_matrix(rr), psi.sites[x + 1], {{1, 1}})
            .permuted({1, 0, 2});
  }
  // right-orthonormalize sites L-1..center+1
  for (int x = psi.L - 1; x > center; --x) {
    const DenseTensor& m = psi.sites[x];
    const std::size_t d = m.extent(0), l = m.extent(1), r = m.extent(2);
    MatrixXd a = m.permuted({1, 0, 2}).reshaped({l, d * r}).to_matrix(1);
    Eigen::HouseholderQR<MatrixXd> qr(a.transpose());
    const std::size_t k = std::min(d * r, l);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(d * r, k);
    MatrixXd ll = a * q;  // l x k
    psi.sites[x] = DenseTensor::from_matrix(q.transpose())
                       .reshaped({k, d, r})
                       .permuted({1, 0, 2});
    psi.sites[x - 1] = contract(psi.sites[x - 1], DenseTensor::from_matrix(ll),
                                {{2, 0}});
  }
  psi.gauge = gauge;
  psi.center = center;
  return psi;
}

/// <psi|O|psi> / <psi|psi>.
inline double expectation(const FiniteMPS& psi, const MPO& op,
                          bool right_to_left = false) {
  if (psi.L != op.L || psi.d != op.d)
    throw DimensionError("expectation: MPO/MPS size mismatch");
  auto num = mps_detail::scaled_mpo_trace(psi, op, right_to_left);
  auto den = mps_detail::scaled_norm_trace(psi, psi, right_to_left);
  if (den.mantissa == 0.0) throw NumericError("expectation: zero-norm state");
  return num.mantissa / den.mantissa * std::exp(num.log_scale - den.log_scale);
}

/// Per-site expectation values <op_x> for all x, sharing the environment
/// products across sites.
inline std::vector<double> site_expectations(const FiniteMPS& psi, const MatrixXd& op) {
  using namespace mps_detail;
  const int L = psi.L;
  std::vector<MatrixXd> e(L);
  for (int x = 0; x < L; ++x) e[x] = norm_transfer_matrix(psi.sites[x], psi.sites[x]);

  // prefix[x] = E_0 ... E_{x-1}, suffix[x] = E_{x+1} ... E_{L-1}
  const std::size_t dd = e[0].rows();
  std::vector<MatrixXd> prefix(L), suffix(L);
  MatrixXd run = MatrixXd::Identity(dd, dd);
  std::vector<double> pre_log(L, 0.0), suf_log(L, 0.0);
  double logs = 0.0;
  for (int x = 0; x < L; ++x) {
    prefix[x] = run;
    pre_log[x] = logs;
    run = run * e[x];
    double n = run.norm();
    run /= n;
    logs += std::log(n);
  }
  const double total_log = logs;
  const double den_tr = run.trace();

  run = MatrixXd::Identity(e[L - 1].cols(), e[L - 1].cols());
  logs = 0.0;
  for (int x = L - 1; x >= 0; --x) {
    suffix[x] = run;
    suf_log[x] = logs;
    run = e[x] * run;
    double n = run.norm();
    run /= n;
    logs += std::log(n);
  }

  std::vector<double> out(L);
  for (int x = 0; x < L; ++x) {
    DenseTensor kop = contract(psi.sites[x], DenseTensor::from_matrix(op), {{0, 1}});
    DenseTensor ins = contract(kop, psi.sites[x], {{2, 0}});  // (a, b, abar, bbar)
    MatrixXd eo = ins.permuted({0, 2, 1, 3})
                      .reshaped({psi.sites[x].extent(1) * psi.sites[x].extent(1),
                                 psi.sites[x].extent(2) * psi.sites[x].extent(2)})
                      .to_matrix(1);
    double num_tr = (prefix[x] * eo * suffix[x]).trace();
    out[x] = num_tr / den_tr *
             std::exp(pre_log[x] + suf_log[x] - total_log);
  }
  return out;
}

/// Connected equal-time two-point function G2(r), r = 1..r_max, spatially
/// averaged over the reference site with per-site mean subtraction. Periodic
/// chains use minimal-image pair sets; TPBC correlators crossing the twist
/// bond carry the -1 map back to periodic variables.
inline std::vector<double> connected_two_point(const FiniteMPS& psi, int r_max) {
  using namespace mps_detail;
  const int L = psi.L;
  if (r_max < 1 || r_max >= L)
    throw ArgumentError("connected_two_point: r_max out of range");

  const MatrixXd phi_op = local_operator(OpKind::phi, psi.d).matrix;
  std::vector<double> mean = site_expectations(psi, phi_op);

  std::vector<MatrixXd> e(L), ephi(L);
  for (int x = 0; x < L; ++x) {
    e[x] = norm_transfer_matrix(psi.sites[x], psi.sites[x]);
    DenseTensor kphi = contract(psi.sites[x], DenseTensor::from_matrix(phi_op),
                                {{0, 1}});               // (a, b, n)
    DenseTensor full = contract(kphi, psi.sites[x], {{2, 0}});  // (a,b,ab,bb)
    ephi[x] = full.permuted({0, 2, 1, 3})
                  .reshaped({psi.sites[x].extent(1) * psi.sites[x].extent(1),
                             psi.sites[x].extent(2) * psi.sites[x].extent(2)})
                  .to_matrix(1);
  }

  const std::size_t dd = e[0].rows();
  // suffix[y] = E_{y+1} ... E_{L-1} with scale logs
  std::vector<MatrixXd> suffix(L);
  std::vector<double> suf_log(L, 0.0);
  MatrixXd run = MatrixXd::Identity(dd, dd);
  double logs = 0.0;
  for (int y = L - 1; y >= 0; --y) {
    suffix[y] = run;
    suf_log[y] = logs;
    run = e[y] * run;
    double n = run.norm();
    run /= n;
    logs += std::log(n);
  }
  const double total_log = logs;
  const double den_tr = run.trace();

  // raw(s) = sum_x <phi_x phi_{x+s}> over non-wrapping pairs
  const int s_max = psi.periodic() ? L - 1 : r_max;
  std::vector<double> raw(s_max + 1, 0.0), raw_mean(s_max + 1, 0.0);
  std::vector<MatrixXd> prefix(L);
  std::vector<double> pre_log(L, 0.0);
  run = MatrixXd::Identity(dd, dd);
  logs = 0.0;
  for (int x = 0; x < L; ++x) {
    prefix[x] = run;
    pre_log[x] = logs;
    run = run * e[x];
    double n = run.norm();
    run /= n;
    logs += std::log(n);
  }
  // right insertion closed with its suffix, shared across reference sites
  std::vector<MatrixXd> closed(L);
  for (int y = 0; y < L; ++y) closed[y] = ephi[y] * suffix[y];
  for (int x = 0; x + 1 < L; ++x) {
    MatrixXd b = prefix[x] * ephi[x];
    double b_log = pre_log[x];
    double bn = b.norm();
    b /= bn;
    b_log += std::log(bn);
    for (int y = x + 1; y < L && y - x <= s_max; ++y) {
      double tr = b.cwiseProduct(closed[y].transpose()).sum();
      raw[y - x] += tr / den_tr * std::exp(b_log + suf_log[y] - total_log);
      if (y + 1 < L && y - x < s_max) {
        b = b * e[y];
        double n2 = b.norm();
        b /= n2;
        b_log += std::log(n2);
      }
    }
  }
  for (int s = 1; s <= s_max; ++s)
    for (int x = 0; x + s < L; ++x) raw_mean[s] += mean[x] * mean[x + s];

  std::vector<double> g2(r_max);
  const double twist = psi.boundary == Boundary::TPBC ? -1.0 : 1.0;
  for (int r = 1; r <= r_max; ++r) {
    if (psi.periodic()) {
      // wrapped pairs at separation r equal non-wrapped pairs at L - r
      double num = (raw[r] - raw_mean[r]) +
                   twist * (raw[L - r] - raw_mean[L - r]);
      g2[r - 1] = num / L;
    } else {
      g2[r - 1] = (raw[r] - raw_mean[r]) / (L - r);
    }
  }
  return g2;
}

/// Von Neumann entropy of the bipartition at `bond` (cut between sites
/// bond-1 and bond), for open chains.
inline double entanglement_entropy(const FiniteMPS& psi, int bond) {
  if (psi.periodic())
    throw UnsupportedGaugeError("entanglement_entropy: open chains only");
  if (bond < 1 || bond >= psi.L)
    throw ArgumentError("entanglement_entropy: bond out of range");
  FiniteMPS mixed = canonicalize(psi, Gauge::mixed, bond);
  const DenseTensor& m = mixed.sites[bond];
  MatrixXd c = m.permuted({1, 0, 2})
                   .reshaped({m.extent(1), m.extent(0) * m.extent(2)})
                   .to_matrix(1);
  Eigen::JacobiSVD<MatrixXd> svd(c);
  VectorXd s = svd.singularValues();
  double total = s.squaredNorm();
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    double p = s(i) * s(i) / total;
    if (p > 1e-16) entropy -= p * std::log(p);
  }
  return entropy;
}

/// Dense d^L vector of the state (test support; capped).
inline VectorXd mps_to_dense(const FiniteMPS& psi, std::size_t cap = 1 << 22) {
  const std::size_t n = oracle_detail::pow_size(psi.d, psi.L);
  const std::size_t edge = psi.sites[0].extent(1);
  if (n * edge * edge > cap) throw SizeError("mps_to_dense: too large");

  // T[(n_1..n_k), a0, ak], grown site by site
  DenseTensor t = DenseTensor::identity(edge).reshaped({std::size_t{1}, edge, edge});
  for (int x = 0; x < psi.L; ++x) {
    DenseTensor nt = contract(t, psi.sites[x], {{2, 1}});  // (phys, a0, n, ak)
    t = nt.permuted({0, 2, 1, 3})
            .reshaped({nt.extent(0) * nt.extent(2), nt.extent(1), nt.extent(3)});
  }
  VectorXd out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double tr = 0.0;
    for (std::size_t a = 0; a < edge; ++a) tr += t.at(i, a, a);
    out(i) = tr;
  }
  return out;
}

/// OBC MPS from a dense vector by successive SVDs, truncating at max_chi.
inline FiniteMPS mps_from_dense(const VectorXd& amplitudes, const ModelSpec& spec,
                                int max_chi, double cutoff = 0.0) {
  const std::size_t n = oracle_detail::pow_size(spec.d, spec.L);
  if (static_cast<std::size_t>(amplitudes.size()) != n)
    throw DimensionError("mps_from_dense: length != d^L");
  const std::size_t d = static_cast<std::size_t>(spec.d);

  FiniteMPS psi;
  psi.boundary = Boundary::OBC;
  psi.L = spec.L;
  psi.d = spec.d;

  DenseTensor rest({std::size_t{1}, n});
  std::copy(amplitudes.data(), amplitudes.data() + n, rest.data().begin());
  std::size_t left = 1, remaining = n;
  for (int x = 0; x + 1 < spec.L; ++x) {
    remaining /= d;
    DenseTensor m = rest.reshaped({left * d, remaining});
    auto svd = factorize_svd(m, 1, static_cast<std::size_t>(max_chi), cutoff);
    const std::size_t k = svd.singular.size();
    psi.sites.push_back(svd.u.reshaped({left, d, k}).permuted({1, 0, 2}));
    DenseTensor sv({k, remaining});
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < remaining; ++j)
        sv.at(i, j) = svd.singular[i] * svd.v.at(i, j);
    rest = std::move(sv);
    left = k;
  }
  psi.sites.push_back(rest.reshaped({left, d, std::size_t{1}}).permuted({1, 0, 2}));
  psi.gauge = Gauge::left;
  psi.center = spec.L - 1;
  return psi;
}

/// Inserts G, G^{-1} on the bond left of `site` (gauge transformation; the
/// state vector is unchanged). Test support for gauge-invariance checks.
inline FiniteMPS insert_gauge(const FiniteMPS& psi, int site, const MatrixXd& g) {
  if (site < 0 || site >= psi.L) throw ArgumentError("insert_gauge: bad site");
  const int prev = site == 0 ? psi.L - 1 : site - 1;
  if (!psi.periodic() && site == 0)
    throw ArgumentError("insert_gauge: edge bond of an open chain");
  FiniteMPS out = psi;
  MatrixXd ginv = g.inverse();
  out.sites[prev] = contract(psi.sites[prev], DenseTensor::from_matrix(g), {{2, 0}});
  out.sites[site] =
      contract(psi.sites[site], DenseTensor::from_matrix(ginv), {{1, 1}})
          .permuted({0, 2, 1});
  out.gauge = Gauge::none;
  out.center = -1;
  return out;
}

}  // namespace kinkfield
