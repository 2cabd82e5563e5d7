#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kinkfield/errors.hpp"

namespace kinkfield {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajorMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense real tensor with row-major storage. All extents are >= 1 and
/// product(shape) == data.size(); immutable use after construction is the
/// expected pattern.
class DenseTensor {
 public:
  DenseTensor() = default;

  explicit DenseTensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(checked_size(shape_), 0.0) {}

  DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_size(shape_) != data_.size())
      throw DimensionError("DenseTensor: shape/data size mismatch");
  }

  static DenseTensor identity(std::size_t n) {
    DenseTensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
    return t;
  }

  static DenseTensor from_matrix(const MatrixXd& m) {
    DenseTensor t({static_cast<std::size_t>(m.rows()),
                   static_cast<std::size_t>(m.cols())});
    Eigen::Map<RowMajorMatrixXd>(t.data_.data(), m.rows(), m.cols()) = m;
    return t;
  }

  static DenseTensor from_vector(const VectorXd& v) {
    DenseTensor t({static_cast<std::size_t>(v.size())});
    std::copy(v.data(), v.data() + v.size(), t.data_.begin());
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t i) const { return shape_.at(i); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  template <typename... Ix>
  double& at(Ix... ix) {
    return data_[flat_index({static_cast<std::size_t>(ix)...})];
  }
  template <typename... Ix>
  double at(Ix... ix) const {
    return data_[flat_index({static_cast<std::size_t>(ix)...})];
  }

  /// Row-major flat index of a multi-index.
  std::size_t flat_index(std::initializer_list<std::size_t> ix) const {
    if (ix.size() != shape_.size())
      throw ArgumentError("DenseTensor: index rank mismatch");
    std::size_t flat = 0;
    auto it = ix.begin();
    for (std::size_t k = 0; k < shape_.size(); ++k, ++it) {
      if (*it >= shape_[k]) throw ArgumentError("DenseTensor: index out of range");
      flat = flat * shape_[k] + *it;
    }
    return flat;
  }

  /// Reinterpret with a new shape of equal total size.
  DenseTensor reshaped(std::vector<std::size_t> new_shape) const {
    if (checked_size(new_shape) != data_.size())
      throw DimensionError("reshape: size mismatch");
    DenseTensor t;
    t.shape_ = std::move(new_shape);
    t.data_ = data_;
    return t;
  }

  /// New tensor with axes reordered: result index k ranges over old axis perm[k].
  DenseTensor permuted(const std::vector<std::size_t>& perm) const {
    const std::size_t r = rank();
    if (perm.size() != r) throw ArgumentError("permute: rank mismatch");
    std::vector<bool> seen(r, false);
    for (auto p : perm) {
      if (p >= r || seen[p]) throw ArgumentError("permute: invalid permutation");
      seen[p] = true;
    }
    std::vector<std::size_t> new_shape(r);
    for (std::size_t k = 0; k < r; ++k) new_shape[k] = shape_[perm[k]];

    DenseTensor out(new_shape);
    if (r == 0) {
      out.data_ = data_;
      return out;
    }
    // old strides, then strides of each output axis in the old layout
    std::vector<std::size_t> old_stride(r, 1);
    for (std::size_t k = r - 1; k > 0; --k)
      old_stride[k - 1] = old_stride[k] * shape_[k];
    std::vector<std::size_t> out_old_stride(r);
    for (std::size_t k = 0; k < r; ++k) out_old_stride[k] = old_stride[perm[k]];

    std::vector<std::size_t> ix(r, 0);
    std::size_t src = 0;
    const std::size_t n = data_.size();
    for (std::size_t flat = 0; flat < n; ++flat) {
      out.data_[flat] = data_[src];
      // increment output multi-index, tracking the source offset
      for (std::size_t k = r; k-- > 0;) {
        ix[k]++;
        src += out_old_stride[k];
        if (ix[k] < new_shape[k]) break;
        src -= ix[k] * out_old_stride[k];
        ix[k] = 0;
      }
    }
    return out;
  }

  /// View the first `split` axes as rows and the rest as columns.
  MatrixXd to_matrix(std::size_t split) const {
    if (split > rank()) throw ArgumentError("to_matrix: bad split");
    std::size_t rows = 1, cols = 1;
    for (std::size_t k = 0; k < split; ++k) rows *= shape_[k];
    for (std::size_t k = split; k < rank(); ++k) cols *= shape_[k];
    return Eigen::Map<const RowMajorMatrixXd>(data_.data(), rows, cols);
  }

  VectorXd to_vector() const {
    return Eigen::Map<const VectorXd>(data_.data(), data_.size());
  }

  double norm() const {
    return Eigen::Map<const VectorXd>(data_.data(), data_.size()).norm();
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  DenseTensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }
  DenseTensor& operator+=(const DenseTensor& o) {
    if (shape_ != o.shape_) throw DimensionError("operator+=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  friend DenseTensor operator*(double s, DenseTensor t) {
    t *= s;
    return t;
  }

 private:
  static std::size_t checked_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto e : shape) {
      if (e == 0) throw DimensionError("DenseTensor: zero extent");
      n *= e;
    }
    return n;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Sum over the given (a-index, b-index) pairs. The result carries the
/// uncontracted indices of `a` (in order) followed by those of `b`.
/// An empty pair list is the outer product.
inline DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                            const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<bool> a_used(a.rank(), false), b_used(b.rank(), false);
  for (const auto& [ia, ib] : pairs) {
    if (ia >= a.rank() || ib >= b.rank())
      throw ArgumentError("contract: index out of range");
    if (a_used[ia] || b_used[ib])
      throw ArgumentError("contract: duplicate contraction index");
    a_used[ia] = true;
    b_used[ib] = true;
    if (a.extent(ia) != b.extent(ib))
      throw DimensionError("contract: paired extents differ (" +
                           std::to_string(a.extent(ia)) + " vs " +
                           std::to_string(b.extent(ib)) + ")");
  }

  std::vector<std::size_t> a_free, b_free, a_con, b_con;
  for (std::size_t k = 0; k < a.rank(); ++k)
    if (!a_used[k]) a_free.push_back(k);
  for (std::size_t k = 0; k < b.rank(); ++k)
    if (!b_used[k]) b_free.push_back(k);
  for (const auto& [ia, ib] : pairs) {
    a_con.push_back(ia);
    b_con.push_back(ib);
  }

  // permute a -> (free..., contracted...), b -> (contracted..., free...)
  std::vector<std::size_t> pa = a_free, pb = b_con;
  pa.insert(pa.end(), a_con.begin(), a_con.end());
  pb.insert(pb.end(), b_free.begin(), b_free.end());
  DenseTensor ap = a.permuted(pa);
  DenseTensor bp = b.permuted(pb);

  std::size_t m = 1, k = 1, n = 1;
  std::vector<std::size_t> out_shape;
  for (auto ix : a_free) {
    m *= a.extent(ix);
    out_shape.push_back(a.extent(ix));
  }
  for (auto ix : a_con) k *= a.extent(ix);
  for (auto ix : b_free) {
    n *= b.extent(ix);
    out_shape.push_back(b.extent(ix));
  }
  if (out_shape.empty()) out_shape.push_back(1);  // scalar result as shape (1)

  DenseTensor out(out_shape);
  Eigen::Map<RowMajorMatrixXd> c(out.data().data(), m, n);
  c.noalias() = Eigen::Map<const RowMajorMatrixXd>(ap.data().data(), m, k) *
                Eigen::Map<const RowMajorMatrixXd>(bp.data().data(), k, n);
  return out;
}

struct SvdResult {
  DenseTensor u;                 // (row extents..., rank)
  std::vector<double> singular;  // descending
  DenseTensor v;                 // (rank, col extents...)
  double discarded_weight = 0.0; // sum of squared dropped singular values
};

/// Truncated SVD of `a` viewed as a matrix via `split`. Keeps at most
/// `max_rank` singular values and drops those below cutoff * s_max.
inline SvdResult factorize_svd(const DenseTensor& a, std::size_t split,
                               std::size_t max_rank, double cutoff) {
  if (split == 0 || split >= a.rank())
    throw ArgumentError("factorize_svd: split must leave both groups nonempty");
  if (max_rank < 1) throw ArgumentError("factorize_svd: max_rank < 1");
  if (cutoff < 0) throw ArgumentError("factorize_svd: negative cutoff");
  if (!a.all_finite()) throw NumericError("factorize_svd: non-finite entries");

  MatrixXd m = a.to_matrix(split);
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;

  std::size_t keep = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (static_cast<std::size_t>(i) < max_rank && s(i) > cutoff * smax) ++keep;
  if (keep == 0) keep = 1;  // always retain the leading value

  double discarded = 0.0;
  for (Eigen::Index i = keep; i < s.size(); ++i) discarded += s(i) * s(i);

  std::vector<std::size_t> ushape(a.shape().begin(), a.shape().begin() + split);
  ushape.push_back(keep);
  std::vector<std::size_t> vshape{keep};
  vshape.insert(vshape.end(), a.shape().begin() + split, a.shape().end());

  DenseTensor u(ushape), v(vshape);
  Eigen::Map<RowMajorMatrixXd>(u.data().data(), m.rows(), keep) =
      svd.matrixU().leftCols(keep);
  Eigen::Map<RowMajorMatrixXd>(v.data().data(), keep, m.cols()) =
      svd.matrixV().leftCols(keep).transpose();

  SvdResult out;
  out.u = std::move(u);
  out.v = std::move(v);
  out.singular.assign(s.data(), s.data() + keep);
  out.discarded_weight = discarded;
  return out;
}

struct EigResult {
  std::vector<double> eigenvalues;  // ascending
  MatrixXd eigenvectors;            // columns, unit norm in the problem metric
  bool converged = false;
};

enum class EigMode { dense, iterative };

namespace detail {

/// Lanczos with full reorthogonalization for the k lowest eigenpairs of a
/// symmetric operator given through matrix-vector products.
inline EigResult lanczos_lowest(const std::function<VectorXd(const VectorXd&)>& apply,
                                std::size_t dim, std::size_t k, double tol,
                                std::uint64_t seed = 1234567,
                                const VectorXd* start0 = nullptr) {
  if (k > dim) throw ArgumentError("lanczos: k > dim");
  const std::size_t max_mv = 10 * dim + 50;
  const std::size_t max_basis = std::min<std::size_t>(dim, std::max<std::size_t>(4 * k + 60, 120));

  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() { return (rng() >> 11) * 0x1.0p-53 - 0.5; };

  VectorXd start(dim);
  if (start0 && start0->size() == static_cast<Eigen::Index>(dim) &&
      start0->norm() > 1e-300) {
    start = start0->normalized();
  } else {
    for (std::size_t i = 0; i < dim; ++i) start(i) = uniform();
    start.normalize();
  }

  std::size_t mv_count = 0;
  EigResult best;

  for (int restart = 0; restart < 64; ++restart) {
    std::vector<VectorXd> basis;
    std::vector<double> alpha, beta;
    VectorXd v = start;
    VectorXd w;

    Eigen::SelfAdjointEigenSolver<MatrixXd> tri;
    for (std::size_t j = 0; j < max_basis && mv_count < max_mv; ++j) {
      basis.push_back(v);
      w = apply(v);
      ++mv_count;
      double a = v.dot(w);
      alpha.push_back(a);
      w -= a * v;
      if (j > 0) w -= beta.back() * basis[j - 1];
      for (const auto& q : basis) w -= q.dot(w) * q;  // full reorthogonalization
      for (const auto& q : basis) w -= q.dot(w) * q;

      const std::size_t m = alpha.size();
      bool check_now = (m >= k && (m % 8 == 0 || j + 1 == max_basis)) || w.norm() < 1e-14;
      if (check_now) {
        MatrixXd t = MatrixXd::Zero(m, m);
        for (std::size_t i = 0; i < m; ++i) t(i, i) = alpha[i];
        for (std::size_t i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
        tri.compute(t);
        // residual of Ritz pair i is |beta_m * y(m-1, i)|
        double bnorm = w.norm();
        bool all_ok = m >= k;
        for (std::size_t i = 0; i < k && all_ok; ++i) {
          double resid = bnorm * std::abs(tri.eigenvectors()(m - 1, i));
          double scale = std::max(1.0, std::abs(tri.eigenvalues()(i)));
          if (resid > tol * scale) all_ok = false;
        }
        if (all_ok || bnorm < 1e-14) {
          EigResult out;
          out.eigenvalues.assign(tri.eigenvalues().data(), tri.eigenvalues().data() + k);
          out.eigenvectors = MatrixXd::Zero(dim, k);
          for (std::size_t i = 0; i < k; ++i) {
            VectorXd ritz = VectorXd::Zero(dim);
            for (std::size_t q = 0; q < m; ++q)
              ritz += tri.eigenvectors()(q, i) * basis[q];
            out.eigenvectors.col(i) = ritz.normalized();
          }
          out.converged = all_ok;
          if (all_ok) return out;
          best = out;  // invariant subspace exhausted without formal convergence
          if (bnorm < 1e-14) return out.converged = true, out;
        }
      }
      double b = w.norm();
      if (b < 1e-14) break;
      beta.push_back(b);
      v = w / b;
    }
    // restart from the best Ritz vector
    if (!alpha.empty()) {
      const std::size_t m = alpha.size();
      MatrixXd t = MatrixXd::Zero(m, m);
      for (std::size_t i = 0; i < m; ++i) t(i, i) = alpha[i];
      for (std::size_t i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(t);
      VectorXd ritz = VectorXd::Zero(dim);
      for (std::size_t q = 0; q < m; ++q) ritz += es.eigenvectors()(q, 0) * basis[q];
      start = ritz.normalized();
    }
    if (mv_count >= max_mv) break;
  }
  throw ConvergenceError("lanczos: no convergence within " +
                         std::to_string(max_mv) + " matrix-vector products");
}

}  // namespace detail

/// k lowest eigenpairs of h v = lambda n v (n = identity when absent).
/// Dense mode eigendecomposes; iterative mode is Lanczos restricted to
/// matrix-vector products. A singular metric throws ConditioningError —
/// regularization is the caller's job.
inline EigResult eig_lowest(const MatrixXd& h, const std::optional<MatrixXd>& n,
                            std::size_t k, EigMode mode = EigMode::dense,
                            double tol = 1e-10) {
  const std::size_t dim = static_cast<std::size_t>(h.rows());
  if (h.rows() != h.cols()) throw ArgumentError("eig_lowest: h not square");
  if (k < 1 || k > dim) throw ArgumentError("eig_lowest: bad k");

  MatrixXd whiten;  // maps whitened coords back to original ones
  MatrixXd heff;
  if (n) {
    if (n->rows() != h.rows() || n->cols() != h.cols())
      throw DimensionError("eig_lowest: metric size mismatch");
    Eigen::SelfAdjointEigenSolver<MatrixXd> ns(*n);
    const VectorXd& s = ns.eigenvalues();
    double smax = s.maxCoeff();
    if (smax <= 0.0) throw ConditioningError("eig_lowest: metric not positive");
    if (s.minCoeff() < 1e-12 * smax)
      throw ConditioningError("eig_lowest: metric numerically singular");
    whiten = ns.eigenvectors() * s.cwiseSqrt().cwiseInverse().asDiagonal();
    heff = whiten.transpose() * h * whiten;
    heff = 0.5 * (heff + heff.transpose());
  } else {
    heff = 0.5 * (h + h.transpose());
  }

  EigResult out;
  if (mode == EigMode::dense) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(heff);
    out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + k);
    out.eigenvectors = es.eigenvectors().leftCols(k);
    out.converged = es.info() == Eigen::Success;
  } else {
    auto apply = [&heff](const VectorXd& x) { return VectorXd(heff * x); };
    out = detail::lanczos_lowest(apply, dim, k, tol);
  }
  if (n) out.eigenvectors = whiten * out.eigenvectors;  // columns obey v' n v = 1
  return out;
}

/// Same contract, but the operator is only available as a matrix-vector
/// product (always Lanczos). An optional start vector warms up repeated
/// solves on slowly changing operators.
inline EigResult eig_lowest_apply(const std::function<VectorXd(const VectorXd&)>& apply,
                                  std::size_t dim, std::size_t k, double tol = 1e-10,
                                  std::uint64_t seed = 1234567,
                                  const VectorXd* start = nullptr) {
  return detail::lanczos_lowest(apply, dim, k, tol, seed, start);
}

struct DominantEig {
  double value = 0.0;
  VectorXd left;   // normalized so that left . right = 1
  VectorXd right;
};

/// Dominant eigenpair of a real map with a real dominant eigenvalue, by power
/// iteration on the map and its adjoint. Optional warm starts speed up
/// repeated calls on slowly changing maps.
inline DominantEig dominant_eigenpair(
    const std::function<VectorXd(const VectorXd&)>& apply,
    const std::function<VectorXd(const VectorXd&)>& apply_adjoint,
    std::size_t dim, double tol = 1e-12,
    const VectorXd* right0 = nullptr, const VectorXd* left0 = nullptr,
    std::size_t max_iters = 100000) {
  auto power = [&](const std::function<VectorXd(const VectorXd&)>& f,
                   const VectorXd* x0) -> std::pair<double, VectorXd> {
    VectorXd x;
    if (x0 && x0->size() == static_cast<Eigen::Index>(dim) && x0->norm() > 0)
      x = x0->normalized();
    else {
      x = VectorXd::Ones(dim);
      x(0) += 0.5;           // break symmetry for permutation-like maps
      x.normalize();
    }
    double lambda = 0.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
      VectorXd y = f(x);
      double ny = y.norm();
      if (!(ny > 0.0) || !std::isfinite(ny))
        throw NumericError("dominant_eigenpair: map produced zero/non-finite vector");
      double lam = x.dot(y);  // signed Rayleigh estimate
      y /= ny;
      double delta = std::min((y - x).norm(), (y + x).norm());
      x = y;
      if (delta < tol && std::abs(lam - lambda) <= tol * std::max(1.0, std::abs(lam))) {
        return {lam, x};
      }
      lambda = lam;
    }
    throw ConvergenceError("dominant_eigenpair: power iteration cap reached");
  };

  auto [lr, right] = power(apply, right0);
  auto [ll, left] = power(apply_adjoint, left0);
  (void)ll;

  double ip = left.dot(right);
  if (std::abs(ip) < 1e-300)
    throw ConditioningError("dominant_eigenpair: left/right vectors orthogonal");
  DominantEig out;
  out.value = lr;
  out.right = right;
  out.left = left / ip;
  return out;
}

/// Magnitudes of the top-k eigenvalues of a general real map (Arnoldi).
/// Used for transfer-matrix gap and correlation-length diagnostics.
inline std::vector<double> top_eigenvalue_magnitudes(
    const std::function<VectorXd(const VectorXd&)>& apply, std::size_t dim,
    std::size_t k, std::size_t krylov = 0) {
  if (krylov == 0) krylov = std::min(dim, std::max<std::size_t>(8 * k + 24, 40));
  krylov = std::min(krylov, dim);

  std::vector<VectorXd> q;
  VectorXd v = VectorXd::Ones(dim);
  v(0) += 0.25;
  v.normalize();
  MatrixXd hess = MatrixXd::Zero(krylov + 1, krylov);
  std::size_t m = 0;
  q.push_back(v);
  for (std::size_t j = 0; j < krylov; ++j) {
    VectorXd w = apply(q[j]);
    for (std::size_t i = 0; i <= j; ++i) {
      hess(i, j) = q[i].dot(w);
      w -= hess(i, j) * q[i];
    }
    for (std::size_t i = 0; i <= j; ++i) {  // second orthogonalization pass
      double c = q[i].dot(w);
      hess(i, j) += c;
      w -= c * q[i];
    }
    m = j + 1;
    double nw = w.norm();
    if (nw < 1e-13) break;
    hess(j + 1, j) = nw;
    q.push_back(w / nw);
  }
  Eigen::EigenSolver<MatrixXd> es(hess.topLeftCorner(m, m));
  std::vector<double> mags(m);
  for (std::size_t i = 0; i < m; ++i) mags[i] = std::abs(es.eigenvalues()(i));
  std::sort(mags.rbegin(), mags.rend());
  mags.resize(std::min(k, mags.size()));
  return mags;
}

/// Deterministic uniform doubles in [-0.5, 0.5) from a seeded mt19937_64.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : rng_(seed) {}
  double uniform() { return (rng_() >> 11) * 0x1.0p-53 - 0.5; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace kinkfield
