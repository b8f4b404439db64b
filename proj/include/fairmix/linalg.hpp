#pragma once

// Dense linear algebra used by the debiasing stage: truncated SVD via
// one-sided Jacobi, explained variance, and the projector onto the column
// space of the sensitive matrix.

#include "fairmix/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairmix {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Rank-k factorization Z ~ left * diag(singular) * right^T.
template <typename Scalar>
struct SvdResult {
  MatrixX<Scalar> left;      // n x k, orthonormal columns
  VectorX<Scalar> singular;  // k, non-increasing, >= 0
  MatrixX<Scalar> right;     // p x k, orthonormal columns

  Index rank() const { return singular.size(); }

  MatrixX<Scalar> reconstruct() const { return left * singular.asDiagonal() * right.transpose(); }
};

struct SvdOptions {
  int max_sweeps = 60;
  // Above this n/p ratio the matrix is first reduced by a thin QR and the
  // Jacobi sweeps run on the p x p triangular factor.
  double qr_ratio = 2.0;
};

namespace detail {

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

// Extend the orthonormal columns [0, filled) of `basis` to a full set,
// drawing candidates from the standard basis.
template <typename Scalar>
void complete_orthonormal(MatrixX<Scalar>& basis, Index filled) {
  const Index m = basis.rows();
  Index candidate = 0;
  for (Index col = filled; col < basis.cols(); ++col) {
    for (;; ++candidate) {
      if (candidate >= m) throw NumericalError("unable to complete orthonormal basis");
      VectorX<Scalar> v = VectorX<Scalar>::Unit(m, candidate);
      for (int pass = 0; pass < 2; ++pass) {
        for (Index j = 0; j < col; ++j) v -= basis.col(j).dot(v) * basis.col(j);
      }
      const Scalar norm = v.norm();
      if (norm > Scalar(0.5)) {
        basis.col(col) = v / norm;
        ++candidate;
        break;
      }
    }
  }
}

// Hestenes one-sided Jacobi on a tall matrix (rows >= cols). On return
// `work` holds U * Sigma (columns unsorted) and `v` the accumulated rotations.
template <typename Scalar>
void hestenes_sweeps(MatrixX<Scalar>& work, MatrixX<Scalar>& v, int max_sweeps) {
  const Index c = work.cols();
  v.setIdentity(c, c);
  const Scalar tol = std::numeric_limits<Scalar>::epsilon() * std::sqrt(Scalar(work.rows()));

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Index i = 0; i + 1 < c; ++i) {
      for (Index j = i + 1; j < c; ++j) {
        const Scalar alpha = work.col(i).squaredNorm();
        const Scalar beta = work.col(j).squaredNorm();
        const Scalar gamma = work.col(i).dot(work.col(j));
        if (alpha == Scalar(0) || beta == Scalar(0)) continue;
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;

        const Scalar zeta = (beta - alpha) / (Scalar(2) * gamma);
        const Scalar t = std::copysign(Scalar(1), zeta) / (std::abs(zeta) + std::sqrt(Scalar(1) + zeta * zeta));
        const Scalar cs = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar sn = cs * t;

        const VectorX<Scalar> wi = work.col(i);
        work.col(i) = cs * wi - sn * work.col(j);
        work.col(j) = sn * wi + cs * work.col(j);
        const VectorX<Scalar> vi = v.col(i);
        v.col(i) = cs * vi - sn * v.col(j);
        v.col(j) = sn * vi + cs * v.col(j);
      }
    }
    if (!rotated) return;
  }
  throw NumericalError("one-sided Jacobi SVD did not converge within " + std::to_string(max_sweeps) + " sweeps");
}

// Full thin SVD of a tall matrix, sorted by decreasing singular value.
template <typename Scalar>
SvdResult<Scalar> thin_svd_tall(MatrixX<Scalar> work, int max_sweeps) {
  const Index c = work.cols();
  MatrixX<Scalar> v;
  hestenes_sweeps(work, v, max_sweeps);

  VectorX<Scalar> norms(c);
  for (Index j = 0; j < c; ++j) norms(j) = work.col(j).norm();
  std::vector<Index> order(static_cast<std::size_t>(c));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return norms(a) > norms(b); });

  SvdResult<Scalar> out;
  out.left.resize(work.rows(), c);
  out.singular.resize(c);
  out.right.resize(c, c);

  const Scalar cutoff = std::numeric_limits<Scalar>::epsilon() * (norms.size() ? norms.maxCoeff() : Scalar(0)) *
                        Scalar(std::max(work.rows(), c));
  Index filled = 0;
  for (Index j = 0; j < c; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    out.right.col(j) = v.col(src);
    if (norms(src) > cutoff && norms(src) > Scalar(0)) {
      out.singular(j) = norms(src);
      out.left.col(j) = work.col(src) / norms(src);
      filled = j + 1;
    } else {
      out.singular(j) = Scalar(0);
    }
  }
  detail::complete_orthonormal(out.left, filled);
  return out;
}

}  // namespace detail

/// Best rank-k approximation of Z (Eckart-Young) as M_k D_k N_k^T.
///
/// Each singular pair is signed so the largest-magnitude entry of its right
/// singular vector is positive; results are therefore reproducible.
template <typename Derived>
SvdResult<typename Derived::Scalar> rank_k_svd(const Eigen::MatrixBase<Derived>& z, Index k,
                                               const SvdOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  const Index n = z.rows();
  const Index p = z.cols();
  if (k < 1 || k > std::min(n, p)) {
    throw std::invalid_argument("rank_k_svd: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(std::min(n, p)) + "]");
  }
  if (!detail::all_finite(z)) throw std::invalid_argument("rank_k_svd: matrix has non-finite entries");

  const bool transposed = n < p;
  MatrixX<Scalar> tall = transposed ? MatrixX<Scalar>(z.transpose()) : MatrixX<Scalar>(z);
  const Index rows = tall.rows();
  const Index cols = tall.cols();

  SvdResult<Scalar> full;
  if (static_cast<double>(rows) > options.qr_ratio * static_cast<double>(cols)) {
    Eigen::HouseholderQR<MatrixX<Scalar>> qr(tall);
    MatrixX<Scalar> r = qr.matrixQR().topRows(cols).template triangularView<Eigen::Upper>();
    SvdResult<Scalar> inner = detail::thin_svd_tall<Scalar>(std::move(r), options.max_sweeps);
    MatrixX<Scalar> padded = MatrixX<Scalar>::Zero(rows, cols);
    padded.topRows(cols) = inner.left;
    full.left = qr.householderQ() * padded;
    full.singular = std::move(inner.singular);
    full.right = std::move(inner.right);
  } else {
    full = detail::thin_svd_tall<Scalar>(std::move(tall), options.max_sweeps);
  }

  SvdResult<Scalar> out;
  out.singular = full.singular.head(k);
  if (transposed) {
    out.left = full.right.leftCols(k);
    out.right = full.left.leftCols(k);
  } else {
    out.left = full.left.leftCols(k);
    out.right = full.right.leftCols(k);
  }

  for (Index j = 0; j < k; ++j) {
    Index arg = 0;
    out.right.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.right(arg, j) < Scalar(0)) {
      out.right.col(j) *= Scalar(-1);
      out.left.col(j) *= Scalar(-1);
    }
  }
  return out;
}

/// Cumulative fraction of squared singular values; the last entry is 1.
template <typename Derived>
VectorX<typename Derived::Scalar> explained_variance(const Eigen::MatrixBase<Derived>& singular) {
  using Scalar = typename Derived::Scalar;
  const Index m = singular.size();
  if (m == 0) throw std::invalid_argument("explained_variance: no singular values");
  for (Index i = 0; i < m; ++i) {
    if (!(singular(i) >= Scalar(0))) throw std::invalid_argument("explained_variance: negative singular value");
    if (i > 0 && singular(i) > singular(i - 1)) {
      throw std::invalid_argument("explained_variance: singular values must be non-increasing");
    }
  }
  VectorX<Scalar> cumulative(m);
  Scalar running(0);
  for (Index i = 0; i < m; ++i) {
    running += singular(i) * singular(i);
    cumulative(i) = running;
  }
  if (running == Scalar(0)) throw std::invalid_argument("explained_variance: all singular values are zero");
  cumulative /= running;
  return cumulative;
}

/// Reciprocal condition threshold on S^T S below which S is treated as rank deficient.
inline constexpr double kGramRcondThreshold = 1e-12;

/// Column space of a full-column-rank matrix S. Applies P_S = S (S^T S)^-1 S^T
/// and its complement without forming n x n matrices unless asked to.
template <typename Scalar>
class ColumnSpace {
 public:
  template <typename Derived>
  explicit ColumnSpace(const Eigen::MatrixBase<Derived>& s) : basis_(s) {
    if (basis_.cols() == 0) throw std::invalid_argument("sensitive matrix has no columns");
    if (basis_.rows() < basis_.cols()) {
      throw NumericalError("sensitive matrix has more columns (" + std::to_string(basis_.cols()) + ") than rows (" +
                           std::to_string(basis_.rows()) + "); drop collinear sensitive columns");
    }
    if (!basis_.allFinite()) throw std::invalid_argument("sensitive matrix has non-finite entries");
    const MatrixX<Scalar> gram = basis_.transpose() * basis_;
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(gram, Eigen::EigenvaluesOnly);
    const Scalar lo = eig.eigenvalues().minCoeff();
    const Scalar hi = eig.eigenvalues().maxCoeff();
    rcond_ = hi > Scalar(0) ? std::max(lo, Scalar(0)) / hi : Scalar(0);
    if (!(rcond_ >= Scalar(kGramRcondThreshold))) {
      throw NumericalError("sensitive matrix is rank deficient (rcond of S^T S = " + std::to_string(rcond_) +
                           "); drop collinear sensitive columns");
    }
    gram_.compute(gram);
  }

  const MatrixX<Scalar>& basis() const { return basis_; }
  Scalar gram_rcond() const { return rcond_; }

  /// Coefficients (S^T S)^-1 S^T X.
  template <typename Derived>
  MatrixX<Scalar> coefficients(const Eigen::MatrixBase<Derived>& x) const {
    return gram_.solve(basis_.transpose() * x);
  }

  /// P_S X
  template <typename Derived>
  MatrixX<Scalar> project(const Eigen::MatrixBase<Derived>& x) const {
    return basis_ * coefficients(x);
  }

  /// (I - P_S) X, processed in column blocks of `block` columns.
  template <typename Derived>
  MatrixX<Scalar> residualize(const Eigen::MatrixBase<Derived>& x, Index block = 64) const {
    if (x.rows() != basis_.rows()) {
      throw std::invalid_argument("residualize: row mismatch (" + std::to_string(x.rows()) + " vs " +
                                  std::to_string(basis_.rows()) + ")");
    }
    MatrixX<Scalar> out(x.rows(), x.cols());
    for (Index c0 = 0; c0 < x.cols(); c0 += block) {
      const Index width = std::min(block, x.cols() - c0);
      const auto slab = x.middleCols(c0, width);
      out.middleCols(c0, width) = slab - basis_ * gram_.solve(basis_.transpose() * slab);
    }
    return out;
  }

  /// Dense n x n projector.
  MatrixX<Scalar> dense() const { return basis_ * gram_.solve(basis_.transpose()); }

 private:
  MatrixX<Scalar> basis_;
  Eigen::LDLT<MatrixX<Scalar>> gram_;
  Scalar rcond_{0};
};

/// P_S = S (S^T S)^-1 S^T as a dense matrix.
template <typename Derived>
MatrixX<typename Derived::Scalar> projector(const Eigen::MatrixBase<Derived>& s) {
  return ColumnSpace<typename Derived::Scalar>(s).dense();
}

}  // namespace fairmix
