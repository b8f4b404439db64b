#pragma once

// Closed-form debiasing: truncate Z to its best rank-k approximation, then
// remove the component lying in the column space of the sensitive matrix S:
//
//   Z_hat = (I - P_S) M_k D_k N_k^T,   P_S = S (S^T S)^-1 S^T
//
// Z_hat^T S = 0, and Z_hat is the closest such matrix to Z among rank-k
// reconstructions residualized against S.

#include "fairmix/dataset.hpp"
#include "fairmix/linalg.hpp"
#include "fairmix/types.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairmix {

struct FairProjectionConfig {
  Index k = 20;
  bool include_intercept = false;          // append an all-ones column to S
  std::optional<double> variance_target;   // when set, k = select_k(Z, target)
};

template <typename Scalar>
struct Debiased {
  MatrixX<Scalar> z_hat;
  Index k = 0;
  Scalar residual{0};           // max |Z_hat^T S|
  Scalar relative_residual{0};  // residual / (|Z_hat|_F |S|_F + tiny)
};

using DebiasedRepresentation = Debiased<double>;

template <typename Scalar, typename DerivedS>
void fill_residual(Debiased<Scalar>& out, const Eigen::MatrixBase<DerivedS>& s) {
  out.residual = (out.z_hat.transpose() * s).cwiseAbs().maxCoeff();
  out.relative_residual = out.residual / (out.z_hat.norm() * s.norm() + std::numeric_limits<Scalar>::min());
}

/// Smallest k whose cumulative explained variance reaches `target`.
template <typename Derived>
Index select_k_from_singular(const Eigen::MatrixBase<Derived>& singular, double target) {
  if (!(target > 0.0 && target <= 1.0)) throw std::invalid_argument("variance target must lie in (0, 1]");
  const auto cumulative = explained_variance(singular);
  for (Index j = 0; j < cumulative.size(); ++j) {
    if (cumulative(j) >= target) return j + 1;
  }
  return cumulative.size();
}

template <typename Derived>
Index select_k(const Eigen::MatrixBase<Derived>& z, double target) {
  const auto svd = rank_k_svd(z, std::min(z.rows(), z.cols()));
  return select_k_from_singular(svd.singular, target);
}

/// Appends an all-ones column when requested.
template <typename Derived>
MatrixX<typename Derived::Scalar> augment_sensitive(const Eigen::MatrixBase<Derived>& s, bool include_intercept) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out(s.rows(), s.cols() + (include_intercept ? 1 : 0));
  out.leftCols(s.cols()) = s;
  if (include_intercept) out.col(s.cols()).setOnes();
  return out;
}

namespace detail {

template <typename DerivedZ, typename DerivedS>
Index resolve_k(const Eigen::MatrixBase<DerivedZ>& z, const Eigen::MatrixBase<DerivedS>& s,
                const FairProjectionConfig& config) {
  if (z.rows() != s.rows()) {
    throw std::invalid_argument("debias: Z has " + std::to_string(z.rows()) + " rows, S has " +
                                std::to_string(s.rows()));
  }
  const Index k = config.variance_target ? select_k(z, *config.variance_target) : config.k;
  if (k < 1 || k > std::min(z.rows(), z.cols())) {
    throw std::invalid_argument("debias: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(std::min(z.rows(), z.cols())) + "]");
  }
  return k;
}

}  // namespace detail

/// Block-wise path: Z_hat = Z_k - S ((S^T S)^-1 (S^T Z_k)); never forms n x n matrices.
template <typename DerivedZ, typename DerivedS>
Debiased<typename DerivedZ::Scalar> debias(const Eigen::MatrixBase<DerivedZ>& z, const Eigen::MatrixBase<DerivedS>& s,
                                           const FairProjectionConfig& config = {}) {
  using Scalar = typename DerivedZ::Scalar;
  const Index k = detail::resolve_k(z, s, config);
  const ColumnSpace<Scalar> space(augment_sensitive(s, config.include_intercept));
  Debiased<Scalar> out;
  out.k = k;
  out.z_hat = space.residualize(rank_k_svd(z, k).reconstruct());
  fill_residual(out, space.basis());
  return out;
}

/// Reference path forming I - P_S explicitly. O(n^2) memory; small inputs only.
template <typename DerivedZ, typename DerivedS>
Debiased<typename DerivedZ::Scalar> debias_dense(const Eigen::MatrixBase<DerivedZ>& z,
                                                 const Eigen::MatrixBase<DerivedS>& s,
                                                 const FairProjectionConfig& config = {}) {
  using Scalar = typename DerivedZ::Scalar;
  const Index k = detail::resolve_k(z, s, config);
  const MatrixX<Scalar> basis = augment_sensitive(s, config.include_intercept);
  const MatrixX<Scalar> complement = MatrixX<Scalar>::Identity(z.rows(), z.rows()) - projector(basis);
  const auto svd = rank_k_svd(z, k);
  Debiased<Scalar> out;
  out.k = k;
  out.z_hat = complement * svd.left * svd.singular.asDiagonal() * svd.right.transpose();
  fill_residual(out, basis);
  return out;
}

/// Horizontal stack of the named attributes' S columns (optionally with an
/// intercept). Throws NumericalError when the result is rank deficient.
Matrix build_sensitive_matrix(const EncodedDataset& dataset, const std::vector<std::string>& attributes,
                              bool include_intercept = false);

/// Column names matching build_sensitive_matrix's output.
std::vector<std::string> sensitive_column_names(const LevelMap& levels, const std::vector<std::string>& attributes,
                                                bool include_intercept = false);

}  // namespace fairmix
