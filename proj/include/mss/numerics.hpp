#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mss/errors.hpp"

namespace mss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative singular-value cutoff separating true from spurious rank on
// noiseless double-precision data.
inline constexpr double kRankTol = 1e-8;

namespace detail {

inline void require_finite(const Matrix& X, const char* who) {
  if (!X.allFinite()) throw InvalidInputError(std::string(who) + ": non-finite entries");
}

}  // namespace detail

// Thin SVD of X = U diag(sigma) V^T restricted to singular values above
// tol_rel * sigma_max, plus the orthogonal complement Vperp of V in R^n.
struct ThinSvd {
  Matrix U;       // m x r
  Vector sigma;   // r, nonincreasing, positive
  Matrix V;       // n x r
  Matrix Vperp;   // n x (n - r)

  int rank() const { return static_cast<int>(sigma.size()); }
  int rows() const { return static_cast<int>(U.rows()); }
  int cols() const { return static_cast<int>(V.rows()); }

  Matrix reconstruct() const { return U * sigma.asDiagonal() * V.transpose(); }
};

namespace detail {

// Completes the orthonormal columns of V to a basis of R^n by orthogonalizing
// the identity probe [V, I_n]; column order of the probe fixes the result.
inline Matrix complete_orthonormal(const Matrix& V, int n) {
  const int r = static_cast<int>(V.cols());
  if (r >= n) return Matrix(n, 0);
  Matrix probe(n, r + n);
  if (r > 0) probe.leftCols(r) = V;
  probe.rightCols(n) = Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(probe);
  Matrix Q = qr.householderQ();
  return Q.rightCols(n - r);
}

}  // namespace detail

inline ThinSvd thin_svd(const Matrix& X, double tol_rel = kRankTol) {
  if (X.rows() == 0 || X.cols() == 0) throw InvalidInputError("thin_svd: empty matrix");
  if (!(tol_rel > 0.0 && tol_rel < 1.0)) throw InvalidInputError("thin_svd: tol_rel outside (0,1)");
  detail::require_finite(X, "thin_svd");

  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  int r = 0;
  while (r < s.size() && s(r) > tol_rel * smax && s(r) > 0.0) ++r;

  ThinSvd out;
  out.U = svd.matrixU().leftCols(r);
  out.sigma = s.head(r);
  out.V = svd.matrixV().leftCols(r);
  out.Vperp = detail::complete_orthonormal(out.V, static_cast<int>(X.cols()));
  return out;
}

inline int numerical_rank(const Matrix& X, double tol_rel = kRankTol) {
  return thin_svd(X, tol_rel).rank();
}

// Rank of a column subset without building ThinSvd (hot path for theory ops).
inline int numerical_rank_cols(const Matrix& X, const std::vector<int>& cols,
                               double tol_rel = kRankTol) {
  if (cols.empty()) return 0;
  Matrix sub(X.rows(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) sub.col(j) = X.col(cols[j]);
  Eigen::BDCSVD<Matrix> svd(sub);
  const Vector& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  int r = 0;
  while (r < s.size() && s(r) > tol_rel * smax && s(r) > 0.0) ++r;
  return r;
}

struct TruncatedSvd {
  Matrix G;  // m x k orthonormal
  Vector D;  // k largest singular values, nonincreasing
  Matrix Q;  // n x k orthonormal
};

inline TruncatedSvd truncated_svd(const Matrix& X, int k) {
  if (X.rows() == 0 || X.cols() == 0) throw InvalidInputError("truncated_svd: empty matrix");
  detail::require_finite(X, "truncated_svd");
  const int kmax = static_cast<int>(std::min(X.rows(), X.cols()));
  if (k < 1 || k > kmax) throw InvalidInputError("truncated_svd: k out of range");
  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TruncatedSvd out;
  out.G = svd.matrixU().leftCols(k);
  out.D = svd.singularValues().head(k);
  out.Q = svd.matrixV().leftCols(k);
  return out;
}

struct TopEigs {
  Matrix P;        // n x k orthonormal eigenvectors
  Vector lambdas;  // k algebraically largest eigenvalues, nonincreasing
};

// Top-k eigenpairs of (A + A^T)/2.
inline TopEigs top_eigs_symmetric(const Matrix& A, int k) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw InvalidInputError("top_eigs_symmetric: expects a nonempty square matrix");
  detail::require_finite(A, "top_eigs_symmetric");
  const int n = static_cast<int>(A.rows());
  if (k < 1 || k > n) throw InvalidInputError("top_eigs_symmetric: k out of range");
  Matrix S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.info() != Eigen::Success) throw NumericalError("top_eigs_symmetric: eigensolver failed");
  TopEigs out;
  out.P.resize(n, k);
  out.lambdas.resize(k);
  for (int i = 0; i < k; ++i) {
    out.P.col(i) = es.eigenvectors().col(n - 1 - i);
    out.lambdas(i) = es.eigenvalues()(n - 1 - i);
  }
  return out;
}

}  // namespace mss
