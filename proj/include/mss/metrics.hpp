#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "mss/numerics.hpp"
#include "mss/partition.hpp"

namespace mss {

namespace metrics_detail {

// Exact minimum-cost assignment via potentials (Hungarian), O(n^3).
inline std::vector<int> min_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

inline std::vector<std::vector<int>> pieces_with_pure(const Partition& P, bool add_pure_slot) {
  std::vector<std::vector<int>> out = P.pieces;
  if (add_pure_slot) out.push_back(P.pure ? *P.pure : std::vector<int>{});
  return out;
}

}  // namespace metrics_detail

// Fraction of misassigned samples under the best piece matching.
inline double err_parti(const Partition& J, const Partition& J_star) {
  if (J.n != J_star.n) throw InvalidInputError("err_parti: sample count mismatch");
  const bool pure_slot = J.pure.has_value() || J_star.pure.has_value();
  auto a = metrics_detail::pieces_with_pure(J, pure_slot);
  auto b = metrics_detail::pieces_with_pure(J_star, pure_slot);
  const int K = static_cast<int>(std::max(a.size(), b.size()));
  if (K > 64) throw InvalidInputError("err_parti: piece count above assignment cap (64)");
  a.resize(K);
  b.resize(K);

  std::vector<int> b_label(J.n, -1);
  for (int k = 0; k < K; ++k)
    for (int j : b[k]) b_label[j] = k;

  Matrix cost = Matrix::Zero(K, K);
  for (int k = 0; k < K; ++k)
    for (int j : a[k])
      if (b_label[j] >= 0) cost(k, b_label[j]) -= 1.0;  // negated overlap
  const std::vector<int> match = metrics_detail::min_assignment(cost);
  double overlap = 0.0;
  for (int k = 0; k < K; ++k) overlap -= cost(k, match[k]);
  return (static_cast<double>(J.n) - overlap) / static_cast<double>(J.n);
}

// ||C_off(J*)||_1 / (||C||_1 - ||diag(C)||_1).
inline double bdiag_devi(const Matrix& C, const Partition& J_star) {
  const int n = static_cast<int>(C.rows());
  J_star.validate_cover(n);
  const std::vector<int> labels = J_star.to_labels();
  double total = 0.0, diag = 0.0, off_block = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = std::abs(C(i, j));
      total += a;
      if (i == j) diag += a;
      if (labels[i] != labels[j]) off_block += a;
    }
  const double denom = total - diag;
  if (denom <= 0.0) throw InvalidInputError("bdiag_devi: C is diagonal (deviation undefined)");
  return off_block / denom;
}

// One minus the Gini sparsity of the in-block entries; near 1 means a
// uniformly spread (well-connected) block interior.
inline double intra_b_conn(const Matrix& C, const Partition& J_star) {
  const int n = static_cast<int>(C.rows());
  J_star.validate_cover(n);
  std::vector<double> entries;
  for (const auto& piece : J_star.pieces)
    for (int i : piece)
      for (int j : piece) entries.push_back(std::abs(C(i, j)));
  const size_t M = entries.size();
  if (M == 0) throw InvalidInputError("intra_b_conn: no in-block entries");
  double total = 0.0;
  for (double e : entries) total += e;
  if (total <= 0.0) throw InvalidInputError("intra_b_conn: all in-block entries are zero");
  std::stable_sort(entries.begin(), entries.end());
  double value = 0.0;
  for (size_t l = 1; l <= M; ++l)
    value += entries[l - 1] / total * (2.0 * static_cast<double>(M - l) + 1.0) /
             static_cast<double>(M);
  return value;
}

// Relative gap between the K-th and (K+1)-st smallest eigenvalues of the
// normalized Laplacian of (|C| + |C|^T)/2.
inline double kblock_diag(const Matrix& C, int K) {
  const int n = static_cast<int>(C.rows());
  if (C.rows() != C.cols()) throw InvalidInputError("kblock_diag: square matrix expected");
  if (n <= K || K < 1) throw InvalidInputError("kblock_diag: need n > K >= 1");

  const Matrix A = 0.5 * (C.cwiseAbs() + C.cwiseAbs().transpose());
  Vector dinv(n);
  for (int i = 0; i < n; ++i) {
    const double deg = A.row(i).sum();
    dinv(i) = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;  // zero-degree rows become isolated
  }
  Matrix L = -(dinv.asDiagonal() * A * dinv.asDiagonal());
  L.diagonal().array() += 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(L);
  if (es.info() != Eigen::Success) throw NumericalError("kblock_diag: eigensolver failed");
  const double lk = es.eigenvalues()(K - 1);
  const double lk1 = es.eigenvalues()(K);
  if (lk1 <= 1e-10) return 0.0;
  return std::clamp((lk1 - lk) / lk1, 0.0, 1.0);
}

// The four §-style functionals in one record, each in [0, 1].
struct MetricReport {
  double err_parti = 0.0;
  double bdiag_devi = 0.0;
  double intra_b_conn = 0.0;
  double kblock_diag = 0.0;
};

inline MetricReport compute_metrics(const Matrix& C, const Partition& J,
                                    const Partition& J_star, int K) {
  MetricReport rep;
  rep.err_parti = err_parti(J, J_star);
  rep.bdiag_devi = bdiag_devi(C, J_star);
  rep.intra_b_conn = intra_b_conn(C, J_star);
  rep.kblock_diag = kblock_diag(C, K);
  return rep;
}

}  // namespace mss
