#pragma once

#include <tuple>
#include <vector>

#include "mss/numerics.hpp"
#include "mss/partition.hpp"

namespace mss {

// Per-piece truncated-SVD fit after allocating the global rank budget d to
// the d largest singular values across pieces.
struct DualAllocation {
  std::vector<int> dk;          // d_k' per piece, summing to d
  std::vector<Matrix> bases;    // G_k, m x d_k'
  std::vector<Matrix> right;    // Q_k, |J_k| x d_k'
  double objective = 0.0;       // sum_k ||X_Jk - G_k G_k^T X_Jk||_F^2
};

inline DualAllocation allocate_ranks(const Matrix& X, const Partition& J, int d) {
  const int K = J.piece_count();
  if (K == 0) throw InvalidInputError("allocate_ranks: no pieces");
  const int m = static_cast<int>(X.rows());

  struct Triple {
    double sigma;
    int k;
    int pos;
  };
  std::vector<Triple> spectrum;
  std::vector<Matrix> U(K), V(K);
  std::vector<Vector> S(K);
  double total_energy = 0.0;
  int available = 0;
  for (int k = 0; k < K; ++k) {
    const auto& piece = J.pieces[k];
    if (piece.empty()) continue;
    Matrix Xk(m, piece.size());
    for (size_t j = 0; j < piece.size(); ++j) Xk.col(j) = X.col(piece[j]);
    Eigen::BDCSVD<Matrix> svd(Xk, Eigen::ComputeThinU | Eigen::ComputeThinV);
    U[k] = svd.matrixU();
    V[k] = svd.matrixV();
    S[k] = svd.singularValues();
    total_energy += S[k].squaredNorm();
    available += static_cast<int>(S[k].size());
    for (int i = 0; i < S[k].size(); ++i) spectrum.push_back({S[k](i), k, i});
  }
  if (d > available)
    throw InvalidInputError("allocate_ranks: d exceeds the available spectrum");

  // Largest first; ties resolved by (piece index, position) for determinism.
  std::stable_sort(spectrum.begin(), spectrum.end(), [](const Triple& a, const Triple& b) {
    if (a.sigma != b.sigma) return a.sigma > b.sigma;
    return std::tie(a.k, a.pos) < std::tie(b.k, b.pos);
  });

  DualAllocation out;
  out.dk.assign(K, 0);
  double kept = 0.0;
  for (int i = 0; i < d; ++i) {
    ++out.dk[spectrum[i].k];
    kept += spectrum[i].sigma * spectrum[i].sigma;
  }
  out.bases.resize(K);
  out.right.resize(K);
  for (int k = 0; k < K; ++k) {
    if (J.pieces[k].empty()) {
      out.bases[k] = Matrix(m, 0);
      out.right[k] = Matrix(0, 0);
      continue;
    }
    out.bases[k] = U[k].leftCols(out.dk[k]);
    out.right[k] = V[k].leftCols(out.dk[k]);
  }
  out.objective = std::max(0.0, total_energy - kept);
  return out;
}

// Nearest-subspace labels; ties go to the smallest piece index and empty
// pieces stay as empty markers.
inline Partition relabel_nearest(const Matrix& X, const std::vector<Matrix>& bases) {
  const int K = static_cast<int>(bases.size());
  bool any = false;
  for (const auto& G : bases) any = any || G.cols() > 0;
  if (!any) throw InvalidInputError("relabel_nearest: all bases empty");

  Partition J;
  J.n = static_cast<int>(X.cols());
  J.pieces.assign(K, {});
  for (int j = 0; j < J.n; ++j) {
    const double x2 = X.col(j).squaredNorm();
    int arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      const double res = bases[k].cols() > 0
                             ? std::max(0.0, x2 - (bases[k].transpose() * X.col(j)).squaredNorm())
                             : x2;
      if (res < best) {
        best = res;
        arg = k;
      }
    }
    J.pieces[arg].push_back(j);
  }
  return J;
}

struct DualResult {
  Partition J;
  std::vector<Matrix> blocks;  // C_k = Q_k Q_k^T per piece at termination
  std::vector<double> objective_trace;
  bool converged = false;
  bool budget_clamped = false;  // some piece sizes could not absorb d
  int iterations = 0;
};

namespace dual_detail {

inline int available_spectrum(const Matrix& X, const Partition& J) {
  int available = 0;
  for (const auto& piece : J.pieces)
    available += static_cast<int>(std::min<size_t>(piece.size(), X.rows()));
  return available;
}

}  // namespace dual_detail

// Subspace correction: alternate the global rank allocation with
// nearest-subspace relabeling until the partition is a fixed point. A
// partition too skewed to absorb the full budget d is fit with the largest
// feasible budget for that round (flagged in the result).
inline DualResult subspace_correction(const Matrix& X, Partition J, int d, int s_max = 50) {
  J.validate_cover(static_cast<int>(X.cols()));
  if (J.pure) throw InvalidInputError("subspace_correction: pure piece not allowed");
  if (J.nonempty_count() == 0) throw InvalidInputError("subspace_correction: all pieces empty");

  DualResult res;
  DualAllocation alloc;
  auto allocate_clamped = [&](const Partition& part) {
    const int d_eff = std::min(d, dual_detail::available_spectrum(X, part));
    if (d_eff < d) res.budget_clamped = true;
    return allocate_ranks(X, part, d_eff);
  };
  for (int s = 1; s <= s_max; ++s) {
    res.iterations = s;
    alloc = allocate_clamped(J);
    res.objective_trace.push_back(alloc.objective);
    Partition J_new = relabel_nearest(X, alloc.bases);
    if (J_new == J) {
      res.converged = true;
      break;
    }
    J = std::move(J_new);
  }
  if (!res.converged) {
    // Emit blocks consistent with the final labels.
    alloc = allocate_clamped(J);
    res.objective_trace.push_back(alloc.objective);
  }
  res.blocks.resize(J.piece_count());
  for (int k = 0; k < J.piece_count(); ++k)
    res.blocks[k] = alloc.right[k] * alloc.right[k].transpose();
  res.J = std::move(J);
  return res;
}

}  // namespace mss
