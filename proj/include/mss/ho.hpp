#pragma once

#include <optional>
#include <vector>

#include "mss/ao.hpp"
#include "mss/dual.hpp"
#include "mss/metrics.hpp"

namespace mss {

// Active set from a dual-side partition: hard 0/1 cross-piece weights when
// every piece is nonempty, and the beta-weighted variant otherwise. A single
// nonempty piece degenerates to the coarse set.
inline ActiveSet omega_from_partition(const Partition& J, double beta) {
  const int n = J.n;
  ActiveSet out;
  out.weights = Matrix::Zero(n, n);
  if (J.piece_count() <= 1) return ActiveSet::coarse(n);

  const bool all_nonempty = J.nonempty_count() == J.piece_count();
  std::vector<int> label(n, -1);
  for (int k = 0; k < J.piece_count(); ++k)
    for (int j : J.pieces[k]) label[j] = k;

  if (all_nonempty) {
    out.kind = ActiveSet::Kind::hard;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && label[i] != label[j]) out.weights(i, j) = 1.0;
  } else {
    out.kind = ActiveSet::Kind::beta;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        out.weights(i, j) = label[i] != label[j] ? beta : 1.0;
      }
  }
  return out;
}

struct HoParams {
  double beta = 1.25;
  int h_max = 10;
  int s_max = 50;
  AoParams ao;
};

struct HoTraceRow {
  int h = 0;
  int ao_iterations = 0;
  int dual_iterations = 0;
  bool omega_changed = false;
  std::optional<MetricReport> metrics;  // filled when ground truth is known
};

struct HoResult {
  Partition J;
  Matrix C;
  ActiveSet omega;
  std::vector<HoTraceRow> trace;
  int iterations = 0;
};

// Hybrid optimization: alternate the primal solver with the pseudo-dual
// subspace correction, rebuilding the active set from each dual partition.
// The spectral seed is varied per hybrid step, and a degenerate dual output
// (at most one nonempty piece) never counts as convergence: its beta set
// equals the coarse one, so stopping there would freeze a collapsed state.
inline HoResult mss_ho(const Matrix& X, const ThinSvd& svd, int K, int d, const HoParams& params,
                       const Partition* ground_truth = nullptr) {
  const int n = svd.cols();
  HoResult res;
  ActiveSet omega = ActiveSet::coarse(n);

  for (int h = 1; h <= params.h_max; ++h) {
    res.iterations = h;
    AoParams ap = params.ao;
    ap.seed = params.ao.seed + static_cast<uint64_t>(h - 1);
    AoResult prim = mss_ao(svd, K, d, ap, omega);

    DualResult dual = subspace_correction(X, prim.J, d, params.s_max);

    ActiveSet omega_new = omega_from_partition(dual.J, params.beta);
    const bool degenerate = dual.J.nonempty_count() <= 1;
    const bool changed = !(omega_new == omega) || degenerate;

    HoTraceRow row;
    row.h = h;
    row.ao_iterations = prim.iterations;
    row.dual_iterations = dual.iterations;
    row.omega_changed = changed;
    if (ground_truth)
      row.metrics = compute_metrics(prim.C, dual.J, *ground_truth, K);
    res.trace.push_back(std::move(row));

    if (!degenerate || res.J.pieces.empty()) {
      res.J = std::move(dual.J);
      res.C = std::move(prim.C);
    }
    omega = std::move(omega_new);
    if (!changed) break;
  }
  res.omega = std::move(omega);
  return res;
}

}  // namespace mss
