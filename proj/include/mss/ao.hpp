#pragma once

#include <optional>
#include <vector>

#include "mss/mcg.hpp"
#include "mss/spectral.hpp"

namespace mss {

struct AoParams {
  double lambda0 = 10.0;
  int t_max = 10;
  double tau = 0.5;  // active-set threshold
  McgParams mcg;
  uint64_t seed = 0;

  void validate() const {
    if (lambda0 <= 0 || t_max < 1) throw InvalidInputError("AoParams: need lambda0 > 0, t_max >= 1");
  }
};

// Adaptive diagonal penalty from the previous solve:
// lambda = min(lambda0, 2 ||Omega .* C||_1 / ||diag(C)||_2^2).
inline double lambda_update(const Matrix& Omega, const Matrix& C_hat, double lambda0) {
  const double c2 = C_hat.diagonal().squaredNorm();
  if (c2 == 0.0) return lambda0;
  const double l1 = (Omega.array() * C_hat.array()).abs().sum();
  return std::min(lambda0, 2.0 * l1 / c2);
}

struct AoTraceRow {
  int t = 0;
  double lambda = 0.0;
  double f_final = 0.0;
  bool omega_changed = false;
};

struct AoResult {
  Partition J;
  Matrix C;
  ActiveSet omega;
  Matrix W;
  std::vector<AoTraceRow> trace;
  std::vector<McgTraceRow> mcg_trace;  // concatenated over outer iterations
  int iterations = 0;
};

// Alternating optimization: solve C by manifold CG under the current active
// set, then rebuild (Omega, J) spectrally from (|C| + |C|^T)/2; stop when the
// active set is a fixed point. W is warm-started across outer iterations.
inline AoResult mss_ao(const ThinSvd& svd, int K, int d, const AoParams& params,
                       std::optional<ActiveSet> omega0 = {},
                       std::optional<Matrix> W0 = {}) {
  params.validate();
  const int n = svd.cols();
  const int r = svd.rank();
  if (K < 1 || K > n) throw InvalidInputError("mss_ao: K out of range");
  if (d < r)
    throw InvalidInputError("mss_ao: degenerate prior d < r(X) (factor width would be negative)");
  if (d > n) throw InvalidInputError("mss_ao: d exceeds the sample count");

  AoResult res;
  if (d == r) {
    // Rank-additive data: the projector V V^T is the closed-form solution.
    res.C = svd.V * svd.V.transpose();
    const Matrix A = 0.5 * (res.C.cwiseAbs() + res.C.cwiseAbs().transpose());
    ActiveSetResult as = build_active_set(A, K, params.tau, params.seed);
    res.omega = std::move(as.omega);
    res.J = std::move(as.J);
    res.W = Matrix(n - r, 0);
    return res;
  }

  ActiveSet omega = omega0 ? std::move(*omega0) : ActiveSet::coarse(n);
  Matrix W;
  if (W0) {
    W = std::move(*W0);
  } else {
    W = Matrix::Zero(n - r, d - r);
    W.topRows(d - r).setIdentity();
  }

  double lambda = params.lambda0;
  Matrix prev_omega_weights;
  Matrix prev_C;
  for (int t = 1; t <= params.t_max; ++t) {
    res.iterations = t;
    if (t > 1) lambda = lambda_update(prev_omega_weights, prev_C, params.lambda0);

    McgParams mp = params.mcg;
    mp.lambda = lambda;
    McgResult mcg = mss_mcg(svd, omega.weights, W, mp);
    W = std::move(mcg.W);
    prev_C = mcg.C;
    prev_omega_weights = omega.weights;
    for (auto& row : mcg.trace) res.mcg_trace.push_back(row);

    const Matrix A = 0.5 * (mcg.C.cwiseAbs() + mcg.C.cwiseAbs().transpose());
    ActiveSetResult as = build_active_set(A, K, params.tau, params.seed);
    const bool changed = !(as.omega == omega);
    res.trace.push_back({t, lambda,
                         res.mcg_trace.empty() ? 0.0 : res.mcg_trace.back().f_delta, changed});
    res.C = std::move(mcg.C);
    res.J = std::move(as.J);
    omega = std::move(as.omega);
    if (!changed) break;
  }
  res.omega = std::move(omega);
  res.W = std::move(W);
  return res;
}

}  // namespace mss
