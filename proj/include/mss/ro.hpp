#pragma once

#include <cstdint>
#include <vector>

#include "mss/numerics.hpp"
#include "mss/spectral.hpp"

namespace mss {

enum class ErrorNorm { l1, l21, fro };

struct GraphParams {
  double gamma = 1.0;  // retained column-norm fraction in (0, 1]
  double sigma = 0.0;  // singular-value floor
  double s = 1.0;      // affinity sharpening power, >= 1
};

struct RoParams {
  double lambda = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  ErrorNorm phi = ErrorNorm::fro;
  double rho1 = 0.0;       // <= 0: max(lambda, beta)
  double rho2 = 0.0;       // <= 0: max(lambda, beta)
  double tau_admm = 0.0;   // <= 0: 1e-4 * (1 + ||X||_F)
  double eps_outer = 0.0;  // <= 0: 1e-4 * n
  int t_max = 3;
  int ell_max = 10;
  int k_max = 200;
  GraphParams graph;
  double tau_active = 0.5;
  uint64_t seed = 0;
  bool normalize_columns = false;

  void validate() const {
    if (lambda <= 0 || alpha <= 0 || beta <= 0)
      throw InvalidInputError("RoParams: model weights must be positive");
    if (!(graph.gamma > 0 && graph.gamma <= 1) || graph.sigma < 0 || graph.s < 1)
      throw InvalidInputError("RoParams: bad graph parameters");
    if (t_max < 1 || ell_max < 1 || k_max < 1)
      throw InvalidInputError("RoParams: loop caps must be >= 1");
  }

  // Motion-segmentation preset: squared-Frobenius error with n/K scaling.
  static RoParams motion_preset(int n, int K) {
    RoParams p;
    p.lambda = 10.0 * n / K;
    p.alpha = 50.0 * n / K;
    p.beta = 0.05 * n / K;
    p.phi = ErrorNorm::fro;
    p.graph = {0.8, 0.001, 4.0};
    return p;
  }

  // Face-clustering preset: entrywise l1 error on unit-norm columns.
  static RoParams yaleb_preset(const Matrix& X) {
    RoParams p;
    p.lambda = 5.0;
    p.beta = 5.0;
    double max_col_l1 = 0.0;
    for (int j = 0; j < X.cols(); ++j)
      max_col_l1 = std::max(max_col_l1, X.col(j).cwiseAbs().sum());
    p.alpha = 20.0 / std::max(max_col_l1, 1e-300);
    p.phi = ErrorNorm::l1;
    p.graph = {1.0, 0.0, 1.0};
    p.normalize_columns = true;
    return p;
  }
};

namespace ro_detail {

inline double shrink(double b, double a) {
  const double mag = std::abs(b) - a;
  return mag > 0.0 ? (b > 0.0 ? mag : -mag) : 0.0;
}

}  // namespace ro_detail

// C-update: C = R .* shrink(rho1 Z - Y1, Omega) with R carrying 1/(rho1 +
// lambda) on the diagonal and 1/rho1 off it.
inline Matrix prox_C(const Matrix& Z, const Matrix& Y1, const Matrix& Omega, double lambda,
                     double rho1) {
  if (rho1 <= 0) throw InvalidInputError("prox_C: rho1 must be positive");
  const int n = static_cast<int>(Z.rows());
  Matrix C(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double scale = i == j ? 1.0 / (rho1 + lambda) : 1.0 / rho1;
      C(i, j) = scale * ro_detail::shrink(rho1 * Z(i, j) - Y1(i, j), Omega(i, j));
    }
  return C;
}

// E-update for the three error norms, with Delta = X - XZ - Y2/rho2.
inline Matrix prox_E(const Matrix& XZ, const Matrix& Y2, const Matrix& X, double alpha,
                     double rho2, ErrorNorm phi) {
  if (rho2 <= 0) throw InvalidInputError("prox_E: rho2 must be positive");
  const Matrix Delta = X - XZ - Y2 / rho2;
  const double thr = alpha / rho2;
  switch (phi) {
    case ErrorNorm::l1: {
      Matrix E = Delta;
      for (int j = 0; j < E.cols(); ++j)
        for (int i = 0; i < E.rows(); ++i) E(i, j) = ro_detail::shrink(E(i, j), thr);
      return E;
    }
    case ErrorNorm::l21: {
      Matrix E = Delta;
      for (int j = 0; j < E.cols(); ++j) {
        const double norm = E.col(j).norm();
        const double scale = norm > 0.0 ? std::max(0.0, norm - thr) / norm : 0.0;
        E.col(j) *= scale;
      }
      return E;
    }
    case ErrorNorm::fro:
      return Delta / (1.0 + 2.0 * thr);
  }
  throw InvalidInputError("prox_E: unknown error norm");
}

// Shared factorization of (beta + rho1) I + rho2 X^T X, reused across sweeps.
struct AdmmWorkspace {
  Matrix XtX;
  Eigen::LLT<Matrix> llt;

  AdmmWorkspace(const Matrix& X, double beta, double rho1, double rho2) {
    XtX = X.transpose() * X;
    Matrix M = rho2 * XtX;
    M.diagonal().array() += beta + rho1;
    llt.compute(M);
    if (llt.info() != Eigen::Success) throw NumericalError("AdmmWorkspace: factorization failed");
  }
};

// Z-update: the SPD system ((beta + rho1) I + rho2 X^T X) Z = rhs.
inline Matrix solve_Z(const Matrix& C, const Matrix& E, const Matrix& G_gram, const Matrix& X,
                      double beta, double rho1, double rho2, const Matrix& Y1, const Matrix& Y2,
                      const AdmmWorkspace* ws = nullptr) {
  const Matrix rhs =
      beta * G_gram + rho1 * C + rho2 * (X.transpose() * (X - E)) + Y1 - X.transpose() * Y2;
  if (ws != nullptr) return ws->llt.solve(rhs);
  AdmmWorkspace local(X, beta, rho1, rho2);
  return local.llt.solve(rhs);
}

// Best PSD rank-<=d fit of (C + C^T)/2: clipped top-d eigenpairs.
inline Matrix update_G(const Matrix& C, int d) {
  if (d > C.rows()) throw InvalidInputError("update_G: d exceeds n");
  const TopEigs top = top_eigs_symmetric(C, d);
  Vector clipped = top.lambdas.cwiseMax(0.0);
  return top.P * clipped.asDiagonal() * top.P.transpose();
}

struct AdmmState {
  Matrix C, Z;     // n x n
  Matrix E;        // m x n
  Matrix Y1;       // n x n multiplier on C - Z
  Matrix Y2;       // m x n multiplier on XZ + E - X
  Matrix G_gram;   // rank-<=d PSD target G G^T

  static AdmmState initial(const Matrix& X, int d) {
    const int n = static_cast<int>(X.cols());
    AdmmState st;
    st.C = Matrix::Identity(n, n);
    st.Z = Matrix::Identity(n, n);
    st.E = Matrix::Zero(X.rows(), n);
    st.Y1 = Matrix::Zero(n, n);
    st.Y2 = Matrix::Zero(X.rows(), n);
    st.G_gram = update_G(st.C, d);
    return st;
  }
};

struct AdmmReport {
  int sweeps = 0;
  bool converged = false;
  double z_change = 0.0;
};

// Inner ADMM sweeps (C, E, Z, multipliers) until ||Z - Z_old||_F < tau or
// k_max; on exit C is set to Z.
inline AdmmReport admm_solve(const Matrix& X, const Matrix& Omega, AdmmState& st,
                             double lambda, double alpha, double beta, double rho1, double rho2,
                             double tau, int k_max, ErrorNorm phi, const AdmmWorkspace& ws) {
  AdmmReport rep;
  for (int k = 1; k <= k_max; ++k) {
    rep.sweeps = k;
    const Matrix Z_old = st.Z;
    st.C = prox_C(st.Z, st.Y1, Omega, lambda, rho1);
    st.E = prox_E(X * st.Z, st.Y2, X, alpha, rho2, phi);
    st.Z = solve_Z(st.C, st.E, st.G_gram, X, beta, rho1, rho2, st.Y1, st.Y2, &ws);
    st.Y1 += rho1 * (st.C - st.Z);
    st.Y2 += rho2 * (X * st.Z + st.E - X);
    rep.z_change = (st.Z - Z_old).norm();
    if (rep.z_change < tau) {
      rep.converged = true;
      break;
    }
  }
  st.C = st.Z;
  return rep;
}

// Double-truncation graph: per-column magnitude truncation at retained norm
// fraction gamma, then a sharpened Gram matrix of the sqrt-sigma-weighted
// left singular vector rows.
inline Matrix build_graph(const Matrix& C, double gamma, double sigma, double s) {
  if (!(gamma > 0 && gamma <= 1) || sigma < 0 || s < 1)
    throw InvalidInputError("build_graph: bad parameters");
  const int n = static_cast<int>(C.rows());

  Matrix Cg = Matrix::Zero(n, n);
  std::vector<int> order(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(C(a, j)) > std::abs(C(b, j));
    });
    const double target = gamma * gamma * C.col(j).squaredNorm();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const int row = order[i];
      Cg(row, j) = C(row, j);
      acc += C(row, j) * C(row, j);
      if (acc >= target * (1.0 - 1e-12)) break;  // first crossing
    }
  }

  Eigen::BDCSVD<Matrix> svd(Cg, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  int kept = 0;
  while (kept < sv.size() && sv(kept) >= sigma && sv(kept) > 0.0) ++kept;
  if (kept == 0) throw NumericalError("build_graph: all singular values below the floor");

  Matrix F = svd.matrixU().leftCols(kept);
  for (int i = 0; i < kept; ++i) F.col(i) *= std::sqrt(sv(i));
  for (int i = 0; i < n; ++i) {
    const double norm = F.row(i).norm();
    if (norm > 0) F.row(i) /= norm;
  }

  Matrix A = F * F.transpose();
  A = 0.5 * (A + A.transpose());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) A(i, j) = std::pow(std::max(A(i, j), 0.0), s);
  A.diagonal().setOnes();
  return A;
}

struct RoTraceRow {
  int t = 0;
  int ell = 0;
  int sweeps = 0;
  double c_change = 0.0;
  double objective = 0.0;
};

struct RoResult {
  Partition J;
  Matrix C;
  Matrix A;
  ActiveSet omega;
  std::vector<RoTraceRow> trace;
  int outer_iterations = 0;
};

// Objective of the relaxed model F(C, Omega, G).
inline double ro_objective(const Matrix& X, const Matrix& C, const Matrix& Omega,
                           const Matrix& G_gram, double lambda, double alpha, double beta,
                           ErrorNorm phi) {
  double f = (Omega.array() * C.array()).abs().sum();
  f += 0.5 * lambda * C.diagonal().squaredNorm();
  const Matrix Rres = X - X * C;
  switch (phi) {
    case ErrorNorm::l1:
      f += alpha * Rres.cwiseAbs().sum();
      break;
    case ErrorNorm::l21: {
      double sum = 0.0;
      for (int j = 0; j < Rres.cols(); ++j) sum += Rres.col(j).norm();
      f += alpha * sum;
      break;
    }
    case ErrorNorm::fro:
      f += alpha * Rres.squaredNorm();
      break;
  }
  f += 0.5 * beta * (C - G_gram).squaredNorm();
  return f;
}

// Relaxed optimization for noisy samples: inner ADMM/G alternation under a
// fixed active set, then a graph rebuild and active-set update; stops when
// the active set is a fixed point.
inline RoResult mss_ro(Matrix X, int K, int d, RoParams params) {
  params.validate();
  const int n = static_cast<int>(X.cols());
  if (K < 1 || K > n || d < 1 || d > n) throw InvalidInputError("mss_ro: bad priors");
  if (params.normalize_columns)
    for (int j = 0; j < n; ++j) {
      const double norm = X.col(j).norm();
      if (norm > 0) X.col(j) /= norm;
    }

  const double rho_default = std::max(params.lambda, params.beta);
  const double rho1 = params.rho1 > 0 ? params.rho1 : rho_default;
  const double rho2 = params.rho2 > 0 ? params.rho2 : rho_default;
  const double tau = params.tau_admm > 0 ? params.tau_admm : 1e-4 * (1.0 + X.norm());
  const double eps = params.eps_outer > 0 ? params.eps_outer : 1e-4 * n;

  const AdmmWorkspace ws(X, params.beta, rho1, rho2);
  AdmmState st = AdmmState::initial(X, d);
  ActiveSet omega = ActiveSet::coarse(n);

  RoResult res;
  for (int t = 1; t <= params.t_max; ++t) {
    res.outer_iterations = t;
    const ActiveSet omega_old = omega;
    for (int ell = 1; ell <= params.ell_max; ++ell) {
      const Matrix C_old = st.C;
      const AdmmReport rep = admm_solve(X, omega.weights, st, params.lambda, params.alpha,
                                        params.beta, rho1, rho2, tau, params.k_max, params.phi,
                                        ws);
      const double change = (st.C - C_old).norm();
      res.trace.push_back({t, ell, rep.sweeps, change,
                           ro_objective(X, st.C, omega.weights, st.G_gram, params.lambda,
                                        params.alpha, params.beta, params.phi)});
      if (change < eps) break;
      st.G_gram = update_G(st.C, d);
    }
    res.A = build_graph(st.C, params.graph.gamma, params.graph.sigma, params.graph.s);
    ActiveSetResult as = build_active_set(res.A, K, params.tau_active, params.seed);
    res.J = std::move(as.J);
    omega = std::move(as.omega);
    if (omega == omega_old) break;
  }
  res.C = st.C;
  res.omega = std::move(omega);
  return res;
}

}  // namespace mss
