#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mss/numerics.hpp"
#include "mss/rng.hpp"

namespace mss {

// Parameters of the manifold conjugate-gradient solver. k_max caps both the
// inner CG sweep per smoothing level and the line-search probes, following
// the solver's published form.
struct McgParams {
  double delta0 = 0.0;        // <= 0: start at delta0_scale * max|c_ij(W0)|
  double delta0_scale = 0.1;  // relative auto-start of the smoothing schedule
  double gamma = 0.5;
  double rho = 0.5;
  double tau_armijo = 0.01;
  double eps_alpha = 1e-4;
  double eps_C = 1e-4;
  double eps_delta = 1e-4;
  int ell_max = 20;
  int k_max = 10;
  int inner_max = 0;  // CG sweeps per smoothing level; <= 0 falls back to k_max
  double lambda = 10.0;

  int inner_cap() const { return inner_max > 0 ? inner_max : k_max; }

  void validate() const {
    if (!(gamma > 0 && gamma < 1)) throw InvalidInputError("McgParams: gamma outside (0,1)");
    if (!(rho >= 0.5 && rho < 1)) throw InvalidInputError("McgParams: rho outside [0.5,1)");
    if (!(tau_armijo > 0 && tau_armijo < 1))
      throw InvalidInputError("McgParams: tau_armijo outside (0,1)");
    if (eps_alpha <= 0 || eps_C <= 0 || eps_delta <= 0 || ell_max < 1 || k_max < 1 || lambda < 0)
      throw InvalidInputError("McgParams: nonpositive tolerance or cap");
  }
};

namespace mcg_detail {

// q_delta(t): |t| outside the threshold, quadratic cap inside.
inline double q_delta(double t, double delta) {
  const double a = std::abs(t);
  return a > delta ? a : (t * t + delta * delta) / (2.0 * delta);
}

inline Matrix compose_C(const Matrix& Cv, const Matrix& Vw) {
  Matrix C = Cv;
  C.selfadjointView<Eigen::Lower>().rankUpdate(Vw);
  return Matrix(C.selfadjointView<Eigen::Lower>());
}

}  // namespace mcg_detail

// f_delta over a precomputed C = C(WW^T): smoothed weighted l1 on the
// support of Omega plus the diagonal penalty.
inline double f_delta_from_C(const Matrix& C, const Matrix& Omega, double lambda, double delta) {
  const int n = static_cast<int>(C.rows());
  double f = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double w = Omega(i, j);
      if (w > 0.0) f += mcg_detail::q_delta(w * C(i, j), delta);
    }
  f += 0.5 * lambda * C.diagonal().squaredNorm();
  return f;
}

inline double f_delta(const Matrix& W, const Matrix& V, const Matrix& Vperp, const Matrix& Omega,
                      double lambda, double delta) {
  const Matrix Vw = Vperp * W;
  const Matrix C = mcg_detail::compose_C(V * V.transpose(), Vw);
  return f_delta_from_C(C, Omega, lambda, delta);
}

// grad f_delta(W) = 2 Vperp^T (Omega .* sign(C) .* min(|Omega .* C|/delta, 1)
//                   + lambda diag(c)) Vperp W, evaluated with C and Vw cached.
inline Matrix grad_f_delta_cached(const Matrix& C, const Matrix& Vw, const Matrix& Vperp,
                                  const Matrix& Omega, double lambda, double delta) {
  const int n = static_cast<int>(C.rows());
  Matrix M(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double w = Omega(i, j);
      const double c = C(i, j);
      double m = 0.0;
      if (w > 0.0 && c != 0.0) {
        const double sign = c > 0.0 ? 1.0 : -1.0;
        m = w * sign * std::min(std::abs(w * c) / delta, 1.0);
      }
      M(i, j) = m;
    }
  M.diagonal() += lambda * C.diagonal();
  return 2.0 * (Vperp.transpose() * (M * Vw));
}

inline Matrix grad_f_delta(const Matrix& W, const Matrix& V, const Matrix& Vperp,
                           const Matrix& Omega, double lambda, double delta) {
  const Matrix Vw = Vperp * W;
  const Matrix C = mcg_detail::compose_C(V * V.transpose(), Vw);
  return grad_f_delta_cached(C, Vw, Vperp, Omega, lambda, delta);
}

// Projection onto the horizontal set H_W = {H : W^T H = H^T W}: solve
// W^T W N + N W^T W = W^T Delta - Delta^T W through the eigendecomposition
// of W^T W, then H = Delta - W N.
inline Matrix horizontal_project(const Matrix& W, const Matrix& Delta) {
  if (W.rows() != Delta.rows() || W.cols() != Delta.cols())
    throw InvalidInputError("horizontal_project: shape mismatch");
  const int w = static_cast<int>(W.cols());
  if (w == 0) return Delta;
  Eigen::SelfAdjointEigenSolver<Matrix> es(W.transpose() * W);
  const Vector& sig = es.eigenvalues();
  if (!(sig(0) > 1e-24 * std::max(sig(w - 1), 1e-300)))
    throw NumericalError("horizontal_project: W is rank deficient (singular manifold point)");
  const Matrix& Q = es.eigenvectors();
  const Matrix E = W.transpose() * Delta - Delta.transpose() * W;
  Matrix Et = Q.transpose() * E * Q;
  for (int i = 0; i < w; ++i)
    for (int j = 0; j < w; ++j) Et(i, j) /= sig(i) + sig(j);
  const Matrix N = Q * Et * Q.transpose();
  return Delta - W * N;
}

// Conjugate direction with the Hager-Zhang style beta; all inputs must
// already live in the horizontal space at the current point.
struct CgDirection {
  Matrix H;       // unit Frobenius norm
  double beta = 0.0;
  double h_norm = 0.0;  // norm of the unnormalized direction
};

inline CgDirection cg_direction(const Matrix& P, const Matrix& P_prev_projected,
                                const Matrix& H_prev_projected) {
  const Matrix Y = P - P_prev_projected;
  const Matrix& Z = H_prev_projected;
  const double yz = (Y.array() * Z.array()).sum();
  double beta = 0.0;
  if (yz != 0.0) {
    const double py = (P.array() * Y.array()).sum();
    const double pz = (P.array() * Z.array()).sum();
    beta = py / yz - 2.0 * pz * Y.squaredNorm() / (yz * yz);
    if (!std::isfinite(beta)) beta = 0.0;  // restart on blown-up curvature
  }
  CgDirection out;
  out.beta = beta;
  out.H = -P + beta * Z;
  out.h_norm = out.H.norm();
  if (out.h_norm > 0.0) out.H /= out.h_norm;
  return out;
}

// Outcome of one Armijo probe sequence.
struct LineSearchResult {
  double alpha = 0.0;
  double f_new = 0.0;
  bool accepted = false;
  bool fallback_used = false;
  int probes = 0;
};

namespace mcg_detail {

// Finds alpha satisfying the Armijo condition while alpha/rho does not, by
// growing/shrinking probes from alpha_init; at most k_max evaluations.
template <class Phi>
LineSearchResult armijo_probe(const Phi& phi, double f_curr, double slope, double rho, double tau,
                              int k_max, double alpha_init) {
  LineSearchResult res;
  auto ok = [&](double a, double fa) { return fa <= f_curr + tau * a * slope; };
  double a = alpha_init;
  double fa = phi(a);
  ++res.probes;
  if (ok(a, fa)) {
    while (res.probes < k_max + 1) {
      const double a2 = a / rho;
      const double f2 = phi(a2);
      ++res.probes;
      if (!ok(a2, f2)) break;
      a = a2;
      fa = f2;
    }
    res.alpha = a;
    res.f_new = fa;
    res.accepted = true;
    return res;
  }
  while (res.probes < k_max) {
    a *= rho;
    fa = phi(a);
    ++res.probes;
    if (ok(a, fa)) {
      res.alpha = a;
      res.f_new = fa;
      res.accepted = true;
      return res;
    }
  }
  return res;  // not accepted within the probe budget
}

}  // namespace mcg_detail

// Line search along H with steepest-descent fallback: if no Armijo step is
// found within k_max probes, the direction is reset to -P/|P| and probed
// again. phi_of must evaluate f_delta(W + alpha * D) for a direction D.
inline LineSearchResult line_search(const Matrix& W, const Matrix& H, const Matrix& P,
                                    const std::function<double(const Matrix&, double)>& phi_of,
                                    double f_curr, double slope, const McgParams& params,
                                    double alpha_init) {
  (void)W;
  if (!(slope < 0.0)) throw InvalidInputError("line_search: nondescent slope");
  auto phi = [&](double a) { return phi_of(H, a); };
  LineSearchResult res = mcg_detail::armijo_probe(phi, f_curr, slope, params.rho,
                                                  params.tau_armijo, params.k_max, alpha_init);
  if (res.accepted) return res;

  const double pnorm = P.norm();
  if (pnorm == 0.0) return res;
  const Matrix Hsd = -P / pnorm;
  auto phi_sd = [&](double a) { return phi_of(Hsd, a); };
  LineSearchResult fb = mcg_detail::armijo_probe(phi_sd, f_curr, -pnorm, params.rho,
                                                 params.tau_armijo, params.k_max, alpha_init);
  fb.fallback_used = true;
  fb.probes += res.probes;
  return fb;
}

struct McgTraceRow {
  int ell = 0;
  int k = 0;
  double f_delta = 0.0;
  double alpha = 0.0;
  double delta = 0.0;
  double grad_norm = 0.0;
};

struct McgResult {
  Matrix W;
  Matrix C;
  std::vector<McgTraceRow> trace;
};

// Algorithm: outer loop over decreasing smoothing delta, inner manifold CG
// with Armijo line search; terminates the inner sweep on alpha < eps_alpha
// and the outer one on a small active-set-weighted C change with delta below
// eps_delta.
inline McgResult mss_mcg(const ThinSvd& svd, const Matrix& Omega, Matrix W,
                         const McgParams& params) {
  params.validate();
  const int n = svd.cols();
  const int r = svd.rank();
  if (Omega.rows() != n || Omega.cols() != n)
    throw InvalidInputError("mss_mcg: Omega must be n x n");
  if (Omega.minCoeff() < 0.0) throw InvalidInputError("mss_mcg: Omega must be nonnegative");

  McgResult res;
  const Matrix Cv = svd.V * svd.V.transpose();
  if (W.size() == 0 || W.cols() == 0) {
    // d = r(X): the factor has zero width and C is the projector V V^T.
    res.W = Matrix(n - r, 0);
    res.C = Cv;
    return res;
  }
  if (W.rows() != n - r) throw InvalidInputError("mss_mcg: W must have n - r rows");

  Matrix Vw = svd.Vperp * W;
  Matrix C = mcg_detail::compose_C(Cv, Vw);
  double delta = params.delta0 > 0 ? params.delta0 : params.delta0_scale * C.cwiseAbs().maxCoeff();
  if (!(delta > 0)) delta = 1e-3;
  double alpha_init = 1.0;

  // f_delta(W + a * D) through the cached factors.
  auto phi_of = [&](const Matrix& D, double a) {
    const Matrix Vwa = Vw + a * (svd.Vperp * D);
    const Matrix Ca = mcg_detail::compose_C(Cv, Vwa);
    return f_delta_from_C(Ca, Omega, params.lambda, delta);
  };

  for (int ell = 1; ell <= params.ell_max; ++ell) {
    const Matrix C_old = C;
    double f = f_delta_from_C(C, Omega, params.lambda, delta);
    Matrix P_prev, H_prev;
    bool have_history = false;

    for (int k = 0; k <= params.inner_cap(); ++k) {
      const Matrix G = grad_f_delta_cached(C, Vw, svd.Vperp, Omega, params.lambda, delta);
      const Matrix P = horizontal_project(W, G);
      const double pnorm = P.norm();
      if (pnorm == 0.0) {
        res.trace.push_back({ell, k, f, 0.0, delta, 0.0});
        break;
      }

      Matrix H;
      if (!have_history) {
        H = -P / pnorm;
      } else {
        H = cg_direction(P, horizontal_project(W, P_prev), horizontal_project(W, H_prev)).H;
      }
      double slope = (P.array() * H.array()).sum();
      if (!(slope < 0.0)) {  // numerically flat conjugate direction: restart
        H = -P / pnorm;
        slope = -pnorm;
      }

      const LineSearchResult ls =
          line_search(W, H, P, phi_of, f, slope, params, alpha_init);
      if (ls.fallback_used && ls.accepted) H = -P / pnorm;
      if (!ls.accepted) {
        res.trace.push_back({ell, k, f, 0.0, delta, pnorm});
        break;
      }

      W += ls.alpha * H;
      Vw = svd.Vperp * W;
      C = mcg_detail::compose_C(Cv, Vw);
      f = ls.f_new;
      alpha_init = ls.alpha;
      res.trace.push_back({ell, k, f, ls.alpha, delta, pnorm});

      // Keep W safely full column rank; a collapse restarts the CG history.
      {
        Eigen::SelfAdjointEigenSolver<Matrix> es(W.transpose() * W);
        const double lo = es.eigenvalues()(0);
        const double hi = es.eigenvalues()(W.cols() - 1);
        if (!(lo > 1e-20 * hi)) {
          Rng rng(0x5eedf00dull + static_cast<uint64_t>(ell) * 131u + static_cast<uint64_t>(k));
          Matrix Pert(W.rows(), W.cols());
          for (int jj = 0; jj < W.cols(); ++jj)
            for (int ii = 0; ii < W.rows(); ++ii) Pert(ii, jj) = rng.gaussian();
          W += 1e-8 * W.norm() / Pert.norm() * Pert;
          Vw = svd.Vperp * W;
          C = mcg_detail::compose_C(Cv, Vw);
          f = f_delta_from_C(C, Omega, params.lambda, delta);
          have_history = false;
          continue;
        }
      }

      P_prev = P;
      H_prev = H;
      have_history = true;
      if (ls.alpha < params.eps_alpha) break;
    }

    const double change = (Omega.array() * (C - C_old).array()).abs().maxCoeff();
    if (change < params.eps_C && delta < params.eps_delta) break;
    delta *= params.gamma;
  }

  res.W = std::move(W);
  res.C = std::move(C);
  return res;
}

}  // namespace mss
