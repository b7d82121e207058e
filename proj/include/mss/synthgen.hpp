#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "mss/numerics.hpp"
#include "mss/partition.hpp"
#include "mss/rng.hpp"
#include "mss/theory.hpp"

namespace mss {

// Union-of-subspaces instance description: K subspaces of dimensions dims[k]
// inside a common r-dimensional subspace of R^m, counts[k] samples each.
struct SyntheticSpec {
  int m = 0;
  int r = 0;
  std::vector<int> dims;
  std::vector<int> counts;
  uint64_t seed = 0;

  int K() const { return static_cast<int>(dims.size()); }
  int total_samples() const {
    int n = 0;
    for (int c : counts) n += c;
    return n;
  }
  int rank_sum() const {
    int d = 0;
    for (int dk : dims) d += dk;
    return d;
  }

  void validate() const {
    if (dims.empty() || dims.size() != counts.size())
      throw InvalidInputError("SyntheticSpec: dims/counts mismatch");
    if (r > m) throw InvalidInputError("SyntheticSpec: r must not exceed m");
    for (size_t k = 0; k < dims.size(); ++k) {
      if (dims[k] < 1 || dims[k] > r)
        throw InvalidInputError("SyntheticSpec: need 1 <= d_k <= r");
      if (counts[k] <= dims[k])
        throw InvalidInputError("SyntheticSpec: need n_k > d_k");
    }
  }
};

namespace synth_detail {

// Orthonormal rows x cols factor from a seeded Gaussian, QR-based; the sign
// of each column is fixed by the R diagonal for determinism.
inline Matrix random_orthonormal(int rows, int cols, Rng& rng) {
  Matrix G(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) G(i, j) = rng.gaussian();
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(rows, cols);
  const Matrix R = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (int j = 0; j < cols; ++j)
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  return Q;
}

}  // namespace synth_detail

// Bases U_k = U P_k with U a random m x r orthonormal frame and P_k random
// r x d_k orthonormal factors.
inline std::vector<Matrix> gen_subspaces(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Matrix U = synth_detail::random_orthonormal(spec.m, spec.r, rng);
  std::vector<Matrix> bases;
  bases.reserve(spec.dims.size());
  for (int dk : spec.dims) bases.push_back(U * synth_detail::random_orthonormal(spec.r, dk, rng));
  return bases;
}

// Samples x = U_k y with i.i.d. uniform [-1, 1] coefficients, shuffled by a
// seeded permutation; labels are 1-based segment ids.
inline std::pair<Matrix, std::vector<int>> gen_samples(const std::vector<Matrix>& bases,
                                                       const std::vector<int>& counts,
                                                       uint64_t seed) {
  if (bases.size() != counts.size())
    throw InvalidInputError("gen_samples: bases/counts mismatch");
  const int m = bases.empty() ? 0 : static_cast<int>(bases[0].rows());
  int n = 0;
  for (int c : counts) n += c;

  Rng rng(seed ^ 0xa5a5a5a5a5a5a5a5ull);
  Matrix X(m, n);
  std::vector<int> labels(n);
  int col = 0;
  for (size_t k = 0; k < bases.size(); ++k) {
    const int dk = static_cast<int>(bases[k].cols());
    for (int s = 0; s < counts[k]; ++s, ++col) {
      Vector y(dk);
      for (int i = 0; i < dk; ++i) y(i) = rng.uniform(-1.0, 1.0);
      X.col(col) = bases[k] * y;
      labels[col] = static_cast<int>(k) + 1;
    }
  }
  const std::vector<int> perm = rng.permutation(n);
  Matrix Xs(m, n);
  std::vector<int> ls(n);
  for (int j = 0; j < n; ++j) {
    Xs.col(j) = X.col(perm[j]);
    ls[j] = labels[perm[j]];
  }
  return {std::move(Xs), std::move(ls)};
}

struct SynthInstance {
  SyntheticSpec spec;
  std::vector<Matrix> bases;
  Matrix X;
  std::vector<int> labels;
  Partition ground_truth;
};

inline SynthInstance gen_instance(const SyntheticSpec& spec) {
  SynthInstance inst;
  inst.spec = spec;
  inst.bases = gen_subspaces(spec);
  auto [X, labels] = gen_samples(inst.bases, spec.counts, spec.seed);
  inst.X = std::move(X);
  inst.labels = labels;
  inst.ground_truth = Partition::from_labels(labels, spec.K());
  return inst;
}

// Estimated pairwise intersection dimensions: entry (s,t) counts singular
// values of U_s^T U_t at or above tau_sigma. The mean excludes the diagonal.
struct IntersectionDims {
  Eigen::MatrixXi dims;
  double mean = 0.0;
};

inline IntersectionDims pairwise_intersection_dims(const std::vector<Matrix>& bases,
                                                   double tau_sigma) {
  if (!(tau_sigma > 0.0 && tau_sigma <= 1.0))
    throw InvalidInputError("pairwise_intersection_dims: tau_sigma outside (0, 1]");
  const int K = static_cast<int>(bases.size());
  IntersectionDims out;
  out.dims = Eigen::MatrixXi::Zero(K, K);
  double total = 0.0;
  int cells = 0;
  for (int s = 0; s < K; ++s)
    for (int t = 0; t < K; ++t) {
      if (s == t) {
        out.dims(s, t) = static_cast<int>(bases[s].cols());
        continue;
      }
      Eigen::BDCSVD<Matrix> svd(bases[s].transpose() * bases[t]);
      int c = 0;
      const Vector& sv = svd.singularValues();
      while (c < sv.size() && sv(c) >= tau_sigma) ++c;
      out.dims(s, t) = c;
      total += c;
      ++cells;
    }
  out.mean = cells > 0 ? total / cells : 0.0;
  return out;
}

inline constexpr std::array<double, 5> kDistanceBinEdges = {0.05, 0.1, 0.3, 0.5, 1.0};

// Percentage of samples whose relative distance to the nearest other
// subspace falls in each of the bins [0,.05), [.05,.1), [.1,.3), [.3,.5),
// [.5,1]; a K = 1 instance puts everything in the last bin by convention.
inline std::array<double, 5> distance_profile(const Matrix& X, const std::vector<int>& labels,
                                              const std::vector<Matrix>& bases) {
  const int n = static_cast<int>(X.cols());
  if (static_cast<int>(labels.size()) != n)
    throw InvalidInputError("distance_profile: labels/sample mismatch");
  std::array<double, 5> bins{};
  for (int j = 0; j < n; ++j) {
    const double norm = X.col(j).norm();
    if (norm == 0.0) throw InvalidInputError("distance_profile: zero-norm sample");
    double dist = 1.0;
    bool seen_other = false;
    for (size_t k = 0; k < bases.size(); ++k) {
      if (static_cast<int>(k) + 1 == labels[j]) continue;
      seen_other = true;
      const double res = (X.col(j) - bases[k] * (bases[k].transpose() * X.col(j))).norm() / norm;
      dist = std::min(dist, res);
    }
    if (!seen_other) dist = 1.0;
    size_t b = 0;
    while (b + 1 < bins.size() && dist >= kDistanceBinEdges[b]) ++b;
    bins[b] += 1.0;
  }
  for (double& b : bins) b *= 100.0 / n;
  return bins;
}

// dim(S1 ∩ S2) <= ||U1^T U2||_F^2 for orthonormal bases.
inline double intersection_dim_bound(const Matrix& U1, const Matrix& U2) {
  auto check = [](const Matrix& U, const char* who) {
    const Matrix G = U.transpose() * U - Matrix::Identity(U.cols(), U.cols());
    if (G.norm() > 1e-8) throw InvalidInputError(std::string(who) + ": basis not orthonormal");
  };
  check(U1, "intersection_dim_bound: U1");
  check(U2, "intersection_dim_bound: U2");
  return (U1.transpose() * U2).squaredNorm();
}

// X + sigma_rel * (||X||_F / sqrt(mn)) * Gaussian noise.
inline Matrix add_noise(const Matrix& X, double sigma_rel, uint64_t seed) {
  if (sigma_rel < 0.0) throw InvalidInputError("add_noise: sigma_rel must be >= 0");
  if (sigma_rel == 0.0) return X;
  Rng rng(seed ^ 0xc0ffee1234ull);
  const double scale =
      sigma_rel * X.norm() / std::sqrt(static_cast<double>(X.rows()) * X.cols());
  Matrix E(X.rows(), X.cols());
  for (int j = 0; j < X.cols(); ++j)
    for (int i = 0; i < X.rows(); ++i) E(i, j) = scale * rng.gaussian();
  return X + E;
}

// Estimate of d_0 = max_k dim(S_k ∩ sum of the others) by singular-value
// counting at tau_sigma, plus the sample-count condition n_k > d_k + (K-1)d_0
// that the reduction/extension theory relies on.
struct GeneratorDiagnostics {
  int d0 = 0;
  int d_min = 0;
  bool count_condition = false;
};

inline GeneratorDiagnostics diagnose(const SyntheticSpec& spec, const std::vector<Matrix>& bases,
                                     double tau_sigma = 0.999) {
  const int K = static_cast<int>(bases.size());
  GeneratorDiagnostics diag;
  diag.d_min = spec.dims.empty() ? 0 : *std::min_element(spec.dims.begin(), spec.dims.end());
  for (int k = 0; k < K; ++k) {
    Matrix others(bases[0].rows(), 0);
    for (int j = 0; j < K; ++j) {
      if (j == k) continue;
      Matrix tmp(others.rows(), others.cols() + bases[j].cols());
      tmp << others, bases[j];
      others = std::move(tmp);
    }
    if (others.cols() == 0) continue;
    const Matrix Bs = detail::orth_basis(others);
    Eigen::BDCSVD<Matrix> svd(bases[k].transpose() * Bs);
    int c = 0;
    const Vector& sv = svd.singularValues();
    while (c < sv.size() && sv(c) >= tau_sigma) ++c;
    diag.d0 = std::max(diag.d0, c);
  }
  diag.count_condition = true;
  for (int k = 0; k < K; ++k)
    if (spec.counts[k] <= spec.dims[k] + (K - 1) * diag.d0) diag.count_condition = false;
  return diag;
}

}  // namespace mss
