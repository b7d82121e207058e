#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "mss/numerics.hpp"
#include "mss/partition.hpp"
#include "mss/rng.hpp"

namespace mss {

// Nonnegative weights on penalized matrix positions; entries live in
// {0, 1, beta} and the diagonal is exactly zero.
struct ActiveSet {
  enum class Kind { coarse, hard, soft, beta };

  Matrix weights;
  Kind kind = Kind::coarse;

  int size() const { return static_cast<int>(weights.rows()); }

  static ActiveSet coarse(int n) {
    ActiveSet out;
    out.weights = Matrix::Ones(n, n);
    out.weights.diagonal().setZero();
    out.kind = Kind::coarse;
    return out;
  }

  // Exact on support and values.
  bool operator==(const ActiveSet& other) const {
    return weights.rows() == other.weights.rows() && weights.cols() == other.weights.cols() &&
           weights == other.weights;
  }
};

// Rows of the top-K eigenvector matrix of D^{-1/2} A D^{-1/2}, each
// normalized to unit length (normalized-cut embedding).
inline Matrix normalized_embedding(const Matrix& A, int K) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || n == 0) throw InvalidInputError("normalized_embedding: square matrix expected");
  if (K < 1 || K > n) throw InvalidInputError("normalized_embedding: K out of range");
  detail::require_finite(A, "normalized_embedding");

  Vector dinv(n);
  for (int i = 0; i < n; ++i) {
    const double deg = std::max(A.row(i).sum(), 1e-12);  // floor all-zero rows
    dinv(i) = 1.0 / std::sqrt(deg);
  }
  Matrix B = dinv.asDiagonal() * (0.5 * (A + A.transpose())) * dinv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(B);
  if (es.info() != Eigen::Success) throw NumericalError("normalized_embedding: eigensolver failed");

  Matrix Y(n, K);
  for (int k = 0; k < K; ++k) {
    Vector v = es.eigenvectors().col(n - 1 - k);
    // Fix the sign by the largest-magnitude entry for determinism.
    int arg = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    if (v(arg) < 0) v = -v;
    Y.col(k) = v;
  }
  for (int i = 0; i < n; ++i) {
    const double norm = Y.row(i).norm();
    if (norm > 0) Y.row(i) /= norm;
  }
  return Y;
}

struct KmeansResult {
  std::vector<int> labels;  // 0-based cluster ids
  Matrix centroids;         // K x dim
  double wcss = 0.0;
};

// Lloyd iterations with greedy farthest-point seeding, best of `restarts`
// runs by within-cluster sum of squares; fully determined by the seed.
inline KmeansResult kmeans(const Matrix& points, int K, int restarts = 20, uint64_t seed = 0) {
  const int n = static_cast<int>(points.rows());
  const int dim = static_cast<int>(points.cols());
  if (K < 1 || K > n) throw InvalidInputError("kmeans: K out of range");
  constexpr int kLloydMax = 300;

  KmeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();

  for (int rep = 0; rep < restarts; ++rep) {
    Rng rng(seed + 0x9e3779b9ull * static_cast<uint64_t>(rep));
    Matrix centroids(K, dim);
    centroids.row(0) = points.row(static_cast<int>(rng.uniform_index(n)));
    Vector mind(n);
    for (int j = 0; j < n; ++j) mind(j) = (points.row(j) - centroids.row(0)).squaredNorm();
    for (int k = 1; k < K; ++k) {
      int arg = 0;
      for (int j = 1; j < n; ++j)
        if (mind(j) > mind(arg)) arg = j;
      centroids.row(k) = points.row(arg);
      for (int j = 0; j < n; ++j)
        mind(j) = std::min(mind(j), (points.row(j) - centroids.row(k)).squaredNorm());
    }

    std::vector<int> labels(n, -1);
    for (int it = 0; it < kLloydMax; ++it) {
      bool changed = false;
      for (int j = 0; j < n; ++j) {
        int arg = 0;
        double bestd = (points.row(j) - centroids.row(0)).squaredNorm();
        for (int k = 1; k < K; ++k) {
          const double d = (points.row(j) - centroids.row(k)).squaredNorm();
          if (d < bestd) {
            bestd = d;
            arg = k;
          }
        }
        if (labels[j] != arg) {
          labels[j] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      Matrix sums = Matrix::Zero(K, dim);
      std::vector<int> counts(K, 0);
      for (int j = 0; j < n; ++j) {
        sums.row(labels[j]) += points.row(j);
        ++counts[labels[j]];
      }
      for (int k = 0; k < K; ++k) {
        if (counts[k] > 0) {
          centroids.row(k) = sums.row(k) / counts[k];
        } else {
          // Revive an empty cluster at the point farthest from its centroid.
          int arg = 0;
          double worst = -1.0;
          for (int j = 0; j < n; ++j) {
            const double d = (points.row(j) - centroids.row(labels[j])).squaredNorm();
            if (d > worst) {
              worst = d;
              arg = j;
            }
          }
          centroids.row(k) = points.row(arg);
        }
      }
    }

    double wcss = 0.0;
    for (int j = 0; j < n; ++j) wcss += (points.row(j) - centroids.row(labels[j])).squaredNorm();
    if (wcss < best.wcss) {
      best.labels = labels;
      best.centroids = centroids;
      best.wcss = wcss;
    }
  }
  return best;
}

struct ActiveSetResult {
  ActiveSet omega;
  Partition J;
};

// Active-set construction: spectral embedding, seeded k-means, membership
// probabilities from rescaled centroid distances, and
// omega_ij = 1 iff sum_l q_il q_jl < 1.
inline ActiveSetResult build_active_set(const Matrix& A, int K, double tau = 0.5,
                                        uint64_t seed = 0) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidInputError("build_active_set: tau outside (0,1)");
  const int n = static_cast<int>(A.rows());
  const Matrix Y = normalized_embedding(A, K);
  const KmeansResult km = kmeans(Y, K, 20, seed);

  Matrix Q(n, K);
  for (int i = 0; i < n; ++i) {
    Vector dist(K);
    for (int k = 0; k < K; ++k) dist(k) = (Y.row(i) - km.centroids.row(k)).norm();
    const double mn = dist.minCoeff();
    const double mx = dist.maxCoeff();
    Vector qt(K);
    if (mx - mn <= 0.0) {
      qt.setZero();  // equidistant point: maximally ambiguous
    } else {
      qt = (dist.array() - mn) / (mx - mn);
    }
    double denom = 0.0;
    for (int k = 0; k < K; ++k) denom += qt(k) < tau ? 1.0 : 0.0;
    for (int k = 0; k < K; ++k) Q(i, k) = (qt(k) < tau ? 1.0 : 0.0) / denom;
  }

  ActiveSetResult out;
  out.omega.weights = Matrix::Zero(n, n);
  out.omega.kind = ActiveSet::Kind::soft;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double same = Q.row(i).dot(Q.row(j));
      out.omega.weights(i, j) = same < 1.0 ? 1.0 : 0.0;
    }

  std::vector<int> labels1(n);
  for (int j = 0; j < n; ++j) labels1[j] = km.labels[j] + 1;
  out.J = Partition::from_labels(labels1, K);
  return out;
}

}  // namespace mss
