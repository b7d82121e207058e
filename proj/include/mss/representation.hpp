#pragma once

#include <numeric>
#include <optional>
#include <vector>

#include "mss/numerics.hpp"
#include "mss/partition.hpp"

namespace mss {

// Representation matrix C of X (X = XC) with structural metadata.
struct Representation {
  Matrix C;
  bool symmetric = false;
  std::optional<Matrix> factor_W;  // C = VV^T + Vperp W W^T Vperp^T when set
};

// C = VV^T + Vperp H, the closed form of all representation matrices.
inline Representation representation_from_H(const ThinSvd& svd, const Matrix& H) {
  const int n = svd.cols();
  const int r = svd.rank();
  if (H.rows() != n - r || H.cols() != n)
    throw InvalidInputError("representation_from_H: H must be (n-r) x n");
  Representation out;
  out.C = svd.V * svd.V.transpose() + svd.Vperp * H;
  return out;
}

// C = VV^T + Vperp S Vperp^T with symmetric S: the symmetric representations.
inline Representation representation_symmetric(const ThinSvd& svd, const Matrix& S) {
  const int n = svd.cols();
  const int r = svd.rank();
  if (S.rows() != n - r || S.cols() != n - r)
    throw InvalidInputError("representation_symmetric: S must be (n-r) x (n-r)");
  if ((S - S.transpose()).norm() > 1e-10 * std::max(1.0, S.norm()))
    throw InvalidInputError("representation_symmetric: S not symmetric");
  Representation out;
  out.C = svd.V * svd.V.transpose() + svd.Vperp * S * svd.Vperp.transpose();
  out.symmetric = true;
  return out;
}

namespace representation_detail {

// LRR block of a column subset: V V^T from its thin SVD.
inline Matrix lrr_block(const Matrix& Xk, double tol) {
  const ThinSvd svd = thin_svd(Xk, tol);
  return svd.V * svd.V.transpose();
}

}  // namespace representation_detail

// Unconnected representation of one segment with prescribed rank r' in
// (d_k, n_k]: write r' = p d_k + t, split the columns contiguously into p
// groups of at least d_k columns (plus a t-column identity tail when t != 0)
// and give each group its own LRR block.
inline Representation make_unconnected_block(const Matrix& Xk, int r_prime,
                                             double tol = kRankTol) {
  const int nk = static_cast<int>(Xk.cols());
  const int dk = numerical_rank(Xk, tol);
  if (dk < 1) throw InvalidInputError("make_unconnected_block: zero-rank segment");
  if (r_prime <= dk || r_prime > nk)
    throw InvalidInputError("make_unconnected_block: r_prime outside (d_k, n_k]");

  const int p = r_prime / dk;
  const int t = r_prime % dk;
  const int head = nk - t;  // columns represented by the p LRR blocks

  Matrix C = Matrix::Zero(nk, nk);
  // Distribute head columns over p groups, each at least d_k wide.
  std::vector<int> sizes(p, dk);
  int extra = head - p * dk;
  for (int g = 0; g < p && extra > 0; ++g) {
    const int add = (g == 0) ? extra : 0;  // front-load the remainder
    sizes[g] += add;
    extra -= add;
  }
  int offset = 0;
  for (int g = 0; g < p; ++g) {
    const Matrix block =
        representation_detail::lrr_block(Xk.middleCols(offset, sizes[g]), tol);
    C.block(offset, offset, sizes[g], sizes[g]) = block;
    offset += sizes[g];
  }
  if (t != 0) C.block(head, head, t, t) = Matrix::Identity(t, t);

  Representation out;
  out.C = C;
  out.symmetric = true;
  return out;
}

// Block-diagonal representation of X with rank d_plus in (d, n] and at least
// one unconnected block; the excess rank is assigned greedily front-to-back.
inline Representation make_unconnected_representation(const Matrix& X, const Partition& P,
                                                      int d_plus, double tol = kRankTol) {
  const int n = static_cast<int>(X.cols());
  P.validate_strict(n);
  if (P.pure) throw InvalidInputError("make_unconnected_representation: pure piece not allowed");

  const int K = P.piece_count();
  std::vector<Matrix> segments(K);
  std::vector<int> dk(K), nk(K);
  int d = 0;
  for (int k = 0; k < K; ++k) {
    segments[k].resize(X.rows(), P.pieces[k].size());
    for (size_t j = 0; j < P.pieces[k].size(); ++j) segments[k].col(j) = X.col(P.pieces[k][j]);
    dk[k] = numerical_rank(segments[k], tol);
    nk[k] = static_cast<int>(P.pieces[k].size());
    d += dk[k];
  }
  if (d_plus <= d || d_plus > n)
    throw InvalidInputError("make_unconnected_representation: d_plus outside (d, n]");

  std::vector<int> rk = dk;
  int excess = d_plus - d;
  for (int k = 0; k < K && excess > 0; ++k) {
    const int add = std::min(excess, nk[k] - dk[k]);
    rk[k] += add;
    excess -= add;
  }
  if (excess > 0) throw InvalidInputError("make_unconnected_representation: d_plus not attainable");

  Matrix C = Matrix::Zero(n, n);
  for (int k = 0; k < K; ++k) {
    const Matrix block = (rk[k] > dk[k])
                             ? make_unconnected_block(segments[k], rk[k], tol).C
                             : representation_detail::lrr_block(segments[k], tol);
    for (int a = 0; a < nk[k]; ++a)
      for (int b = 0; b < nk[k]; ++b) C(P.pieces[k][a], P.pieces[k][b]) = block(a, b);
  }
  Representation out;
  out.C = C;
  out.symmetric = true;
  return out;
}

// Entrywise test of the off-block part against tol * max|C|.
inline bool is_block_diagonal(const Matrix& C, const Partition& P, double tol) {
  const int n = static_cast<int>(C.rows());
  P.validate_cover(n);
  const std::vector<int> labels = P.to_labels();
  const double scale = C.cwiseAbs().maxCoeff();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (labels[i] != labels[j] && std::abs(C(i, j)) > tol * scale) return false;
  return true;
}

namespace representation_detail {

class UnionFind {
public:
  explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  void unite(int a, int b) { parent_[find(a)] = find(b); }

private:
  std::vector<int> parent_;
};

}  // namespace representation_detail

// Per-piece connectivity of the graph with edges where |c_ij| + |c_ji|
// exceeds the cutoff (default 1e-6 * max|C|).
inline std::vector<bool> block_connectivity(const Matrix& C, const Partition& P,
                                            double cutoff = -1.0) {
  const int n = static_cast<int>(C.rows());
  P.validate_cover(n);
  if (cutoff < 0.0) cutoff = 1e-6 * C.cwiseAbs().maxCoeff();

  std::vector<bool> connected;
  connected.reserve(P.piece_count());
  for (const auto& piece : P.pieces) {
    const int m = static_cast<int>(piece.size());
    if (m <= 1) {
      connected.push_back(true);
      continue;
    }
    representation_detail::UnionFind uf(m);
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        if (std::abs(C(piece[a], piece[b])) + std::abs(C(piece[b], piece[a])) > cutoff)
          uf.unite(a, b);
    bool one = true;
    for (int a = 1; a < m && one; ++a) one = (uf.find(a) == uf.find(0));
    connected.push_back(one);
  }
  return connected;
}

}  // namespace mss
