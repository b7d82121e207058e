#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "mss/numerics.hpp"
#include "mss/partition.hpp"
#include "mss/rng.hpp"

namespace mss {

// Relative residual threshold for span membership, matching the rank tolerance.
inline constexpr double kSpanTol = 1e-8;

enum class OracleMode { exact, sampled };

inline constexpr int kExactNondegenerateCap = 20;
inline constexpr int kExactIntersectionCap = 15;
inline constexpr int kDefaultOracleBudget = 10000;

namespace detail {

inline Matrix submatrix_cols(const Matrix& X, const std::vector<int>& cols) {
  Matrix sub(X.rows(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) sub.col(j) = X.col(cols[j]);
  return sub;
}

// Orthonormal basis of the column span; empty basis for empty input.
inline Matrix orth_basis(const Matrix& X, double tol = kRankTol) {
  if (X.cols() == 0) return Matrix(X.rows(), 0);
  return thin_svd(X, tol).U;
}

inline double span_residual(const Vector& x, const Matrix& basis) {
  if (basis.cols() == 0) return x.norm();
  return (x - basis * (basis.transpose() * x)).norm();
}

// Visits k-subsets of {0..n-1} in lexicographic order until the visitor
// returns false.
inline void for_each_subset(int n, int k, const std::function<bool(const std::vector<int>&)>& visit) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  if (k == 0) return;
  while (true) {
    if (!visit(idx)) return;
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

// Verdict of a nondegeneracy probe; a false verdict carries the failing
// column subset (lexicographically smallest in exact mode).
struct NondegeneracyVerdict {
  bool nondegenerate = true;
  std::vector<int> witness;

  explicit operator bool() const { return nondegenerate; }
};

// A set is nondegenerate when every subset no larger than its rank has full
// column rank; it suffices to test subsets of size exactly r (any smaller
// subset extends to one).
inline NondegeneracyVerdict is_nondegenerate(const Matrix& X, OracleMode mode = OracleMode::exact,
                                             int budget = kDefaultOracleBudget, uint64_t seed = 0,
                                             double tol = kRankTol) {
  const int n = static_cast<int>(X.cols());
  if (n == 0) throw InvalidInputError("is_nondegenerate: empty matrix");
  const int r = numerical_rank(X, tol);
  if (r == 0) return {true, {}};

  auto full_rank = [&](const std::vector<int>& cols) {
    return numerical_rank_cols(X, cols, tol) == static_cast<int>(cols.size());
  };

  NondegeneracyVerdict verdict;
  if (mode == OracleMode::exact) {
    if (n > kExactNondegenerateCap)
      throw CapacityError("is_nondegenerate: exact mode capped at n <= 20");
    detail::for_each_subset(n, r, [&](const std::vector<int>& cols) {
      if (!full_rank(cols)) {
        verdict = {false, cols};
        return false;
      }
      return true;
    });
  } else {
    Rng rng(seed);
    for (int t = 0; t < budget; ++t) {
      const std::vector<int> cols = rng.sample_subset(n, r);
      if (!full_rank(cols)) {
        verdict = {false, cols};
        break;
      }
    }
  }
  return verdict;
}

// Minimal sample subspace: rank deficient and nondegenerate.
inline bool is_minimal_segment(const Matrix& X, double tol = kRankTol) {
  if (X.cols() == 0) throw InvalidInputError("is_minimal_segment: empty matrix");
  for (int j = 0; j < X.cols(); ++j)
    if (X.col(j).norm() == 0.0) throw InvalidInputError("is_minimal_segment: zero column");
  const int n = static_cast<int>(X.cols());
  const int r = numerical_rank(X, tol);
  if (n <= r) return false;  // pure
  const OracleMode mode = n <= kExactNondegenerateCap ? OracleMode::exact : OracleMode::sampled;
  return is_nondegenerate(X, mode, kDefaultOracleBudget, 0, tol).nondegenerate;
}

namespace detail {

// Span equality through the rank of the concatenation.
inline bool spans_equal(const Matrix& X, const std::vector<int>& a, const std::vector<int>& b,
                        double tol) {
  const int ra = numerical_rank_cols(X, a, tol);
  const int rb = numerical_rank_cols(X, b, tol);
  if (ra != rb) return false;
  std::vector<int> both = a;
  both.insert(both.end(), b.begin(), b.end());
  return numerical_rank_cols(X, both, tol) == ra;
}

}  // namespace detail

// Definition-2 check: pure piece pure, minimal pieces minimal, pairwise
// distinct spans, and no pure sample inside a minimal span.
inline bool is_mss(const Matrix& X, const Partition& P, double tol = kSpanTol) {
  P.validate_strict(static_cast<int>(X.cols()));

  if (P.pure) {
    const Matrix X0 = detail::submatrix_cols(X, *P.pure);
    if (numerical_rank(X0, tol) != static_cast<int>(P.pure->size())) return false;
  }
  for (const auto& piece : P.pieces)
    if (!is_minimal_segment(detail::submatrix_cols(X, piece), tol)) return false;

  std::vector<const std::vector<int>*> all;
  for (const auto& piece : P.pieces) all.push_back(&piece);
  if (P.pure) all.push_back(&*P.pure);
  for (size_t a = 0; a < all.size(); ++a)
    for (size_t b = a + 1; b < all.size(); ++b)
      if (detail::spans_equal(X, *all[a], *all[b], tol)) return false;

  if (P.pure) {
    for (const auto& piece : P.pieces) {
      const Matrix basis = detail::orth_basis(detail::submatrix_cols(X, piece), tol);
      for (int j : *P.pure)
        if (detail::span_residual(X.col(j), basis) <= tol * X.col(j).norm()) return false;
    }
  }
  return true;
}

// Verdict of the nondegenerate-intersection probe (Definition 3). On failure
// carries the piece index and the witness subset of the complement.
struct IntersectionVerdict {
  bool nondegenerate = true;
  int piece = -1;
  std::vector<int> witness;

  explicit operator bool() const { return nondegenerate; }
};

namespace detail {

// Splits X_k against span(X_S): S' = span(X_k) ∩ span(X_S), Z = projection of
// X_k onto the complement of S' inside span(X_k). Z must be zero or
// nondegenerate for the probe to pass.
inline bool intersection_probe(const Matrix& X, const std::vector<int>& piece,
                               const std::vector<int>& subset, double tol) {
  const Matrix Xk = submatrix_cols(X, piece);
  const Matrix B1 = orth_basis(Xk, tol);
  const Matrix B2 = orth_basis(submatrix_cols(X, subset), tol);
  const int dk = static_cast<int>(B1.cols());
  if (dk == 0) return true;

  // Principal angles: singular values of B1^T B2 at 1 flag intersection
  // directions.
  int dim_inter = 0;
  Matrix Bp(X.rows(), 0);
  if (B2.cols() > 0) {
    Eigen::BDCSVD<Matrix> svd(B1.transpose() * B2, Eigen::ComputeThinU);
    const Vector& s = svd.singularValues();
    while (dim_inter < s.size() && s(dim_inter) >= 1.0 - kRankTol) ++dim_inter;
    if (dim_inter > 0) Bp = B1 * svd.matrixU().leftCols(dim_inter);
  }
  if (dim_inter == dk) return true;  // Z = 0

  // Complement of S' restricted to span(X_k).
  Matrix resid = B1;
  if (dim_inter > 0) resid -= Bp * (Bp.transpose() * B1);
  const Matrix B2p = orth_basis(resid, 1e-6);
  const Matrix Z = B2p * (B2p.transpose() * Xk);
  if (Z.norm() <= tol * Xk.norm()) return true;
  const int nz = static_cast<int>(Z.cols());
  const OracleMode zmode = nz <= kExactNondegenerateCap ? OracleMode::exact : OracleMode::sampled;
  return is_nondegenerate(Z, zmode, kDefaultOracleBudget, 0, tol).nondegenerate;
}

}  // namespace detail

inline IntersectionVerdict is_intersected_nondegenerately(const Matrix& X, const Partition& P,
                                                          OracleMode mode = OracleMode::exact,
                                                          int budget = kDefaultOracleBudget,
                                                          uint64_t seed = 0, double tol = kSpanTol) {
  const int n = static_cast<int>(X.cols());
  P.validate_strict(n);
  std::vector<std::vector<int>> all_pieces = P.pieces;
  if (P.pure) all_pieces.push_back(*P.pure);
  const int K = static_cast<int>(all_pieces.size());

  for (int k = 0; k < K; ++k) {
    std::vector<int> comp;
    comp.reserve(n);
    for (int j = 0; j < n; ++j) comp.push_back(j);
    for (int j : all_pieces[k]) comp.erase(std::find(comp.begin(), comp.end(), j));
    if (comp.empty()) continue;

    auto probe = [&](const std::vector<int>& subset) {
      return detail::intersection_probe(X, all_pieces[k], subset, tol);
    };

    if (mode == OracleMode::exact) {
      if (n > kExactIntersectionCap)
        throw CapacityError("is_intersected_nondegenerately: exact mode capped at n <= 15");
      const int c = static_cast<int>(comp.size());
      for (uint64_t mask = 1; mask < (uint64_t(1) << c); ++mask) {
        std::vector<int> subset;
        for (int b = 0; b < c; ++b)
          if (mask & (uint64_t(1) << b)) subset.push_back(comp[b]);
        if (!probe(subset)) return IntersectionVerdict{false, k, subset};
      }
    } else {
      // Structured candidates first: every other piece and the full
      // complement, then seeded random subsets.
      std::vector<std::vector<int>> candidates;
      for (int l = 0; l < K; ++l)
        if (l != k && !all_pieces[l].empty()) candidates.push_back(all_pieces[l]);
      candidates.push_back(comp);
      Rng rng(seed + static_cast<uint64_t>(k) * 0x51ed270b5ull);
      const int c = static_cast<int>(comp.size());
      for (int t = 0; t < budget; ++t) {
        const int sz = 1 + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(c)));
        std::vector<int> local = rng.sample_subset(c, sz);
        for (int& v : local) v = comp[v];
        candidates.push_back(std::move(local));
      }
      for (const auto& subset : candidates)
        if (!probe(subset)) return IntersectionVerdict{false, k, subset};
    }
  }
  return {};
}

// Membership in the candidate set J(K, d, d_min) of Eq.-style priors:
// every piece larger than d_min and rank sum at most d.
inline bool in_candidate_set(const Matrix& X, const Partition& P, const MssPriors& priors,
                             double tol = kRankTol) {
  priors.validate();
  if (P.pure) throw InvalidInputError("in_candidate_set: pure piece not allowed");
  if (P.piece_count() != priors.K)
    throw InvalidInputError("in_candidate_set: piece count differs from priors.K");
  int rank_sum = 0;
  for (const auto& piece : P.pieces) {
    if (static_cast<int>(piece.size()) <= priors.d_min) return false;
    rank_sum += numerical_rank_cols(X, piece, tol);
  }
  return rank_sum <= priors.d;
}

// One reduction round: the certified piece and the span closure it emitted.
struct ReductionRound {
  int rho_min = 0;
  int piece = -1;
  std::vector<int> closure;
};

struct ReductionResult {
  std::vector<std::vector<int>> recovered;
  Partition remainder;  // per-slot leftovers; empty slots retained
  std::vector<ReductionRound> rounds;
};

// Iteratively certifies pieces of minimal rank as lying inside one minimal
// segment and emits their span closures. The certification is sound under
// the rank/size conditions recorded per round (rho_min vs piece size); when
// those fail the emitted closure may span several true segments.
inline ReductionResult reduce_segments(const Matrix& X, const Partition& P,
                                       double tol = kSpanTol) {
  const int n = static_cast<int>(X.cols());
  P.validate_cover(n);
  if (P.pieces.empty()) throw InvalidInputError("reduce_segments: empty partition");

  ReductionResult result;
  std::vector<std::vector<int>> pieces = P.pieces;
  std::vector<char> alive(n, 1);
  if (P.pure)
    for (int j : *P.pure) alive[j] = 0;  // the pure piece is never reduced

  while (true) {
    int rho_min = -1;
    for (const auto& piece : pieces)
      if (!piece.empty()) {
        const int r = numerical_rank_cols(X, piece, tol);
        if (rho_min < 0 || r < rho_min) rho_min = r;
      }
    if (rho_min < 0) break;

    int chosen = -1;
    for (int i = 0; i < static_cast<int>(pieces.size()); ++i) {
      if (pieces[i].empty()) continue;
      const int r = numerical_rank_cols(X, pieces[i], tol);
      if (r == rho_min && static_cast<int>(pieces[i].size()) > rho_min) {
        chosen = i;
        break;
      }
    }
    if (chosen < 0) break;

    const Matrix basis = detail::orth_basis(detail::submatrix_cols(X, pieces[chosen]), tol);
    std::vector<int> closure;
    for (int j = 0; j < n; ++j)
      if (alive[j] && detail::span_residual(X.col(j), basis) <= tol * X.col(j).norm())
        closure.push_back(j);
    for (int j : closure) alive[j] = 0;
    for (auto& piece : pieces)
      piece.erase(std::remove_if(piece.begin(), piece.end(), [&](int j) { return !alive[j]; }),
                  piece.end());
    result.rounds.push_back({rho_min, chosen, closure});
    result.recovered.push_back(std::move(closure));
  }

  result.remainder.pieces = pieces;
  result.remainder.pure = P.pure;
  result.remainder.n = n;
  return result;
}

// Adds every sample within span(X_{J_i}) to piece i, removing it from its
// former piece. Empty pieces are kept as markers.
inline Partition extend_segment(const Matrix& X, const Partition& P, int i,
                                double tol = kSpanTol) {
  const int n = static_cast<int>(X.cols());
  P.validate_cover(n);
  if (i < 0 || i >= P.piece_count()) throw InvalidInputError("extend_segment: bad piece index");
  if (P.pieces[i].empty()) return P;

  const Matrix basis = detail::orth_basis(detail::submatrix_cols(X, P.pieces[i]), tol);
  std::vector<char> take(n, 0);
  for (int j : P.pieces[i]) take[j] = 1;
  for (int j = 0; j < n; ++j)
    if (detail::span_residual(X.col(j), basis) <= tol * X.col(j).norm()) take[j] = 1;

  Partition out = P;
  for (int k = 0; k < out.piece_count(); ++k) {
    if (k == i) continue;
    auto& piece = out.pieces[k];
    piece.erase(std::remove_if(piece.begin(), piece.end(), [&](int j) { return take[j]; }),
                piece.end());
  }
  if (out.pure)
    out.pure->erase(std::remove_if(out.pure->begin(), out.pure->end(),
                                   [&](int j) { return take[j]; }),
                    out.pure->end());
  std::vector<int> grown;
  for (int j = 0; j < n; ++j)
    if (take[j]) grown.push_back(j);
  // take[] covers the old members of piece i as well
  out.pieces[i] = grown;
  return out;
}

// Extends every piece once, in ascending order of the input piece ranks.
inline Partition extend_all(const Matrix& X, const Partition& P, double tol = kSpanTol) {
  P.validate_cover(static_cast<int>(X.cols()));
  std::vector<std::pair<int, int>> order;  // (rank, index)
  for (int i = 0; i < P.piece_count(); ++i) {
    const int r = P.pieces[i].empty() ? 0 : numerical_rank_cols(X, P.pieces[i], tol);
    order.emplace_back(r, i);
  }
  std::stable_sort(order.begin(), order.end());
  Partition out = P;
  for (const auto& [rank, i] : order) {
    (void)rank;
    out = extend_segment(X, out, i, tol);
  }
  return out;
}

}  // namespace mss
