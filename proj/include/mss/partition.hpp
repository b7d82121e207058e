#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mss/errors.hpp"

namespace mss {

// Disjoint index sets J_1..J_K over the sample columns {0..n-1}, with an
// optional pure/outlier piece J_0. Solver-side partitions may carry empty
// pieces as markers; theory oracles require nonempty pieces.
struct Partition {
  std::vector<std::vector<int>> pieces;
  std::optional<std::vector<int>> pure;
  int n = 0;

  int piece_count() const { return static_cast<int>(pieces.size()); }

  int nonempty_count() const {
    int c = 0;
    for (const auto& p : pieces)
      if (!p.empty()) ++c;
    return c;
  }

  void sort_pieces() {
    for (auto& p : pieces) std::sort(p.begin(), p.end());
    if (pure) std::sort(pure->begin(), pure->end());
  }

  // labels: one entry per column, 1..K for pieces, 0 for the pure piece.
  static Partition from_labels(const std::vector<int>& labels, int K = -1) {
    Partition P;
    P.n = static_cast<int>(labels.size());
    int maxk = 0;
    for (int l : labels) {
      if (l < 0) throw InvalidInputError("Partition: negative label");
      maxk = std::max(maxk, l);
    }
    if (K < 0) K = maxk;
    if (maxk > K) throw InvalidInputError("Partition: label exceeds K");
    P.pieces.assign(K, {});
    std::vector<int> pure_idx;
    for (int j = 0; j < P.n; ++j) {
      if (labels[j] == 0)
        pure_idx.push_back(j);
      else
        P.pieces[labels[j] - 1].push_back(j);
    }
    if (!pure_idx.empty()) P.pure = pure_idx;
    return P;
  }

  std::vector<int> to_labels() const {
    std::vector<int> labels(n, -1);
    for (int k = 0; k < piece_count(); ++k)
      for (int j : pieces[k]) labels[j] = k + 1;
    if (pure)
      for (int j : *pure) labels[j] = 0;
    for (int l : labels)
      if (l < 0) throw InvalidInputError("Partition: does not cover all columns");
    return labels;
  }

  // Slot-by-slot equality on sorted index sets (the solver fixed-point test).
  bool operator==(const Partition& other) const {
    if (n != other.n || pieces.size() != other.pieces.size()) return false;
    auto sorted = [](std::vector<int> v) {
      std::sort(v.begin(), v.end());
      return v;
    };
    for (size_t k = 0; k < pieces.size(); ++k)
      if (sorted(pieces[k]) != sorted(other.pieces[k])) return false;
    const std::vector<int> a = pure ? sorted(*pure) : std::vector<int>{};
    const std::vector<int> b = other.pure ? sorted(*other.pure) : std::vector<int>{};
    return a == b;
  }

  // Equality as unordered families of nonempty sets (relabeling-invariant).
  bool same_sets(const Partition& other) const {
    if (n != other.n) return false;
    auto family = [](const Partition& P) {
      std::vector<std::vector<int>> f;
      for (const auto& p : P.pieces)
        if (!p.empty()) {
          auto s = p;
          std::sort(s.begin(), s.end());
          f.push_back(std::move(s));
        }
      std::sort(f.begin(), f.end());
      return f;
    };
    const std::vector<int> a = pure ? *pure : std::vector<int>{};
    const std::vector<int> b = other.pure ? *other.pure : std::vector<int>{};
    auto sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return sa == sb && family(*this) == family(other);
  }

  // Disjointness and coverage of {0..n-1}; empty pieces allowed.
  void validate_cover(int n_expected) const {
    if (n != n_expected) throw InvalidInputError("Partition: sample count mismatch");
    std::vector<int> hit(n, 0);
    auto mark = [&](const std::vector<int>& p) {
      for (int j : p) {
        if (j < 0 || j >= n) throw InvalidInputError("Partition: index out of range");
        if (hit[j]++) throw InvalidInputError("Partition: pieces overlap");
      }
    };
    for (const auto& p : pieces) mark(p);
    if (pure) mark(*pure);
    for (int j = 0; j < n; ++j)
      if (!hit[j]) throw InvalidInputError("Partition: column not covered");
  }

  // As validate_cover, plus every listed piece nonempty.
  void validate_strict(int n_expected) const {
    validate_cover(n_expected);
    for (const auto& p : pieces)
      if (p.empty()) throw InvalidInputError("Partition: empty piece");
    if (pure && pure->empty()) throw InvalidInputError("Partition: empty pure piece");
  }
};

// K, rank sum and minimal segment rank of the sought MSS.
struct MssPriors {
  int K = 0;
  int d = 0;
  int d_min = 1;

  void validate() const {
    if (K < 1 || d_min < 1 || d < K * d_min)
      throw InvalidInputError("MssPriors: need K >= 1, d_min >= 1, d >= K*d_min");
  }
};

// Visits every partition of {0..n-1} into exactly K nonempty unlabeled pieces
// (restricted growth strings). Returning false from the visitor stops early.
inline void enumerate_partitions(int n, int K,
                                 const std::function<bool(const std::vector<std::vector<int>>&)>& visit) {
  if (n > 12 || K > 4) throw CapacityError("enumerate_partitions: capped at n <= 12, K <= 4");
  if (K < 1 || n < K) throw InvalidInputError("enumerate_partitions: need 1 <= K <= n");
  std::vector<int> assign(n, 0);
  std::vector<std::vector<int>> pieces(K);
  bool stop = false;
  std::function<void(int, int)> rec = [&](int j, int used) {
    if (stop) return;
    if (j == n) {
      if (used == K) {
        for (auto& p : pieces) p.clear();
        for (int i = 0; i < n; ++i) pieces[assign[i]].push_back(i);
        if (!visit(pieces)) stop = true;
      }
      return;
    }
    if (n - j < K - used) return;  // not enough columns left to open the remaining pieces
    const int limit = std::min(used, K - 1);
    for (int c = 0; c <= limit && !stop; ++c) {
      assign[j] = c;
      rec(j + 1, std::max(used, c + 1));
    }
  };
  rec(0, 0);
}

}  // namespace mss
