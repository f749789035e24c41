#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "intentcap/errors.hpp"

namespace intentcap {

/// Dense row-major weight matrix; rows index decoded items, columns
/// reference items.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  template <typename Fn>
  static WeightMatrix from_function(std::size_t rows, std::size_t cols, Fn&& fn) {
    WeightMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = fn(i, j);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  WeightMatrix transposed() const {
    WeightMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct MatchPair {
  std::size_t decoded;
  std::size_t reference;
  double weight;
};

struct Matching {
  std::vector<MatchPair> pairs;  // sorted by (decoded, reference)
  double total = 0.0;
};

/// Sizes up to this bound per side are solved by enumeration.
inline constexpr std::size_t kExhaustiveLimit = 6;

namespace detail {

inline double tie_tolerance(std::size_t terms) {
  return 1e-12 * static_cast<double>(std::max<std::size_t>(terms, 1));
}

// Assignments below are row -> column with rows <= cols ("tall" orientation
// is handled by the public entry points via transposition).

inline double assignment_total(const WeightMatrix& w, const std::vector<std::size_t>& cols) {
  double total = 0.0;
  for (std::size_t i = 0; i < cols.size(); ++i) total += w(i, cols[i]);
  return total;
}

/// Exact max-weight assignment of every row to a distinct column (Hungarian
/// method with potentials, O(n^2 m)). Requires rows <= cols.
inline std::vector<std::size_t> hungarian_rows_to_cols(const WeightMatrix& w) {
  const std::size_t n = w.rows(), m = w.cols();
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = -w(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> cols(n);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) cols[p[j] - 1] = j - 1;
  return cols;
}

/// Optimum over rows [first, n) using only columns not in `taken`.
inline double best_remaining(const WeightMatrix& w, std::size_t first,
                             const std::vector<bool>& taken) {
  std::vector<std::size_t> free_cols;
  for (std::size_t j = 0; j < w.cols(); ++j)
    if (!taken[j]) free_cols.push_back(j);
  const std::size_t rows = w.rows() - first;
  if (rows == 0) return 0.0;
  WeightMatrix sub(rows, free_cols.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < free_cols.size(); ++j) sub(i, j) = w(first + i, free_cols[j]);
  return assignment_total(sub, hungarian_rows_to_cols(sub));
}

/// Among optimal assignments, the one whose column vector is
/// lexicographically smallest (ties within tolerance count as optimal).
inline std::vector<std::size_t> hungarian_lexmin(const WeightMatrix& w) {
  const std::size_t n = w.rows();
  const double opt = assignment_total(w, hungarian_rows_to_cols(w));
  const double tol = tie_tolerance(n) * 8;
  std::vector<std::size_t> cols;
  std::vector<bool> taken(w.cols(), false);
  double fixed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    bool chosen = false;
    for (std::size_t j = 0; j < w.cols() && !chosen; ++j) {
      if (taken[j]) continue;
      taken[j] = true;
      const double value = fixed + w(i, j) + best_remaining(w, i + 1, taken);
      if (value >= opt - tol) {
        cols.push_back(j);
        fixed += w(i, j);
        chosen = true;
      } else {
        taken[j] = false;
      }
    }
    if (!chosen) throw Error("assignment refinement failed to find an optimal column");
  }
  return cols;
}

inline void enumerate_injections(std::size_t n, std::size_t m,
                                 const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> cols;
  std::vector<bool> taken(m, false);
  std::function<void()> rec = [&] {
    if (cols.size() == n) {
      visit(cols);
      return;
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (taken[j]) continue;
      taken[j] = true;
      cols.push_back(j);
      rec();
      cols.pop_back();
      taken[j] = false;
    }
  };
  rec();
}

inline std::vector<std::size_t> exhaustive_lexmin(const WeightMatrix& w) {
  double best = -std::numeric_limits<double>::infinity();
  enumerate_injections(w.rows(), w.cols(), [&](const std::vector<std::size_t>& cols) {
    best = std::max(best, assignment_total(w, cols));
  });
  const double tol = tie_tolerance(w.rows());
  std::vector<std::size_t> chosen;
  bool found = false;
  enumerate_injections(w.rows(), w.cols(), [&](const std::vector<std::size_t>& cols) {
    if (!found && assignment_total(w, cols) >= best - tol) {
      chosen = cols;
      found = true;
    }
  });
  return chosen;
}

template <typename Solver>
Matching solve_injection(const WeightMatrix& w, Solver&& solver) {
  Matching out;
  if (w.rows() == 0 || w.cols() == 0) return out;
  const bool transpose = w.rows() > w.cols();
  const WeightMatrix work = transpose ? w.transposed() : w;
  const auto cols = solver(work);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const std::size_t d = transpose ? cols[i] : i;
    const std::size_t r = transpose ? i : cols[i];
    out.pairs.push_back({d, r, w(d, r)});
  }
  std::sort(out.pairs.begin(), out.pairs.end(), [](const MatchPair& a, const MatchPair& b) {
    return std::pair(a.decoded, a.reference) < std::pair(b.decoded, b.reference);
  });
  for (const auto& p : out.pairs) out.total += p.weight;
  return out;
}

}  // namespace detail

/// Max-weight injection of the smaller side into the larger by enumeration.
inline Matching max_weight_injection_exhaustive(const WeightMatrix& w) {
  return detail::solve_injection(w, detail::exhaustive_lexmin);
}

/// Max-weight injection via the Hungarian method.
inline Matching max_weight_injection_hungarian(const WeightMatrix& w) {
  return detail::solve_injection(w, detail::hungarian_lexmin);
}

/// Max-weight injection of the smaller side into the larger. Every item of
/// the smaller side is matched to a distinct item of the other side. Ties
/// are broken by walking the smaller side in index order and taking the
/// lowest partner index that still admits an optimal completion.
inline Matching max_weight_injection(const WeightMatrix& w) {
  if (std::max(w.rows(), w.cols()) <= kExhaustiveLimit) return max_weight_injection_exhaustive(w);
  return max_weight_injection_hungarian(w);
}

/// Best match over all functions (not necessarily injective): when
/// rows <= cols every row takes its best column, otherwise every column
/// takes its best row. Several items may share one partner.
inline Matching best_function_matching(const WeightMatrix& w) {
  Matching out;
  if (w.rows() == 0 || w.cols() == 0) return out;
  if (w.rows() <= w.cols()) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < w.cols(); ++j)
        if (w(i, j) > w(i, best)) best = j;
      out.pairs.push_back({i, best, w(i, best)});
    }
  } else {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < w.rows(); ++i)
        if (w(i, j) > w(best, j)) best = i;
      out.pairs.push_back({best, j, w(best, j)});
    }
    std::stable_sort(out.pairs.begin(), out.pairs.end(), [](const MatchPair& a, const MatchPair& b) {
      return std::pair(a.decoded, a.reference) < std::pair(b.decoded, b.reference);
    });
  }
  for (const auto& p : out.pairs) out.total += p.weight;
  return out;
}

}  // namespace intentcap
