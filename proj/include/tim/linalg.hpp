#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tim {

/// Integer matrix interpreted over the rationals or over GF(p) per operation.
struct ExactMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> entries;  // row-major

  ExactMatrix() = default;
  ExactMatrix(int r, int c) : rows(r), cols(c), entries(static_cast<std::size_t>(r) * c, 0) {}

  std::int64_t& at(int r, int c) { return entries[static_cast<std::size_t>(r) * cols + c]; }
  std::int64_t at(int r, int c) const { return entries[static_cast<std::size_t>(r) * cols + c]; }

  static ExactMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows_in) {
    ExactMatrix m(static_cast<int>(rows_in.size()),
                  rows_in.empty() ? 0 : static_cast<int>(rows_in[0].size()));
    for (int r = 0; r < m.rows; ++r) {
      if (static_cast<int>(rows_in[r].size()) != m.cols)
        throw std::invalid_argument("ExactMatrix: ragged rows");
      for (int c = 0; c < m.cols; ++c) m.at(r, c) = rows_in[r][c];
    }
    return m;
  }

  void append_row(const std::vector<std::int64_t>& row) {
    if (rows == 0 && cols == 0) cols = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != cols)
      throw std::invalid_argument("ExactMatrix: row width mismatch");
    entries.insert(entries.end(), row.begin(), row.end());
    ++rows;
  }
};

namespace detail {

/// Fraction-free Bareiss elimination with full pivoting; intermediates are
/// true determinant minors, so every division is exact.
template <class Int>
int bareiss_rank(const ExactMatrix& m) {
  const int n = m.rows, c = m.cols;
  if (n == 0 || c == 0) return 0;
  std::vector<Int> a(static_cast<std::size_t>(n) * c);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = Int(m.entries[i]);
  auto at = [&](int r, int col) -> Int& { return a[static_cast<std::size_t>(r) * c + col]; };

  Int prev(1);
  int rank = 0;
  for (int step = 0; step < n && step < c; ++step) {
    int pr = -1, pc = -1;
    for (int i = step; i < n && pr < 0; ++i)
      for (int j = step; j < c; ++j)
        if (at(i, j) != 0) {
          pr = i;
          pc = j;
          break;
        }
    if (pr < 0) break;
    if (pr != step)
      for (int j = 0; j < c; ++j) std::swap(at(step, j), at(pr, j));
    if (pc != step)
      for (int i = 0; i < n; ++i) std::swap(at(i, step), at(i, pc));
    for (int i = step + 1; i < n; ++i) {
      for (int j = step + 1; j < c; ++j)
        at(i, j) = (at(step, step) * at(i, j) - at(i, step) * at(step, j)) / prev;
      at(i, step) = Int(0);
    }
    prev = at(step, step);
    ++rank;
  }
  return rank;
}

/// True when Hadamard's bound certifies all Bareiss minors fit in int64.
inline bool int64_safe(const ExactMatrix& m) {
  const int k = std::min(m.rows, m.cols);
  if (k == 0) return true;
  std::int64_t maxabs = 1;
  for (const auto e : m.entries) {
    const std::int64_t v = e < 0 ? -e : e;
    if (v > maxabs) maxabs = v;
  }
  const double bits = k * (0.5 * std::log2(static_cast<double>(k)) +
                           std::log2(static_cast<double>(maxabs)));
  return bits < 61.0;
}

}  // namespace detail

/// Rank over the rationals; exact, no floating point.
inline int rank_exact(const ExactMatrix& m) {
  if (detail::int64_safe(m)) return detail::bareiss_rank<std::int64_t>(m);
  return detail::bareiss_rank<mpz_class>(m);
}

inline bool is_prime(std::int64_t p) {
  if (p < 2) return false;
  for (std::int64_t d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

inline std::int64_t smallest_prime_at_least(std::int64_t n) {
  std::int64_t p = n < 2 ? 2 : n;
  while (!is_prime(p)) ++p;
  return p;
}

/// Rank over GF(p) by modular Gaussian elimination.
inline int rank_gfp(const ExactMatrix& m, std::int64_t p) {
  if (!is_prime(p)) throw std::invalid_argument("rank_gfp: p not prime");
  const int n = m.rows, c = m.cols;
  std::vector<std::int64_t> a(m.entries);
  for (auto& e : a) {
    e %= p;
    if (e < 0) e += p;
  }
  auto at = [&](int r, int col) -> std::int64_t& { return a[static_cast<std::size_t>(r) * c + col]; };
  auto powmod = [&](std::int64_t b, std::int64_t e) {
    std::int64_t res = 1 % p;
    b %= p;
    while (e > 0) {
      if (e & 1) res = res * b % p;
      b = b * b % p;
      e >>= 1;
    }
    return res;
  };
  int rank = 0;
  int col = 0;
  for (int row = 0; row < n && col < c; ++col) {
    int pivot = -1;
    for (int i = row; i < n; ++i)
      if (at(i, col) != 0) {
        pivot = i;
        break;
      }
    if (pivot < 0) continue;
    if (pivot != row)
      for (int j = col; j < c; ++j) std::swap(at(row, j), at(pivot, j));
    const std::int64_t inv = powmod(at(row, col), p - 2);
    for (int i = row + 1; i < n; ++i) {
      if (at(i, col) == 0) continue;
      const std::int64_t f = at(i, col) * inv % p;
      for (int j = col; j < c; ++j) {
        std::int64_t v = (at(i, j) - f * at(row, j)) % p;
        at(i, j) = v < 0 ? v + p : v;
      }
    }
    ++row;
    ++rank;
  }
  return rank;
}

struct VectorFamily {
  enum class Kind { mds, binary_enumeration };
  int dim = 0;                                       // length of each column
  std::vector<std::vector<std::int64_t>> vectors;    // 0-indexed storage
  Kind kind = Kind::binary_enumeration;
};

/// r x K Vandermonde generator over GF(p), evaluation points 0..K-1. Every
/// r-column submatrix is nonsingular; construction self-certifies for K <= 12.
inline ExactMatrix mds_generator(int K, int r, std::int64_t p) {
  if (r > K) throw std::invalid_argument("mds_generator: r > K");
  if (p < K) throw std::invalid_argument("mds_generator: p too small for K distinct points");
  if (!is_prime(p)) throw std::invalid_argument("mds_generator: p not prime");
  ExactMatrix g(r, K);
  for (int j = 0; j < K; ++j) {
    std::int64_t pw = 1 % p;
    for (int i = 0; i < r; ++i) {
      g.at(i, j) = pw;
      pw = pw * (j % p) % p;
    }
  }
  if (K <= 12) {
    std::vector<int> pick(r);
    // enumerate all r-subsets of columns
    for (int i = 0; i < r; ++i) pick[i] = i;
    while (true) {
      ExactMatrix sub(r, r);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) sub.at(i, j) = g.at(i, pick[j]);
      if (rank_gfp(sub, p) != r)
        throw std::logic_error("mds_generator: submatrix singular (certification failed)");
      int idx = r - 1;
      while (idx >= 0 && pick[idx] == K - r + idx) --idx;
      if (idx < 0) break;
      ++pick[idx];
      for (int j = idx + 1; j < r; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return g;
}

inline VectorFamily mds_family(int K, int r, std::int64_t p) {
  const ExactMatrix g = mds_generator(K, r, p);
  VectorFamily fam;
  fam.dim = r;
  fam.kind = VectorFamily::Kind::mds;
  fam.vectors.resize(K);
  for (int j = 0; j < K; ++j) {
    fam.vectors[j].resize(r);
    for (int i = 0; i < r; ++i) fam.vectors[j][i] = g.at(i, j);
  }
  return fam;
}

/// All 2^x - 1 nonzero 0-1 columns in lexicographic order: the vector at
/// 1-based index k is the binary expansion of k, most significant bit on top.
inline VectorFamily binary_vectors(int x) {
  if (x < 1 || x > 16) throw std::invalid_argument("binary_vectors: x out of [1,16]");
  VectorFamily fam;
  fam.dim = x;
  fam.kind = VectorFamily::Kind::binary_enumeration;
  const int count = (1 << x) - 1;
  fam.vectors.resize(count);
  for (int k = 1; k <= count; ++k) {
    auto& v = fam.vectors[k - 1];
    v.resize(x);
    for (int i = 0; i < x; ++i) v[i] = (k >> (x - 1 - i)) & 1;
  }
  return fam;
}

}  // namespace tim
