#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace textscore::stats::linalg {

struct Mat {
  std::size_t n = 0;  // rows
  std::size_t m = 0;  // cols
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t rows, std::size_t cols) : n(rows), m(cols), a(rows * cols, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * m + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * m + j]; }
};

// Householder QR with column pivoting. Reflectors are stored below the
// diagonal (LINPACK layout), R above it with its diagonal in rdiag. Columns
// are pivoted by largest remaining norm, so rank-deficiency surfaces as
// trailing near-zero rdiag entries.
struct Qr {
  Mat qr;
  std::vector<double> rdiag;
  std::vector<std::size_t> perm;  // qr column j holds input column perm[j]
  std::size_t rank = 0;
  std::size_t n = 0;
  std::size_t m = 0;

  bool full_rank() const { return rank == m; }

  // v := Q^T v (applies all reflectors in order). v.size() == n.
  void apply_qt(std::vector<double>& v) const;

  // Least-squares coefficients in the original column order. Requires
  // full rank. Also writes the residual sum of squares when rss != nullptr.
  std::vector<double> solve(std::span<const double> y, double* rss = nullptr) const;

  // diag((X^T X)^-1) in the original column order. Requires full rank.
  std::vector<double> inverse_gram_diagonal() const;
};

Qr qr_decompose(const Mat& x, double rel_tol = 1e-10);

}  // namespace textscore::stats::linalg
