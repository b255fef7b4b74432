#include "linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace textscore::stats::linalg {

Qr qr_decompose(const Mat& x, double rel_tol) {
  Qr f;
  f.qr = x;
  f.n = x.n;
  f.m = x.m;
  f.rdiag.assign(x.m, 0.0);
  f.perm.resize(x.m);
  for (std::size_t j = 0; j < x.m; ++j) f.perm[j] = j;

  Mat& qr = f.qr;
  const std::size_t n = f.n;
  const std::size_t m = f.m;
  const std::size_t steps = std::min(n, m);

  for (std::size_t k = 0; k < steps; ++k) {
    // pivot: largest remaining column norm (recomputed, not downdated)
    std::size_t pivot = k;
    double best = -1.0;
    for (std::size_t j = k; j < m; ++j) {
      double ss = 0.0;
      for (std::size_t i = k; i < n; ++i) ss += qr(i, j) * qr(i, j);
      if (ss > best) {
        best = ss;
        pivot = j;
      }
    }
    if (pivot != k) {
      for (std::size_t i = 0; i < n; ++i) std::swap(qr(i, k), qr(i, pivot));
      std::swap(f.perm[k], f.perm[pivot]);
      std::swap(f.rdiag[k], f.rdiag[pivot]);
    }

    double nrm = std::sqrt(best < 0.0 ? 0.0 : best);
    if (nrm == 0.0) {
      f.rdiag[k] = 0.0;
      continue;
    }
    if (qr(k, k) < 0.0) nrm = -nrm;
    for (std::size_t i = k; i < n; ++i) qr(i, k) /= nrm;
    qr(k, k) += 1.0;

    for (std::size_t j = k + 1; j < m; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += qr(i, k) * qr(i, j);
      s = -s / qr(k, k);
      for (std::size_t i = k; i < n; ++i) qr(i, j) += s * qr(i, k);
    }
    f.rdiag[k] = -nrm;
  }

  const double scale = std::abs(f.rdiag.empty() ? 0.0 : f.rdiag[0]);
  f.rank = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    if (std::abs(f.rdiag[k]) > rel_tol * scale && f.rdiag[k] != 0.0) {
      ++f.rank;
    } else {
      break;  // pivoting makes rdiag non-increasing in magnitude
    }
  }
  return f;
}

void Qr::apply_qt(std::vector<double>& v) const {
  if (v.size() != n) throw std::invalid_argument("apply_qt: size mismatch");
  const std::size_t steps = std::min(n, m);
  for (std::size_t k = 0; k < steps; ++k) {
    if (qr(k, k) == 0.0) continue;
    double s = 0.0;
    for (std::size_t i = k; i < n; ++i) s += qr(i, k) * v[i];
    s = -s / qr(k, k);
    for (std::size_t i = k; i < n; ++i) v[i] += s * qr(i, k);
  }
}

std::vector<double> Qr::solve(std::span<const double> y, double* rss) const {
  if (!full_rank()) throw std::logic_error("Qr::solve: rank-deficient system");
  if (y.size() != n) throw std::invalid_argument("Qr::solve: size mismatch");

  std::vector<double> qty(y.begin(), y.end());
  apply_qt(qty);

  if (rss != nullptr) {
    double tail = 0.0;
    for (std::size_t i = m; i < n; ++i) tail += qty[i] * qty[i];
    *rss = tail;
  }

  std::vector<double> beta_perm(m, 0.0);
  for (std::size_t kk = m; kk-- > 0;) {
    double s = qty[kk];
    for (std::size_t j = kk + 1; j < m; ++j) s -= qr(kk, j) * beta_perm[j];
    beta_perm[kk] = s / rdiag[kk];
  }

  std::vector<double> beta(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) beta[perm[j]] = beta_perm[j];
  return beta;
}

std::vector<double> Qr::inverse_gram_diagonal() const {
  if (!full_rank()) throw std::logic_error("Qr::inverse_gram_diagonal: rank-deficient system");

  // R^-1 column by column; (X^T X)^-1 = R^-1 R^-T, so the diagonal is the
  // squared row norms of R^-1.
  Mat rinv(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    rinv(j, j) = 1.0 / rdiag[j];
    for (std::size_t i = j; i-- > 0;) {
      double s = 0.0;
      for (std::size_t t = i + 1; t <= j; ++t) s += qr(i, t) * rinv(t, j);
      rinv(i, j) = -s / rdiag[i];
    }
  }

  std::vector<double> diag_perm(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double ss = 0.0;
    for (std::size_t j = i; j < m; ++j) ss += rinv(i, j) * rinv(i, j);
    diag_perm[i] = ss;
  }
  std::vector<double> diag(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) diag[perm[i]] = diag_perm[i];
  return diag;
}

}  // namespace textscore::stats::linalg
