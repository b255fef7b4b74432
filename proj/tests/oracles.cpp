#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace oracles {

std::size_t assignment_state_index(const std::vector<std::vector<int>>& z, int K) {
  std::size_t index = 0;
  std::size_t base = 1;
  for (const auto& doc : z) {
    for (const int k : doc) {
      index += static_cast<std::size_t>(k) * base;
      base *= static_cast<std::size_t>(K);
    }
  }
  return index;
}

std::vector<double> enumerate_collapsed_posterior(const std::vector<std::vector<int>>& docs,
                                                  int K, int V, double alpha, double beta) {
  std::size_t total_tokens = 0;
  for (const auto& d : docs) total_tokens += d.size();
  std::size_t n_states = 1;
  for (std::size_t i = 0; i < total_tokens; ++i) n_states *= static_cast<std::size_t>(K);

  const std::size_t D = docs.size();
  std::vector<double> log_p(n_states);

  std::vector<int> n_dk(D * K);
  std::vector<int> n_kw(static_cast<std::size_t>(K) * V);
  std::vector<int> n_k(K);

  for (std::size_t s = 0; s < n_states; ++s) {
    std::fill(n_dk.begin(), n_dk.end(), 0);
    std::fill(n_kw.begin(), n_kw.end(), 0);
    std::fill(n_k.begin(), n_k.end(), 0);

    std::size_t digits = s;
    for (std::size_t d = 0; d < D; ++d) {
      for (const int w : docs[d]) {
        const int k = static_cast<int>(digits % static_cast<std::size_t>(K));
        digits /= static_cast<std::size_t>(K);
        ++n_dk[d * K + k];
        ++n_kw[static_cast<std::size_t>(k) * V + w];
        ++n_k[k];
      }
    }

    // log P(z, w) up to constants shared by every state:
    //   sum_{d,k} lgamma(n_dk + alpha)
    // + sum_k [ sum_w lgamma(n_kw + beta) - lgamma(n_k + V*beta) ]
    double lp = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      for (int k = 0; k < K; ++k) lp += std::lgamma(n_dk[d * K + k] + alpha);
    }
    for (int k = 0; k < K; ++k) {
      for (int w = 0; w < V; ++w) {
        lp += std::lgamma(n_kw[static_cast<std::size_t>(k) * V + w] + beta);
      }
      lp -= std::lgamma(static_cast<double>(n_k[k]) + static_cast<double>(V) * beta);
    }
    log_p[s] = lp;
  }

  const double max_lp = *std::max_element(log_p.begin(), log_p.end());
  double total = 0.0;
  for (const double lp : log_p) total += std::exp(lp - max_lp);
  std::vector<double> p(n_states);
  for (std::size_t s = 0; s < n_states; ++s) p[s] = std::exp(log_p[s] - max_lp) / total;
  return p;
}

namespace {

double t_pdf(double x, double df) {
  const double ln_c = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                      0.5 * std::log(df * std::numbers::pi);
  return std::exp(ln_c - 0.5 * (df + 1.0) * std::log1p(x * x / df));
}

double simpson_rec(double (*f)(double, double), double df, double a, double b, double fa,
                   double fb, double fm, double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm, df);
  const double frm = f(rm, df);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson_rec(f, df, a, m, fa, fm, flm, left, 0.5 * eps, depth - 1) +
         simpson_rec(f, df, m, b, fm, fb, frm, right, 0.5 * eps, depth - 1);
}

double integrate_t_pdf(double a, double b, double df) {
  const double fa = t_pdf(a, df);
  const double fb = t_pdf(b, df);
  const double fm = t_pdf(0.5 * (a + b), df);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(&t_pdf, df, a, b, fa, fb, fm, whole, 1e-13, 40);
}

}  // namespace

double t_cdf_quadrature(double t, double df) {
  if (t == 0.0) return 0.5;
  const double mass = integrate_t_pdf(0.0, std::abs(t), df);
  return t > 0.0 ? 0.5 + mass : 0.5 - mass;
}

double two_tailed_p_quadrature(double t, double df) {
  return 1.0 - 2.0 * integrate_t_pdf(0.0, std::abs(t), df);
}

double ols_rss_cholesky(const textscore::stats::FeatureMatrix& x, const std::vector<double>& y,
                        const std::vector<std::size_t>& cols) {
  const std::size_t n = x.rows();
  const std::size_t m = cols.size() + 1;

  // design = [1, x[:, cols]], gram = design' design, rhs = design' y
  std::vector<double> design(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    design[i * m] = 1.0;
    for (std::size_t j = 0; j < cols.size(); ++j) design[i * m + j + 1] = x.at(i, cols[j]);
  }
  std::vector<double> gram(m * m, 0.0);
  std::vector<double> rhs(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < m; ++a) {
      rhs[a] += design[i * m + a] * y[i];
      for (std::size_t b = a; b < m; ++b) gram[a * m + b] += design[i * m + a] * design[i * m + b];
    }
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < a; ++b) gram[a * m + b] = gram[b * m + a];
  }

  // Cholesky gram = L L'
  std::vector<double> chol(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = gram[i * m + j];
      for (std::size_t t = 0; t < j; ++t) s -= chol[i * m + t] * chol[j * m + t];
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("oracle OLS: singular normal equations");
        chol[i * m + i] = std::sqrt(s);
      } else {
        chol[i * m + j] = s / chol[j * m + j];
      }
    }
  }

  // solve L w = rhs, then L' beta = w
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = rhs[i];
    for (std::size_t t = 0; t < i; ++t) s -= chol[i * m + t] * w[t];
    w[i] = s / chol[i * m + i];
  }
  std::vector<double> beta(m);
  for (std::size_t ii = m; ii-- > 0;) {
    double s = w[ii];
    for (std::size_t t = ii + 1; t < m; ++t) s -= chol[t * m + ii] * beta[t];
    beta[ii] = s / chol[ii * m + ii];
  }

  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fitted = 0.0;
    for (std::size_t a = 0; a < m; ++a) fitted += design[i * m + a] * beta[a];
    const double r = y[i] - fitted;
    rss += r * r;
  }
  return rss;
}

namespace {

double oracle_aic(double rss, std::size_t n, std::size_t p) {
  if (rss <= 0.0) return -std::numeric_limits<double>::infinity();
  return static_cast<double>(n) * std::log(rss / static_cast<double>(n)) +
         2.0 * (static_cast<double>(p) + 2.0);
}

}  // namespace

OracleStepwiseResult stepwise_exhaustive_replay(const textscore::stats::FeatureMatrix& x,
                                                const std::vector<double>& y, bool allow_add) {
  const std::size_t n = x.rows();
  std::vector<std::size_t> included(x.cols());
  std::iota(included.begin(), included.end(), std::size_t{0});

  OracleStepwiseResult result;
  double current = oracle_aic(ols_rss_cholesky(x, y, included), n, included.size());

  for (;;) {
    struct Cand {
      double aic;
      bool is_drop;
      std::size_t col;
    };
    std::optional<Cand> best;
    const auto consider = [&](const Cand& c) {
      if (!best) {
        best = c;
        return;
      }
      if (c.aic != best->aic) {
        if (c.aic < best->aic) best = c;
        return;
      }
      if (c.is_drop != best->is_drop) {
        if (c.is_drop) best = c;
        return;
      }
      if (x.column_names[c.col] < x.column_names[best->col]) best = c;
    };

    for (const auto col : included) {
      auto trial = included;
      trial.erase(std::remove(trial.begin(), trial.end(), col), trial.end());
      consider({oracle_aic(ols_rss_cholesky(x, y, trial), n, trial.size()), true, col});
    }
    if (allow_add && n > included.size() + 2) {
      for (std::size_t col = 0; col < x.cols(); ++col) {
        if (std::find(included.begin(), included.end(), col) != included.end()) continue;
        auto trial = included;
        trial.insert(std::lower_bound(trial.begin(), trial.end(), col), col);
        double rss;
        try {
          rss = ols_rss_cholesky(x, y, trial);
        } catch (const std::runtime_error&) {
          continue;  // collinear add
        }
        consider({oracle_aic(rss, n, trial.size()), false, col});
      }
    }

    if (!best || !(best->aic < current)) break;
    if (best->is_drop) {
      included.erase(std::remove(included.begin(), included.end(), best->col), included.end());
    } else {
      included.insert(std::lower_bound(included.begin(), included.end(), best->col), best->col);
    }
    current = best->aic;
    result.moves.push_back({best->is_drop, best->col});
  }

  result.included = included;
  result.final_aic = current;
  return result;
}

}  // namespace oracles
