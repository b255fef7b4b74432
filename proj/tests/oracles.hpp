#pragma once

// Independent oracles used by the unit and acceptance suites. Everything
// here recomputes expected values through a different route than the
// library: exhaustive enumeration, numerical quadrature, and normal-equation
// refits. None of it calls into the implementation paths it checks.

#include <cstddef>
#include <vector>

#include "textscore/stats.hpp"

namespace oracles {

// Exact collapsed LDA posterior over all K^T assignment states of a tiny
// corpus (token order: documents in order, positions in order). Returned
// probabilities are indexed by base-K encoding of the assignment vector,
// least significant digit = first token.
std::vector<double> enumerate_collapsed_posterior(const std::vector<std::vector<int>>& docs,
                                                  int K, int V, double alpha, double beta);

std::size_t assignment_state_index(const std::vector<std::vector<int>>& z, int K);

// Student-t CDF by adaptive Simpson quadrature of the density.
double t_cdf_quadrature(double t, double df);
double two_tailed_p_quadrature(double t, double df);

// Ordinary least squares through normal equations + Cholesky (a different
// numeric route than the library's QR). Returns the residual sum of squares
// of y on [1, x columns `cols`].
double ols_rss_cholesky(const textscore::stats::FeatureMatrix& x, const std::vector<double>& y,
                        const std::vector<std::size_t>& cols);

struct OracleMove {
  bool is_drop = true;
  std::size_t col = 0;
};

struct OracleStepwiseResult {
  std::vector<OracleMove> moves;
  std::vector<std::size_t> included;  // final feature columns, ascending
  double final_aic = 0.0;             // computed from the Cholesky-route RSS
};

// Exhaustive single-move greedy replay: from the full model, evaluates every
// drop (and add, when allow_add) by a full normal-equation refit, applies
// the move that most decreases AIC (ties: drop first, then smallest column
// name), and stops when no move strictly decreases it.
OracleStepwiseResult stepwise_exhaustive_replay(const textscore::stats::FeatureMatrix& x,
                                                const std::vector<double>& y, bool allow_add);

}  // namespace oracles
