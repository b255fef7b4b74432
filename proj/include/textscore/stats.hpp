#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace textscore::stats {

struct FeatureMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> column_names;
  std::vector<double> values;  // row-major, rows() x cols()

  std::size_t rows() const { return row_ids.size(); }
  std::size_t cols() const { return column_names.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * cols() + j]; }

  std::vector<double> column(std::size_t j) const;
  FeatureMatrix select_rows(const std::vector<std::size_t>& indices) const;

  // Checks shape, unique non-empty column names, and finite values.
  void validate() const;

  // Column-wise concatenation; row_ids must match exactly and column names
  // must stay unique.
  static FeatureMatrix hcat(const FeatureMatrix& a, const FeatureMatrix& b);
};

// CSV with a header row whose first column is user_id.
FeatureMatrix read_feature_csv(std::istream& in, const std::string& source_name);
void write_feature_csv(const FeatureMatrix& fm, std::ostream& out);

struct FitStats {
  double rss = 0.0;
  std::size_t n = 0;
  std::size_t p = 0;  // number of features, excluding the intercept
};

struct LinearModel {
  double intercept = 0.0;
  std::map<std::string, double> coefficients;  // keys == selected_features
  std::vector<std::string> selected_features;
  FitStats fit_stats;
};

enum class Collinearity { fail, drop };

// Least squares with intercept via pivoted Householder QR. Rank-deficient
// designs either fail naming a dependent column or drop dependent columns
// with a warning, per `on_collinear`.
LinearModel ols_fit(const FeatureMatrix& x, std::span<const double> y,
                    Collinearity on_collinear = Collinearity::fail);

// Mean-only model (no features); the state stepwise selection reaches when
// it drops everything, and the baseline the experiment report quotes.
LinearModel intercept_only_fit(std::span<const double> y);

// n*ln(RSS/n) + 2*(p+2), counting intercept and error variance as
// parameters. RSS == 0 returns -infinity with a warning.
double aic(const LinearModel& model);
double aic_from_rss(double rss, std::size_t n, std::size_t p);

enum class StepDirection { backward, both };

struct StepMove {
  bool is_drop = true;
  std::string feature;
  double aic_after = 0.0;
};

// Greedy AIC search from the full model: at each step take the single
// add/drop move that most decreases AIC, stopping when none does. Ties
// prefer drops, then the lexicographically smallest feature name. When
// trace is given it records the applied moves in order.
LinearModel stepwise_select(const FeatureMatrix& x, std::span<const double> y,
                            StepDirection direction = StepDirection::both,
                            Collinearity on_collinear = Collinearity::fail,
                            std::vector<StepMove>* trace = nullptr);

std::vector<double> predict(const LinearModel& model, const FeatureMatrix& x);

struct PearsonResult {
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// Sample correlation with a two-tailed p-value from the exact t distribution
// with n-2 degrees of freedom.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

double student_t_cdf(double t, double df);

double rmse(std::span<const double> predicted, std::span<const double> actual);

struct CVResult {
  std::vector<double> fold_rmses;
  double mean_rmse = 0.0;
  int k = 0;
  std::uint64_t seed = 0;
};

using FitProcedure =
    std::function<LinearModel(const FeatureMatrix&, const std::vector<double>&)>;

// Rows are shuffled by seed and dealt round-robin into k folds; the fit
// procedure (e.g. stepwise selection) re-runs on every training split.
CVResult kfold_cv(const FeatureMatrix& x, std::span<const double> y, int k, std::uint64_t seed,
                  const FitProcedure& fit);

struct TopicCorrelationSummary {
  int n_significant = 0;
  double max_abs_r = 0.0;
  int max_abs_r_topic = -1;  // column index; -1 when no usable column
  std::vector<double> r;        // NaN for skipped zero-variance columns
  std::vector<double> p_value;  // NaN for skipped columns
  std::vector<std::string> warnings;
};

// Per-column Pearson correlation against y; zero-variance columns are
// skipped with a warning and count as not significant.
TopicCorrelationSummary significant_topic_summary(const FeatureMatrix& theta,
                                                  std::span<const double> y, double alpha_level);

void write_model_json(const LinearModel& model, std::ostream& out);

}  // namespace textscore::stats
