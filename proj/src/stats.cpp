#include "textscore/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "textscore/csv.hpp"
#include "textscore/error.hpp"
#include "textscore/rng.hpp"
#include "linalg.hpp"

namespace textscore::stats {

std::vector<double> FeatureMatrix::column(std::size_t j) const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) out[i] = at(i, j);
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t>& indices) const {
  FeatureMatrix out;
  out.column_names = column_names;
  out.row_ids.reserve(indices.size());
  out.values.reserve(indices.size() * cols());
  for (const auto i : indices) {
    out.row_ids.push_back(row_ids[i]);
    for (std::size_t j = 0; j < cols(); ++j) out.values.push_back(at(i, j));
  }
  return out;
}

void FeatureMatrix::validate() const {
  if (rows() == 0) throw DataError("feature matrix has no rows");
  if (cols() == 0) throw DataError("feature matrix has no columns");
  if (values.size() != rows() * cols()) throw DataError("feature matrix shape mismatch");
  std::unordered_set<std::string> seen;
  for (const auto& name : column_names) {
    if (name.empty()) throw DataError("feature matrix has an empty column name");
    if (!seen.insert(name).second) throw DataError("duplicate feature column: " + name);
  }
  for (const double v : values) {
    if (!std::isfinite(v)) throw DataError("feature matrix contains a non-finite value");
  }
}

FeatureMatrix FeatureMatrix::hcat(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.row_ids != b.row_ids) throw DataError("hcat: row ids differ");
  FeatureMatrix out;
  out.row_ids = a.row_ids;
  out.column_names = a.column_names;
  out.column_names.insert(out.column_names.end(), b.column_names.begin(), b.column_names.end());
  out.values.reserve(out.row_ids.size() * out.column_names.size());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out.values.push_back(a.at(i, j));
    for (std::size_t j = 0; j < b.cols(); ++j) out.values.push_back(b.at(i, j));
  }
  out.validate();
  return out;
}

FeatureMatrix read_feature_csv(std::istream& in, const std::string& source_name) {
  const auto records = csv::read_records(in, source_name);
  if (records.empty()) throw ParseError(source_name + ": empty feature CSV");
  const auto& header = records[0];
  if (header.size() < 2 || header[0] != "user_id") {
    throw ParseError(source_name + ": expected header starting with user_id");
  }
  FeatureMatrix fm;
  fm.column_names.assign(header.begin() + 1, header.end());
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& row = records[i];
    if (row.size() != header.size()) {
      throw ParseError(source_name + ": row " + std::to_string(i + 1) + ": field count mismatch");
    }
    fm.row_ids.push_back(row[0]);
    for (std::size_t j = 1; j < row.size(); ++j) {
      try {
        std::size_t pos = 0;
        fm.values.push_back(std::stod(row[j], &pos));
        if (pos != row[j].size()) throw std::invalid_argument(row[j]);
      } catch (const std::exception&) {
        throw ParseError(source_name + ": row " + std::to_string(i + 1) + ": bad number \"" +
                         row[j] + "\"");
      }
    }
  }
  fm.validate();
  return fm;
}

void write_feature_csv(const FeatureMatrix& fm, std::ostream& out) {
  std::vector<std::string> header{"user_id"};
  header.insert(header.end(), fm.column_names.begin(), fm.column_names.end());
  csv::write_row(out, header);
  for (std::size_t i = 0; i < fm.rows(); ++i) {
    std::vector<std::string> row{fm.row_ids[i]};
    for (std::size_t j = 0; j < fm.cols(); ++j) row.push_back(csv::format_double(fm.at(i, j)));
    csv::write_row(out, row);
  }
}

// ---------------------------------------------------------------------------
// regularized incomplete beta, for the exact t CDF

namespace {

double betacf(double a, double b, double x) {
  constexpr double kFpMin = 1e-300;
  constexpr double kEps = 3e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double ibeta_reg(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("student_t_cdf: df must be > 0");
  if (t == 0.0) return 0.5;
  const double x = df / (df + t * t);
  const double tail = 0.5 * ibeta_reg(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw std::invalid_argument("pearson: need length >= 3");

  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double ssx = 0.0;
  double ssy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    ssx += dx * dx;
    ssy += dy * dy;
    sxy += dx * dy;
  }
  if (ssx <= 0.0 || ssy <= 0.0) throw DataError("pearson: zero variance");

  double r = sxy / std::sqrt(ssx * ssy);
  r = std::clamp(r, -1.0, 1.0);

  // Two-tailed p for t = r*sqrt((n-2)/(1-r^2)) with df = n-2 reduces to
  // I_{1-r^2}(df/2, 1/2).
  const double df = static_cast<double>(n - 2);
  const double one_minus_r2 = 1.0 - r * r;
  const double p = one_minus_r2 <= 0.0 ? 0.0 : ibeta_reg(0.5 * df, 0.5, one_minus_r2);
  return PearsonResult{r, p, n};
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw std::invalid_argument("rmse: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("rmse: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(predicted.size()));
}

// ---------------------------------------------------------------------------
// least squares and stepwise selection

namespace {

struct DesignFit {
  linalg::Qr qr;
  std::vector<double> beta;  // design order: intercept, then selected columns
  double rss = 0.0;
};

linalg::Mat build_design(const FeatureMatrix& x, const std::vector<std::size_t>& cols) {
  linalg::Mat design(x.rows(), cols.size() + 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    design(i, 0) = 1.0;
    for (std::size_t j = 0; j < cols.size(); ++j) design(i, j + 1) = x.at(i, cols[j]);
  }
  return design;
}

// Design columns that the pivoted QR left beyond the numeric rank, mapped
// back to feature names (design column 0 is the intercept).
std::vector<std::string> dependent_columns(const linalg::Qr& qr, const FeatureMatrix& x,
                                           const std::vector<std::size_t>& cols) {
  std::vector<std::string> names;
  for (std::size_t i = qr.rank; i < qr.m; ++i) {
    const std::size_t design_col = qr.perm[i];
    if (design_col == 0) {
      names.emplace_back("intercept");
    } else {
      names.push_back(x.column_names[cols[design_col - 1]]);
    }
  }
  return names;
}

DesignFit fit_design_or_throw(const FeatureMatrix& x, std::span<const double> y,
                              const std::vector<std::size_t>& cols) {
  DesignFit fit;
  fit.qr = linalg::qr_decompose(build_design(x, cols));
  if (!fit.qr.full_rank()) {
    const auto names = dependent_columns(fit.qr, x, cols);
    throw DataError("ols_fit: rank-deficient design; dependent column: " +
                    (names.empty() ? std::string("?") : names.front()));
  }
  fit.beta = fit.qr.solve(y, &fit.rss);
  return fit;
}

// Collinearity::drop support: repeatedly removes the dependent feature
// columns until the design is full rank.
std::vector<std::size_t> prune_collinear(const FeatureMatrix& x, std::vector<std::size_t> cols) {
  for (;;) {
    const auto qr = linalg::qr_decompose(build_design(x, cols));
    if (qr.full_rank()) return cols;
    std::vector<std::size_t> drop;
    for (std::size_t i = qr.rank; i < qr.m; ++i) {
      const std::size_t design_col = qr.perm[i];
      if (design_col == 0) throw DataError("ols_fit: design matrix has a degenerate intercept");
      drop.push_back(cols[design_col - 1]);
    }
    for (const auto c : drop) {
      std::cerr << "[warn] dropping collinear feature column: " << x.column_names[c] << "\n";
      cols.erase(std::remove(cols.begin(), cols.end(), c), cols.end());
    }
    if (cols.empty()) throw DataError("ols_fit: all feature columns collinear");
  }
}

LinearModel model_from_fit(const FeatureMatrix& x, const std::vector<std::size_t>& cols,
                           const DesignFit& fit, std::size_t n) {
  LinearModel m;
  m.intercept = fit.beta[0];
  for (std::size_t j = 0; j < cols.size(); ++j) {
    m.selected_features.push_back(x.column_names[cols[j]]);
    m.coefficients[x.column_names[cols[j]]] = fit.beta[j + 1];
  }
  m.fit_stats = FitStats{fit.rss, n, cols.size()};
  return m;
}

void check_ols_inputs(const FeatureMatrix& x, std::span<const double> y) {
  x.validate();
  if (y.size() != x.rows()) throw std::invalid_argument("ols_fit: y length mismatch");
  if (x.rows() <= x.cols() + 1) {
    throw std::invalid_argument("ols_fit: need n > p + 1 observations");
  }
}

std::vector<std::size_t> all_columns(const FeatureMatrix& x) {
  std::vector<std::size_t> cols(x.cols());
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  return cols;
}

}  // namespace

LinearModel ols_fit(const FeatureMatrix& x, std::span<const double> y,
                    Collinearity on_collinear) {
  check_ols_inputs(x, y);
  auto cols = all_columns(x);
  if (on_collinear == Collinearity::drop) cols = prune_collinear(x, std::move(cols));
  const auto fit = fit_design_or_throw(x, y, cols);
  return model_from_fit(x, cols, fit, x.rows());
}

LinearModel intercept_only_fit(std::span<const double> y) {
  if (y.size() < 2) throw std::invalid_argument("intercept_only_fit: need n >= 2");
  FeatureMatrix none;
  none.row_ids.assign(y.size(), "");
  const auto fit = fit_design_or_throw(none, y, {});
  return model_from_fit(none, {}, fit, y.size());
}

double aic_from_rss(double rss, std::size_t n, std::size_t p) {
  if (rss <= 0.0) {
    std::cerr << "[warn] AIC of a perfect fit (RSS = 0); returning -inf\n";
    return -std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(n) * std::log(rss / static_cast<double>(n)) +
         2.0 * (static_cast<double>(p) + 2.0);
}

double aic(const LinearModel& model) {
  return aic_from_rss(model.fit_stats.rss, model.fit_stats.n, model.fit_stats.p);
}

LinearModel stepwise_select(const FeatureMatrix& x, std::span<const double> y,
                            StepDirection direction, Collinearity on_collinear,
                            std::vector<StepMove>* trace) {
  check_ols_inputs(x, y);
  const std::size_t n = x.rows();
  if (trace) trace->clear();

  std::vector<std::size_t> included = all_columns(x);
  if (on_collinear == Collinearity::drop) included = prune_collinear(x, std::move(included));
  DesignFit fit = fit_design_or_throw(x, y, included);
  double current_aic = aic_from_rss(fit.rss, n, included.size());

  struct Move {
    double aic_value;
    bool is_drop;
    std::size_t col;
  };
  const auto preferred = [&](const Move& a, const Move& b) {
    if (a.aic_value != b.aic_value) return a.aic_value < b.aic_value;
    if (a.is_drop != b.is_drop) return a.is_drop;
    return x.column_names[a.col] < x.column_names[b.col];
  };

  for (;;) {
    std::optional<Move> best;
    const auto consider = [&](const Move& m) {
      if (!best || preferred(m, *best)) best = m;
    };

    // Drop candidates, costed from the current fit:
    // RSS_{-j} = RSS + beta_j^2 / [(X'X)^-1]_jj.
    if (!included.empty()) {
      const auto gram_diag = fit.qr.inverse_gram_diagonal();
      for (std::size_t pos = 0; pos < included.size(); ++pos) {
        const double b = fit.beta[pos + 1];
        const double v = gram_diag[pos + 1];
        const double dropped_rss = fit.rss + b * b / v;
        consider(Move{aic_from_rss(dropped_rss, n, included.size() - 1), true, included[pos]});
      }
    }

    // Add candidates: RSS_{+a} = RSS - (x_a'r)^2 / (x_a' M x_a), where the
    // denominator is the squared norm of x_a's component outside the current
    // column space.
    if (direction == StepDirection::both && included.size() < x.cols() &&
        n > included.size() + 2) {
      std::vector<double> residual(n);
      for (std::size_t i = 0; i < n; ++i) {
        double fitted = fit.beta[0];
        for (std::size_t j = 0; j < included.size(); ++j) {
          fitted += fit.beta[j + 1] * x.at(i, included[j]);
        }
        residual[i] = y[i] - fitted;
      }
      std::vector<bool> in(x.cols(), false);
      for (const auto c : included) in[c] = true;
      for (std::size_t col = 0; col < x.cols(); ++col) {
        if (in[col]) continue;
        auto xa = x.column(col);
        double ca = 0.0;
        double saa = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          ca += xa[i] * residual[i];
          saa += xa[i] * xa[i];
        }
        fit.qr.apply_qt(xa);
        double proj = 0.0;
        for (std::size_t i = 0; i <= included.size(); ++i) proj += xa[i] * xa[i];
        const double outside = saa - proj;
        if (!(outside > 1e-10 * saa) || outside <= 0.0) continue;  // collinear add
        const double added_rss = std::max(0.0, fit.rss - ca * ca / outside);
        consider(Move{aic_from_rss(added_rss, n, included.size() + 1), false, col});
      }
    }

    if (!best || !(best->aic_value < current_aic)) break;

    auto next = included;
    if (best->is_drop) {
      next.erase(std::remove(next.begin(), next.end(), best->col), next.end());
    } else {
      next.insert(std::lower_bound(next.begin(), next.end(), best->col), best->col);
    }
    DesignFit next_fit = fit_design_or_throw(x, y, next);
    const double next_aic = aic_from_rss(next_fit.rss, n, next.size());
    if (!(next_aic < current_aic)) break;  // candidate estimate disagreed with refit

    included = std::move(next);
    fit = std::move(next_fit);
    current_aic = next_aic;
    if (trace) trace->push_back({best->is_drop, x.column_names[best->col], current_aic});
  }

  return model_from_fit(x, included, fit, n);
}

std::vector<double> predict(const LinearModel& model, const FeatureMatrix& x) {
  std::vector<std::size_t> cols;
  cols.reserve(model.selected_features.size());
  for (const auto& name : model.selected_features) {
    const auto it = std::find(x.column_names.begin(), x.column_names.end(), name);
    if (it == x.column_names.end()) throw DataError("predict: missing feature column: " + name);
    cols.push_back(static_cast<std::size_t>(it - x.column_names.begin()));
  }
  std::vector<double> preds(x.rows(), model.intercept);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const double coef = model.coefficients.at(model.selected_features[j]);
    for (std::size_t i = 0; i < x.rows(); ++i) preds[i] += coef * x.at(i, cols[j]);
  }
  return preds;
}

CVResult kfold_cv(const FeatureMatrix& x, std::span<const double> y, int k, std::uint64_t seed,
                  const FitProcedure& fit) {
  if (k < 2) throw std::invalid_argument("kfold_cv: k must be >= 2");
  if (y.size() != x.rows()) throw std::invalid_argument("kfold_cv: y length mismatch");
  const std::size_t n = x.rows();
  if (n < static_cast<std::size_t>(k)) throw DataError("kfold_cv: fewer rows than folds");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (std::size_t j = 0; j < n; ++j) folds[j % static_cast<std::size_t>(k)].push_back(order[j]);
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());

  CVResult result;
  result.k = k;
  result.seed = seed;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train_rows;
    train_rows.reserve(n - folds[f].size());
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g == f) continue;
      train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train_rows.begin(), train_rows.end());

    const FeatureMatrix x_train = x.select_rows(train_rows);
    std::vector<double> y_train;
    y_train.reserve(train_rows.size());
    for (const auto i : train_rows) y_train.push_back(y[i]);

    const LinearModel model = fit(x_train, y_train);

    const FeatureMatrix x_test = x.select_rows(folds[f]);
    std::vector<double> y_test;
    y_test.reserve(folds[f].size());
    for (const auto i : folds[f]) y_test.push_back(y[i]);

    const auto preds = predict(model, x_test);
    result.fold_rmses.push_back(rmse(preds, y_test));
  }
  result.mean_rmse = std::accumulate(result.fold_rmses.begin(), result.fold_rmses.end(), 0.0) /
                     static_cast<double>(result.fold_rmses.size());
  return result;
}

TopicCorrelationSummary significant_topic_summary(const FeatureMatrix& theta,
                                                  std::span<const double> y,
                                                  double alpha_level) {
  if (!(alpha_level > 0.0 && alpha_level < 1.0)) {
    throw std::invalid_argument("significant_topic_summary: alpha_level must be in (0,1)");
  }
  theta.validate();
  if (y.size() != theta.rows()) {
    throw std::invalid_argument("significant_topic_summary: y length mismatch");
  }

  {
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ssy = 0.0;
    for (const double v : y) ssy += (v - my) * (v - my);
    if (ssy <= 0.0) throw DataError("significant_topic_summary: score vector has zero variance");
  }

  TopicCorrelationSummary summary;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  summary.r.assign(theta.cols(), nan);
  summary.p_value.assign(theta.cols(), nan);

  for (std::size_t j = 0; j < theta.cols(); ++j) {
    const auto col = theta.column(j);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) /
                        static_cast<double>(col.size());
    double ss = 0.0;
    for (const double v : col) ss += (v - mean) * (v - mean);
    if (ss <= 0.0) {
      summary.warnings.push_back("column " + theta.column_names[j] +
                                 " has zero variance; skipped");
      continue;
    }
    const auto pr = pearson(col, y);
    summary.r[j] = pr.r;
    summary.p_value[j] = pr.p_value;
    if (pr.p_value < alpha_level) ++summary.n_significant;
    if (std::abs(pr.r) > summary.max_abs_r) {
      summary.max_abs_r = std::abs(pr.r);
      summary.max_abs_r_topic = static_cast<int>(j);
    }
  }
  return summary;
}

void write_model_json(const LinearModel& model, std::ostream& out) {
  nlohmann::json j;
  j["intercept"] = model.intercept;
  j["coefficients"] = model.coefficients;
  j["selected_features"] = model.selected_features;
  j["fit_stats"] = {{"rss", model.fit_stats.rss},
                    {"n", model.fit_stats.n},
                    {"p", model.fit_stats.p}};
  out << j.dump(2) << '\n';
}

}  // namespace textscore::stats
