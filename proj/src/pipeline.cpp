#include "textscore/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "textscore/csv.hpp"
#include "textscore/error.hpp"
#include "textscore/rng.hpp"

namespace textscore::pipeline {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

bool has_feature_set(const ExperimentConfig& c, std::string_view name) {
  return std::find(c.feature_sets.begin(), c.feature_sets.end(), name) != c.feature_sets.end();
}

bool wants_liwc(const ExperimentConfig& c) {
  return has_feature_set(c, "liwc") || has_feature_set(c, "liwc+trained") ||
         has_feature_set(c, "liwc+inferred");
}

bool wants_trained(const ExperimentConfig& c) {
  return has_feature_set(c, "trained") || has_feature_set(c, "liwc+trained");
}

bool wants_inferred(const ExperimentConfig& c) {
  return has_feature_set(c, "inferred") || has_feature_set(c, "liwc+inferred");
}

void log_info(const std::string& msg) { std::cerr << "[info] " << msg << "\n"; }

}  // namespace

std::string corpus_signature(const corpus::Corpus& corpus) {
  std::string buf;
  for (const auto& doc : corpus.documents) {
    buf += doc.user_id;
    buf += '\x1f';
    for (const auto& tok : doc.tokens) {
      buf += tok;
      buf += '\x1e';
    }
    buf += std::to_string(doc.raw_byte_length);
    if (doc.score.has_value()) {
      buf += '\x1d';
      buf += csv::format_double(*doc.score);
    }
    buf += '\n';
  }
  return hex64(fnv1a64(buf));
}

std::string config_hash(const ExperimentConfig& c) {
  std::ostringstream s;
  s << c.corpus_path << '|' << c.scores_path << '|' << c.pretrain_corpus_path << '|'
    << c.model_path << '|' << c.lexicon_path << '|'
    << (c.segmenter.mode == corpus::SegmenterMode::max_match ? "max_match" : "pre_segmented")
    << '|' << c.segmenter.dictionary_path << '|' << c.segmenter.stopword_path << '|'
    << c.clean.keep_hashtag_text << '|' << c.min_user_bytes << '|';
  for (const int k : c.k_list) s << k << ',';
  s << '|';
  for (const auto& f : c.feature_sets) s << f << ',';
  s << '|' << c.cv_k << '|' << c.seed << '|' << c.train_iterations << '|' << c.infer_iterations
    << '|' << c.infer_burn_in << '|' << c.alpha << '|' << c.beta << '|' << c.min_doc_freq << '|'
    << c.significance_level << '|' << c.auto_drop_collinear;
  return hex64(fnv1a64(s.str()));
}

void validate(const ExperimentConfig& c) {
  if (c.corpus_path.empty()) throw ConfigError("config: corpus path is required");
  if (c.output_dir.empty()) throw ConfigError("config: output_dir is required");
  if (c.feature_sets.empty()) throw ConfigError("config: feature_sets is empty");

  std::set<std::string> seen;
  for (const auto& f : c.feature_sets) {
    const bool known =
        std::find_if(std::begin(kFeatureSets), std::end(kFeatureSets),
                     [&](const char* s) { return f == s; }) != std::end(kFeatureSets);
    if (!known) {
      throw ConfigError("config: unknown feature set \"" + f +
                        "\" (valid: liwc, trained, inferred, liwc+trained, liwc+inferred)");
    }
    if (!seen.insert(f).second) throw ConfigError("config: duplicate feature set \"" + f + "\"");
  }

  const bool topics = wants_trained(c) || wants_inferred(c);
  if (topics && c.k_list.empty()) {
    throw ConfigError("config: k_list must be non-empty when topic feature sets are requested");
  }
  std::set<int> ks;
  for (const int k : c.k_list) {
    if (k < 1) throw ConfigError("config: k_list entries must be >= 1");
    if (topics && k < 2) {
      throw ConfigError(
          "config: topic feature sets need K >= 2 (a single-topic theta is constant)");
    }
    if (!ks.insert(k).second) throw ConfigError("config: duplicate K " + std::to_string(k));
  }
  if (wants_liwc(c) && c.lexicon_path.empty()) {
    throw ConfigError("config: liwc feature sets require a lexicon path");
  }
  if (wants_inferred(c) && c.pretrain_corpus_path.empty() && c.model_path.empty()) {
    throw ConfigError("config: inferred feature sets require a pre-training corpus or model path");
  }
  if (c.cv_k < 2) throw ConfigError("config: cv_k must be >= 2");
  if (c.train_iterations < 1) throw ConfigError("config: train_iterations must be >= 1");
  if (c.infer_burn_in < 0 || c.infer_iterations <= c.infer_burn_in) {
    throw ConfigError("config: need infer_iterations > infer_burn_in >= 0");
  }
  if (c.beta <= 0.0) throw ConfigError("config: beta must be > 0");
  if (c.min_doc_freq < 1) throw ConfigError("config: min_doc_freq must be >= 1");
  if (!(c.significance_level > 0.0 && c.significance_level < 1.0)) {
    throw ConfigError("config: significance_level must be in (0,1)");
  }
}

corpus::Corpus load_any_corpus(const std::string& path, const corpus::SegmenterConfig& seg,
                               const corpus::CleanOptions& clean) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    line.clear();
  }
  if (line.empty()) throw ParseError(path + ": empty corpus file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ":1: " + e.what());
  }
  in.close();
  if (j.contains("tokens")) return corpus::load_corpus_jsonl(path);
  if (j.contains("text")) {
    const auto messages = corpus::load_messages_jsonl(path);
    const auto segmenter = corpus::Segmenter::from_config(seg);
    auto agg = corpus::aggregate_users(messages, segmenter, clean);
    agg.provenance = "ingested from " + path + "; " + agg.provenance;
    return agg;
  }
  throw ParseError(path + ": lines carry neither \"tokens\" nor \"text\"");
}

stats::FeatureMatrix liwc_features(const corpus::Corpus& corpus, const lexicon::Lexicon& lex,
                                   const std::string& column_prefix) {
  stats::FeatureMatrix fm;
  for (const auto& [id, name] : lex.categories) fm.column_names.push_back(column_prefix + name);
  fm.values.reserve(corpus.documents.size() * fm.column_names.size());
  for (const auto& doc : corpus.documents) {
    fm.row_ids.push_back(doc.user_id);
    const auto fv = lexicon::extract_features(doc, lex);
    for (const auto& [id, name] : lex.categories) fm.values.push_back(fv.values.at(name));
  }
  fm.validate();
  return fm;
}

stats::FeatureMatrix theta_features(const std::vector<lda::DocTopicDistribution>& thetas) {
  stats::FeatureMatrix fm;
  const std::size_t k = thetas.empty() ? 0 : thetas.front().theta.size();
  for (std::size_t j = 0; j < k; ++j) fm.column_names.push_back("topic_" + std::to_string(j));
  for (const auto& dt : thetas) {
    fm.row_ids.push_back(dt.user_id);
    fm.values.insert(fm.values.end(), dt.theta.begin(), dt.theta.end());
  }
  fm.validate();
  return fm;
}

// ---------------------------------------------------------------------------
// report I/O

namespace {

std::string join_semicolon(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ';';
    out += items[i];
  }
  return out;
}

std::vector<std::string> split_semicolon(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == ';') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

const std::vector<std::string> kReportHeader = {
    "feature_set", "K", "mean_rmse", "n_significant_topics", "max_abs_r", "selected_features"};

std::vector<std::string> report_row_fields(const EvalRow& row) {
  return {row.feature_set,
          row.k ? std::to_string(*row.k) : "",
          csv::format_double(row.mean_rmse),
          row.n_significant_topics ? std::to_string(*row.n_significant_topics) : "",
          row.max_abs_r ? csv::format_double(*row.max_abs_r) : "",
          join_semicolon(row.selected_features)};
}

}  // namespace

void write_report_csv(const EvalReport& report, std::ostream& out) {
  csv::write_row(out, kReportHeader);
  for (const auto& row : report.rows) csv::write_row(out, report_row_fields(row));
}

EvalReport read_report_csv(std::istream& in, const std::string& source_name) {
  const auto records = csv::read_records(in, source_name);
  if (records.empty() || records[0] != kReportHeader) {
    throw ParseError(source_name + ": not a report.csv (unexpected header)");
  }
  EvalReport report;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.size() != kReportHeader.size()) {
      throw ParseError(source_name + ": row " + std::to_string(i + 1) + ": field count mismatch");
    }
    EvalRow row;
    row.feature_set = rec[0];
    if (!rec[1].empty()) row.k = std::stoi(rec[1]);
    row.mean_rmse = std::stod(rec[2]);
    if (!rec[3].empty()) row.n_significant_topics = std::stoi(rec[3]);
    if (!rec[4].empty()) row.max_abs_r = std::stod(rec[4]);
    row.selected_features = split_semicolon(rec[5]);
    report.rows.push_back(std::move(row));
  }
  return report;
}

void emit_figures(const EvalReport& report, const std::string& out_dir) {
  const auto emit = [&](const std::string& file, const std::vector<std::string>& header,
                        auto&& row_maker) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : report.rows) {
      if (auto fields = row_maker(row)) rows.push_back(std::move(*fields));
    }
    const auto path = fs::path(out_dir) / file;
    if (rows.empty()) {
      log_info("no applicable rows; omitting " + path.string());
      return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    csv::write_row(out, header);
    for (const auto& fields : rows) csv::write_row(out, fields);
  };

  emit("rmse_vs_k.csv", {"feature_set", "K", "mean_rmse"},
       [](const EvalRow& r) -> std::optional<std::vector<std::string>> {
         if (!r.k) return std::nullopt;
         return std::vector<std::string>{r.feature_set, std::to_string(*r.k),
                                         csv::format_double(r.mean_rmse)};
       });
  emit("sig_topics_vs_k.csv", {"feature_set", "K", "n_significant_topics"},
       [](const EvalRow& r) -> std::optional<std::vector<std::string>> {
         if (!r.k || !r.n_significant_topics) return std::nullopt;
         return std::vector<std::string>{r.feature_set, std::to_string(*r.k),
                                         std::to_string(*r.n_significant_topics)};
       });
  emit("max_r_vs_k.csv", {"feature_set", "K", "max_abs_r"},
       [](const EvalRow& r) -> std::optional<std::vector<std::string>> {
         if (!r.k || !r.max_abs_r) return std::nullopt;
         return std::vector<std::string>{r.feature_set, std::to_string(*r.k),
                                         csv::format_double(*r.max_abs_r)};
       });
}

// ---------------------------------------------------------------------------
// synthetic corpus

corpus::Corpus make_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed,
                                     std::vector<double>* planted_theta) {
  if (spec.n_users < 1 || spec.n_topics < 1 || spec.words_per_topic < 1 || spec.doc_length < 1) {
    throw ConfigError("synthetic spec: sizes must be >= 1");
  }
  if (spec.planted_topic < 0 || spec.planted_topic >= spec.n_topics) {
    throw ConfigError("synthetic spec: planted_topic out of range");
  }
  if (spec.noise_sd < 0.0 || spec.doc_topic_concentration <= 0.0) {
    throw ConfigError("synthetic spec: bad noise_sd or concentration");
  }

  Rng rng(seed);
  if (planted_theta) planted_theta->clear();

  int width = 1;
  for (int v = spec.n_users - 1; v >= 10; v /= 10) ++width;

  corpus::Corpus out;
  out.documents.reserve(spec.n_users);
  for (int u = 0; u < spec.n_users; ++u) {
    const auto theta = rng.dirichlet_symmetric(spec.n_topics, spec.doc_topic_concentration);

    corpus::UserDocument doc;
    std::string id = std::to_string(u);
    doc.user_id = "u" + std::string(width - static_cast<int>(id.size()), '0') + id;
    doc.tokens.reserve(spec.doc_length);
    for (int t = 0; t < spec.doc_length; ++t) {
      const double r = rng.uniform01();
      int z = spec.n_topics - 1;
      double cum = 0.0;
      for (int k = 0; k < spec.n_topics; ++k) {
        cum += theta[k];
        if (r < cum) {
          z = k;
          break;
        }
      }
      const int w = static_cast<int>(rng.uniform_int(spec.words_per_topic));
      doc.tokens.push_back("t" + std::to_string(z) + "w" + std::to_string(w));
    }
    for (const auto& tok : doc.tokens) doc.raw_byte_length += tok.size() + 1;

    doc.score = spec.score_intercept + spec.score_slope * theta[spec.planted_topic] +
                rng.normal(0.0, spec.noise_sd);
    if (planted_theta) planted_theta->push_back(theta[spec.planted_topic]);
    out.documents.push_back(std::move(doc));
  }

  std::ostringstream prov;
  prov << "synthetic corpus (users=" << spec.n_users << ", topics=" << spec.n_topics
       << ", words_per_topic=" << spec.words_per_topic << ", doc_length=" << spec.doc_length
       << ", seed=" << seed << ")";
  out.provenance = prov.str();
  return out;
}

// ---------------------------------------------------------------------------
// experiment grid

namespace {

struct TopicArtifacts {
  lda::TopicModel model;
  std::vector<lda::DocTopicDistribution> thetas;  // in target corpus order
};

std::vector<lda::DocTopicDistribution> read_theta_csv_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  const auto fm = stats::read_feature_csv(in, path.string());
  std::vector<lda::DocTopicDistribution> out;
  out.reserve(fm.rows());
  for (std::size_t i = 0; i < fm.rows(); ++i) {
    lda::DocTopicDistribution dt;
    dt.user_id = fm.row_ids[i];
    dt.theta.resize(fm.cols());
    for (std::size_t j = 0; j < fm.cols(); ++j) dt.theta[j] = fm.at(i, j);
    out.push_back(std::move(dt));
  }
  return out;
}

void write_theta_csv_file(const std::vector<lda::DocTopicDistribution>& thetas,
                          const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  lda::write_theta_csv(thetas, out);
}

bool theta_matches_corpus(const std::vector<lda::DocTopicDistribution>& thetas,
                          const corpus::Corpus& corpus) {
  if (thetas.size() != corpus.documents.size()) return false;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (thetas[i].user_id != corpus.documents[i].user_id) return false;
  }
  return true;
}

// Trains on `training` and, when the cache already holds this exact
// configuration, reloads instead. theta rows are cached alongside the model.
TopicArtifacts train_with_cache(const corpus::Corpus& training, int K,
                                const ExperimentConfig& config, const fs::path& cache_dir,
                                const std::string& role) {
  lda::TrainParams params;
  params.K = K;
  params.alpha = config.alpha;
  params.beta = config.beta;
  params.iterations = config.train_iterations;
  params.seed = config.seed;

  std::ostringstream key;
  key << role << '|' << corpus_signature(training) << '|' << K << '|' << config.alpha << '|'
      << config.beta << '|' << config.train_iterations << '|' << config.seed << '|'
      << config.min_doc_freq;
  const std::string tag = hex64(fnv1a64(key.str()));
  const fs::path model_path = cache_dir / (role + "_K" + std::to_string(K) + "_" + tag + ".model.json");
  const fs::path theta_path = cache_dir / (role + "_K" + std::to_string(K) + "_" + tag + ".theta.csv");

  if (fs::exists(model_path) && fs::exists(theta_path)) {
    try {
      TopicArtifacts art;
      art.model = lda::load_model(model_path.string());
      art.thetas = read_theta_csv_file(theta_path);
      if (art.model.K == K && theta_matches_corpus(art.thetas, training)) {
        log_info("cache hit: " + model_path.string());
        return art;
      }
    } catch (const std::exception& e) {
      log_info("cache unusable (" + std::string(e.what()) + "); retraining");
    }
  }

  const auto vocab = lda::build_vocabulary(training, config.min_doc_freq);
  auto result = lda::train(training, vocab, params);
  TopicArtifacts art{std::move(result.model), std::move(result.thetas)};
  lda::save_model(art.model, model_path.string());
  write_theta_csv_file(art.thetas, theta_path);
  return art;
}

std::vector<lda::DocTopicDistribution> infer_with_cache(const lda::TopicModel& model,
                                                        const std::string& model_tag,
                                                        const corpus::Corpus& target,
                                                        const ExperimentConfig& config,
                                                        const fs::path& cache_dir) {
  std::ostringstream key;
  key << "infer|" << model_tag << '|' << corpus_signature(target) << '|'
      << config.infer_iterations << '|' << config.infer_burn_in << '|' << config.seed;
  const std::string tag = hex64(fnv1a64(key.str()));
  const fs::path theta_path =
      cache_dir / ("inferred_K" + std::to_string(model.K) + "_" + tag + ".theta.csv");

  if (fs::exists(theta_path)) {
    try {
      auto thetas = read_theta_csv_file(theta_path);
      if (theta_matches_corpus(thetas, target)) {
        log_info("cache hit: " + theta_path.string());
        return thetas;
      }
    } catch (const std::exception& e) {
      log_info("cache unusable (" + std::string(e.what()) + "); re-inferring");
    }
  }

  std::vector<lda::DocTopicDistribution> thetas;
  thetas.reserve(target.documents.size());
  for (std::size_t d = 0; d < target.documents.size(); ++d) {
    lda::InferParams ip;
    ip.iterations = config.infer_iterations;
    ip.burn_in = config.infer_burn_in;
    ip.seed = config.seed + d;
    thetas.push_back(lda::infer(model, target.documents[d], ip));
  }
  write_theta_csv_file(thetas, theta_path);
  return thetas;
}

std::string cell_name(const std::string& feature_set, std::optional<int> k) {
  return k ? feature_set + "_K" + std::to_string(*k) : feature_set;
}

// Theta columns sum to one, which makes the full set exactly collinear with
// the intercept; regressions use the first K-1 columns.
stats::FeatureMatrix regression_view(const stats::FeatureMatrix& theta) {
  stats::FeatureMatrix out;
  out.row_ids = theta.row_ids;
  const std::size_t keep = theta.cols() - 1;
  out.column_names.assign(theta.column_names.begin(), theta.column_names.begin() + keep);
  out.values.reserve(theta.rows() * keep);
  for (std::size_t i = 0; i < theta.rows(); ++i) {
    for (std::size_t j = 0; j < keep; ++j) out.values.push_back(theta.at(i, j));
  }
  return out;
}

}  // namespace

EvalReport run_experiment(const ExperimentConfig& config) {
  validate(config);

  const fs::path out_dir(config.output_dir);
  const fs::path cells_dir = out_dir / "cells";
  const fs::path topics_dir = out_dir / "topics";
  const fs::path cache_dir = out_dir / "cache";
  fs::create_directories(cells_dir);
  fs::create_directories(topics_dir);
  fs::create_directories(cache_dir);

  // target corpus, scored and filtered
  corpus::Corpus target = load_any_corpus(config.corpus_path, config.segmenter, config.clean);
  if (!config.scores_path.empty()) {
    const auto scores = corpus::load_scores_csv(config.scores_path);
    const auto attached = corpus::attach_scores(target, scores);
    log_info("attached scores to " + std::to_string(attached) + " of " +
             std::to_string(target.documents.size()) + " users");
  }
  target = corpus::filter_users(target, config.min_user_bytes, /*require_score=*/true);
  if (target.documents.size() < static_cast<std::size_t>(config.cv_k)) {
    throw ConfigError("config: corpus has " + std::to_string(target.documents.size()) +
                      " scored users, fewer than cv_k=" + std::to_string(config.cv_k));
  }
  log_info("target corpus: " + std::to_string(target.documents.size()) + " users");

  std::vector<double> y;
  y.reserve(target.documents.size());
  for (const auto& doc : target.documents) y.push_back(*doc.score);

  EvalReport report;
  report.seed = config.seed;
  report.cv_k = config.cv_k;
  report.config_hash = config_hash(config);
  report.corpus_provenance = target.provenance;

  // Intercept-only baseline: CV RMSE of predicting every user with the
  // training-fold mean score.
  stats::FeatureMatrix score_rows;
  score_rows.row_ids.reserve(target.documents.size());
  score_rows.column_names = {"unused"};
  for (const auto& doc : target.documents) {
    score_rows.row_ids.push_back(doc.user_id);
    score_rows.values.push_back(0.0);
  }
  const auto baseline_cv =
      stats::kfold_cv(score_rows, y, config.cv_k, config.seed,
                      [](const stats::FeatureMatrix&, const std::vector<double>& yt) {
                        return stats::intercept_only_fit(yt);
                      });
  log_info("intercept-only baseline: cv_rmse=" + csv::format_double(baseline_cv.mean_rmse));

  // LIWC features
  std::optional<stats::FeatureMatrix> liwc;
  std::optional<std::pair<std::string, double>> best_single_liwc;
  if (wants_liwc(config)) {
    const auto lex = lexicon::load_lexicon(config.lexicon_path);
    liwc = liwc_features(target, lex, "liwc_");
    std::ofstream out(out_dir / "liwc_features.csv");
    stats::write_feature_csv(*liwc, out);

    // Best-single-feature baseline over the lexicon categories.
    for (std::size_t j = 0; j < liwc->cols(); ++j) {
      stats::FeatureMatrix single;
      single.row_ids = liwc->row_ids;
      single.column_names = {liwc->column_names[j]};
      single.values = liwc->column(j);
      double variance = 0.0;
      const auto col = single.values;
      const double mean = std::accumulate(col.begin(), col.end(), 0.0) / col.size();
      for (const double v : col) variance += (v - mean) * (v - mean);
      if (variance <= 0.0) continue;  // constant category on this corpus
      const auto cv = stats::kfold_cv(single, y, config.cv_k, config.seed,
                                      [](const stats::FeatureMatrix& xt,
                                         const std::vector<double>& yt) {
                                        return stats::ols_fit(xt, yt);
                                      });
      if (!best_single_liwc || cv.mean_rmse < best_single_liwc->second) {
        best_single_liwc = {liwc->column_names[j], cv.mean_rmse};
      }
    }
    if (best_single_liwc) {
      log_info("best single LIWC feature: " + best_single_liwc->first +
               " cv_rmse=" + csv::format_double(best_single_liwc->second));
    }
  }

  // topic features per K
  std::map<int, stats::FeatureMatrix> trained_theta;
  std::map<int, stats::FeatureMatrix> inferred_theta;

  if (wants_trained(config)) {
    for (const int k : config.k_list) {
      try {
        auto art = train_with_cache(target, k, config, cache_dir, "trained");
        lda::save_model(art.model,
                        (topics_dir / ("trained_K" + std::to_string(k) + ".model.json")).string());
        write_theta_csv_file(art.thetas,
                             topics_dir / ("trained_K" + std::to_string(k) + ".theta.csv"));
        trained_theta.emplace(k, theta_features(art.thetas));
      } catch (const std::exception& e) {
        throw std::runtime_error("(feature_set=trained, K=" + std::to_string(k) + "): " + e.what());
      }
    }
  }

  if (wants_inferred(config)) {
    std::optional<corpus::Corpus> pretrain;
    if (!config.pretrain_corpus_path.empty()) {
      pretrain = load_any_corpus(config.pretrain_corpus_path, config.segmenter, config.clean);
      log_info("pre-training corpus: " + std::to_string(pretrain->documents.size()) + " users");
    }
    for (const int k : config.k_list) {
      try {
        lda::TopicModel model;
        std::string model_tag;
        if (pretrain) {
          auto art = train_with_cache(*pretrain, k, config, cache_dir, "pretrain");
          model = std::move(art.model);
          model_tag = "pretrain_K" + std::to_string(k);
          lda::save_model(model,
                          (topics_dir / ("pretrain_K" + std::to_string(k) + ".model.json")).string());
        } else {
          model = lda::load_model(config.model_path);
          if (model.K != k) {
            throw ConfigError("model " + config.model_path + " has K=" +
                              std::to_string(model.K) + ", config requests K=" + std::to_string(k));
          }
          model_tag = "file:" + config.model_path;
        }
        auto thetas = infer_with_cache(model, model_tag, target, config, cache_dir);
        write_theta_csv_file(thetas,
                             topics_dir / ("inferred_K" + std::to_string(k) + ".theta.csv"));
        inferred_theta.emplace(k, theta_features(thetas));
      } catch (const std::exception& e) {
        throw std::runtime_error("(feature_set=inferred, K=" + std::to_string(k) + "): " +
                                 e.what());
      }
    }
  }

  // grid evaluation, report rows streamed as they complete
  std::ofstream report_out(out_dir / "report.csv");
  if (!report_out) throw ConfigError("cannot write " + (out_dir / "report.csv").string());
  csv::write_row(report_out, kReportHeader);
  report_out.flush();

  const auto collinearity =
      config.auto_drop_collinear ? stats::Collinearity::drop : stats::Collinearity::fail;
  const stats::FitProcedure fit_procedure = [collinearity](const stats::FeatureMatrix& xt,
                                                           const std::vector<double>& yt) {
    return stats::stepwise_select(xt, yt, stats::StepDirection::both, collinearity);
  };

  const auto evaluate_cell = [&](const std::string& feature_set, std::optional<int> k,
                                 const stats::FeatureMatrix& x,
                                 const stats::FeatureMatrix* theta_block) {
    EvalRow row;
    row.feature_set = feature_set;
    row.k = k;

    const auto cv = stats::kfold_cv(x, y, config.cv_k, config.seed, fit_procedure);
    row.mean_rmse = cv.mean_rmse;
    row.fold_rmses = cv.fold_rmses;

    if (theta_block != nullptr) {
      const auto summary =
          stats::significant_topic_summary(*theta_block, y, config.significance_level);
      for (const auto& w : summary.warnings) log_info(cell_name(feature_set, k) + ": " + w);
      row.n_significant_topics = summary.n_significant;
      row.max_abs_r = summary.max_abs_r;
    }

    const auto full_model = fit_procedure(x, y);
    row.selected_features = full_model.selected_features;

    const fs::path cell_dir = cells_dir / cell_name(feature_set, k);
    fs::create_directories(cell_dir);
    {
      std::ofstream out(cell_dir / "model.json");
      stats::write_model_json(full_model, out);
    }
    {
      std::ofstream out(cell_dir / "selected_features.txt");
      for (const auto& f : row.selected_features) out << f << '\n';
    }
    {
      nlohmann::json j;
      j["fold_rmses"] = row.fold_rmses;
      j["mean_rmse"] = row.mean_rmse;
      j["k_folds"] = config.cv_k;
      j["seed"] = config.seed;
      std::ofstream out(cell_dir / "cv.json");
      out << j.dump(2) << '\n';
    }

    csv::write_row(report_out, report_row_fields(row));
    report_out.flush();
    report.rows.push_back(std::move(row));
    log_info("cell " + cell_name(feature_set, k) + ": mean_rmse=" +
             csv::format_double(report.rows.back().mean_rmse));
  };

  const auto run_cell = [&](const std::string& feature_set, std::optional<int> k,
                            const stats::FeatureMatrix& x, const stats::FeatureMatrix* theta) {
    try {
      evaluate_cell(feature_set, k, x, theta);
    } catch (const std::exception& e) {
      throw std::runtime_error("(feature_set=" + feature_set +
                               (k ? ", K=" + std::to_string(*k) : std::string()) +
                               "): " + e.what());
    }
  };

  for (const auto& feature_set : config.feature_sets) {
    if (feature_set == "liwc") {
      run_cell(feature_set, std::nullopt, *liwc, nullptr);
      continue;
    }
    for (const int k : config.k_list) {
      const bool inferred = feature_set == "inferred" || feature_set == "liwc+inferred";
      const auto& theta = inferred ? inferred_theta.at(k) : trained_theta.at(k);
      const auto design = regression_view(theta);
      if (feature_set == "trained" || feature_set == "inferred") {
        run_cell(feature_set, k, design, &theta);
      } else {
        run_cell(feature_set, k, stats::FeatureMatrix::hcat(*liwc, design), &theta);
      }
    }
  }

  // metadata + figure CSVs
  {
    nlohmann::json meta;
    meta["config_hash"] = report.config_hash;
    meta["seed"] = report.seed;
    meta["cv_k"] = report.cv_k;
    meta["corpus_provenance"] = report.corpus_provenance;
    meta["corpus_signature"] = corpus_signature(target);
    meta["baseline_intercept_only_cv_rmse"] = baseline_cv.mean_rmse;
    if (best_single_liwc) {
      meta["baseline_best_single_liwc"] = {{"feature", best_single_liwc->first},
                                           {"cv_rmse", best_single_liwc->second}};
    }
    std::ofstream out(out_dir / "report_meta.json");
    out << meta.dump(2) << '\n';
  }
  emit_figures(report, config.output_dir);
  return report;
}

}  // namespace textscore::pipeline
