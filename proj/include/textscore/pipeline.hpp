#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "textscore/corpus.hpp"
#include "textscore/lda.hpp"
#include "textscore/lexicon.hpp"
#include "textscore/stats.hpp"

namespace textscore::pipeline {

// Valid feature_sets entries.
inline constexpr const char* kFeatureSets[] = {"liwc", "trained", "inferred", "liwc+trained",
                                               "liwc+inferred"};

struct ExperimentConfig {
  std::string corpus_path;           // raw messages or cached corpus (format sniffed)
  std::string scores_path;           // optional when the corpus carries scores
  std::string pretrain_corpus_path;  // for the inferred strategy
  std::string model_path;            // alternative to pretrain_corpus_path (single K)
  std::string lexicon_path;

  corpus::SegmenterConfig segmenter;  // used only when ingesting raw messages
  corpus::CleanOptions clean;
  std::uint64_t min_user_bytes = 0;

  std::vector<int> k_list;
  std::vector<std::string> feature_sets;
  int cv_k = 10;
  std::uint64_t seed = 42;

  int train_iterations = 1000;
  int infer_iterations = 100;
  int infer_burn_in = 50;
  double alpha = 0.0;  // <= 0 selects 5.0 / K
  double beta = 0.01;
  int min_doc_freq = 1;
  double significance_level = 0.01;
  bool auto_drop_collinear = false;

  std::string output_dir;
};

// Throws ConfigError when the grid cannot be run as requested.
void validate(const ExperimentConfig& config);

struct EvalRow {
  std::string feature_set;
  std::optional<int> k;
  double mean_rmse = 0.0;
  std::optional<int> n_significant_topics;  // over the row's topic columns
  std::optional<double> max_abs_r;
  std::vector<std::string> selected_features;  // stepwise selection on the full data
  std::vector<double> fold_rmses;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::uint64_t seed = 0;
  int cv_k = 0;
  std::string config_hash;
  std::string corpus_provenance;
};

// Runs the full grid: per K, trains on the target corpus and/or trains on the
// pre-training corpus and infers the target documents; evaluates each
// requested feature set by k-fold CV with per-fold stepwise selection; writes
// report.csv (flushed row by row), per-cell artifacts and the figure CSVs
// under config.output_dir. Topic models see tokens only, never scores.
EvalReport run_experiment(const ExperimentConfig& config);

void write_report_csv(const EvalReport& report, std::ostream& out);
EvalReport read_report_csv(std::istream& in, const std::string& source_name);

// Plot-data CSVs: rmse_vs_k, sig_topics_vs_k, max_r_vs_k. Files without any
// applicable row are omitted with a log line.
void emit_figures(const EvalReport& report, const std::string& out_dir);

struct SyntheticSpec {
  int n_users = 500;
  int n_topics = 5;
  int words_per_topic = 20;
  int doc_length = 200;
  int planted_topic = 0;
  double score_intercept = 20.0;
  double score_slope = 8.0;
  double noise_sd = 2.0;
  double doc_topic_concentration = 1.0;  // symmetric Dirichlet over doc mixtures
};

// Documents drawn from disjoint per-topic vocabularies ("t<k>w<i>"), with
// score = intercept + slope * theta[planted_topic] + N(0, noise_sd). When
// planted_theta is given it receives each user's true planted proportion.
corpus::Corpus make_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed,
                                     std::vector<double>* planted_theta = nullptr);

// Loads a cached corpus or ingests raw messages, deciding by the first line.
corpus::Corpus load_any_corpus(const std::string& path, const corpus::SegmenterConfig& seg,
                               const corpus::CleanOptions& clean);

stats::FeatureMatrix liwc_features(const corpus::Corpus& corpus, const lexicon::Lexicon& lex,
                                   const std::string& column_prefix);
stats::FeatureMatrix theta_features(const std::vector<lda::DocTopicDistribution>& thetas);

std::uint64_t fnv1a64(std::string_view data);
std::string corpus_signature(const corpus::Corpus& corpus);
std::string config_hash(const ExperimentConfig& config);

}  // namespace textscore::pipeline
