// textscore: psycholinguistic feature extraction and score-prediction
// pipeline over per-user microblog text.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "textscore/corpus.hpp"
#include "textscore/csv.hpp"
#include "textscore/error.hpp"
#include "textscore/lda.hpp"
#include "textscore/lexicon.hpp"
#include "textscore/pipeline.hpp"
#include "textscore/stats.hpp"

namespace fs = std::filesystem;
using namespace textscore;

namespace {

corpus::SegmenterMode parse_mode(const std::string& mode) {
  if (mode == "pre_segmented") return corpus::SegmenterMode::pre_segmented;
  if (mode == "max_match") return corpus::SegmenterMode::max_match;
  throw ConfigError("unknown segmenter mode \"" + mode + "\" (pre_segmented | max_match)");
}

void result_line(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::cout << "RESULT";
  for (const auto& [key, value] : kv) std::cout << ' ' << key << '=' << value;
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psycholinguistic features and score prediction for user-level text"};
  app.require_subcommand(1);
  // One config file for all subcommands, sectioned by subcommand name
  // ([experiment], [ingest], [topics.train], ...). Command-line flags take
  // precedence over file values; unknown keys are errors. Subcommands fall
  // through unmatched options, so `textscore experiment --config f` works.
  app.set_config("--config", "", "TOML config file with one section per subcommand");
  app.allow_config_extras(CLI::config_extras_mode::error);

  // ---- ingest ----------------------------------------------------------
  struct {
    std::string messages, scores, dict, stopwords, output, high_risk_out;
    std::string mode = "pre_segmented";
    std::uint64_t min_bytes = 0;
    bool require_score = false;
    bool keep_hashtag_text = false;
    std::uint64_t seed = 42;
  } ing;
  auto* ingest = app.add_subcommand("ingest", "raw messages -> cleaned, segmented user corpus");
  ingest->add_option("--messages", ing.messages, "JSON-lines of {user_id, text}")->required();
  ingest->add_option("--output", ing.output, "output corpus JSON-lines")->required();
  ingest->add_option("--scores", ing.scores, "CSV user_id,score to attach");
  ingest->add_option("--mode", ing.mode, "pre_segmented | max_match");
  ingest->add_option("--dict", ing.dict, "segmentation dictionary (one word per line)");
  ingest->add_option("--stopwords", ing.stopwords, "stopword list (one word per line)");
  ingest->add_option("--min-bytes", ing.min_bytes, "drop users with less cleaned text than this");
  ingest->add_flag("--require-score", ing.require_score, "drop users without a score");
  ingest->add_flag("--keep-hashtag-text", ing.keep_hashtag_text, "keep text inside #...# tags");
  ingest->add_option("--emit-high-risk", ing.high_risk_out,
                     "also write the high-risk subset (score > mean + sd) here");
  ingest->add_option("--seed", ing.seed, "unused; accepted for interface uniformity");
  ingest->callback([&] {
    corpus::SegmenterConfig seg{parse_mode(ing.mode), ing.dict, ing.stopwords};
    const corpus::CleanOptions clean{ing.keep_hashtag_text};
    const auto messages = corpus::load_messages_jsonl(ing.messages);
    const auto segmenter = corpus::Segmenter::from_config(seg);
    auto corp = corpus::aggregate_users(messages, segmenter, clean);
    std::size_t attached = 0;
    if (!ing.scores.empty()) attached = corpus::attach_scores(corp, corpus::load_scores_csv(ing.scores));
    corp = corpus::filter_users(corp, ing.min_bytes, ing.require_score);
    corpus::save_corpus_jsonl(corp, ing.output);
    if (!ing.high_risk_out.empty()) {
      corpus::save_corpus_jsonl(corpus::high_risk_subset(corp), ing.high_risk_out);
    }
    result_line({{"cmd", "ingest"},
                 {"messages", std::to_string(messages.size())},
                 {"users", std::to_string(corp.documents.size())},
                 {"scored", std::to_string(attached)},
                 {"output", ing.output}});
  });

  // ---- features liwc ---------------------------------------------------
  struct {
    std::string corpus, lexicon, output;
    std::uint64_t seed = 42;
  } feat;
  auto* features = app.add_subcommand("features", "feature extraction");
  features->require_subcommand(1);
  auto* liwc_cmd = features->add_subcommand("liwc", "category frequencies from a .dic lexicon");
  liwc_cmd->add_option("--corpus", feat.corpus, "cached corpus JSON-lines")->required();
  liwc_cmd->add_option("--lexicon", feat.lexicon, ".dic category dictionary")->required();
  liwc_cmd->add_option("--output", feat.output, "feature CSV")->required();
  liwc_cmd->add_option("--seed", feat.seed, "unused; accepted for interface uniformity");
  liwc_cmd->callback([&] {
    const auto corp = corpus::load_corpus_jsonl(feat.corpus);
    const auto lex = lexicon::load_lexicon(feat.lexicon);
    std::ofstream out(feat.output);
    if (!out) throw ConfigError("cannot write " + feat.output);
    lexicon::write_features_csv(corp, lex, out);
    result_line({{"cmd", "features-liwc"},
                 {"users", std::to_string(corp.documents.size())},
                 {"categories", std::to_string(lex.categories.size())},
                 {"output", feat.output}});
  });

  // ---- topics train / infer ---------------------------------------------
  struct {
    std::string corpus, model_out, theta_out;
    int k = 10;
    double alpha = 0.0;
    double beta = 0.01;
    int iterations = 1000;
    int min_doc_freq = 1;
    std::uint64_t seed = 42;
  } tr;
  auto* topics = app.add_subcommand("topics", "topic model training and inference");
  topics->require_subcommand(1);
  auto* train_cmd = topics->add_subcommand("train", "collapsed Gibbs training");
  train_cmd->add_option("--corpus", tr.corpus, "cached corpus JSON-lines")->required();
  train_cmd->add_option("--model-out", tr.model_out, "model JSON path")->required();
  train_cmd->add_option("--theta-out", tr.theta_out, "document-topic CSV path");
  train_cmd->add_option("--k", tr.k, "number of topics")->check(CLI::PositiveNumber);
  train_cmd->add_option("--alpha", tr.alpha, "doc-topic smoothing; <=0 selects 5/K");
  train_cmd->add_option("--beta", tr.beta, "topic-word smoothing");
  train_cmd->add_option("--iterations", tr.iterations, "Gibbs sweeps")->check(CLI::PositiveNumber);
  train_cmd->add_option("--min-doc-freq", tr.min_doc_freq, "vocabulary document-frequency cutoff");
  train_cmd->add_option("--seed", tr.seed, "RNG seed");
  train_cmd->callback([&] {
    const auto corp = corpus::load_corpus_jsonl(tr.corpus);
    const auto vocab = lda::build_vocabulary(corp, tr.min_doc_freq);
    lda::TrainParams params{tr.k, tr.alpha, tr.beta, tr.iterations, tr.seed};
    const auto result = lda::train(corp, vocab, params);
    lda::save_model(result.model, tr.model_out);
    if (!tr.theta_out.empty()) {
      std::ofstream out(tr.theta_out);
      if (!out) throw ConfigError("cannot write " + tr.theta_out);
      lda::write_theta_csv(result.thetas, out);
    }
    result_line({{"cmd", "topics-train"},
                 {"users", std::to_string(corp.documents.size())},
                 {"k", std::to_string(tr.k)},
                 {"vocabulary", std::to_string(vocab.size())},
                 {"model", tr.model_out}});
  });

  struct {
    std::string corpus, model, theta_out;
    int iterations = 100;
    int burn_in = 50;
    std::uint64_t seed = 42;
  } inf;
  auto* infer_cmd = topics->add_subcommand("infer", "infer documents against a frozen model");
  infer_cmd->add_option("--corpus", inf.corpus, "cached corpus JSON-lines")->required();
  infer_cmd->add_option("--model", inf.model, "model JSON path")->required();
  infer_cmd->add_option("--theta-out", inf.theta_out, "document-topic CSV path")->required();
  infer_cmd->add_option("--iterations", inf.iterations, "Gibbs sweeps per document");
  infer_cmd->add_option("--burn-in", inf.burn_in, "sweeps discarded before averaging");
  infer_cmd->add_option("--seed", inf.seed, "RNG seed");
  infer_cmd->callback([&] {
    const auto corp = corpus::load_corpus_jsonl(inf.corpus);
    const auto model = lda::load_model(inf.model);
    std::vector<lda::DocTopicDistribution> thetas;
    thetas.reserve(corp.documents.size());
    for (std::size_t d = 0; d < corp.documents.size(); ++d) {
      lda::InferParams params{inf.iterations, inf.burn_in, inf.seed + d};
      thetas.push_back(lda::infer(model, corp.documents[d], params));
    }
    std::ofstream out(inf.theta_out);
    if (!out) throw ConfigError("cannot write " + inf.theta_out);
    lda::write_theta_csv(thetas, out);
    result_line({{"cmd", "topics-infer"},
                 {"users", std::to_string(corp.documents.size())},
                 {"k", std::to_string(model.K)},
                 {"theta", inf.theta_out}});
  });

  // ---- evaluate ----------------------------------------------------------
  struct {
    std::vector<std::string> features;
    std::string scores, model_out;
    int cv_k = 10;
    std::uint64_t seed = 42;
    bool drop_collinear = false;
  } ev;
  auto* evaluate = app.add_subcommand("evaluate", "CV of stepwise regression on feature CSVs");
  evaluate->add_option("--features", ev.features, "feature CSV (repeatable; joined on user_id)")
      ->required();
  evaluate->add_option("--scores", ev.scores, "CSV user_id,score")->required();
  evaluate->add_option("--cv-k", ev.cv_k, "folds");
  evaluate->add_option("--seed", ev.seed, "RNG seed");
  evaluate->add_flag("--drop-collinear", ev.drop_collinear, "drop dependent columns instead of failing");
  evaluate->add_option("--model-out", ev.model_out, "write the full-data stepwise model JSON here");
  evaluate->callback([&] {
    std::optional<stats::FeatureMatrix> x;
    for (const auto& path : ev.features) {
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open " + path);
      auto fm = stats::read_feature_csv(in, path);
      x = x ? stats::FeatureMatrix::hcat(*x, fm) : std::move(fm);
    }
    const auto score_map = corpus::load_scores_csv(ev.scores);
    std::vector<double> y;
    y.reserve(x->rows());
    for (const auto& id : x->row_ids) {
      const auto it = score_map.find(id);
      if (it == score_map.end()) throw DataError("no score for user " + id + " in " + ev.scores);
      y.push_back(it->second);
    }
    const auto collin = ev.drop_collinear ? stats::Collinearity::drop : stats::Collinearity::fail;
    const auto cv = stats::kfold_cv(
        *x, y, ev.cv_k, ev.seed, [collin](const stats::FeatureMatrix& xt, const std::vector<double>& yt) {
          return stats::stepwise_select(xt, yt, stats::StepDirection::both, collin);
        });
    const auto model = stats::stepwise_select(*x, y, stats::StepDirection::both, collin);
    if (!ev.model_out.empty()) {
      std::ofstream out(ev.model_out);
      if (!out) throw ConfigError("cannot write " + ev.model_out);
      stats::write_model_json(model, out);
    }
    result_line({{"cmd", "evaluate"},
                 {"users", std::to_string(x->rows())},
                 {"features", std::to_string(x->cols())},
                 {"cv_k", std::to_string(ev.cv_k)},
                 {"mean_rmse", csv::format_double(cv.mean_rmse)},
                 {"selected", std::to_string(model.selected_features.size())}});
  });

  // ---- experiment ---------------------------------------------------------
  pipeline::ExperimentConfig cfg;
  std::string cfg_mode = "pre_segmented";
  auto* experiment = app.add_subcommand("experiment", "full grid: feature sets x K values");
  experiment->add_option("--corpus", cfg.corpus_path, "target corpus (raw messages or cached)")
      ->required();
  experiment->add_option("--output-dir", cfg.output_dir, "directory for report and artifacts")
      ->required();
  experiment->add_option("--scores", cfg.scores_path, "CSV user_id,score");
  experiment->add_option("--pretrain-corpus", cfg.pretrain_corpus_path,
                         "corpus for the inferred strategy");
  experiment->add_option("--model", cfg.model_path, "frozen model for the inferred strategy");
  experiment->add_option("--lexicon", cfg.lexicon_path, ".dic lexicon for liwc sets");
  experiment->add_option("--mode", cfg_mode, "segmenter mode for raw corpora");
  experiment->add_option("--dict", cfg.segmenter.dictionary_path, "segmentation dictionary");
  experiment->add_option("--stopwords", cfg.segmenter.stopword_path, "stopword list");
  experiment->add_flag("--keep-hashtag-text", cfg.clean.keep_hashtag_text,
                       "keep text inside #...# tags");
  experiment->add_option("--min-user-bytes", cfg.min_user_bytes, "user text size cutoff");
  experiment->add_option("--k-list", cfg.k_list, "topic counts, e.g. --k-list 10 20 50");
  experiment->add_option("--feature-sets", cfg.feature_sets,
                         "subset of liwc trained inferred liwc+trained liwc+inferred");
  experiment->add_option("--cv-k", cfg.cv_k, "folds");
  experiment->add_option("--seed", cfg.seed, "RNG seed");
  experiment->add_option("--train-iterations", cfg.train_iterations, "Gibbs sweeps");
  experiment->add_option("--infer-iterations", cfg.infer_iterations, "sweeps per inferred document");
  experiment->add_option("--infer-burn-in", cfg.infer_burn_in, "sweeps discarded before averaging");
  experiment->add_option("--alpha", cfg.alpha, "doc-topic smoothing; <=0 selects 5/K");
  experiment->add_option("--beta", cfg.beta, "topic-word smoothing");
  experiment->add_option("--min-doc-freq", cfg.min_doc_freq, "vocabulary document-frequency cutoff");
  experiment->add_option("--significance-level", cfg.significance_level,
                         "threshold for counting correlated topics");
  experiment->add_flag("--drop-collinear", cfg.auto_drop_collinear,
                       "drop dependent columns instead of failing");
  experiment->callback([&] {
    cfg.segmenter.mode = parse_mode(cfg_mode);
    const auto report = pipeline::run_experiment(cfg);
    result_line({{"cmd", "experiment"},
                 {"rows", std::to_string(report.rows.size())},
                 {"config_hash", report.config_hash},
                 {"report", (fs::path(cfg.output_dir) / "report.csv").string()}});
  });

  // ---- report -------------------------------------------------------------
  struct {
    std::string report_csv, output_dir;
    std::uint64_t seed = 42;
  } rep;
  auto* report_cmd = app.add_subcommand("report", "re-emit figure CSVs from a report.csv");
  report_cmd->add_option("--report-csv", rep.report_csv, "existing report.csv")->required();
  report_cmd->add_option("--output-dir", rep.output_dir, "directory for figure CSVs")->required();
  report_cmd->add_option("--seed", rep.seed, "unused; accepted for interface uniformity");
  report_cmd->callback([&] {
    std::ifstream in(rep.report_csv);
    if (!in) throw ConfigError("cannot open " + rep.report_csv);
    const auto report = pipeline::read_report_csv(in, rep.report_csv);
    fs::create_directories(rep.output_dir);
    pipeline::emit_figures(report, rep.output_dir);
    result_line({{"cmd", "report"},
                 {"rows", std::to_string(report.rows.size())},
                 {"output_dir", rep.output_dir}});
  });

  // ---- synth ---------------------------------------------------------------
  pipeline::SyntheticSpec synth_spec;
  struct {
    std::string output, scores_out;
    std::uint64_t seed = 42;
    int pretrain_users = 0;
    std::string pretrain_out;
  } sy;
  auto* synth = app.add_subcommand("synth", "generate a planted-topic synthetic corpus");
  synth->add_option("--output", sy.output, "corpus JSON-lines path")->required();
  synth->add_option("--scores-out", sy.scores_out, "also write scores as CSV");
  synth->add_option("--users", synth_spec.n_users, "number of users");
  synth->add_option("--topics", synth_spec.n_topics, "number of planted topics");
  synth->add_option("--words-per-topic", synth_spec.words_per_topic, "vocabulary per topic");
  synth->add_option("--doc-length", synth_spec.doc_length, "tokens per user");
  synth->add_option("--planted-topic", synth_spec.planted_topic, "score-correlated topic index");
  synth->add_option("--intercept", synth_spec.score_intercept, "score intercept");
  synth->add_option("--slope", synth_spec.score_slope, "score slope on the planted proportion");
  synth->add_option("--noise-sd", synth_spec.noise_sd, "score noise standard deviation");
  synth->add_option("--concentration", synth_spec.doc_topic_concentration,
                    "Dirichlet concentration of document mixtures");
  synth->add_option("--pretrain-users", sy.pretrain_users,
                    "also generate a disjoint pre-training corpus of this many users");
  synth->add_option("--pretrain-out", sy.pretrain_out, "pre-training corpus path");
  synth->add_option("--seed", sy.seed, "RNG seed");
  synth->callback([&] {
    const auto corp = pipeline::make_synthetic_corpus(synth_spec, sy.seed);
    corpus::save_corpus_jsonl(corp, sy.output);
    if (!sy.scores_out.empty()) {
      std::ofstream out(sy.scores_out);
      if (!out) throw ConfigError("cannot write " + sy.scores_out);
      csv::write_row(out, {"user_id", "score"});
      for (const auto& doc : corp.documents) {
        csv::write_row(out, {doc.user_id, csv::format_double(*doc.score)});
      }
    }
    if (sy.pretrain_users > 0) {
      if (sy.pretrain_out.empty()) throw ConfigError("--pretrain-out is required with --pretrain-users");
      auto spec = synth_spec;
      spec.n_users = sy.pretrain_users;
      auto pre = pipeline::make_synthetic_corpus(spec, sy.seed + 1);
      for (auto& doc : pre.documents) doc.user_id = "p" + doc.user_id;
      corpus::save_corpus_jsonl(pre, sy.pretrain_out);
    }
    result_line({{"cmd", "synth"},
                 {"users", std::to_string(corp.documents.size())},
                 {"output", sy.output}});
  });

  const std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* cmd) {
    for (auto* sub : cmd->get_subcommands({})) {
      sub->fallthrough();
      enable_fallthrough(sub);
    }
  };
  enable_fallthrough(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
