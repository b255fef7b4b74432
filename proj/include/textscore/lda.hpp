#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "textscore/corpus.hpp"
#include "textscore/rng.hpp"

namespace textscore::lda {

struct Vocabulary {
  std::unordered_map<std::string, int> id_of;
  std::vector<std::string> word_of;  // id -> word, ids contiguous from 0

  int size() const { return static_cast<int>(word_of.size()); }
  int lookup(const std::string& w) const {
    const auto it = id_of.find(w);
    return it == id_of.end() ? -1 : it->second;
  }
};

// Tokens appearing in at least min_doc_freq documents, ids assigned in
// lexicographic word order.
Vocabulary build_vocabulary(const corpus::Corpus& corpus, int min_doc_freq);

struct TrainingMeta {
  int iterations = 0;
  std::uint64_t seed = 0;
  std::string corpus_provenance;

  bool operator==(const TrainingMeta&) const = default;
};

struct TopicModel {
  int K = 0;
  double alpha = 0.0;  // symmetric per-topic Dirichlet weight
  double beta = 0.0;   // symmetric per-word Dirichlet weight
  std::vector<std::int32_t> n_kw;  // K x V topic-word counts, row-major
  std::vector<std::int64_t> n_k;   // per-topic totals, n_k[k] == sum_w n_kw[k][w]
  Vocabulary vocab;
  TrainingMeta meta;

  std::int32_t count(int k, int w) const { return n_kw[static_cast<std::size_t>(k) * vocab.word_of.size() + w]; }
};

struct DocTopicDistribution {
  std::string user_id;
  std::vector<double> theta;  // length K, strictly positive, sums to 1
};

struct TrainParams {
  int K = 10;
  double alpha = 0.0;  // <= 0 selects the default 5.0 / K
  double beta = 0.01;
  int iterations = 1000;
  std::uint64_t seed = 0;
};

struct InferParams {
  int iterations = 100;
  int burn_in = 50;  // theta is averaged over the post-burn-in sweeps
  std::uint64_t seed = 0;
};

struct TrainResult {
  TopicModel model;
  std::vector<DocTopicDistribution> thetas;
};

// Collapsed Gibbs chain over a fixed corpus of word-id documents. Exposed so
// tests can drive individual sweeps and inspect raw assignments.
//
// Randomness is consumed in a fixed order: one draw per token at
// initialization, then one draw per token per sweep, documents in corpus
// order and tokens in position order. Runs are bit-reproducible per seed.
class Sampler {
 public:
  Sampler(std::vector<std::vector<int>> docs, int K, int V, double alpha, double beta,
          std::uint64_t seed);

  // One full pass resampling every token's topic from the collapsed
  // conditional p(z=k) ~ (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta),
  // with the token itself excluded from all counts.
  void sweep();

  int K() const { return K_; }
  int V() const { return V_; }
  std::size_t doc_count() const { return docs_.size(); }
  const std::vector<std::vector<int>>& assignments() const { return z_; }
  std::int32_t topic_word_count(int k, int w) const { return n_wk_[static_cast<std::size_t>(w) * K_ + k]; }
  std::int64_t topic_count(int k) const { return n_k_[k]; }
  std::int32_t doc_topic_count(std::size_t d, int k) const { return n_dk_[d * K_ + k]; }

  // Smoothed estimate (n_dk + alpha) / (n_d + K*alpha) for document d.
  std::vector<double> theta(std::size_t d) const;

 private:
  int K_;
  int V_;
  double alpha_;
  double beta_;
  double v_beta_;
  std::vector<std::vector<int>> docs_;
  std::vector<std::vector<int>> z_;
  std::vector<std::int32_t> n_wk_;  // V x K, word-major for the inner loop
  std::vector<std::int64_t> n_k_;
  std::vector<std::int32_t> n_dk_;  // D x K
  std::vector<double> inv_nk_;      // 1 / (n_k + V*beta), kept in sync
  std::vector<double> cdf_;
  Rng rng_;
};

// Trains by collapsed Gibbs sampling. Documents are restricted to the given
// vocabulary; a document left empty by the restriction is an error naming
// its user_id. Thetas are the smoothed estimates after the final sweep.
TrainResult train(const corpus::Corpus& corpus, const Vocabulary& vocab, const TrainParams& params);

// Gibbs over one held-out document with the model's topic-word counts held
// fixed (plus the document's own running assignments). Out-of-vocabulary
// tokens are skipped; a document with none in vocabulary is an error.
DocTopicDistribution infer(const TopicModel& model, const corpus::UserDocument& doc,
                           const InferParams& params);

// The n words with the highest counts in topic k; ties break lexicographically.
std::vector<std::string> top_words(const TopicModel& model, int k, int n);

// Versioned JSON round-trip; n_k is derived on load.
void save_model(const TopicModel& model, const std::string& path);
TopicModel load_model(const std::string& path);

bool models_equal(const TopicModel& a, const TopicModel& b);

// CSV: user_id, topic_0 .. topic_{K-1}.
void write_theta_csv(const std::vector<DocTopicDistribution>& thetas, std::ostream& out);

}  // namespace textscore::lda
