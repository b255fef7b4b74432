#include "textscore/lda.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "textscore/csv.hpp"
#include "textscore/error.hpp"

namespace textscore::lda {

using nlohmann::json;

Vocabulary build_vocabulary(const corpus::Corpus& corpus, int min_doc_freq) {
  if (min_doc_freq < 1) throw std::invalid_argument("build_vocabulary: min_doc_freq must be >= 1");
  std::unordered_map<std::string, int> doc_freq;
  std::unordered_set<std::string> seen_in_doc;
  for (const auto& doc : corpus.documents) {
    seen_in_doc.clear();
    for (const auto& tok : doc.tokens) {
      if (seen_in_doc.insert(tok).second) ++doc_freq[tok];
    }
  }
  std::vector<std::string> words;
  for (const auto& [word, df] : doc_freq) {
    if (df >= min_doc_freq) words.push_back(word);
  }
  if (words.empty()) throw DataError("build_vocabulary: no token meets min_doc_freq");
  std::sort(words.begin(), words.end());

  Vocabulary vocab;
  vocab.word_of = std::move(words);
  vocab.id_of.reserve(vocab.word_of.size());
  for (std::size_t i = 0; i < vocab.word_of.size(); ++i) {
    vocab.id_of.emplace(vocab.word_of[i], static_cast<int>(i));
  }
  return vocab;
}

Sampler::Sampler(std::vector<std::vector<int>> docs, int K, int V, double alpha, double beta,
                 std::uint64_t seed)
    : K_(K),
      V_(V),
      alpha_(alpha),
      beta_(beta),
      v_beta_(static_cast<double>(V) * beta),
      docs_(std::move(docs)),
      rng_(seed) {
  if (K_ < 1) throw std::invalid_argument("Sampler: K must be >= 1");
  if (V_ < 1) throw std::invalid_argument("Sampler: V must be >= 1");
  if (alpha_ <= 0.0 || beta_ <= 0.0) throw std::invalid_argument("Sampler: alpha and beta must be > 0");

  n_wk_.assign(static_cast<std::size_t>(V_) * K_, 0);
  n_k_.assign(K_, 0);
  n_dk_.assign(docs_.size() * K_, 0);
  cdf_.assign(K_, 0.0);
  z_.resize(docs_.size());

  for (std::size_t d = 0; d < docs_.size(); ++d) {
    z_[d].resize(docs_[d].size());
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const int w = docs_[d][i];
      const int k = static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(K_)));
      z_[d][i] = k;
      ++n_wk_[static_cast<std::size_t>(w) * K_ + k];
      ++n_k_[k];
      ++n_dk_[d * K_ + k];
    }
  }
  inv_nk_.resize(K_);
  for (int k = 0; k < K_; ++k) inv_nk_[k] = 1.0 / (static_cast<double>(n_k_[k]) + v_beta_);
}

void Sampler::sweep() {
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    const auto& doc = docs_[d];
    auto& zd = z_[d];
    std::int32_t* ndk = &n_dk_[d * K_];
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const int w = doc[i];
      const int old_k = zd[i];
      std::int32_t* nwk = &n_wk_[static_cast<std::size_t>(w) * K_];

      --nwk[old_k];
      --n_k_[old_k];
      --ndk[old_k];
      inv_nk_[old_k] = 1.0 / (static_cast<double>(n_k_[old_k]) + v_beta_);

      double total = 0.0;
      for (int k = 0; k < K_; ++k) {
        total += (ndk[k] + alpha_) * (nwk[k] + beta_) * inv_nk_[k];
        cdf_[k] = total;
      }

      const double u = rng_.uniform01() * total;
      int new_k = K_ - 1;
      for (int k = 0; k < K_; ++k) {
        if (u < cdf_[k]) {
          new_k = k;
          break;
        }
      }

      zd[i] = new_k;
      ++nwk[new_k];
      ++n_k_[new_k];
      ++ndk[new_k];
      inv_nk_[new_k] = 1.0 / (static_cast<double>(n_k_[new_k]) + v_beta_);
    }
  }
}

std::vector<double> Sampler::theta(std::size_t d) const {
  std::vector<double> out(K_);
  const double n_d = static_cast<double>(docs_[d].size());
  const double denom = n_d + static_cast<double>(K_) * alpha_;
  for (int k = 0; k < K_; ++k) {
    out[k] = (static_cast<double>(n_dk_[d * K_ + k]) + alpha_) / denom;
  }
  return out;
}

namespace {

std::vector<std::vector<int>> restrict_to_vocab(const corpus::Corpus& corpus,
                                                const Vocabulary& vocab) {
  std::vector<std::vector<int>> docs;
  docs.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    std::vector<int> ids;
    ids.reserve(doc.tokens.size());
    for (const auto& tok : doc.tokens) {
      if (const int id = vocab.lookup(tok); id >= 0) ids.push_back(id);
    }
    if (ids.empty()) {
      throw DataError("train: document has no in-vocabulary tokens: " + doc.user_id);
    }
    docs.push_back(std::move(ids));
  }
  return docs;
}

}  // namespace

TrainResult train(const corpus::Corpus& corpus, const Vocabulary& vocab,
                  const TrainParams& params) {
  if (params.K < 1) throw std::invalid_argument("train: K must be >= 1");
  if (params.iterations < 1) throw std::invalid_argument("train: iterations must be >= 1");
  if (params.beta <= 0.0) throw std::invalid_argument("train: beta must be > 0");
  if (corpus.documents.empty()) throw DataError("train: empty corpus");

  const double alpha = params.alpha > 0.0 ? params.alpha : 5.0 / static_cast<double>(params.K);
  auto docs = restrict_to_vocab(corpus, vocab);

  Sampler sampler(std::move(docs), params.K, vocab.size(), alpha, params.beta, params.seed);
  for (int it = 0; it < params.iterations; ++it) sampler.sweep();

  TrainResult result;
  TopicModel& model = result.model;
  model.K = params.K;
  model.alpha = alpha;
  model.beta = params.beta;
  model.vocab = vocab;
  model.meta = TrainingMeta{params.iterations, params.seed, corpus.provenance};
  const int V = vocab.size();
  model.n_kw.assign(static_cast<std::size_t>(params.K) * V, 0);
  model.n_k.assign(params.K, 0);
  for (int k = 0; k < params.K; ++k) {
    for (int w = 0; w < V; ++w) {
      const auto c = sampler.topic_word_count(k, w);
      model.n_kw[static_cast<std::size_t>(k) * V + w] = c;
    }
    model.n_k[k] = sampler.topic_count(k);
  }

  result.thetas.reserve(corpus.documents.size());
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    result.thetas.push_back({corpus.documents[d].user_id, sampler.theta(d)});
  }
  return result;
}

DocTopicDistribution infer(const TopicModel& model, const corpus::UserDocument& doc,
                           const InferParams& params) {
  if (params.burn_in < 0 || params.iterations <= params.burn_in) {
    throw std::invalid_argument("infer: need iterations > burn_in >= 0");
  }
  const int K = model.K;
  const int V = model.vocab.size();

  // distinct in-vocabulary words, with local column indices
  std::vector<int> word_ids;
  std::unordered_map<int, int> local_of;
  std::vector<int> tokens;
  for (const auto& tok : doc.tokens) {
    const int id = model.vocab.lookup(tok);
    if (id < 0) continue;  // OOV tokens are skipped
    auto [it, inserted] = local_of.try_emplace(id, static_cast<int>(word_ids.size()));
    if (inserted) word_ids.push_back(id);
    tokens.push_back(it->second);
  }
  if (tokens.empty()) {
    throw DataError("infer: document has no in-vocabulary tokens: " + doc.user_id);
  }

  const std::size_t n_d = tokens.size();
  const double v_beta = static_cast<double>(V) * model.beta;
  std::vector<std::int32_t> l_uk(word_ids.size() * K, 0);  // local word-topic counts
  std::vector<std::int32_t> l_k(K, 0);
  std::vector<std::int32_t> l_dk(K, 0);
  std::vector<int> z(n_d);
  Rng rng(params.seed);

  for (std::size_t i = 0; i < n_d; ++i) {
    const int u = tokens[i];
    const int k = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(K)));
    z[i] = k;
    ++l_uk[static_cast<std::size_t>(u) * K + k];
    ++l_k[k];
    ++l_dk[k];
  }

  std::vector<double> cdf(K);
  std::vector<double> theta_sum(K, 0.0);
  const double denom = static_cast<double>(n_d) + static_cast<double>(K) * model.alpha;
  int samples = 0;

  for (int it = 0; it < params.iterations; ++it) {
    for (std::size_t i = 0; i < n_d; ++i) {
      const int u = tokens[i];
      const int w = word_ids[u];
      const int old_k = z[i];
      std::int32_t* luk = &l_uk[static_cast<std::size_t>(u) * K];
      --luk[old_k];
      --l_k[old_k];
      --l_dk[old_k];

      const std::int32_t* mkw = model.n_kw.data();
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        const double word_count =
            static_cast<double>(mkw[static_cast<std::size_t>(k) * V + w] + luk[k]);
        const double topic_total = static_cast<double>(model.n_k[k] + l_k[k]);
        total += (l_dk[k] + model.alpha) * (word_count + model.beta) / (topic_total + v_beta);
        cdf[k] = total;
      }
      const double r = rng.uniform01() * total;
      int new_k = K - 1;
      for (int k = 0; k < K; ++k) {
        if (r < cdf[k]) {
          new_k = k;
          break;
        }
      }
      z[i] = new_k;
      ++luk[new_k];
      ++l_k[new_k];
      ++l_dk[new_k];
    }
    if (it >= params.burn_in) {
      for (int k = 0; k < K; ++k) {
        theta_sum[k] += (static_cast<double>(l_dk[k]) + model.alpha) / denom;
      }
      ++samples;
    }
  }

  DocTopicDistribution out;
  out.user_id = doc.user_id;
  out.theta.resize(K);
  for (int k = 0; k < K; ++k) out.theta[k] = theta_sum[k] / static_cast<double>(samples);
  return out;
}

std::vector<std::string> top_words(const TopicModel& model, int k, int n) {
  if (k < 0 || k >= model.K) throw std::invalid_argument("top_words: topic out of range");
  if (n < 1) throw std::invalid_argument("top_words: n must be >= 1");
  const int V = model.vocab.size();
  std::vector<int> order(V);
  for (int w = 0; w < V; ++w) order[w] = w;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ca = model.count(k, a);
    const auto cb = model.count(k, b);
    if (ca != cb) return ca > cb;
    return model.vocab.word_of[a] < model.vocab.word_of[b];
  });
  const int take = std::min(n, V);
  std::vector<std::string> words;
  words.reserve(take);
  for (int i = 0; i < take; ++i) words.push_back(model.vocab.word_of[order[i]]);
  return words;
}

namespace {
constexpr int kModelFormatVersion = 1;
}

void save_model(const TopicModel& model, const std::string& path) {
  json j;
  j["version"] = kModelFormatVersion;
  j["K"] = model.K;
  j["alpha"] = model.alpha;
  j["beta"] = model.beta;
  j["vocab"] = model.vocab.word_of;
  j["n_kw"] = model.n_kw;
  j["meta"] = {{"iterations", model.meta.iterations},
               {"seed", model.meta.seed},
               {"corpus_provenance", model.meta.corpus_provenance}};
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model file: " + path);
  out << j.dump() << '\n';
}

TopicModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": corrupted model file: " + e.what());
  }
  if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer()) {
    throw ParseError(path + ": corrupted model file: missing version");
  }
  const int version = j["version"].get<int>();
  if (version != kModelFormatVersion) {
    throw ParseError(path + ": unsupported model format version " + std::to_string(version) +
                     " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  TopicModel model;
  try {
    model.K = j.at("K").get<int>();
    model.alpha = j.at("alpha").get<double>();
    model.beta = j.at("beta").get<double>();
    model.vocab.word_of = j.at("vocab").get<std::vector<std::string>>();
    model.n_kw = j.at("n_kw").get<std::vector<std::int32_t>>();
    const auto& meta = j.at("meta");
    model.meta.iterations = meta.at("iterations").get<int>();
    model.meta.seed = meta.at("seed").get<std::uint64_t>();
    model.meta.corpus_provenance = meta.at("corpus_provenance").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(path + ": corrupted model file: " + e.what());
  }
  if (model.K < 1 || model.alpha <= 0.0 || model.beta <= 0.0) {
    throw ParseError(path + ": corrupted model file: bad hyperparameters");
  }
  const std::size_t V = model.vocab.word_of.size();
  if (V == 0 || model.n_kw.size() != static_cast<std::size_t>(model.K) * V) {
    throw ParseError(path + ": corrupted model file: n_kw shape mismatch");
  }
  model.vocab.id_of.reserve(V);
  for (std::size_t i = 0; i < V; ++i) {
    if (!model.vocab.id_of.emplace(model.vocab.word_of[i], static_cast<int>(i)).second) {
      throw ParseError(path + ": corrupted model file: duplicate vocabulary word");
    }
  }
  model.n_k.assign(model.K, 0);
  for (int k = 0; k < model.K; ++k) {
    std::int64_t total = 0;
    for (std::size_t w = 0; w < V; ++w) {
      const auto c = model.n_kw[static_cast<std::size_t>(k) * V + w];
      if (c < 0) throw ParseError(path + ": corrupted model file: negative count");
      total += c;
    }
    model.n_k[k] = total;
  }
  return model;
}

bool models_equal(const TopicModel& a, const TopicModel& b) {
  return a.K == b.K && a.alpha == b.alpha && a.beta == b.beta && a.n_kw == b.n_kw &&
         a.n_k == b.n_k && a.vocab.word_of == b.vocab.word_of && a.meta == b.meta;
}

void write_theta_csv(const std::vector<DocTopicDistribution>& thetas, std::ostream& out) {
  const int K = thetas.empty() ? 0 : static_cast<int>(thetas.front().theta.size());
  std::vector<std::string> header{"user_id"};
  for (int k = 0; k < K; ++k) header.push_back("topic_" + std::to_string(k));
  csv::write_row(out, header);
  for (const auto& dt : thetas) {
    std::vector<std::string> row{dt.user_id};
    for (double v : dt.theta) row.push_back(csv::format_double(v));
    csv::write_row(out, row);
  }
}

}  // namespace textscore::lda
