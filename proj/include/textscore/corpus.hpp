#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace textscore::corpus {

struct RawMessage {
  std::string user_id;
  std::string text;
  // Carried through from the source when it marks reposts; cleaning keys
  // off the in-text "//@" delimiter either way.
  bool is_retweet = false;
};

struct UserDocument {
  std::string user_id;
  std::vector<std::string> tokens;
  // UTF-8 bytes of the user's cleaned text, summed over messages before
  // tokenization.
  std::uint64_t raw_byte_length = 0;
  std::optional<double> score;
};

struct Corpus {
  std::vector<UserDocument> documents;
  std::string provenance;
};

enum class SegmenterMode { pre_segmented, max_match };

struct SegmenterConfig {
  SegmenterMode mode = SegmenterMode::pre_segmented;
  std::string dictionary_path;  // required for max_match
  std::string stopword_path;    // optional
};

struct CleanOptions {
  // Default drops the whole #...# span; set to keep the inner text.
  bool keep_hashtag_text = false;
};

// One word per line, UTF-8, blank lines skipped.
std::vector<std::string> load_word_list(const std::string& path);

class Segmenter {
 public:
  // Loads dictionary/stopword files named by the config. Throws ConfigError
  // if max_match is requested without a usable dictionary.
  static Segmenter from_config(const SegmenterConfig& config);

  // In-memory construction, mainly for tests.
  Segmenter(SegmenterMode mode, std::vector<std::string> dictionary_words,
            std::vector<std::string> stopwords);

  // pre_segmented: whitespace split. max_match: forward maximum matching,
  // longest dictionary word first, single code point for unmatched spans.
  // Concatenating the tokens restores the input minus whitespace.
  std::vector<std::string> segment(std::string_view text) const;

  const std::unordered_set<std::string>& stopwords() const { return stopwords_; }
  SegmenterMode mode() const { return mode_; }
  std::size_t dictionary_size() const { return dictionary_.size(); }

 private:
  SegmenterMode mode_;
  std::unordered_set<std::string> dictionary_;
  std::size_t max_word_cps_ = 0;
  std::unordered_set<std::string> stopwords_;
};

// Strips retweet-quoted tails ("//@..." onward), @-mentions, #...# hashtag
// spans, URLs and [emoticon] codes, then collapses whitespace. May return "".
std::string clean_message(const RawMessage& raw, const CleanOptions& opts = {});

// Drops stopwords and every token of one Unicode scalar value or fewer;
// order preserved. Idempotent.
std::vector<std::string> filter_tokens(std::vector<std::string> tokens,
                                       const std::unordered_set<std::string>& stopwords);

// Groups messages by user (first-appearance order), cleans, segments and
// filters each message, and concatenates tokens in message order.
Corpus aggregate_users(const std::vector<RawMessage>& messages, const Segmenter& seg,
                       const CleanOptions& opts = {});

// Keeps documents with raw_byte_length >= min_bytes (strict "less than"
// reading of the cutoff) and, when require_score, a score.
Corpus filter_users(const Corpus& corpus, std::uint64_t min_bytes, bool require_score);

// Documents whose score strictly exceeds mean + sample standard deviation
// (n-1 denominator) of the input corpus. All documents must be scored and
// there must be at least two.
Corpus high_risk_subset(const Corpus& corpus);

// JSON-lines of {"user_id", "text"[, "is_retweet"]}.
std::vector<RawMessage> load_messages_jsonl(const std::string& path);

// JSON-lines of {"user_id", "tokens", "raw_byte_length"[, "score"]}.
Corpus load_corpus_jsonl(const std::string& path);
void save_corpus_jsonl(const Corpus& corpus, const std::string& path);
void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);

// CSV with header "user_id,score".
std::unordered_map<std::string, double> load_scores_csv(const std::string& path);

// Returns the number of documents that received a score.
std::size_t attach_scores(Corpus& corpus, const std::unordered_map<std::string, double>& scores);

}  // namespace textscore::corpus
