#include "textscore/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "textscore/csv.hpp"
#include "textscore/error.hpp"
#include "textscore/utf8.hpp"

namespace textscore::corpus {

using nlohmann::json;

namespace {

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (ascii_lower(text[i]) != prefix[i]) return false;
  }
  return true;
}

bool is_mention_char(char32_t cp) {
  if (cp >= U'a' && cp <= U'z') return true;
  if (cp >= U'A' && cp <= U'Z') return true;
  if (cp >= U'0' && cp <= U'9') return true;
  if (cp == U'_' || cp == U'-') return true;
  // CJK unified ideographs; Weibo screen names mix these with ASCII.
  if (cp >= 0x4E00 && cp <= 0x9FFF) return true;
  return false;
}

// Longest hashtag / emoticon spans we will consume; longer ones are treated
// as literal text so a stray marker cannot eat the rest of the message.
constexpr std::size_t kMaxHashtagBytes = 64;
constexpr std::size_t kMaxEmoticonBytes = 32;

bool span_has_space(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    if (utf8::is_space(utf8::decode(s, i))) return true;
  }
  return false;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size();) {
    const std::size_t start = i;
    const char32_t cp = utf8::decode(s, i);
    if (utf8::is_space(cp)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.append(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

std::string clean_message(const RawMessage& raw, const CleanOptions& opts) {
  std::string_view text = raw.text;

  // Everything from the retweet delimiter onward is quoted, not authored.
  if (const auto rt = text.find("//@"); rt != std::string_view::npos) {
    text = text.substr(0, rt);
  }

  std::string kept;
  kept.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == 'h' || c == 'H') {
      // URL: scheme prefix through the next whitespace.
      const auto rest = text.substr(i);
      std::size_t scheme = 0;
      if (starts_with_ci(rest, "https://")) {
        scheme = 8;
      } else if (starts_with_ci(rest, "http://")) {
        scheme = 7;
      }
      if (scheme > 0) {
        std::size_t j = i + scheme;
        while (j < text.size()) {
          std::size_t k = j;
          if (utf8::is_space(utf8::decode(text, k))) break;
          j = k;
        }
        i = j;
        kept.push_back(' ');
        continue;
      }
    } else if (c == '@') {
      std::size_t j = i + 1;
      std::size_t name_end = j;
      while (j < text.size()) {
        std::size_t k = j;
        if (!is_mention_char(utf8::decode(text, k))) break;
        j = k;
        name_end = j;
      }
      if (name_end > i + 1) {
        i = name_end;
        kept.push_back(' ');
        continue;
      }
      // bare '@' stays literal text
    } else if (c == '#') {
      const auto close = text.find('#', i + 1);
      if (close != std::string_view::npos && close - (i + 1) <= kMaxHashtagBytes) {
        if (opts.keep_hashtag_text) {
          kept.push_back(' ');
          kept.append(text.substr(i + 1, close - (i + 1)));
          kept.push_back(' ');
        } else {
          kept.push_back(' ');
        }
        i = close + 1;
        continue;
      }
      // unmatched marker: drop the '#' alone
      ++i;
      kept.push_back(' ');
      continue;
    } else if (c == '[') {
      const auto close = text.find_first_of("[]", i + 1);
      if (close != std::string_view::npos && text[close] == ']' &&
          close - (i + 1) <= kMaxEmoticonBytes &&
          !span_has_space(text.substr(i + 1, close - (i + 1)))) {
        i = close + 1;
        kept.push_back(' ');
        continue;
      }
    }
    const std::size_t len = std::min(utf8::seq_length(static_cast<unsigned char>(c)),
                                     text.size() - i);
    kept.append(text.substr(i, len));
    i += len;
  }

  return collapse_whitespace(kept);
}

std::vector<std::string> load_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open word list: " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    words.push_back(line);
  }
  return words;
}

Segmenter::Segmenter(SegmenterMode mode, std::vector<std::string> dictionary_words,
                     std::vector<std::string> stopwords)
    : mode_(mode) {
  for (auto& w : dictionary_words) {
    max_word_cps_ = std::max(max_word_cps_, utf8::count(w));
    dictionary_.insert(std::move(w));
  }
  for (auto& w : stopwords) stopwords_.insert(std::move(w));
  if (mode_ == SegmenterMode::max_match && dictionary_.empty()) {
    throw ConfigError("max_match segmentation requires a dictionary with at least one entry");
  }
}

Segmenter Segmenter::from_config(const SegmenterConfig& config) {
  std::vector<std::string> dict;
  if (config.mode == SegmenterMode::max_match) {
    if (config.dictionary_path.empty()) {
      throw ConfigError("max_match segmentation requires dictionary_path");
    }
    dict = load_word_list(config.dictionary_path);
  }
  std::vector<std::string> stop;
  if (!config.stopword_path.empty()) stop = load_word_list(config.stopword_path);
  return Segmenter(config.mode, std::move(dict), std::move(stop));
}

std::vector<std::string> Segmenter::segment(std::string_view text) const {
  std::vector<std::string> tokens;
  if (mode_ == SegmenterMode::pre_segmented) {
    std::string current;
    for (std::size_t i = 0; i < text.size();) {
      const std::size_t start = i;
      if (utf8::is_space(utf8::decode(text, i))) {
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
      } else {
        current.append(text.substr(start, i - start));
      }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
  }

  // Forward maximum matching within each whitespace-free span.
  const auto offs = utf8::boundaries(text);
  const std::size_t n_cps = offs.size() - 1;
  std::size_t ci = 0;
  while (ci < n_cps) {
    std::size_t p = offs[ci];
    const char32_t cp = utf8::decode(text, p);
    if (utf8::is_space(cp)) {
      ++ci;
      continue;
    }
    // span end: next whitespace
    std::size_t span_end = ci + 1;
    while (span_end < n_cps) {
      std::size_t q = offs[span_end];
      if (utf8::is_space(utf8::decode(text, q))) break;
      ++span_end;
    }
    while (ci < span_end) {
      const std::size_t longest = std::min(max_word_cps_, span_end - ci);
      std::size_t matched = 0;
      for (std::size_t len = longest; len >= 1; --len) {
        const auto cand = text.substr(offs[ci], offs[ci + len] - offs[ci]);
        if (dictionary_.contains(std::string(cand))) {
          matched = len;
          break;
        }
      }
      if (matched == 0) matched = 1;  // unmatched: emit a single code point
      tokens.emplace_back(text.substr(offs[ci], offs[ci + matched] - offs[ci]));
      ci += matched;
    }
  }
  return tokens;
}

std::vector<std::string> filter_tokens(std::vector<std::string> tokens,
                                       const std::unordered_set<std::string>& stopwords) {
  std::erase_if(tokens, [&](const std::string& t) {
    return utf8::count(t) <= 1 || stopwords.contains(t);
  });
  return tokens;
}

Corpus aggregate_users(const std::vector<RawMessage>& messages, const Segmenter& seg,
                       const CleanOptions& opts) {
  Corpus corpus;
  std::unordered_map<std::string, std::size_t> index_of;
  for (const auto& msg : messages) {
    auto [it, inserted] = index_of.try_emplace(msg.user_id, corpus.documents.size());
    if (inserted) {
      corpus.documents.push_back(UserDocument{msg.user_id, {}, 0, std::nullopt});
    }
    UserDocument& doc = corpus.documents[it->second];
    const std::string cleaned = clean_message(msg, opts);
    doc.raw_byte_length += cleaned.size();
    auto toks = filter_tokens(seg.segment(cleaned), seg.stopwords());
    doc.tokens.insert(doc.tokens.end(), std::make_move_iterator(toks.begin()),
                      std::make_move_iterator(toks.end()));
  }
  std::ostringstream prov;
  prov << "aggregated " << messages.size() << " messages into " << corpus.documents.size()
       << " user documents (segmenter="
       << (seg.mode() == SegmenterMode::max_match ? "max_match" : "pre_segmented") << ")";
  corpus.provenance = prov.str();
  return corpus;
}

Corpus filter_users(const Corpus& corpus, std::uint64_t min_bytes, bool require_score) {
  Corpus out;
  for (const auto& doc : corpus.documents) {
    if (doc.raw_byte_length < min_bytes) continue;
    if (require_score && !doc.score.has_value()) continue;
    out.documents.push_back(doc);
  }
  std::ostringstream prov;
  prov << corpus.provenance << "; filtered min_bytes=" << min_bytes
       << (require_score ? ", scored only" : "") << " -> " << out.documents.size() << " users";
  out.provenance = prov.str();
  return out;
}

Corpus high_risk_subset(const Corpus& corpus) {
  const std::size_t n = corpus.documents.size();
  if (n < 2) throw DataError("high_risk_subset: need at least 2 documents");
  double sum = 0.0;
  for (const auto& doc : corpus.documents) {
    if (!doc.score.has_value()) {
      throw DataError("high_risk_subset: document without score: " + doc.user_id);
    }
    sum += *doc.score;
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& doc : corpus.documents) {
    const double d = *doc.score - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double threshold = mean + sd;

  Corpus out;
  for (const auto& doc : corpus.documents) {
    if (*doc.score > threshold) out.documents.push_back(doc);
  }
  std::ostringstream prov;
  prov << corpus.provenance << "; high-risk subset (score > " << threshold << ") -> "
       << out.documents.size() << " users";
  out.provenance = prov.str();
  return out;
}

std::vector<RawMessage> load_messages_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open messages file: " + path);
  std::vector<RawMessage> messages;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("user_id") || !j.contains("text") ||
        !j["user_id"].is_string() || !j["text"].is_string()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected {\"user_id\": str, \"text\": str}");
    }
    RawMessage msg;
    msg.user_id = j["user_id"].get<std::string>();
    msg.text = j["text"].get<std::string>();
    if (msg.user_id.empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": empty user_id");
    }
    if (j.contains("is_retweet")) msg.is_retweet = j["is_retweet"].get<bool>();
    messages.push_back(std::move(msg));
  }
  return messages;
}

Corpus load_corpus_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file: " + path);
  Corpus corpus;
  corpus.provenance = "loaded from " + path;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("user_id") || !j.contains("tokens")) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected {\"user_id\", \"tokens\", \"raw_byte_length\"}");
    }
    UserDocument doc;
    doc.user_id = j["user_id"].get<std::string>();
    if (!seen.insert(doc.user_id).second) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": duplicate user_id " + doc.user_id);
    }
    doc.tokens = j["tokens"].get<std::vector<std::string>>();
    doc.raw_byte_length = j.value("raw_byte_length", std::uint64_t{0});
    if (j.contains("score") && !j["score"].is_null()) doc.score = j["score"].get<double>();
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.documents) {
    json j;
    j["user_id"] = doc.user_id;
    j["tokens"] = doc.tokens;
    j["raw_byte_length"] = doc.raw_byte_length;
    if (doc.score.has_value()) j["score"] = *doc.score;
    out << j.dump() << '\n';
  }
}

void save_corpus_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write corpus file: " + path);
  write_corpus_jsonl(corpus, out);
}

std::unordered_map<std::string, double> load_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open score file: " + path);
  const auto records = csv::read_records(in, path);
  if (records.empty() || records[0].size() < 2 || records[0][0] != "user_id" ||
      records[0][1] != "score") {
    throw ParseError(path + ": expected CSV header \"user_id,score\"");
  }
  std::unordered_map<std::string, double> scores;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& row = records[i];
    if (row.size() != 2) {
      throw ParseError(path + ": row " + std::to_string(i + 1) + ": expected 2 fields");
    }
    double value = 0.0;
    try {
      std::size_t pos = 0;
      value = std::stod(row[1], &pos);
      if (pos != row[1].size()) throw std::invalid_argument(row[1]);
    } catch (const std::exception&) {
      throw ParseError(path + ": row " + std::to_string(i + 1) + ": bad score \"" + row[1] + "\"");
    }
    if (!scores.emplace(row[0], value).second) {
      throw ParseError(path + ": row " + std::to_string(i + 1) + ": duplicate user_id " + row[0]);
    }
  }
  return scores;
}

std::size_t attach_scores(Corpus& corpus, const std::unordered_map<std::string, double>& scores) {
  std::size_t attached = 0;
  for (auto& doc : corpus.documents) {
    if (const auto it = scores.find(doc.user_id); it != scores.end()) {
      doc.score = it->second;
      ++attached;
    }
  }
  return attached;
}

}  // namespace textscore::corpus
