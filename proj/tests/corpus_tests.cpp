#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "textscore/corpus.hpp"
#include "textscore/error.hpp"
#include "textscore/rng.hpp"
#include "textscore/utf8.hpp"

using namespace textscore;
using corpus::CleanOptions;
using corpus::Corpus;
using corpus::RawMessage;
using corpus::Segmenter;
using corpus::SegmenterMode;
using corpus::UserDocument;

namespace {

RawMessage msg(const std::string& user, const std::string& text) { return {user, text, false}; }

std::string tmp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("clean_message strips retweet tails, urls, mentions, tags, emoticons") {
  CHECK(corpus::clean_message(msg("u", "今天天气 //@someone: 转发内容")) == "今天天气");
  CHECK(corpus::clean_message(msg("u", "")) == "");
  CHECK(corpus::clean_message(msg("u", "hello http://t.cn/abc world")) == "hello world");
  CHECK(corpus::clean_message(msg("u", "hi @张三 there")) == "hi there");
  CHECK(corpus::clean_message(msg("u", "看 #今日话题# 了吗")) == "看 了吗");
  CHECK(corpus::clean_message(msg("u", "看 #今日话题# 了吗"), CleanOptions{true}) == "看 今日话题 了吗");
  CHECK(corpus::clean_message(msg("u", "哈哈[偷笑]好")) == "哈哈 好");
  CHECK(corpus::clean_message(msg("u", "a https://example.com/x?q=1 b")) == "a b");
  // a lone '@' and an unclosed bracket stay literal
  CHECK(corpus::clean_message(msg("u", "price @ 5")) == "price @ 5");
  CHECK(corpus::clean_message(msg("u", "array[index other")) == "array[index other");
  // pure repost: everything is quoted
  CHECK(corpus::clean_message(msg("u", "//@a: 原文")) == "");
}

TEST_CASE("segment: pre_segmented splits on whitespace") {
  Segmenter seg(SegmenterMode::pre_segmented, {}, {});
  CHECK(seg.segment("a b c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(seg.segment("  a\t b\n") == std::vector<std::string>{"a", "b"});
  CHECK(seg.segment("") == std::vector<std::string>{});
}

TEST_CASE("segment: forward maximum matching") {
  Segmenter seg(SegmenterMode::max_match, {"中国", "人民"}, {});
  CHECK(seg.segment("中国人民") == std::vector<std::string>{"中国", "人民"});

  Segmenter longest(SegmenterMode::max_match, {"中国", "中国人"}, {});
  CHECK(longest.segment("中国人") == std::vector<std::string>{"中国人"});

  // unmatched spans fall back to single characters
  CHECK(seg.segment("大中国人民啊") ==
        std::vector<std::string>{"大", "中国", "人民", "啊"});
}

TEST_CASE("segment: max_match without dictionary is a configuration error") {
  CHECK_THROWS_AS(Segmenter(SegmenterMode::max_match, {}, {}), ConfigError);
  corpus::SegmenterConfig cfg{SegmenterMode::max_match, "", ""};
  CHECK_THROWS_AS(Segmenter::from_config(cfg), ConfigError);
}

TEST_CASE("segment: max_match coverage property") {
  Segmenter seg(SegmenterMode::max_match, {"中国", "人民", "天气", "中国人"}, {});
  Rng rng(7);
  const std::vector<std::string> atoms{"中", "国", "人", "民", "天", "气", "好", " ", "x"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const int len = static_cast<int>(rng.uniform_int(30));
    for (int i = 0; i < len; ++i) text += atoms[rng.uniform_int(atoms.size())];

    std::string joined;
    for (const auto& tok : seg.segment(text)) joined += tok;

    std::string no_space;
    for (std::size_t i = 0; i < text.size();) {
      const std::size_t start = i;
      if (!utf8::is_space(utf8::decode(text, i))) no_space += text.substr(start, i - start);
    }
    CHECK(joined == no_space);
  }
}

TEST_CASE("filter_tokens removes stopwords and single-scalar tokens") {
  const std::unordered_set<std::string> stop{"我"};
  CHECK(corpus::filter_tokens({"我", "中国", "好"}, stop) == std::vector<std::string>{"中国"});
  CHECK(corpus::filter_tokens({}, {}) == std::vector<std::string>{});
  CHECK(corpus::filter_tokens({"人民", "人民"}, {}) ==
        std::vector<std::string>{"人民", "人民"});
}

TEST_CASE("filter_tokens is idempotent") {
  Rng rng(11);
  const std::vector<std::string> pool{"我", "中国", "好", "人民", "aa", "b", "天气"};
  const std::unordered_set<std::string> stop{"我", "aa"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> tokens;
    const int len = static_cast<int>(rng.uniform_int(12));
    for (int i = 0; i < len; ++i) tokens.push_back(pool[rng.uniform_int(pool.size())]);
    const auto once = corpus::filter_tokens(tokens, stop);
    CHECK(corpus::filter_tokens(once, stop) == once);
  }
}

TEST_CASE("aggregate_users groups by user and sums cleaned byte length") {
  Segmenter seg(SegmenterMode::pre_segmented, {}, {});

  SUBCASE("grouping") {
    const auto c = corpus::aggregate_users(
        {msg("A", "aa bb"), msg("B", "cc dd"), msg("A", "ee ff")}, seg);
    REQUIRE(c.documents.size() == 2);
    CHECK(c.documents[0].user_id == "A");
    CHECK(c.documents[0].tokens == std::vector<std::string>{"aa", "bb", "ee", "ff"});
    CHECK(c.documents[1].user_id == "B");
  }

  SUBCASE("all-empty messages leave an empty document") {
    const auto c = corpus::aggregate_users({msg("A", "//@x: gone")}, seg);
    REQUIRE(c.documents.size() == 1);
    CHECK(c.documents[0].tokens.empty());
    CHECK(c.documents[0].raw_byte_length == 0);
  }

  SUBCASE("byte lengths sum over messages") {
    // cleaned texts of 10, 20 and 30 bytes
    const auto c = corpus::aggregate_users({msg("A", "aaaa aaaaa"),
                                            msg("A", "bbbbbbbbb bbbbbbbbbb"),
                                            msg("A", "cccccccccccccc ccccccccccccccc")},
                                           seg);
    REQUIRE(c.documents.size() == 1);
    CHECK(c.documents[0].raw_byte_length == 60);
  }
}

TEST_CASE("aggregation preserves the per-message filtered token multiset") {
  Segmenter seg(SegmenterMode::pre_segmented, {}, {"stop"});
  Rng rng(23);
  const std::vector<std::string> words{"alpha", "beta", "stop", "x", "gamma"};
  std::vector<RawMessage> messages;
  std::size_t expected = 0;
  for (int i = 0; i < 40; ++i) {
    std::string text;
    const int len = 1 + static_cast<int>(rng.uniform_int(6));
    for (int t = 0; t < len; ++t) {
      if (t) text += ' ';
      text += words[rng.uniform_int(words.size())];
    }
    const auto user = "u" + std::to_string(rng.uniform_int(5));
    messages.push_back(msg(user, text));
    expected += corpus::filter_tokens(seg.segment(corpus::clean_message(messages.back())),
                                      seg.stopwords())
                    .size();
  }
  const auto c = corpus::aggregate_users(messages, seg);
  std::size_t total = 0;
  for (const auto& doc : c.documents) total += doc.tokens.size();
  CHECK(total == expected);
}

TEST_CASE("filter_users applies the byte cutoff strictly") {
  Corpus c;
  c.documents = {UserDocument{"a", {"xx"}, 20479, 1.0},
                 UserDocument{"b", {"xx"}, 20480, std::nullopt},
                 UserDocument{"c", {"xx"}, 30000, 2.0}};

  const auto filtered = corpus::filter_users(c, 20480, false);
  REQUIRE(filtered.documents.size() == 2);
  CHECK(filtered.documents[0].user_id == "b");

  const auto unchanged = corpus::filter_users(c, 0, false);
  CHECK(unchanged.documents.size() == 3);

  const auto scored = corpus::filter_users(c, 0, true);
  REQUIRE(scored.documents.size() == 2);
  CHECK(scored.documents[0].user_id == "a");

  SUBCASE("monotone in min_bytes") {
    Rng rng(3);
    Corpus big;
    for (int i = 0; i < 60; ++i) {
      big.documents.push_back(
          UserDocument{"u" + std::to_string(i), {"xx"}, rng.uniform_int(40000), std::nullopt});
    }
    for (const auto& [lo, hi] : {std::pair{1000u, 2000u}, {0u, 39999u}, {10000u, 10001u}}) {
      const auto loose = corpus::filter_users(big, lo, false);
      const auto tight = corpus::filter_users(big, hi, false);
      for (const auto& doc : tight.documents) {
        const bool in_loose =
            std::any_of(loose.documents.begin(), loose.documents.end(),
                        [&](const UserDocument& d) { return d.user_id == doc.user_id; });
        CHECK(in_loose);
      }
    }
  }
}

TEST_CASE("high_risk_subset keeps scores above mean + sample sd") {
  const auto make = [](std::vector<double> scores) {
    Corpus c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      c.documents.push_back(UserDocument{"u" + std::to_string(i), {"xx"}, 100, scores[i]});
    }
    return c;
  };

  SUBCASE("hand-computed: {1,1,1,1,10}") {
    // mean 2.8, sample sd ~4.0249, threshold ~6.8249
    const auto hr = corpus::high_risk_subset(make({1, 1, 1, 1, 10}));
    REQUIRE(hr.documents.size() == 1);
    CHECK(hr.documents[0].user_id == "u4");
  }
  SUBCASE("all equal scores select nothing") {
    CHECK(corpus::high_risk_subset(make({5, 5, 5})).documents.empty());
  }
  SUBCASE("hand-computed: {0,10} selects nothing") {
    // mean 5, sample sd ~7.071, threshold ~12.071
    CHECK(corpus::high_risk_subset(make({0, 10})).documents.empty());
  }
  SUBCASE("two-point corpora always come back empty") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const double a = rng.normal(0, 10);
      const double b = a + rng.uniform01() * 20;
      CHECK(corpus::high_risk_subset(make({a, b})).documents.empty());
    }
  }
  SUBCASE("output is a subset and every kept score exceeds the threshold") {
    Rng rng(9);
    std::vector<double> scores;
    for (int i = 0; i < 40; ++i) scores.push_back(rng.normal(20, 8));
    const auto corpus_in = make(scores);
    const auto hr = corpus::high_risk_subset(corpus_in);
    CHECK(hr.documents.size() < corpus_in.documents.size());
    const double mean = [&] {
      double s = 0;
      for (const double v : scores) s += v;
      return s / scores.size();
    }();
    double ss = 0;
    for (const double v : scores) ss += (v - mean) * (v - mean);
    const double threshold = mean + std::sqrt(ss / (scores.size() - 1));
    for (const auto& doc : hr.documents) CHECK(*doc.score > threshold);
  }
  SUBCASE("errors") {
    auto c = make({1, 2, 3});
    c.documents[1].score.reset();
    CHECK_THROWS_AS(corpus::high_risk_subset(c), DataError);
    CHECK_THROWS_AS(corpus::high_risk_subset(make({1})), DataError);
  }
}

TEST_CASE("corpus JSONL round-trip") {
  Corpus c;
  c.provenance = "test";
  c.documents = {UserDocument{"alice", {"中国", "人民"}, 1234, 17.5},
                 UserDocument{"bob", {"aa"}, 9, std::nullopt}};
  const auto path = tmp_file("ts_corpus_rt.jsonl", "");
  corpus::save_corpus_jsonl(c, path);
  const auto back = corpus::load_corpus_jsonl(path);
  REQUIRE(back.documents.size() == 2);
  CHECK(back.documents[0].user_id == "alice");
  CHECK(back.documents[0].tokens == c.documents[0].tokens);
  CHECK(back.documents[0].raw_byte_length == 1234);
  CHECK(back.documents[0].score == 17.5);
  CHECK_FALSE(back.documents[1].score.has_value());
  std::remove(path.c_str());
}

TEST_CASE("message JSONL loading validates lines") {
  const auto good = tmp_file("ts_msgs.jsonl",
                             R"({"user_id":"a","text":"hi"})"
                             "\n"
                             R"({"user_id":"b","text":"yo","is_retweet":true})"
                             "\n");
  const auto msgs = corpus::load_messages_jsonl(good);
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[1].is_retweet);
  std::remove(good.c_str());

  const auto bad = tmp_file("ts_msgs_bad.jsonl", "{\"user_id\":\"a\",\"text\":\"hi\"}\nnot json\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(corpus::load_messages_jsonl(bad)),
                       doctest::Contains(":2:"), ParseError);
  std::remove(bad.c_str());

  const auto empty_user = tmp_file("ts_msgs_eu.jsonl", "{\"user_id\":\"\",\"text\":\"hi\"}\n");
  CHECK_THROWS_AS(static_cast<void>(corpus::load_messages_jsonl(empty_user)), ParseError);
  std::remove(empty_user.c_str());
}

TEST_CASE("score CSV loading and attachment") {
  const auto path = tmp_file("ts_scores.csv", "user_id,score\na,12.5\nb,-3\n");
  const auto scores = corpus::load_scores_csv(path);
  CHECK(scores.at("a") == 12.5);
  CHECK(scores.at("b") == -3.0);
  std::remove(path.c_str());

  Corpus c;
  c.documents = {UserDocument{"a", {}, 0, std::nullopt}, UserDocument{"x", {}, 0, std::nullopt}};
  CHECK(corpus::attach_scores(c, scores) == 1);
  CHECK(c.documents[0].score == 12.5);
  CHECK_FALSE(c.documents[1].score.has_value());

  const auto bad_header = tmp_file("ts_scores_bad.csv", "uid,value\na,1\n");
  CHECK_THROWS_AS(static_cast<void>(corpus::load_scores_csv(bad_header)), ParseError);
  std::remove(bad_header.c_str());

  const auto dup = tmp_file("ts_scores_dup.csv", "user_id,score\na,1\na,2\n");
  CHECK_THROWS_AS(static_cast<void>(corpus::load_scores_csv(dup)), ParseError);
  std::remove(dup.c_str());
}
