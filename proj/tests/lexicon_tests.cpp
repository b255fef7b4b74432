#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "textscore/error.hpp"
#include "textscore/lexicon.hpp"
#include "textscore/rng.hpp"
#include "textscore/stats.hpp"

using namespace textscore;
using corpus::UserDocument;
using lexicon::Lexicon;

namespace {

Lexicon lex_from(const std::string& text) {
  std::istringstream in(text);
  return lexicon::parse_lexicon(in, "inline.dic");
}

const char* kSmallDic =
    "%\n"
    "1\tposemo\n"
    "2\tnegemo\n"
    "%\n"
    "happ*\t1\n"
    "sad\t2\n"
    "glad\t1\t2\n";

}  // namespace

TEST_CASE("parse_lexicon: minimal well-formed file") {
  const auto lex = lex_from("%\n1\tposemo\n%\nhapp*\t1\n");
  CHECK(lex.categories.size() == 1);
  CHECK(lex.categories.at(1) == "posemo");
  CHECK(lex.entry_count() == 1);
  CHECK(lex.prefixes.count("happ") == 1);
}

TEST_CASE("parse_lexicon: undefined category is an error naming the line") {
  std::istringstream in("%\n1\tposemo\n%\nhappy\t9\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(lexicon::parse_lexicon(in, "bad.dic")),
                       doctest::Contains("bad.dic:4"), ParseError);
}

TEST_CASE("parse_lexicon: 88 categories parse to 88 entries in categories") {
  std::string text = "%\n";
  for (int i = 1; i <= 88; ++i) text += std::to_string(i) + "\tcat" + std::to_string(i) + "\n";
  text += "%\nword\t1\n";
  const auto lex = lex_from(text);
  CHECK(lex.categories.size() == 88);
}

TEST_CASE("parse_lexicon: malformed inputs") {
  CHECK_THROWS_AS(static_cast<void>(lex_from("happy\t1\n")), ParseError);       // no header
  CHECK_THROWS_AS(static_cast<void>(lex_from("%\nx\tname\n%\nw\t1\n")), ParseError);  // bad id
  CHECK_THROWS_AS(static_cast<void>(lex_from("%\n1\ta\n1\tb\n%\nw\t1\n")), ParseError);
  CHECK_THROWS_AS(static_cast<void>(lex_from("%\n1\ta\n2\ta\n%\nw\t1\n")), ParseError);
  CHECK_THROWS_AS(static_cast<void>(lex_from("%\n1\ta\n%\nw*x\t1\n")), ParseError);  // infix *
  CHECK_THROWS_AS(static_cast<void>(lex_from("%\n1\ta\n%\nw\t1\nw\t1\n")), ParseError);
  CHECK_THROWS_AS(static_cast<void>(lex_from("%\n1\ta\n%\nw\n")), ParseError);  // no ids
  CHECK_THROWS_AS(static_cast<void>(lex_from("%\n1\ta\n%\n*\t1\n")), ParseError);  // empty stem
}

TEST_CASE("match_token: prefix, exact, union, case folding") {
  const auto lex = lex_from(kSmallDic);
  CHECK(lexicon::match_token(lex, "happy") == std::vector<int>{1});
  CHECK(lexicon::match_token(lex, "hap") == std::vector<int>{});
  CHECK(lexicon::match_token(lex, "sad") == std::vector<int>{2});
  CHECK(lexicon::match_token(lex, "sadness") == std::vector<int>{});
  CHECK(lexicon::match_token(lex, "glad") == std::vector<int>{1, 2});
  CHECK(lexicon::match_token(lex, "HAPPY") == std::vector<int>{1});
  CHECK(lexicon::match_token(lex, "SaD") == std::vector<int>{2});

  // exact and prefix entries both matching contribute their union
  const auto both = lex_from("%\n1\ta\n2\tb\n%\nhapp*\t1\nhappy\t2\n");
  CHECK(lexicon::match_token(both, "happy") == std::vector<int>{1, 2});

  // CJK entries match exactly
  const auto cjk = lex_from("%\n1\tx\n%\n我们\t1\n");
  CHECK(lexicon::match_token(cjk, "我们") == std::vector<int>{1});
  CHECK(lexicon::match_token(cjk, "我") == std::vector<int>{});
}

TEST_CASE("extract_features: normalized counts over tokens") {
  const auto lex = lex_from(kSmallDic);

  SUBCASE("hand count") {
    UserDocument doc{"u", {"happy", "sad", "happy"}, 0, std::nullopt};
    const auto fv = lexicon::extract_features(doc, lex);
    CHECK(fv.doc_length == 3);
    CHECK(fv.values.at("posemo") == doctest::Approx(2.0 / 3.0));
    CHECK(fv.values.at("negemo") == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("empty document is all zeros") {
    const auto fv = lexicon::extract_features(UserDocument{"u", {}, 0, std::nullopt}, lex);
    CHECK(fv.doc_length == 0);
    for (const auto& [name, v] : fv.values) CHECK(v == 0.0);
  }
  SUBCASE("no matches still yields every category") {
    const auto fv =
        lexicon::extract_features(UserDocument{"u", {"x", "y"}, 0, std::nullopt}, lex);
    CHECK(fv.doc_length == 2);
    CHECK(fv.values.size() == 2);
    for (const auto& [name, v] : fv.values) CHECK(v == 0.0);
  }
}

TEST_CASE("extract_features invariants") {
  const auto lex = lex_from(kSmallDic);
  Rng rng(31);
  const std::vector<std::string> pool{"happy", "happier", "sad", "glad", "meh", "无关"};

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> tokens;
    const int len = 1 + static_cast<int>(rng.uniform_int(10));
    for (int i = 0; i < len; ++i) tokens.push_back(pool[rng.uniform_int(pool.size())]);
    const UserDocument doc{"u", tokens, 0, std::nullopt};
    const auto fv = lexicon::extract_features(doc, lex);

    for (const auto& [name, v] : fv.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      // value * doc_length is an integer count
      const double count = v * static_cast<double>(fv.doc_length);
      CHECK(std::abs(count - std::round(count)) < 1e-9);
    }

    // duplicating every token changes nothing
    std::vector<std::string> doubled = tokens;
    doubled.insert(doubled.end(), tokens.begin(), tokens.end());
    const auto fv2 = lexicon::extract_features(UserDocument{"u", doubled, 0, std::nullopt}, lex);
    for (const auto& [name, v] : fv.values) {
      CHECK(fv2.values.at(name) == doctest::Approx(v).epsilon(1e-12));
    }

    // concatenation equals the token-count-weighted average
    std::vector<std::string> other;
    const int len2 = 1 + static_cast<int>(rng.uniform_int(10));
    for (int i = 0; i < len2; ++i) other.push_back(pool[rng.uniform_int(pool.size())]);
    std::vector<std::string> merged = tokens;
    merged.insert(merged.end(), other.begin(), other.end());
    const auto fv_other = lexicon::extract_features(UserDocument{"u", other, 0, std::nullopt}, lex);
    const auto fv_merged =
        lexicon::extract_features(UserDocument{"u", merged, 0, std::nullopt}, lex);
    const double wa = static_cast<double>(len);
    const double wb = static_cast<double>(len2);
    for (const auto& [name, v] : fv.values) {
      const double expect = (v * wa + fv_other.values.at(name) * wb) / (wa + wb);
      CHECK(fv_merged.values.at(name) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("write_features_csv emits one column per category in id order") {
  const auto lex = lex_from(kSmallDic);
  corpus::Corpus c;
  c.documents = {UserDocument{"u1", {"happy", "sad"}, 0, std::nullopt},
                 UserDocument{"u2", {}, 0, std::nullopt}};
  std::ostringstream out;
  lexicon::write_features_csv(c, lex, out);

  std::istringstream in(out.str());
  const auto fm = stats::read_feature_csv(in, "features.csv");
  REQUIRE(fm.column_names == std::vector<std::string>{"posemo", "negemo"});
  REQUIRE(fm.row_ids == std::vector<std::string>{"u1", "u2"});
  CHECK(fm.at(0, 0) == doctest::Approx(0.5));
  CHECK(fm.at(0, 1) == doctest::Approx(0.5));
  CHECK(fm.at(1, 0) == 0.0);
}
