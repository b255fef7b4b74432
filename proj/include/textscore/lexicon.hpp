#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textscore/corpus.hpp"

namespace textscore::lexicon {

// Category dictionary in the classic .dic layout: a "%"-delimited header of
// "id<TAB>name" pairs followed by "word<TAB>id[<TAB>id...]" entries. A
// trailing '*' on a word makes it a prefix pattern; '*' anywhere else is
// rejected. Matching is case-insensitive for ASCII letters.
struct Lexicon {
  std::map<int, std::string> categories;                       // id -> name
  std::unordered_map<std::string, std::vector<int>> exact;     // word -> sorted ids
  std::unordered_map<std::string, std::vector<int>> prefixes;  // stem -> sorted ids

  std::size_t entry_count() const { return exact.size() + prefixes.size(); }
};

Lexicon load_lexicon(const std::string& path);
Lexicon parse_lexicon(std::istream& in, const std::string& source_name);

// Union of the categories of every entry matching `token` (exact entries on
// the whole token, prefix entries on any leading stem). Sorted, deduplicated.
std::vector<int> match_token(const Lexicon& lex, std::string_view token);

struct CategoryFeatureVector {
  std::string user_id;
  std::map<std::string, double> values;  // category name -> count / doc_length
  std::size_t doc_length = 0;
};

// Normalized category frequencies over the document's tokens. Every category
// is present; an empty document yields an all-zero vector.
CategoryFeatureVector extract_features(const corpus::UserDocument& doc, const Lexicon& lex);

// CSV: user_id column, then one column per category in id order.
void write_features_csv(const corpus::Corpus& corpus, const Lexicon& lex, std::ostream& out);

}  // namespace textscore::lexicon
