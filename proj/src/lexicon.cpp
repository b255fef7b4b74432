#include "textscore/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "textscore/csv.hpp"
#include "textscore/error.hpp"

namespace textscore::lexicon {

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == '\t' || c == ' ') {
      if (!cur.empty()) fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) fields.push_back(std::move(cur));
  return fields;
}

[[noreturn]] void fail(const std::string& source, std::size_t line_no, const std::string& msg) {
  throw ParseError(source + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace

Lexicon parse_lexicon(std::istream& in, const std::string& source_name) {
  Lexicon lex;
  std::string line;
  std::size_t line_no = 0;
  int section = 0;  // 0 = before header, 1 = header, 2 = entries

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;

    if (line.compare(first, 1, "%") == 0) {
      if (section > 1) fail(source_name, line_no, "unexpected '%' in entry section");
      ++section;
      continue;
    }

    if (section == 0) fail(source_name, line_no, "expected '%' to open the category header");

    const auto fields = split_fields(line);
    if (section == 1) {
      if (fields.size() != 2) fail(source_name, line_no, "expected \"id<TAB>name\"");
      int id = 0;
      try {
        std::size_t pos = 0;
        id = std::stoi(fields[0], &pos);
        if (pos != fields[0].size()) throw std::invalid_argument(fields[0]);
      } catch (const std::exception&) {
        fail(source_name, line_no, "bad category id \"" + fields[0] + "\"");
      }
      for (const auto& [other_id, other_name] : lex.categories) {
        if (other_name == fields[1]) {
          fail(source_name, line_no, "duplicate category name \"" + fields[1] + "\"");
        }
      }
      if (!lex.categories.emplace(id, fields[1]).second) {
        fail(source_name, line_no, "duplicate category id " + fields[0]);
      }
      continue;
    }

    // entry line
    if (fields.size() < 2) fail(source_name, line_no, "expected \"word<TAB>id...\"");
    std::string pattern = ascii_lower(fields[0]);
    const auto star = pattern.find('*');
    const bool is_prefix = star != std::string::npos;
    if (is_prefix && star != pattern.size() - 1) {
      fail(source_name, line_no, "wildcard '*' is only supported as a suffix");
    }
    if (is_prefix) pattern.pop_back();
    if (pattern.empty()) fail(source_name, line_no, "empty pattern");

    std::set<int> ids;
    for (std::size_t f = 1; f < fields.size(); ++f) {
      int id = 0;
      try {
        std::size_t pos = 0;
        id = std::stoi(fields[f], &pos);
        if (pos != fields[f].size()) throw std::invalid_argument(fields[f]);
      } catch (const std::exception&) {
        fail(source_name, line_no, "bad category id \"" + fields[f] + "\"");
      }
      if (!lex.categories.contains(id)) {
        fail(source_name, line_no, "entry references undefined category " + std::to_string(id));
      }
      ids.insert(id);
    }
    auto& table = is_prefix ? lex.prefixes : lex.exact;
    if (!table.emplace(pattern, std::vector<int>(ids.begin(), ids.end())).second) {
      fail(source_name, line_no, "duplicate pattern \"" + fields[0] + "\"");
    }
  }

  if (section < 2) throw ParseError(source_name + ": missing '%'-delimited category header");
  if (lex.categories.empty()) throw ParseError(source_name + ": no categories defined");
  return lex;
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon: " + path);
  return parse_lexicon(in, path);
}

std::vector<int> match_token(const Lexicon& lex, std::string_view token) {
  const std::string lowered = ascii_lower(token);
  std::set<int> ids;
  if (const auto it = lex.exact.find(lowered); it != lex.exact.end()) {
    ids.insert(it->second.begin(), it->second.end());
  }
  // Prefix stems can end at any byte of the token; only stored stems hit.
  for (std::size_t len = 1; len <= lowered.size(); ++len) {
    if (const auto it = lex.prefixes.find(lowered.substr(0, len)); it != lex.prefixes.end()) {
      ids.insert(it->second.begin(), it->second.end());
    }
  }
  return {ids.begin(), ids.end()};
}

CategoryFeatureVector extract_features(const corpus::UserDocument& doc, const Lexicon& lex) {
  CategoryFeatureVector fv;
  fv.user_id = doc.user_id;
  fv.doc_length = doc.tokens.size();

  std::map<int, std::size_t> counts;
  for (const auto& token : doc.tokens) {
    for (int id : match_token(lex, token)) ++counts[id];
  }
  for (const auto& [id, name] : lex.categories) {
    const auto it = counts.find(id);
    const double count = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    fv.values[name] = fv.doc_length == 0 ? 0.0 : count / static_cast<double>(fv.doc_length);
  }
  return fv;
}

void write_features_csv(const corpus::Corpus& corpus, const Lexicon& lex, std::ostream& out) {
  std::vector<std::string> header{"user_id"};
  for (const auto& [id, name] : lex.categories) header.push_back(name);
  csv::write_row(out, header);

  for (const auto& doc : corpus.documents) {
    const auto fv = extract_features(doc, lex);
    std::vector<std::string> row{doc.user_id};
    for (const auto& [id, name] : lex.categories) {
      row.push_back(csv::format_double(fv.values.at(name)));
    }
    csv::write_row(out, row);
  }
}

}  // namespace textscore::lexicon
