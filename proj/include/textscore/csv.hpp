#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace textscore::csv {

// Shortest decimal representation that round-trips exactly.
std::string format_double(double v);

// RFC-4180 quoting: wraps the field when it contains a comma, quote, or
// newline, doubling embedded quotes.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Reads all records, honoring quoted fields (which may contain commas and
// newlines). Throws ParseError on an unterminated quote.
std::vector<std::vector<std::string>> read_records(std::istream& in, const std::string& source_name);

}  // namespace textscore::csv
