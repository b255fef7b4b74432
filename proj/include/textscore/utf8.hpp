#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace textscore::utf8 {

// Byte length of the UTF-8 sequence starting with `lead`; 1 for invalid
// lead bytes so scanning always advances.
std::size_t seq_length(unsigned char lead);

// Code point starting at byte offset `i`; advances `i` past it.
// Malformed sequences decode as U+FFFD one byte at a time.
char32_t decode(std::string_view s, std::size_t& i);

// Number of Unicode scalar values in `s`.
std::size_t count(std::string_view s);

// Byte offsets of every code point boundary, including s.size() as the
// final sentinel.
std::vector<std::size_t> boundaries(std::string_view s);

// Whitespace for cleaning/segmentation purposes: ASCII whitespace plus
// U+00A0 and U+3000.
bool is_space(char32_t cp);

}  // namespace textscore::utf8
