#include "textscore/utf8.hpp"

namespace textscore::utf8 {

std::size_t seq_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 1;
}

char32_t decode(std::string_view s, std::size_t& i) {
  const auto lead = static_cast<unsigned char>(s[i]);
  std::size_t len = seq_length(lead);
  if (i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  char32_t cp = 0;
  switch (len) {
    case 1:
      cp = lead;
      break;
    case 2:
      cp = lead & 0x1F;
      break;
    case 3:
      cp = lead & 0x0F;
      break;
    default:
      cp = lead & 0x07;
      break;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto cont = static_cast<unsigned char>(s[i + k]);
    if ((cont & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (cont & 0x3F);
  }
  i += len;
  return cp;
}

std::size_t count(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t len = seq_length(static_cast<unsigned char>(s[i]));
    if (i + len > s.size()) len = 1;
    i += len;
    ++n;
  }
  return n;
}

std::vector<std::size_t> boundaries(std::string_view s) {
  std::vector<std::size_t> offs;
  offs.reserve(s.size() / 2 + 2);
  for (std::size_t i = 0; i < s.size();) {
    offs.push_back(i);
    std::size_t len = seq_length(static_cast<unsigned char>(s[i]));
    if (i + len > s.size()) len = 1;
    i += len;
  }
  offs.push_back(s.size());
  return offs;
}

bool is_space(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case 0x0B:
    case 0x0C:
    case 0x00A0:
    case 0x3000:
      return true;
    default:
      return false;
  }
}

}  // namespace textscore::utf8
