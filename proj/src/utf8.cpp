#include "styleprobe/utf8.hpp"

namespace styleprobe::utf8 {

Decoded decode(std::string_view text) {
  Decoded out;
  out.code_points.reserve(text.size());
  out.byte_offsets.reserve(text.size() + 1);
  std::size_t i = 0;
  while (i < text.size()) {
    auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    char32_t cp = 0xFFFD;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 >> 5) == 0x6) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 >> 4) == 0xE) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 >> 3) == 0x1E) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      len = 0;
    }
    bool valid = len > 0 && i + len <= text.size();
    for (std::size_t k = 1; valid && k < len; ++k) {
      auto b = static_cast<unsigned char>(text[i + k]);
      if ((b >> 6) != 0x2) valid = false;
      else cp = (cp << 6) | (b & 0x3F);
    }
    out.byte_offsets.push_back(i);
    if (valid) {
      out.code_points.push_back(cp);
      i += len;
    } else {
      out.code_points.push_back(0xFFFD);
      i += 1;
    }
  }
  out.byte_offsets.push_back(text.size());
  return out;
}

std::size_t length(std::string_view text) { return decode(text).code_points.size(); }

void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string slice(std::string_view text, std::size_t start, std::size_t end) {
  auto d = decode(text);
  std::size_t n = d.code_points.size();
  if (start > n) start = n;
  if (end > n) end = n;
  if (end < start) end = start;
  return std::string(text.substr(d.byte_offsets[start], d.byte_offsets[end] - d.byte_offsets[start]));
}

}  // namespace styleprobe::utf8
