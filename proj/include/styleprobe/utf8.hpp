#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace styleprobe::utf8 {

// Decodes UTF-8 into code points, recording the byte offset of each.
// Invalid sequences decode as U+FFFD, one byte at a time.
struct Decoded {
  std::vector<char32_t> code_points;
  std::vector<std::size_t> byte_offsets;  // size() == code_points.size() + 1
};

Decoded decode(std::string_view text);
std::size_t length(std::string_view text);
void append(std::string& out, char32_t cp);

// Substring by code point range [start, end).
std::string slice(std::string_view text, std::size_t start, std::size_t end);

}  // namespace styleprobe::utf8
