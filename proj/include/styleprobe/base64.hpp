#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace styleprobe {

std::string base64_encode(std::span<const std::uint8_t> bytes);

// Throws FormatError on characters outside the standard alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Little-endian float32/float64 arrays, independent of host byte order.
std::string encode_f32_le(std::span<const float> values);
std::vector<float> decode_f32_le(std::string_view b64);
std::string encode_f64_le(std::span<const double> values);
std::vector<double> decode_f64_le(std::string_view b64);

}  // namespace styleprobe
