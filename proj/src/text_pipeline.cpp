#include "styleprobe/text_pipeline.hpp"

#include "styleprobe/error.hpp"
#include "styleprobe/utf8.hpp"

namespace styleprobe {
namespace {

bool is_joiner(char32_t cp) {
  return cp == U'-' || cp == U'\'' || cp == U'’' || cp == U'‐' || cp == U'‑';
}

bool is_word_char(char32_t cp) { return !is_unicode_space(cp) && !is_punctuation(cp); }

}  // namespace

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_punctuation(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
      return true;
    default:
      break;
  }
  return (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
         (cp >= 0x3001 && cp <= 0x3003) || (cp >= 0x3008 && cp <= 0x3011) ||
         (cp >= 0xFF01 && cp <= 0xFF0F);
}

std::vector<std::string> TokenizedText::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

TokenizedText tokenize(std::string_view text) {
  TokenizedText out;
  out.text = std::string(text);
  auto d = utf8::decode(text);
  const auto& cps = d.code_points;
  std::size_t n = cps.size();

  auto emit = [&](std::size_t start, std::size_t end) {
    auto b0 = d.byte_offsets[start];
    auto b1 = d.byte_offsets[end];
    out.tokens.push_back({std::string(text.substr(b0, b1 - b0)), start, end});
  };

  std::size_t i = 0;
  while (i < n) {
    if (is_unicode_space(cps[i])) {
      ++i;
      continue;
    }
    if (is_punctuation(cps[i])) {
      emit(i, i + 1);
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < n) {
      if (is_word_char(cps[i])) {
        ++i;
      } else if (is_joiner(cps[i]) && i + 1 < n && is_word_char(cps[i + 1])) {
        i += 2;
      } else {
        break;
      }
    }
    emit(start, i);
  }
  return out;
}

std::size_t TokenGroups::oov_count() const {
  std::size_t c = 0;
  for (bool b : oov) c += b ? 1 : 0;
  return c;
}

TokenGroups word_groups_static(const TokenizedText& tok, const StaticEmbeddings& store,
                               bool case_fallback) {
  TokenGroups groups;
  groups.units.reserve(tok.tokens.size());
  for (const auto& t : tok.tokens) {
    auto hit = store.lookup(t.surface, case_fallback);
    groups.units.emplace_back(1, store.dim(), std::move(hit.vector));
    groups.oov.push_back(hit.oov);
  }
  return groups;
}

TokenGroups word_groups_contextual(const DumpEntry& entry, const Matrix& layer_matrix) {
  if (layer_matrix.rows() != entry.subtokens.size()) {
    throw FormatError("entry " + entry.text_id + ": layer matrix has " +
                      std::to_string(layer_matrix.rows()) + " rows for " +
                      std::to_string(entry.subtokens.size()) + " subtokens");
  }
  TokenGroups groups;
  groups.units.resize(entry.words.size());
  groups.oov.assign(entry.words.size(), false);
  for (std::size_t i = 0; i < entry.subtokens.size(); ++i) {
    std::size_t w = entry.subtokens[i].word_index;
    if (w >= groups.units.size()) {
      throw FormatError("entry " + entry.text_id + ": word_index out of range");
    }
    groups.units[w].append_row(layer_matrix.row(i));
  }
  for (const auto& u : groups.units) {
    if (u.empty()) throw FormatError("entry " + entry.text_id + ": word without subtokens");
  }
  return groups;
}

}  // namespace styleprobe
