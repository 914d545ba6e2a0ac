#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "styleprobe/embedding_store.hpp"
#include "styleprobe/layer_dump.hpp"
#include "styleprobe/matrix.hpp"

namespace styleprobe {

struct Token {
  std::string surface;
  std::size_t start = 0;  // code points, end exclusive
  std::size_t end = 0;
};

struct TokenizedText {
  std::string text;
  std::vector<Token> tokens;

  std::vector<std::string> surfaces() const;
};

/// Rule-based word tokenizer.
///
/// Splits on Unicode whitespace. Punctuation characters become single-character
/// tokens, except hyphens and apostrophes with a letter or digit on both sides,
/// which stay inside the word ("cold-hearted", "don't").
TokenizedText tokenize(std::string_view text);

bool is_unicode_space(char32_t cp);
bool is_punctuation(char32_t cp);

// One entry per word. Static sources yield 1-row matrices.
struct TokenGroups {
  std::vector<Matrix> units;
  std::vector<bool> oov;  // per unit; always false for contextual sources

  std::size_t size() const { return units.size(); }
  std::size_t oov_count() const;
};

TokenGroups word_groups_static(const TokenizedText& tok, const StaticEmbeddings& store,
                               bool case_fallback = true);

// layer_matrix rows align with entry.subtokens.
TokenGroups word_groups_contextual(const DumpEntry& entry, const Matrix& layer_matrix);

}  // namespace styleprobe
