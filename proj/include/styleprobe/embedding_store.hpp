#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "styleprobe/matrix.hpp"

namespace styleprobe {

struct StaticLoadStats {
  std::size_t lines = 0;
  std::size_t malformed = 0;   // skipped lines (non-numeric values, missing fields)
  std::size_t duplicates = 0;  // repeated words; the last occurrence wins
  bool header = false;
};

struct Lookup {
  Vector vector;
  bool oov = false;
  bool case_folded = false;  // found only through the lowercase fallback
};

/// Word-vector table loaded from the plain-text `word v1 ... vd` format.
///
/// An optional first line of exactly two integers is read as a `count dim`
/// header. Rows are stored as float32. Out-of-vocabulary words resolve to
/// the all-zero vector, optionally after a lowercase retry.
class StaticEmbeddings {
 public:
  static StaticEmbeddings load(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_dim = std::nullopt);

  // Last duplicate wins, as in load().
  static StaticEmbeddings from_rows(std::span<const std::string> words, Matrix rows,
                                    std::string id = "in-memory");

  Lookup lookup(std::string_view word, bool case_fallback = true) const;
  std::optional<std::size_t> index_of(std::string_view word) const;

  std::size_t dim() const { return matrix_.cols(); }
  std::size_t size() const { return words_.size(); }
  std::span<const float> row(std::size_t index) const { return matrix_.row(index); }
  const std::string& word(std::size_t index) const { return words_[index]; }
  const std::string& id() const { return id_; }
  const StaticLoadStats& stats() const { return stats_; }

  StaticEmbeddings scaled(float factor) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  Matrix matrix_;
  std::string id_;
  StaticLoadStats stats_;
};

std::string ascii_lower(std::string_view s);

}  // namespace styleprobe
