#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "styleprobe/matrix.hpp"

namespace styleprobe {

inline constexpr int kDumpFormatVersion = 1;

struct DumpHeader {
  int format_version = kDumpFormatVersion;
  std::string model_name;
  std::size_t num_layers = 0;  // L; blocks carry L + 1 layers, layer 0 = embeddings
  std::size_t hidden_dim = 0;
  std::string tokenizer;
};

// Offsets are code-point positions into the entry text, end exclusive.
struct WordSpan {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;
};

struct SubtokenSpan {
  std::string piece;
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t word_index = 0;
};

struct DumpEntry {
  std::string text_id;
  std::string text;
  std::vector<WordSpan> words;
  std::vector<SubtokenSpan> subtokens;
  // (L + 1) x num_subtokens x d, row-major.
  std::vector<float> vectors;
  // Filled from the header by LayerDump::add_entry.
  std::size_t layers = 0;
  std::size_t dim = 0;

  std::size_t num_subtokens() const { return subtokens.size(); }
};

struct DumpViolation {
  std::string text_id;  // empty for header problems
  std::string message;
};

/// A layer-embedding dump: one JSON header line followed by one JSON line
/// per text with base64 little-endian float32 hidden states.
class LayerDump {
 public:
  LayerDump() = default;
  explicit LayerDump(DumpHeader header) : header_(std::move(header)) {}

  static LayerDump open(const std::filesystem::path& path);
  static LayerDump read(std::istream& in, const std::string& source = "<stream>");

  void write(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;

  // Validates shape and span invariants; throws FormatError naming the text_id.
  void add_entry(DumpEntry entry);

  const DumpHeader& header() const { return header_; }
  const std::vector<DumpEntry>& entries() const { return entries_; }
  const DumpEntry& entry(const std::string& text_id) const;
  // First entry whose text matches exactly, or nullptr.
  const DumpEntry* find_text(const std::string& text) const;

  std::size_t layer_count() const { return header_.num_layers + 1; }
  std::size_t dim() const { return header_.hidden_dim; }
  const std::string& id() const { return id_; }

  LayerDump scaled(float factor) const;

 private:
  DumpHeader header_;
  std::vector<DumpEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> by_text_;
  std::string id_ = "in-memory";
};

std::vector<DumpViolation> check_entry(const DumpHeader& header, const DumpEntry& entry);

// Non-throwing scan of a dump file; every violation is listed.
struct DumpReport {
  std::size_t entries = 0;
  std::vector<DumpViolation> violations;
  bool ok() const { return violations.empty(); }
};
DumpReport validate_dump(const std::filesystem::path& path);

Matrix select_layer(const DumpEntry& entry, std::size_t layer);
// Mean of layers 0..layer inclusive, accumulated in double.
Matrix aggregate_layers(const DumpEntry& entry, std::size_t layer);

}  // namespace styleprobe
