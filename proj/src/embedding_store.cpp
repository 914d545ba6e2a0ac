#include "styleprobe/embedding_store.hpp"

#include <charconv>
#include <fstream>
#include <iostream>

#include "styleprobe/error.hpp"

namespace styleprobe {
namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
    fields.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return fields;
}

bool parse_integer(std::string_view s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_float(std::string_view s, float& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

StaticEmbeddings StaticEmbeddings::load(const std::filesystem::path& path,
                                        std::optional<std::size_t> expected_dim) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file: " + path.string());

  StaticEmbeddings store;
  store.id_ = path.filename().string();
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  Vector values;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_spaces(line);
    if (fields.empty()) continue;
    ++store.stats_.lines;

    if (line_no == 1 && fields.size() == 2) {
      std::size_t count = 0, header_dim = 0;
      if (parse_integer(fields[0], count) && parse_integer(fields[1], header_dim)) {
        if (header_dim == 0) throw FormatError("header declares zero dimension");
        store.stats_.header = true;
        dim = header_dim;
        continue;
      }
    }

    if (fields.size() < 2) {
      ++store.stats_.malformed;
      continue;
    }
    std::size_t line_dim = fields.size() - 1;
    if (dim == 0) dim = line_dim;
    if (line_dim != dim) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(dim) + " values, found " + std::to_string(line_dim));
    }
    values.resize(dim);
    bool ok = true;
    for (std::size_t i = 0; i < dim && ok; ++i) ok = parse_float(fields[i + 1], values[i]);
    if (!ok) {
      ++store.stats_.malformed;
      continue;
    }

    std::string word(fields[0]);
    auto it = store.index_.find(word);
    if (it != store.index_.end()) {
      ++store.stats_.duplicates;
      std::copy(values.begin(), values.end(), store.matrix_.row(it->second).begin());
    } else {
      store.index_.emplace(word, store.words_.size());
      store.words_.push_back(std::move(word));
      store.matrix_.append_row(values);
    }
  }

  if (store.words_.empty()) throw FormatError("no word vectors in " + path.string());
  if (expected_dim && *expected_dim != dim) {
    throw FormatError(path.string() + ": dimension " + std::to_string(dim) + " but expected " +
                      std::to_string(*expected_dim));
  }
  if (store.stats_.duplicates > 0) {
    std::cerr << "warning: " << store.stats_.duplicates << " duplicate words in " << path.string()
              << " (last occurrence kept)\n";
  }
  return store;
}

StaticEmbeddings StaticEmbeddings::from_rows(std::span<const std::string> words, Matrix rows,
                                             std::string id) {
  if (words.size() != rows.rows()) throw FormatError("word count does not match row count");
  if (words.empty() || rows.cols() == 0) throw FormatError("empty embedding table");
  StaticEmbeddings store;
  store.id_ = std::move(id);
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto it = store.index_.find(words[i]);
    if (it != store.index_.end()) {
      ++store.stats_.duplicates;
      auto src = rows.row(i);
      std::copy(src.begin(), src.end(), store.matrix_.row(it->second).begin());
    } else {
      store.index_.emplace(words[i], store.words_.size());
      store.words_.push_back(words[i]);
      store.matrix_.append_row(rows.row(i));
    }
  }
  store.stats_.lines = words.size();
  return store;
}

std::optional<std::size_t> StaticEmbeddings::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Lookup StaticEmbeddings::lookup(std::string_view word, bool case_fallback) const {
  Lookup result;
  auto idx = index_of(word);
  if (!idx && case_fallback) {
    auto lower = ascii_lower(word);
    if (lower != word) {
      idx = index_of(lower);
      result.case_folded = idx.has_value();
    }
  }
  if (idx) {
    auto r = matrix_.row(*idx);
    result.vector.assign(r.begin(), r.end());
  } else {
    result.vector.assign(dim(), 0.0f);
    result.oov = true;
  }
  return result;
}

StaticEmbeddings StaticEmbeddings::scaled(float factor) const {
  StaticEmbeddings copy = *this;
  for (auto& v : copy.matrix_.data()) v *= factor;
  return copy;
}

}  // namespace styleprobe
