#include "styleprobe/layer_dump.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "styleprobe/base64.hpp"
#include "styleprobe/error.hpp"
#include "styleprobe/utf8.hpp"

namespace styleprobe {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

DumpHeader parse_header(const std::string& line, const std::string& source) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(source + ": header is not JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("format_version")) {
    throw FormatError(source + ": missing format_version in header (not a layer dump?)");
  }
  DumpHeader h;
  try {
    h.format_version = j.at("format_version").get<int>();
    if (h.format_version != kDumpFormatVersion) {
      throw FormatError(source + ": unsupported format_version " +
                        std::to_string(h.format_version));
    }
    h.model_name = j.at("model_name").get<std::string>();
    h.num_layers = j.at("num_layers").get<std::size_t>();
    h.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    h.tokenizer = j.value("tokenizer", std::string());
  } catch (const json::exception& e) {
    throw FormatError(source + ": bad header field: " + e.what());
  }
  if (h.hidden_dim == 0) throw FormatError(source + ": hidden_dim must be positive");
  return h;
}

// Structural parse only; shape and span checks happen in check_entry.
DumpEntry parse_entry(const std::string& line) {
  json j = json::parse(line);
  DumpEntry e;
  e.text_id = j.at("text_id").get<std::string>();
  e.text = j.at("text").get<std::string>();
  for (const auto& w : j.at("words")) {
    e.words.push_back({w.at(0).get<std::string>(), w.at(1).get<std::size_t>(),
                       w.at(2).get<std::size_t>()});
  }
  for (const auto& s : j.at("subtokens")) {
    e.subtokens.push_back({s.at(0).get<std::string>(), s.at(1).get<std::size_t>(),
                           s.at(2).get<std::size_t>(), s.at(3).get<std::size_t>()});
  }
  e.vectors = decode_f32_le(j.at("vectors").get<std::string>());
  return e;
}

std::string entry_id_hint(const std::string& line, std::size_t line_no) {
  try {
    auto j = json::parse(line);
    if (j.contains("text_id") && j["text_id"].is_string()) return j["text_id"].get<std::string>();
  } catch (const json::exception&) {
  }
  return "line " + std::to_string(line_no);
}

template <typename Span>
void check_spans(const std::vector<Span>& spans, std::size_t text_len, const char* what,
                 const std::string& id, std::vector<DumpViolation>& out) {
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start > s.end || s.end > text_len) {
      out.push_back({id, std::string(what) + " " + std::to_string(i) + " span [" +
                             std::to_string(s.start) + "," + std::to_string(s.end) +
                             ") outside text of length " + std::to_string(text_len)});
    } else if (s.start < prev_end) {
      out.push_back({id, std::string(what) + " " + std::to_string(i) +
                             " overlaps or precedes the previous span"});
    }
    prev_end = std::max(prev_end, s.end);
  }
}

}  // namespace

std::vector<DumpViolation> check_entry(const DumpHeader& header, const DumpEntry& entry) {
  std::vector<DumpViolation> out;
  const auto& id = entry.text_id;
  std::size_t expected = (header.num_layers + 1) * entry.subtokens.size() * header.hidden_dim;
  if (entry.vectors.size() != expected) {
    out.push_back({id, "vector block has " + std::to_string(entry.vectors.size()) +
                           " floats, expected (" + std::to_string(header.num_layers + 1) + " x " +
                           std::to_string(entry.subtokens.size()) + " x " +
                           std::to_string(header.hidden_dim) + ") = " + std::to_string(expected)});
  }
  std::size_t text_len = utf8::length(entry.text);
  check_spans(entry.words, text_len, "word", id, out);
  check_spans(entry.subtokens, text_len, "subtoken", id, out);

  std::size_t next_word = 0;
  for (std::size_t i = 0; i < entry.subtokens.size(); ++i) {
    std::size_t w = entry.subtokens[i].word_index;
    if (w >= entry.words.size()) {
      out.push_back({id, "subtoken " + std::to_string(i) + " has word_index " + std::to_string(w) +
                             " but there are " + std::to_string(entry.words.size()) + " words"});
    } else if (w + 1 < next_word) {
      out.push_back({id, "word_index decreases at subtoken " + std::to_string(i)});
    } else if (w > next_word) {
      out.push_back({id, "word " + std::to_string(next_word) + " has no subtokens"});
    }
    next_word = std::max(next_word, w + 1);
  }
  if (next_word < entry.words.size() && !entry.words.empty()) {
    out.push_back({id, "word " + std::to_string(next_word) + " has no subtokens"});
  }
  return out;
}

LayerDump LayerDump::open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open layer dump: " + path.string());
  auto dump = read(in, path.string());
  dump.id_ = path.filename().string();
  return dump;
}

LayerDump LayerDump::read(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(source + ": empty layer dump");
  LayerDump dump(parse_header(line, source));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    DumpEntry entry;
    try {
      entry = parse_entry(line);
    } catch (const json::exception& e) {
      throw FormatError(source + ": entry " + entry_id_hint(line, line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(source + ": entry " + entry_id_hint(line, line_no) + ": " + e.what());
    }
    dump.add_entry(std::move(entry));
  }
  return dump;
}

void LayerDump::add_entry(DumpEntry entry) {
  auto problems = check_entry(header_, entry);
  if (!problems.empty()) {
    throw FormatError("entry " + entry.text_id + ": " + problems.front().message);
  }
  if (by_id_.count(entry.text_id)) throw FormatError("duplicate text_id " + entry.text_id);
  entry.layers = header_.num_layers + 1;
  entry.dim = header_.hidden_dim;
  by_id_.emplace(entry.text_id, entries_.size());
  by_text_.emplace(entry.text, entries_.size());
  entries_.push_back(std::move(entry));
}

const DumpEntry& LayerDump::entry(const std::string& text_id) const {
  auto it = by_id_.find(text_id);
  if (it == by_id_.end()) throw FormatError("no dump entry with text_id " + text_id);
  return entries_[it->second];
}

const DumpEntry* LayerDump::find_text(const std::string& text) const {
  auto it = by_text_.find(text);
  return it == by_text_.end() ? nullptr : &entries_[it->second];
}

void LayerDump::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write layer dump: " + path.string());
  write(out);
}

void LayerDump::write(std::ostream& out) const {
  ordered_json h;
  h["format_version"] = header_.format_version;
  h["model_name"] = header_.model_name;
  h["num_layers"] = header_.num_layers;
  h["hidden_dim"] = header_.hidden_dim;
  h["tokenizer"] = header_.tokenizer;
  out << h.dump() << '\n';
  for (const auto& e : entries_) {
    ordered_json j;
    j["text_id"] = e.text_id;
    j["text"] = e.text;
    j["words"] = ordered_json::array();
    for (const auto& w : e.words) j["words"].push_back({w.surface, w.start, w.end});
    j["subtokens"] = ordered_json::array();
    for (const auto& s : e.subtokens) {
      j["subtokens"].push_back({s.piece, s.start, s.end, s.word_index});
    }
    j["vectors"] = encode_f32_le(e.vectors);
    out << j.dump() << '\n';
  }
}

LayerDump LayerDump::scaled(float factor) const {
  LayerDump copy = *this;
  for (auto& e : copy.entries_) {
    for (auto& v : e.vectors) v *= factor;
  }
  return copy;
}

DumpReport validate_dump(const std::filesystem::path& path) {
  DumpReport report;
  std::ifstream in(path);
  if (!in) {
    report.violations.push_back({"", "cannot open " + path.string()});
    return report;
  }
  std::string line;
  if (!std::getline(in, line)) {
    report.violations.push_back({"", "empty file"});
    return report;
  }
  DumpHeader header;
  try {
    header = parse_header(line, path.string());
  } catch (const FormatError& e) {
    report.violations.push_back({"", e.what()});
    return report;
  }
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++report.entries;
    DumpEntry entry;
    try {
      entry = parse_entry(line);
    } catch (const std::exception& e) {
      report.violations.push_back({entry_id_hint(line, line_no), e.what()});
      continue;
    }
    if (seen.count(entry.text_id)) {
      report.violations.push_back({entry.text_id, "duplicate text_id"});
    }
    seen.emplace(entry.text_id, line_no);
    for (auto& v : check_entry(header, entry)) report.violations.push_back(std::move(v));
  }
  return report;
}

Matrix select_layer(const DumpEntry& entry, std::size_t layer) {
  if (layer >= entry.layers) {
    throw UsageError("layer " + std::to_string(layer) + " out of range 0.." +
                     std::to_string(entry.layers - 1));
  }
  std::size_t t = entry.num_subtokens();
  std::size_t block = t * entry.dim;
  auto first = entry.vectors.begin() + static_cast<std::ptrdiff_t>(layer * block);
  return Matrix(t, entry.dim, std::vector<float>(first, first + static_cast<std::ptrdiff_t>(block)));
}

Matrix aggregate_layers(const DumpEntry& entry, std::size_t layer) {
  if (layer >= entry.layers) {
    throw UsageError("layer " + std::to_string(layer) + " out of range 0.." +
                     std::to_string(entry.layers - 1));
  }
  std::size_t block = entry.num_subtokens() * entry.dim;
  std::vector<double> sum(block, 0.0);
  for (std::size_t l = 0; l <= layer; ++l) {
    const float* src = entry.vectors.data() + l * block;
    for (std::size_t i = 0; i < block; ++i) sum[i] += src[i];
  }
  std::vector<float> mean(block);
  double count = static_cast<double>(layer + 1);
  for (std::size_t i = 0; i < block; ++i) mean[i] = static_cast<float>(sum[i] / count);
  return Matrix(entry.num_subtokens(), entry.dim, std::move(mean));
}

}  // namespace styleprobe
