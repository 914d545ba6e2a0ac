#include "styleprobe/embedding_source.hpp"

#include "styleprobe/error.hpp"

namespace styleprobe {

std::string LayerSetting::to_string() const {
  return std::string(layer_mode_name(mode)) + "(" + std::to_string(layer) + ")";
}

LayerMode parse_layer_mode(std::string_view s) {
  if (s == "single") return LayerMode::single;
  if (s == "agg" || s == "aggregate") return LayerMode::aggregate;
  throw UsageError("unknown layer setting '" + std::string(s) + "' (expected single or agg)");
}

std::string_view layer_mode_name(LayerMode m) {
  return m == LayerMode::single ? "single" : "aggregate";
}

EmbeddingSource EmbeddingSource::from_static(std::shared_ptr<const StaticEmbeddings> store,
                                             bool case_fallback) {
  if (!store) throw UsageError("null static store");
  EmbeddingSource src;
  src.store_ = std::move(store);
  src.case_fallback_ = case_fallback;
  return src;
}

EmbeddingSource EmbeddingSource::from_dump(std::shared_ptr<const LayerDump> dump,
                                           LayerSetting setting) {
  if (!dump) throw UsageError("null layer dump");
  if (setting.layer > dump->header().num_layers) {
    throw UsageError("layer " + std::to_string(setting.layer) + " out of range 0.." +
                     std::to_string(dump->header().num_layers));
  }
  EmbeddingSource src;
  src.dump_ = std::move(dump);
  src.setting_ = setting;
  return src;
}

std::size_t EmbeddingSource::dim() const { return dump_ ? dump_->dim() : store_->dim(); }

std::string EmbeddingSource::id() const {
  if (dump_) return dump_->id() + ":" + dump_->header().model_name;
  return store_->id();
}

TokenGroups EmbeddingSource::groups(std::string_view text) const {
  if (!dump_) return word_groups_static(tokenize(text), *store_, case_fallback_);
  const DumpEntry* entry = dump_->find_text(std::string(text));
  if (!entry) {
    throw FormatError("text not present in layer dump " + dump_->id() + ": \"" +
                      std::string(text) + "\"");
  }
  Matrix m = setting_.mode == LayerMode::single ? select_layer(*entry, setting_.layer)
                                                : aggregate_layers(*entry, setting_.layer);
  return word_groups_contextual(*entry, m);
}

std::size_t EmbeddingSource::word_count(std::string_view text) const {
  if (!dump_) return tokenize(text).tokens.size();
  const DumpEntry* entry = dump_->find_text(std::string(text));
  return entry ? entry->words.size() : tokenize(text).tokens.size();
}

}  // namespace styleprobe
