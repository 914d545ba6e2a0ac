#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "styleprobe/embedding_store.hpp"
#include "styleprobe/layer_dump.hpp"
#include "styleprobe/text_pipeline.hpp"

namespace styleprobe {

enum class LayerMode { single, aggregate };

struct LayerSetting {
  LayerMode mode = LayerMode::single;
  std::size_t layer = 0;

  std::string to_string() const;  // "single(4)", "aggregate(4)"
  bool operator==(const LayerSetting&) const = default;
};

LayerMode parse_layer_mode(std::string_view s);  // single | agg | aggregate
std::string_view layer_mode_name(LayerMode m);

/// Uniform token-vector provider over a static table or a layer dump.
///
/// Contextual sources resolve texts by exact match against dump entries, so
/// every text to be scored (seeds included) must have been extracted.
class EmbeddingSource {
 public:
  static EmbeddingSource from_static(std::shared_ptr<const StaticEmbeddings> store,
                                     bool case_fallback = true);
  static EmbeddingSource from_dump(std::shared_ptr<const LayerDump> dump, LayerSetting setting);

  TokenGroups groups(std::string_view text) const;
  // Word count as seen by this source (tokens or dump words).
  std::size_t word_count(std::string_view text) const;

  bool contextual() const { return dump_ != nullptr; }
  std::size_t dim() const;
  std::string id() const;
  const LayerSetting& layer_setting() const { return setting_; }
  bool case_fallback() const { return case_fallback_; }

  const StaticEmbeddings* static_store() const { return store_.get(); }
  const LayerDump* dump() const { return dump_.get(); }

 private:
  std::shared_ptr<const StaticEmbeddings> store_;
  std::shared_ptr<const LayerDump> dump_;
  LayerSetting setting_;
  bool case_fallback_ = true;
};

}  // namespace styleprobe
