#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "styleprobe/anisotropy.hpp"
#include "styleprobe/embedding_source.hpp"
#include "styleprobe/style_vectors.hpp"

namespace styleprobe {

enum class Metric { cosine, spearman };
enum class Pooling { mean, max };

Metric parse_metric(std::string_view s);
std::string_view metric_name(Metric m);
Pooling parse_pooling(std::string_view s);
std::string_view pooling_name(Pooling p);

struct ScoreConfig {
  Metric metric = Metric::cosine;
  Pooling pooling = Pooling::mean;
  LayerSetting layer;  // ignored for static sources
  CorrectionMethod correction = CorrectionMethod::none;
  bool skip_oov = false;

  // spearman <=> rank; the rank correction implies the spearman metric.
  static ScoreConfig for_correction(CorrectionMethod correction, Pooling pooling);
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

// Cosine is 0 when either norm is 0; spearman is 0 when either rank vector is constant.
double similarity(std::span<const double> x, std::span<const double> dvec, Metric metric);
double pool(std::span<const double> scores, Pooling strategy);

struct FeatureScore {
  double value = 0.0;
  std::vector<double> token_scores;  // flattened subtoken scores in text order
  std::vector<double> word_scores;
  std::size_t oov_count = 0;
  std::size_t word_count = 0;
};

// Word scores pool subtoken scores; the text score pools word scores with the
// same strategy. OOV units are dropped when cfg.skip_oov is set; a text with no
// remaining units scores 0.
FeatureScore score_groups(const TokenGroups& groups, const FeatureVector& fvec,
                          const ScoreConfig& cfg);

FeatureScore score_text(std::string_view text, const FeatureVector& fvec,
                        const EmbeddingSource& source, const ScoreConfig& cfg);

// Throws UsageError when fvec cannot be used with source/cfg.
void check_compatible(const FeatureVector& fvec, const EmbeddingSource& source,
                      const ScoreConfig& cfg);

}  // namespace styleprobe
