#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "styleprobe/anisotropy.hpp"
#include "styleprobe/embedding_source.hpp"

namespace styleprobe {

struct SeedPair {
  std::string low;   // simple / casual / literal
  std::string high;  // complex / formal / figurative
  bool operator==(const SeedPair&) const = default;
};

struct SeedSet {
  std::string feature;
  std::vector<SeedPair> pairs;

  // FNV-1a over the feature name and the pairs in file order, as 16 hex digits.
  std::string hash() const;
};

// `low TAB high` per line, `#` comments and blank lines ignored.
SeedSet load_seed_set(const std::filesystem::path& path, const std::string& feature);
SeedSet parse_seed_set(std::istream& in, const std::string& feature,
                       const std::string& source = "<stream>");

enum class FitGranularity { token, text };

struct VectorConfig {
  CorrectionMethod correction = CorrectionMethod::none;
  std::optional<std::size_t> abtt_k;
  bool centered_projection = false;
  FitGranularity granularity = FitGranularity::token;
};

struct Provenance {
  std::string source_id;
  bool contextual = false;
  LayerSetting layer;
  CorrectionMethod correction = CorrectionMethod::none;
  bool centered_projection = false;
  FitGranularity granularity = FitGranularity::token;
  bool case_fallback = true;
  std::string seed_hash;
  std::size_t pair_count = 0;
};

struct FeatureVector {
  std::string feature;
  VectorD values;
  Correction correction;
  Provenance provenance;

  std::size_t dim() const { return values.size(); }
};

// Every token vector of every seed text (token granularity), or one mean
// vector per seed text (text granularity). Pairs in file order; within a pair
// the two texts in byte order.
MatrixD seed_fit_sample(const SeedSet& seeds, const EmbeddingSource& source,
                        FitGranularity granularity);

Correction fit_seed_correction(const SeedSet& seeds, const EmbeddingSource& source,
                               const VectorConfig& cfg);

// Mean of the (corrected) token vectors of text.
VectorD embed_seed_text(const std::string& text, const EmbeddingSource& source,
                        const Correction& correction);

/// Averages embed(high) - embed(low) over all pairs.
/// Throws NumericError when the result is the zero vector.
FeatureVector build_feature_vector(const SeedSet& seeds, const EmbeddingSource& source,
                                   const VectorConfig& cfg);

nlohmann::ordered_json feature_vector_to_json(const FeatureVector& fv);
FeatureVector feature_vector_from_json(const nlohmann::json& j);
void save_feature_vector(const FeatureVector& fv, const std::filesystem::path& path);
FeatureVector load_feature_vector(const std::filesystem::path& path);

std::string_view granularity_name(FitGranularity g);
FitGranularity parse_granularity(std::string_view s);

}  // namespace styleprobe
