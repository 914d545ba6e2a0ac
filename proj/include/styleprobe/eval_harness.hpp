#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "styleprobe/embedding_source.hpp"
#include "styleprobe/scoring.hpp"
#include "styleprobe/style_vectors.hpp"

namespace styleprobe {

struct PairExample {
  std::string text0;
  std::string text1;
  int gold = 0;  // index of the text showing the feature more strongly
  std::optional<double> agreement;  // optional fourth column, annotator agreement in [0,1]

  bool operator==(const PairExample&) const = default;
};

struct PairDataset {
  std::string feature;
  std::string split = "all";
  std::vector<PairExample> examples;
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();
  std::size_t skipped = 0;

  std::size_t size() const { return examples.size(); }
};

// `text0 TAB text1 TAB gold [TAB agreement]`; malformed lines are skipped and counted.
PairDataset load_pair_dataset(const std::filesystem::path& path, const std::string& feature);
PairDataset parse_pair_dataset(std::istream& in, const std::string& feature,
                               const std::string& source = "<stream>");
void write_pair_dataset(const PairDataset& ds, const std::filesystem::path& path);
void write_pair_dataset(const PairDataset& ds, std::ostream& out);

PairDataset filter_min_agreement(const PairDataset& ds, double threshold);
// Drops pairs whose token sets are equal or nested.
PairDataset filter_token_overlap(const PairDataset& ds);
// Swaps each pair with probability 1/2 (flipping gold), driven by Rng(seed).
PairDataset balance_labels(const PairDataset& ds, std::uint64_t seed);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};
SplitRatios parse_ratios(std::string_view s);  // "8:1:1", "0.5:0.5:0"

struct Splits {
  PairDataset train, val, test;
};
// Seeded shuffle then contiguous cut. A split may be empty only if its ratio is 0
// and allow_empty is set.
Splits split(const PairDataset& ds, SplitRatios ratios, std::uint64_t seed,
             bool allow_empty = false);

/// Anything that assigns a feature score to a text.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(std::string_view text) const = 0;
  virtual std::size_t word_count(std::string_view text) const = 0;
  // True when a lower score means "more of the feature" (frequency baseline).
  virtual bool lower_means_more() const { return false; }
  virtual nlohmann::ordered_json describe() const = 0;
};

class StyleScorer : public Scorer {
 public:
  StyleScorer(std::shared_ptr<const FeatureVector> fvec, EmbeddingSource source, ScoreConfig cfg);

  double score(std::string_view text) const override;
  FeatureScore score_full(std::string_view text) const;
  std::size_t word_count(std::string_view text) const override;
  nlohmann::ordered_json describe() const override;

  const ScoreConfig& config() const { return cfg_; }
  const EmbeddingSource& source() const { return source_; }
  const FeatureVector& feature_vector() const { return *fvec_; }

 private:
  std::shared_ptr<const FeatureVector> fvec_;
  EmbeddingSource source_;
  ScoreConfig cfg_;
};

class FrequencyTable {
 public:
  static FrequencyTable load(const std::filesystem::path& path);
  static FrequencyTable from_counts(std::unordered_map<std::string, double> counts);
  // Raw count; exact match, then lowercase; 0 when absent.
  double count(std::string_view token) const;
  std::size_t size() const { return counts_.size(); }
  const std::string& id() const { return id_; }

 private:
  std::unordered_map<std::string, double> counts_;
  std::string id_ = "in-memory";
};

/// Pooled log10(count + 1) over tokens; the lower-scoring text is predicted
/// to be the more complex / formal / figurative one.
class FrequencyScorer : public Scorer {
 public:
  FrequencyScorer(std::shared_ptr<const FrequencyTable> table, Pooling pooling);
  double score(std::string_view text) const override;
  std::size_t word_count(std::string_view text) const override;
  bool lower_means_more() const override { return true; }
  nlohmann::ordered_json describe() const override;

 private:
  std::shared_ptr<const FrequencyTable> table_;
  Pooling pooling_;
};

struct Prediction {
  int predicted = 0;
  int gold = 0;
  double score0 = 0.0;
  double score1 = 0.0;
  bool tie = false;
  std::size_t words0 = 0;
  std::size_t words1 = 0;

  bool correct() const { return predicted == gold; }
};

// Exact score ties predict 0 and are flagged.
Prediction decide(double score0, double score1, bool lower_means_more);
Prediction classify_pair(const PairExample& ex, const Scorer& scorer);

struct EvalReport {
  double accuracy = 0.0;
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t tie_count = 0;
  std::vector<Prediction> predictions;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::string dataset;

  nlohmann::ordered_json to_json(bool with_predictions = true) const;
};

EvalReport make_report(std::vector<Prediction> predictions);

// Work is split across `threads` workers; predictions stay in dataset order.
EvalReport evaluate(const PairDataset& ds, const Scorer& scorer, unsigned threads = 1);
EvalReport majority_baseline(const PairDataset& ds);

struct GridCandidate {
  std::string name;
  std::shared_ptr<const Scorer> scorer;
  LayerSetting layer;  // tie-break key; static sources use single(0)
};

struct GridResult {
  std::size_t winner = 0;
  std::vector<EvalReport> val_reports;  // one per candidate, grid order
  EvalReport test_report;               // winner only
};

// Highest validation accuracy wins; ties go to the smaller layer, then
// single before aggregate, then grid order.
std::size_t select_winner(const std::vector<double>& val_accuracy,
                          const std::vector<LayerSetting>& layers);
GridResult grid_search(const std::vector<GridCandidate>& grid, const PairDataset& val,
                       const PairDataset& test, unsigned threads = 1);

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace styleprobe
