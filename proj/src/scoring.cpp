#include "styleprobe/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "styleprobe/error.hpp"

namespace styleprobe {

Metric parse_metric(std::string_view s) {
  if (s == "cosine") return Metric::cosine;
  if (s == "spearman") return Metric::spearman;
  throw UsageError("unknown metric '" + std::string(s) + "' (expected cosine or spearman)");
}

std::string_view metric_name(Metric m) { return m == Metric::cosine ? "cosine" : "spearman"; }

Pooling parse_pooling(std::string_view s) {
  if (s == "mean") return Pooling::mean;
  if (s == "max") return Pooling::max;
  throw UsageError("unknown pooling '" + std::string(s) + "' (expected mean or max)");
}

std::string_view pooling_name(Pooling p) { return p == Pooling::mean ? "mean" : "max"; }

ScoreConfig ScoreConfig::for_correction(CorrectionMethod correction, Pooling pooling) {
  ScoreConfig cfg;
  cfg.correction = correction;
  cfg.pooling = pooling;
  cfg.metric = correction == CorrectionMethod::rank ? Metric::spearman : Metric::cosine;
  return cfg;
}

void ScoreConfig::validate() const {
  if ((metric == Metric::spearman) != (correction == CorrectionMethod::rank)) {
    throw UsageError("the spearman metric is used exactly with the rank correction");
  }
}

nlohmann::ordered_json ScoreConfig::to_json() const {
  nlohmann::ordered_json j;
  j["metric"] = metric_name(metric);
  j["pooling"] = pooling_name(pooling);
  j["layer_setting"] = layer_mode_name(layer.mode);
  j["layer"] = layer.layer;
  j["correction"] = correction_name(correction);
  j["skip_oov"] = skip_oov;
  return j;
}

namespace {

double cosine(std::span<const double> x, std::span<const double> y) {
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0.0 || ny == 0.0) return 0.0;
  double c = dot / (std::sqrt(nx) * std::sqrt(ny));
  return std::clamp(c, -1.0, 1.0);
}

// Pearson correlation of two rank vectors, computed exactly. Average ranks
// are multiples of 1/2, so doubled ranks are integers and all sums below are
// integer arithmetic; rank patterns with the same correlation give
// bitwise-equal results, which keeps exact score ties detectable.
double rank_pearson(std::span<const double> rx, std::span<const double> ry) {
  const auto n = static_cast<std::int64_t>(rx.size());
  std::vector<std::int64_t> a(rx.size()), b(ry.size());
  std::int64_t sa = 0, sb = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    a[i] = std::llround(2 * rx[i]);
    b[i] = std::llround(2 * ry[i]);
    sa += a[i];
    sb += b[i];
  }
  __extension__ using wide = __int128;
  wide sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    wide ca = n * a[i] - sa, cb = n * b[i] - sb;
    sxy += ca * cb;
    sxx += ca * ca;
    syy += cb * cb;
  }
  if (sxx == 0 || syy == 0) return 0.0;
  double r = static_cast<double>(sxy) /
             std::sqrt(static_cast<double>(sxx) * static_cast<double>(syy));
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace

double similarity(std::span<const double> x, std::span<const double> dvec, Metric metric) {
  if (x.size() != dvec.size()) {
    throw NumericError("similarity: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                       std::to_string(dvec.size()) + ")");
  }
  if (metric == Metric::cosine) return cosine(x, dvec);
  if (x.size() < 2) throw NumericError("spearman similarity needs dimension >= 2");
  auto rx = rank_transform(x);
  auto ry = rank_transform(dvec);
  return rank_pearson(rx, ry);
}

double pool(std::span<const double> scores, Pooling strategy) {
  if (scores.empty()) throw NumericError("cannot pool an empty score list");
  if (strategy == Pooling::max) return *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

void check_compatible(const FeatureVector& fvec, const EmbeddingSource& source,
                      const ScoreConfig& cfg) {
  cfg.validate();
  if (fvec.dim() != source.dim()) {
    throw UsageError("feature vector has dimension " + std::to_string(fvec.dim()) +
                     " but the embedding source has " + std::to_string(source.dim()));
  }
  if (fvec.correction.method != cfg.correction) {
    throw UsageError("feature vector was built with correction '" +
                     std::string(correction_name(fvec.correction.method)) +
                     "' but scoring requests '" + std::string(correction_name(cfg.correction)) +
                     "'");
  }
}

FeatureScore score_groups(const TokenGroups& groups, const FeatureVector& fvec,
                          const ScoreConfig& cfg) {
  FeatureScore out;
  out.word_count = groups.size();
  out.oov_count = groups.oov_count();
  if (groups.units.empty()) throw FormatError("cannot score a text with zero tokens");

  std::vector<double> sub;
  VectorD x;
  for (std::size_t w = 0; w < groups.units.size(); ++w) {
    const auto& unit = groups.units[w];
    bool skip = cfg.skip_oov && groups.oov[w];
    sub.clear();
    for (std::size_t r = 0; r < unit.rows(); ++r) {
      auto raw = unit.row(r);
      x.assign(raw.begin(), raw.end());
      double s = similarity(fvec.correction.apply(x), fvec.values, cfg.metric);
      sub.push_back(s);
      out.token_scores.push_back(s);
    }
    if (!skip) out.word_scores.push_back(pool(sub, cfg.pooling));
  }
  out.value = out.word_scores.empty() ? 0.0 : pool(out.word_scores, cfg.pooling);
  return out;
}

FeatureScore score_text(std::string_view text, const FeatureVector& fvec,
                        const EmbeddingSource& source, const ScoreConfig& cfg) {
  check_compatible(fvec, source, cfg);
  return score_groups(source.groups(text), fvec, cfg);
}

}  // namespace styleprobe
