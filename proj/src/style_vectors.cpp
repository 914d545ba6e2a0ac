#include "styleprobe/style_vectors.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "styleprobe/error.hpp"

namespace styleprobe {
namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

VectorD to_double(std::span<const float> v) { return VectorD(v.begin(), v.end()); }

}  // namespace

std::string SeedSet::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(feature, h);
  h = fnv1a("\n", h);
  for (const auto& p : pairs) {
    h = fnv1a(p.low, h);
    h = fnv1a("\t", h);
    h = fnv1a(p.high, h);
    h = fnv1a("\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SeedSet parse_seed_set(std::istream& in, const std::string& feature, const std::string& source) {
  SeedSet set;
  set.feature = feature;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto where = source + ":" + std::to_string(line_no) + ": ";
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(where + "expected `low<TAB>high`");
    if (line.find('\t', tab + 1) != std::string::npos) {
      throw FormatError(where + "more than two fields");
    }
    SeedPair pair{line.substr(0, tab), line.substr(tab + 1)};
    if (pair.low.empty() || pair.high.empty()) throw FormatError(where + "empty seed text");
    if (pair.low == pair.high) throw FormatError(where + "low and high texts are identical");
    if (!seen.emplace(pair.low, pair.high).second) {
      throw FormatError(where + "duplicate seed pair");
    }
    set.pairs.push_back(std::move(pair));
  }
  if (set.pairs.empty()) throw FormatError(source + ": no seed pairs");
  return set;
}

SeedSet load_seed_set(const std::filesystem::path& path, const std::string& feature) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open seed file: " + path.string());
  return parse_seed_set(in, feature, path.string());
}

MatrixD seed_fit_sample(const SeedSet& seeds, const EmbeddingSource& source,
                        FitGranularity granularity) {
  MatrixD sample;
  auto add_text = [&](const std::string& text) {
    auto groups = source.groups(text);
    if (granularity == FitGranularity::token) {
      for (const auto& unit : groups.units) {
        for (std::size_t r = 0; r < unit.rows(); ++r) sample.append_row(to_double(unit.row(r)));
      }
    } else {
      sample.append_row(embed_seed_text(text, source, Correction{}));
    }
  };
  // Within a pair the texts go in byte order, so swapping sides leaves the
  // sample (and the fitted stats) bitwise unchanged.
  for (const auto& p : seeds.pairs) {
    const auto& [first, second] = std::minmax(p.low, p.high);
    add_text(first);
    add_text(second);
  }
  return sample;
}

Correction fit_seed_correction(const SeedSet& seeds, const EmbeddingSource& source,
                               const VectorConfig& cfg) {
  Correction correction;
  correction.method = cfg.correction;
  correction.centered_projection = cfg.centered_projection;
  if (correction.needs_fit()) {
    correction.stats =
        fit_correction(seed_fit_sample(seeds, source, cfg.granularity), cfg.correction, cfg.abtt_k);
  }
  return correction;
}

VectorD embed_seed_text(const std::string& text, const EmbeddingSource& source,
                        const Correction& correction) {
  auto groups = source.groups(text);
  VectorD sum(source.dim(), 0.0);
  std::size_t count = 0;
  for (const auto& unit : groups.units) {
    for (std::size_t r = 0; r < unit.rows(); ++r) {
      auto x = correction.apply(to_double(unit.row(r)));
      for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += x[c];
      ++count;
    }
  }
  if (count == 0) throw FormatError("seed text has no tokens: \"" + text + "\"");
  for (auto& s : sum) s /= static_cast<double>(count);
  return sum;
}

FeatureVector build_feature_vector(const SeedSet& seeds, const EmbeddingSource& source,
                                   const VectorConfig& cfg) {
  if (seeds.pairs.empty()) throw FormatError("empty seed set");
  FeatureVector fv;
  fv.feature = seeds.feature;
  fv.correction = fit_seed_correction(seeds, source, cfg);

  fv.values.assign(source.dim(), 0.0);
  for (const auto& p : seeds.pairs) {
    auto high = embed_seed_text(p.high, source, fv.correction);
    auto low = embed_seed_text(p.low, source, fv.correction);
    for (std::size_t c = 0; c < fv.values.size(); ++c) fv.values[c] += high[c] - low[c];
  }
  bool nonzero = false;
  for (auto& v : fv.values) {
    v /= static_cast<double>(seeds.pairs.size());
    nonzero = nonzero || v != 0.0;
  }
  if (!nonzero) {
    throw NumericError("feature vector for '" + seeds.feature +
                       "' is all zeros (are all seed tokens out of vocabulary?)");
  }

  auto& prov = fv.provenance;
  prov.source_id = source.id();
  prov.contextual = source.contextual();
  prov.layer = source.layer_setting();
  prov.correction = cfg.correction;
  prov.centered_projection = cfg.centered_projection;
  prov.granularity = cfg.granularity;
  prov.case_fallback = source.case_fallback();
  prov.seed_hash = seeds.hash();
  prov.pair_count = seeds.pairs.size();
  return fv;
}

std::string_view granularity_name(FitGranularity g) {
  return g == FitGranularity::token ? "token" : "text";
}

FitGranularity parse_granularity(std::string_view s) {
  if (s == "token") return FitGranularity::token;
  if (s == "text") return FitGranularity::text;
  throw UsageError("unknown fit granularity '" + std::string(s) + "' (expected token or text)");
}

nlohmann::ordered_json feature_vector_to_json(const FeatureVector& fv) {
  nlohmann::ordered_json j;
  j["feature"] = fv.feature;
  j["dim"] = fv.dim();
  j["values"] = fv.values;
  const auto& p = fv.provenance;
  nlohmann::ordered_json prov;
  prov["source_id"] = p.source_id;
  prov["contextual"] = p.contextual;
  if (p.contextual) {
    prov["layer_setting"] = layer_mode_name(p.layer.mode);
    prov["layer"] = p.layer.layer;
  }
  prov["correction"] = correction_name(p.correction);
  prov["centered_projection"] = p.centered_projection;
  prov["fit_granularity"] = granularity_name(p.granularity);
  prov["case_fallback"] = p.case_fallback;
  prov["seed_hash"] = p.seed_hash;
  prov["pair_count"] = p.pair_count;
  j["provenance"] = prov;
  if (fv.correction.stats) j["correction_stats"] = stats_to_json(*fv.correction.stats);
  return j;
}

FeatureVector feature_vector_from_json(const nlohmann::json& j) {
  FeatureVector fv;
  try {
    fv.feature = j.at("feature").get<std::string>();
    fv.values = j.at("values").get<VectorD>();
    if (fv.values.size() != j.at("dim").get<std::size_t>()) {
      throw FormatError("feature vector length does not match dim");
    }
    const auto& prov = j.at("provenance");
    auto& p = fv.provenance;
    p.source_id = prov.at("source_id").get<std::string>();
    p.contextual = prov.value("contextual", false);
    if (p.contextual) {
      p.layer.mode = parse_layer_mode(prov.at("layer_setting").get<std::string>());
      p.layer.layer = prov.at("layer").get<std::size_t>();
    }
    p.correction = parse_correction(prov.at("correction").get<std::string>());
    p.centered_projection = prov.value("centered_projection", false);
    p.granularity = parse_granularity(prov.value("fit_granularity", std::string("token")));
    p.case_fallback = prov.value("case_fallback", true);
    p.seed_hash = prov.value("seed_hash", std::string());
    p.pair_count = prov.value("pair_count", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad feature vector JSON: ") + e.what());
  }
  fv.correction.method = fv.provenance.correction;
  fv.correction.centered_projection = fv.provenance.centered_projection;
  if (fv.correction.needs_fit()) {
    if (!j.contains("correction_stats")) {
      throw FormatError("feature vector with " +
                        std::string(correction_name(fv.correction.method)) +
                        " correction lacks correction_stats");
    }
    fv.correction.stats = stats_from_json(j["correction_stats"]);
    if (fv.correction.stats->dim() != fv.dim()) {
      throw FormatError("correction stats dimension does not match feature vector");
    }
  }
  return fv;
}

void save_feature_vector(const FeatureVector& fv, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << feature_vector_to_json(fv).dump(2) << '\n';
}

FeatureVector load_feature_vector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open feature vector: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return feature_vector_from_json(j);
}

}  // namespace styleprobe
