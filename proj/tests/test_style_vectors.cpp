#include <doctest.h>

#include <algorithm>
#include <memory>
#include <random>
#include <sstream>

#include "styleprobe/embedding_source.hpp"
#include "styleprobe/error.hpp"
#include "styleprobe/style_vectors.hpp"
#include "styleprobe/text_pipeline.hpp"
#include "test_util.hpp"

using namespace styleprobe;
namespace fs = std::filesystem;

namespace {

EmbeddingSource static_source(StaticEmbeddings store) {
  return EmbeddingSource::from_static(std::make_shared<const StaticEmbeddings>(std::move(store)));
}

SeedSet seeds_of(std::vector<SeedPair> pairs) { return SeedSet{"test", std::move(pairs)}; }

SeedSet complexity_seeds() {
  return load_seed_set(fs::path(STYLEPROBE_DATA_DIR) / "seeds" / "complexity.tsv", "complexity");
}

std::vector<std::string> seed_vocab(const SeedSet& seeds) {
  std::vector<std::string> vocab;
  for (const auto& p : seeds.pairs) {
    for (const auto& t : {p.low, p.high}) {
      for (const auto& s : tokenize(t).surfaces()) {
        if (std::find(vocab.begin(), vocab.end(), s) == vocab.end()) vocab.push_back(s);
      }
    }
  }
  return vocab;
}

}  // namespace

TEST_CASE("seed files") {
  auto seeds = complexity_seeds();
  REQUIRE(seeds.pairs.size() == 7);
  CHECK(seeds.pairs[0] == SeedPair{"doctor", "medical practitioner"});
  for (const auto* f : {"formality", "figurativeness"}) {
    auto s = load_seed_set(fs::path(STYLEPROBE_DATA_DIR) / "seeds" / (std::string(f) + ".tsv"), f);
    CHECK(s.pairs.size() == 7);
  }

  auto parse = [](const std::string& body) {
    std::istringstream in(body);
    return parse_seed_set(in, "f", "mem");
  };
  CHECK(parse("help\tassist\n").pairs.size() == 1);
  CHECK(parse("# header\n\nhelp\tassist\n").pairs.size() == 1);
  auto line_of = [&](const std::string& body) -> std::string {
    try {
      parse(body);
    } catch (const FormatError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(line_of("a\tb\nno tab here\n").find("mem:2") != std::string::npos);
  CHECK(line_of("a\tb\tc\n").find("mem:1") != std::string::npos);
  CHECK(line_of("a\t\n").find("mem:1") != std::string::npos);
  CHECK(line_of("same\tsame\n").find("mem:1") != std::string::npos);
  CHECK(line_of("a\tb\nc\td\na\tb\n").find("mem:3") != std::string::npos);
  CHECK_FALSE(line_of("# only comments\n").empty());
  CHECK_FALSE(line_of("").empty());

  CHECK(parse("a\tb\n").hash() == parse("# c\na\tb\n").hash());
  CHECK(parse("a\tb\n").hash() != parse("b\ta\n").hash());
  CHECK(parse("a\tb\n").hash().size() == 16);
}

TEST_CASE("embed_seed_text") {
  auto store = testutil::toy_store({{"a", {1, 0}}, {"b", {0, 1}}, {"doctor", {0.25f, -3.5f}}});
  auto src = static_source(store);
  CHECK(embed_seed_text("a b", src, {}) == VectorD{0.5, 0.5});
  CHECK(embed_seed_text("doctor", src, {}) == VectorD{0.25, -3.5});
  // OOV zero vectors take part in the mean
  CHECK(embed_seed_text("a zzz", src, {}) == VectorD{0.5, 0.0});
  CHECK_THROWS_AS(embed_seed_text("   ", src, {}), Error);
}

TEST_CASE("build_feature_vector examples") {
  auto src = static_source(testutil::toy_store(
      {{"lo", {1, 0}}, {"hi", {0, 1}}, {"p", {0, 0}}, {"q", {2, 0}}, {"r", {0, 0}}, {"s", {0, 2}}}));
  auto one = build_feature_vector(seeds_of({{"lo", "hi"}}), src, {});
  CHECK(one.values == VectorD{-1, 1});
  auto two = build_feature_vector(seeds_of({{"p", "q"}, {"r", "s"}}), src, {});
  CHECK(two.values == VectorD{1, 1});
  CHECK(one.provenance.pair_count == 1);
  CHECK(two.provenance.seed_hash == seeds_of({{"p", "q"}, {"r", "s"}}).hash());

  CHECK_THROWS_AS(build_feature_vector(seeds_of({{"xx", "yy"}}), src, {}), NumericError);
  CHECK_THROWS_AS(build_feature_vector(seeds_of({{"lo hi", "hi lo"}}), src, {}), NumericError);
}

TEST_CASE("feature-vector properties on a random store") {
  auto seeds = complexity_seeds();
  auto store = testutil::random_store(seed_vocab(seeds), 24, 77);
  auto src = static_source(store);

  for (auto method : {CorrectionMethod::none, CorrectionMethod::abtt,
                      CorrectionMethod::standardization, CorrectionMethod::rank}) {
    CAPTURE(correction_name(method));
    VectorConfig cfg;
    cfg.correction = method;
    auto base = build_feature_vector(seeds, src, cfg);

    {  // antisymmetry
      auto swapped = seeds;
      for (auto& p : swapped.pairs) std::swap(p.low, p.high);
      auto neg = build_feature_vector(swapped, src, cfg);
      for (std::size_t i = 0; i < base.dim(); ++i) CHECK(neg.values[i] == -base.values[i]);
    }
    {  // pair order
      auto shuffled = seeds;
      std::mt19937 gen(5);
      std::shuffle(shuffled.pairs.begin(), shuffled.pairs.end(), gen);
      auto other = build_feature_vector(shuffled, src, cfg);
      for (std::size_t i = 0; i < base.dim(); ++i)
        CHECK(other.values[i] == doctest::Approx(base.values[i]).epsilon(1e-6));
    }
    {  // mean of single-pair constructions
      // per-pair vectors share the full-set correction so only the averaging is tested
      std::vector<double> mean(base.dim(), 0.0);
      for (const auto& p : seeds.pairs) {
        auto high = embed_seed_text(p.high, src, base.correction);
        auto low = embed_seed_text(p.low, src, base.correction);
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += high[i] - low[i];
      }
      for (std::size_t i = 0; i < mean.size(); ++i)
        CHECK(std::abs(mean[i] / seeds.pairs.size() - base.values[i]) < 1e-9);
      if (method == CorrectionMethod::none) {
        std::vector<double> singles(base.dim(), 0.0);
        for (const auto& p : seeds.pairs) {
          auto v = build_feature_vector(seeds_of({p}), src, cfg);
          for (std::size_t i = 0; i < singles.size(); ++i) singles[i] += v.values[i];
        }
        for (std::size_t i = 0; i < singles.size(); ++i)
          CHECK(std::abs(singles[i] / seeds.pairs.size() - base.values[i]) < 1e-9);
      }
    }
  }

  {  // linearity
    auto scaled = static_source(store.scaled(3.0f));
    auto a = build_feature_vector(seeds, src, {});
    auto b = build_feature_vector(seeds, scaled, {});
    for (std::size_t i = 0; i < a.dim(); ++i)
      CHECK(b.values[i] == doctest::Approx(3.0 * a.values[i]).epsilon(1e-6));
  }
}

TEST_CASE("300-d complexity vector matches a naive average of differences") {
  auto seeds = complexity_seeds();
  auto vocab = seed_vocab(seeds);
  auto store = testutil::random_store(vocab, 300, 2024);
  auto fv = build_feature_vector(seeds, static_source(store), {});
  REQUIRE(fv.dim() == 300);

  // naive: split on spaces, look rows up by hand
  auto embed = [&](const std::string& text) {
    std::vector<double> sum(300, 0.0);
    std::istringstream in(text);
    std::string w;
    int n = 0;
    while (in >> w) {
      auto idx = std::find(vocab.begin(), vocab.end(), w) - vocab.begin();
      for (int c = 0; c < 300; ++c) sum[c] += store.row(idx)[c];
      ++n;
    }
    for (auto& s : sum) s /= n;
    return sum;
  };
  std::vector<double> oracle(300, 0.0);
  for (const auto& p : seeds.pairs) {
    auto h = embed(p.high), l = embed(p.low);
    for (int c = 0; c < 300; ++c) oracle[c] += (h[c] - l[c]) / 7.0;
  }
  for (int c = 0; c < 300; ++c) CHECK(std::abs(fv.values[c] - oracle[c]) < 1e-6);
}

TEST_CASE("fit sample granularity") {
  auto src = static_source(testutil::toy_store({{"a", {1, 0}}, {"b", {0, 1}}, {"c", {2, 2}}}));
  auto seeds = seeds_of({{"a b", "c"}});
  auto tokens = seed_fit_sample(seeds, src, FitGranularity::token);
  CHECK(tokens.rows() == 3);
  auto texts = seed_fit_sample(seeds, src, FitGranularity::text);
  REQUIRE(texts.rows() == 2);
  CHECK(texts(0, 0) == 0.5);
  CHECK(texts(1, 1) == 2.0);
}

TEST_CASE("feature vector JSON roundtrip") {
  auto seeds = complexity_seeds();
  auto src = static_source(testutil::random_store(seed_vocab(seeds), 30, 3));
  VectorConfig cfg;
  cfg.correction = CorrectionMethod::abtt;
  cfg.centered_projection = true;
  auto fv = build_feature_vector(seeds, src, cfg);
  testutil::TempDir dir;
  save_feature_vector(fv, dir / "v.json");
  auto back = load_feature_vector(dir / "v.json");
  CHECK(back.feature == fv.feature);
  CHECK(back.values == fv.values);
  CHECK(back.correction.method == CorrectionMethod::abtt);
  CHECK(back.correction.centered_projection);
  REQUIRE(back.correction.stats.has_value());
  CHECK(back.correction.stats->components == fv.correction.stats->components);
  CHECK(back.provenance.seed_hash == fv.provenance.seed_hash);
  save_feature_vector(back, dir / "w.json");
  CHECK(testutil::read_file(dir / "v.json") == testutil::read_file(dir / "w.json"));
}
