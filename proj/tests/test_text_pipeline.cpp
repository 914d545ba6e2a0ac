#include <doctest.h>

#include <random>

#include "styleprobe/error.hpp"
#include "styleprobe/layer_dump.hpp"
#include "styleprobe/text_pipeline.hpp"
#include "styleprobe/utf8.hpp"
#include "test_util.hpp"

using namespace styleprobe;
using Surfaces = std::vector<std::string>;

TEST_CASE("tokenize examples") {
  CHECK(tokenize("You must obey the rules.").surfaces() ==
        Surfaces{"You", "must", "obey", "the", "rules", "."});
  CHECK(tokenize("cold-hearted").surfaces() == Surfaces{"cold-hearted"});
  CHECK(tokenize("don't wait!!").surfaces() == Surfaces{"don't", "wait", "!", "!"});
  CHECK(tokenize("").tokens.empty());
  CHECK(tokenize(" \t\n 　").tokens.empty());
  CHECK(tokenize("rock 'n' roll").surfaces() == Surfaces{"rock", "'", "n", "'", "roll"});
  CHECK(tokenize("end-").surfaces() == Surfaces{"end", "-"});
  CHECK(tokenize("l’homme naïf").surfaces() == Surfaces{"l’homme", "naïf"});
  CHECK(tokenize("(a,b)").surfaces() == Surfaces{"(", "a", ",", "b", ")"});
}

TEST_CASE("spans are code-point offsets that slice back to the surface") {
  std::string text = "  café–naïve, “quoted” text done ";
  auto tok = tokenize(text);
  std::size_t prev_end = 0;
  for (const auto& t : tok.tokens) {
    CHECK(t.start >= prev_end);
    CHECK(t.end > t.start);
    CHECK(utf8::slice(text, t.start, t.end) == t.surface);
    // everything skipped between tokens is whitespace
    auto gap = utf8::decode(utf8::slice(text, prev_end, t.start)).code_points;
    for (char32_t cp : gap) CHECK(is_unicode_space(cp));
    prev_end = t.end;
  }
  CHECK(prev_end <= utf8::length(text));
}

TEST_CASE("tokenize is deterministic and idempotent on surfaces") {
  std::mt19937 gen(3);
  const std::vector<std::string> alphabet = {"a", "b", "é", " ", "  ", "-", "'", ".", "!", "x-y",
                                             "don't", ",", "\t", "’", "Z"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    int len = gen() % 20;
    for (int i = 0; i < len; ++i) text += alphabet[gen() % alphabet.size()];
    auto a = tokenize(text).surfaces();
    CHECK(tokenize(text).surfaces() == a);
    std::string rejoined;
    for (const auto& s : a) rejoined += s + " ";
    CHECK(tokenize(rejoined).surfaces() == a);
  }
}

TEST_CASE("word_groups_static") {
  auto store = testutil::toy_store({{"a", {1, 0}}, {"b", {0, 1}}});
  auto groups = word_groups_static(tokenize("a b"), store);
  REQUIRE(groups.size() == 2);
  CHECK(groups.units[0].row(0)[0] == 1.0f);
  CHECK(groups.units[1].row(0)[1] == 1.0f);
  CHECK(groups.oov_count() == 0);

  auto miss = word_groups_static(tokenize("a qqq"), store);
  CHECK(miss.oov == std::vector<bool>{false, true});
  CHECK(miss.units[1].rows() == 1);
  CHECK(miss.units[1].row(0)[0] == 0.0f);
  CHECK(miss.units[1].row(0)[1] == 0.0f);

  auto six = word_groups_static(tokenize("You must obey the rules."), store);
  CHECK(six.size() == 6);
  for (const auto& u : six.units) CHECK(u.rows() == 1);
  CHECK(six.oov_count() == 6);
}

TEST_CASE("word_groups_contextual") {
  LayerDump dump(DumpHeader{1, "m", 0, 2, "t"});
  DumpEntry e;
  e.text_id = "e";
  e.text = "abc d";
  e.words = {{"abc", 0, 3}, {"d", 4, 5}};
  e.subtokens = {{"ab", 0, 2, 0}, {"c", 2, 3, 0}, {"d", 4, 5, 1}};
  e.vectors = {1, 2, 3, 4, 5, 6};
  dump.add_entry(e);
  const auto& stored = dump.entry("e");
  auto groups = word_groups_contextual(stored, select_layer(stored, 0));
  REQUIRE(groups.size() == 2);
  CHECK(groups.units[0].rows() == 2);
  CHECK(groups.units[1].rows() == 1);
  CHECK(groups.units[1](0, 1) == 6.0f);

  Matrix wrong(2, 2);
  CHECK_THROWS_AS(word_groups_contextual(stored, wrong), Error);

  SUBCASE("single word") {
    std::mt19937 gen(2);
    auto one = testutil::synthetic_entry("one", "unbelievable", 1, 3, gen, {4});
    LayerDump d1(DumpHeader{1, "m", 0, 3, "t"});
    d1.add_entry(one);
    const auto& s = d1.entry("one");
    auto g = word_groups_contextual(s, select_layer(s, 0));
    CHECK(g.size() == 1);
    CHECK(g.units[0].rows() == 4);
  }
}

TEST_CASE("contextual grouping equals a naive partition by word_index") {
  std::mt19937 gen(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> pieces = {1 + gen() % 3, 1 + gen() % 3, 1 + gen() % 4};
    LayerDump dump(DumpHeader{1, "m", 1, 4, "t"});
    dump.add_entry(testutil::synthetic_entry("x", "alpha beta gamma", 2, 4, gen, pieces));
    const auto& e = dump.entry("x");
    auto layer = select_layer(e, 1);
    auto groups = word_groups_contextual(e, layer);
    REQUIRE(groups.size() == e.words.size());

    std::vector<std::vector<std::vector<float>>> naive(e.words.size());
    for (std::size_t s = 0; s < e.subtokens.size(); ++s) {
      auto row = layer.row(s);
      naive[e.subtokens[s].word_index].emplace_back(row.begin(), row.end());
    }
    for (std::size_t w = 0; w < naive.size(); ++w) {
      REQUIRE(groups.units[w].rows() == naive[w].size());
      for (std::size_t r = 0; r < naive[w].size(); ++r) {
        auto row = groups.units[w].row(r);
        CHECK(std::vector<float>(row.begin(), row.end()) == naive[w][r]);
      }
    }
  }
}
