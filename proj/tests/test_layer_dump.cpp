#include <doctest.h>

#include <cstring>
#include <sstream>

#include "styleprobe/base64.hpp"
#include "styleprobe/error.hpp"
#include "styleprobe/layer_dump.hpp"
#include "styleprobe/utf8.hpp"

#include <json.hpp>
#include "test_util.hpp"

using namespace styleprobe;
namespace fs = std::filesystem;

namespace {

LayerDump make_dump(std::size_t L, std::size_t d, unsigned seed) {
  LayerDump dump(DumpHeader{kDumpFormatVersion, "synthetic", L, d, "rule"});
  std::mt19937 gen(seed);
  dump.add_entry(testutil::synthetic_entry("0", "You must obey the rules.", L + 1, d, gen,
                                           {1, 2, 1, 1, 3, 1}));
  dump.add_entry(testutil::synthetic_entry("1", "café naïve", L + 1, d, gen, {2, 2}));
  return dump;
}

std::string header_line(std::size_t L, std::size_t d) {
  return "{\"format_version\":1,\"model_name\":\"m\",\"num_layers\":" + std::to_string(L) +
         ",\"hidden_dim\":" + std::to_string(d) + ",\"tokenizer\":\"t\"}\n";
}

}  // namespace

TEST_CASE("block shape follows the header") {
  std::mt19937 gen(1);
  LayerDump dump(DumpHeader{1, "bert", 12, 768, "wordpiece"});
  // 5 words of one subtoken each
  dump.add_entry(testutil::synthetic_entry("s", "a b c d e", 13, 768, gen));
  const auto& e = dump.entry("s");
  CHECK(e.num_subtokens() == 5);
  CHECK(e.vectors.size() == 13 * 5 * 768);
  CHECK(select_layer(e, 12).rows() == 5);
  CHECK(select_layer(e, 12).cols() == 768);
}

TEST_CASE("shape mismatch names the entry") {
  std::mt19937 gen(1);
  auto e = testutil::synthetic_entry("bad-entry", "a b c d e", 13, 512, gen);
  std::ostringstream file;
  file << header_line(12, 768);
  LayerDump tmp(DumpHeader{1, "m", 12, 512, "t"});
  tmp.add_entry(e);
  std::ostringstream body;
  tmp.write(body);
  file << body.str().substr(body.str().find('\n') + 1);
  std::istringstream in(file.str());
  try {
    LayerDump::read(in);
    FAIL("expected a shape error");
  } catch (const FormatError& err) {
    CHECK(std::string(err.what()).find("bad-entry") != std::string::npos);
  }
}

TEST_CASE("bad magic or version") {
  std::istringstream not_json("hello\n");
  CHECK_THROWS_AS(LayerDump::read(not_json), FormatError);
  std::istringstream no_version("{\"model_name\":\"m\"}\n");
  CHECK_THROWS_AS(LayerDump::read(no_version), FormatError);
  std::istringstream v2("{\"format_version\":2,\"model_name\":\"m\",\"num_layers\":1,"
                        "\"hidden_dim\":2,\"tokenizer\":\"t\"}\n");
  CHECK_THROWS_AS(LayerDump::read(v2), FormatError);
  std::istringstream empty("");
  CHECK_THROWS_AS(LayerDump::read(empty), FormatError);
}

TEST_CASE("write then read is bit-exact") {
  testutil::TempDir dir;
  auto dump = make_dump(4, 6, 99);
  auto path = dir / "x.led";
  dump.write(path);
  auto back = LayerDump::open(path);

  CHECK(back.header().model_name == "synthetic");
  CHECK(back.header().num_layers == 4);
  CHECK(back.header().hidden_dim == 6);
  REQUIRE(back.entries().size() == dump.entries().size());
  for (std::size_t i = 0; i < dump.entries().size(); ++i) {
    const auto& a = dump.entries()[i];
    const auto& b = back.entries()[i];
    CHECK(a.text == b.text);
    CHECK(a.subtokens.size() == b.subtokens.size());
    for (std::size_t s = 0; s < a.subtokens.size(); ++s) {
      CHECK(a.subtokens[s].start == b.subtokens[s].start);
      CHECK(a.subtokens[s].end == b.subtokens[s].end);
      CHECK(a.subtokens[s].word_index == b.subtokens[s].word_index);
    }
    REQUIRE(a.vectors.size() == b.vectors.size());
    CHECK(std::memcmp(a.vectors.data(), b.vectors.data(), a.vectors.size() * 4) == 0);
  }
  // writing the reloaded dump reproduces the file byte for byte
  auto again = dir / "y.led";
  back.write(again);
  CHECK(testutil::read_file(path) == testutil::read_file(again));
}

TEST_CASE("select_layer indexes the raw little-endian block") {
  testutil::TempDir dir;
  auto dump = make_dump(3, 5, 5);
  auto path = dir / "z.led";
  dump.write(path);
  // Independent route: pull the base64 payload out of the file and index bytes directly.
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  auto j = nlohmann::json::parse(line);
  auto bytes = base64_decode(j["vectors"].get<std::string>());
  const auto& e = dump.entry("0");
  std::size_t t = e.num_subtokens(), d = 5;
  for (std::size_t l = 0; l <= 3; ++l) {
    auto m = select_layer(e, l);
    for (std::size_t r = 0; r < t; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        std::size_t off = ((l * t + r) * d + c) * 4;
        std::uint32_t u = bytes[off] | (bytes[off + 1] << 8) | (bytes[off + 2] << 16) |
                          (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
        CHECK(m(r, c) == std::bit_cast<float>(u));
      }
    }
  }
  CHECK_THROWS_AS(select_layer(e, 4), UsageError);
  CHECK_THROWS_AS(aggregate_layers(e, 4), UsageError);
}

TEST_CASE("aggregate_layers") {
  SUBCASE("two-layer hand example") {
    LayerDump dump(DumpHeader{1, "m", 1, 2, "t"});
    DumpEntry e;
    e.text_id = "a";
    e.text = "x";
    e.words = {{"x", 0, 1}};
    e.subtokens = {{"x", 0, 1, 0}};
    e.vectors = {1, 1, 3, 3};
    dump.add_entry(e);
    auto m = aggregate_layers(dump.entry("a"), 1);
    CHECK(m(0, 0) == 2.0f);
    CHECK(m(0, 1) == 2.0f);
  }
  SUBCASE("layer 0 equals select_layer exactly; deeper layers match a naive mean") {
    auto dump = make_dump(3, 7, 21);
    for (const auto& e : dump.entries()) {
      CHECK(aggregate_layers(e, 0) == select_layer(e, 0));
      auto agg = aggregate_layers(e, 3);
      for (std::size_t r = 0; r < e.num_subtokens(); ++r) {
        for (std::size_t c = 0; c < 7; ++c) {
          double naive = 0;
          for (std::size_t l = 0; l < 4; ++l) naive += select_layer(e, l)(r, c);
          CHECK(agg(r, c) == doctest::Approx(naive / 4).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("span invariants are enforced") {
  LayerDump dump(DumpHeader{1, "m", 0, 1, "t"});
  DumpEntry e;
  e.text = "ab cd";
  e.words = {{"ab", 0, 2}, {"cd", 3, 5}};
  e.vectors = {0.1f, 0.2f, 0.3f};

  SUBCASE("out of text") {
    e.text_id = "oob";
    e.subtokens = {{"ab", 0, 2, 0}, {"c", 3, 4, 1}, {"d", 4, 9, 1}};
    CHECK_THROWS_AS(dump.add_entry(e), FormatError);
  }
  SUBCASE("overlap") {
    e.text_id = "overlap";
    e.subtokens = {{"ab", 0, 2, 0}, {"c", 1, 4, 1}, {"d", 4, 5, 1}};
    CHECK_THROWS_AS(dump.add_entry(e), FormatError);
  }
  SUBCASE("word without subtokens") {
    e.text_id = "gap";
    e.subtokens = {{"a", 0, 1, 1}, {"c", 3, 4, 1}, {"d", 4, 5, 1}};
    CHECK_THROWS_AS(dump.add_entry(e), FormatError);
  }
  SUBCASE("valid") {
    e.text_id = "ok";
    e.subtokens = {{"ab", 0, 2, 0}, {"c", 3, 4, 1}, {"d", 4, 5, 1}};
    CHECK_NOTHROW(dump.add_entry(e));
    CHECK_THROWS_AS(dump.add_entry(e), FormatError);  // duplicate text_id
  }
}

TEST_CASE("validate_dump lists violations by text_id") {
  testutil::TempDir dir;
  auto dump = make_dump(2, 4, 3);
  auto path = dir / "v.led";
  dump.write(path);
  auto clean = validate_dump(path);
  CHECK(clean.ok());
  CHECK(clean.entries == 2);

  // Corrupt the second entry's base64 length.
  auto text = testutil::read_file(path);
  auto last = text.rfind("\"vectors\":\"");
  text.replace(last + 11, 4, "");
  auto bad = dir.file("bad.led", text);
  auto report = validate_dump(bad);
  CHECK_FALSE(report.ok());
  REQUIRE(report.violations.size() >= 1);
  CHECK(report.violations.front().text_id == "1");
}

TEST_CASE("golden synthetic dump shipped with the tests") {
  auto golden = fs::path(STYLEPROBE_TEST_DATA) / "golden.led";
  auto report = validate_dump(golden);
  CHECK(report.ok());
  auto dump = LayerDump::open(golden);
  CHECK(dump.header().num_layers == 4);
  CHECK(dump.header().hidden_dim == 8);
  for (const auto& e : dump.entries()) {
    CHECK(e.vectors.size() == 5 * e.num_subtokens() * 8);
    for (const auto& s : e.subtokens) {
      CHECK(utf8::slice(e.text, s.start, s.end) == s.piece);
    }
  }
  // the shipped file is exactly what the generator produces
  testutil::TempDir dir;
  testutil::golden_dump().write(dir / "g.led");
  CHECK(testutil::read_file(dir / "g.led") == testutil::read_file(golden));
}
