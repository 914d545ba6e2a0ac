#include <doctest.h>

#include <bit>
#include <cstring>
#include <sstream>

#include "styleprobe/base64.hpp"
#include "styleprobe/embedding_store.hpp"
#include "styleprobe/error.hpp"
#include "test_util.hpp"

using namespace styleprobe;

TEST_CASE("minimal static file") {
  testutil::TempDir dir;
  auto store = StaticEmbeddings::load(dir.file("toy.txt", "a 1.0 0.0\nb 0.0 1.0"));
  CHECK(store.size() == 2);
  CHECK(store.dim() == 2);
  CHECK_FALSE(store.stats().header);

  auto a = store.lookup("a");
  CHECK(a.vector == Vector{1.0f, 0.0f});
  CHECK_FALSE(a.oov);

  auto miss = store.lookup("zzzqx");
  CHECK(miss.oov);
  CHECK(miss.vector == Vector{0.0f, 0.0f});
}

TEST_CASE("count/dim header is consumed") {
  // Brute-force: write two rows of 300 floats, parse them back by hand.
  testutil::TempDir dir;
  std::mt19937 gen(7);
  std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
  std::ostringstream file;
  file << "2 300\n";
  std::vector<std::vector<std::string>> text_values(2);
  for (int r = 0; r < 2; ++r) {
    file << (r == 0 ? "alpha" : "beta");
    for (int c = 0; c < 300; ++c) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", dist(gen));
      text_values[r].push_back(buf);
      file << ' ' << buf;
    }
    file << '\n';
  }
  auto store = StaticEmbeddings::load(dir.file("h.txt", file.str()));
  CHECK(store.stats().header);
  CHECK(store.size() == 2);
  CHECK(store.dim() == 300);
  auto beta = store.lookup("beta").vector;
  for (int c = 0; c < 300; ++c) CHECK(beta[c] == std::strtof(text_values[1][c].c_str(), nullptr));
}

TEST_CASE("expected_dim is enforced") {
  testutil::TempDir dir;
  auto p = dir.file("toy.txt", "a 1 0\n");
  CHECK(StaticEmbeddings::load(p, 2).dim() == 2);
  CHECK_THROWS_AS(StaticEmbeddings::load(p, 3), FormatError);
}

TEST_CASE("dimension mismatch names the line") {
  testutil::TempDir dir;
  auto p = dir.file("bad.txt", "a 1 0\nb 1 0\nc 1 0 0\n");
  try {
    StaticEmbeddings::load(p);
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("empty file and malformed lines") {
  testutil::TempDir dir;
  CHECK_THROWS_AS(StaticEmbeddings::load(dir.file("empty.txt", "")), FormatError);
  CHECK_THROWS_AS(StaticEmbeddings::load(dir / "missing.txt"), FormatError);

  auto store = StaticEmbeddings::load(dir.file("m.txt", "a 1 0\nb x 0\nlonely\nc 0 1\n"));
  CHECK(store.size() == 2);
  CHECK(store.stats().malformed == 2);
}

TEST_CASE("duplicates: last occurrence wins") {
  testutil::TempDir dir;
  auto store = StaticEmbeddings::load(dir.file("d.txt", "a 1 0\na 0 1\n"));
  CHECK(store.size() == 1);
  CHECK(store.stats().duplicates == 1);
  CHECK(store.lookup("a").vector == Vector{0.0f, 1.0f});
}

TEST_CASE("lowercase fallback") {
  auto store = testutil::toy_store({{"doctor", {0.25f, -0.5f}}, {"Paris", {1.0f, 1.0f}}});
  auto direct = store.lookup("doctor");
  auto folded = store.lookup("Doctor");
  CHECK_FALSE(folded.oov);
  CHECK(folded.case_folded);
  CHECK(folded.vector == direct.vector);

  auto strict = store.lookup("Doctor", false);
  CHECK(strict.oov);
  CHECK(strict.vector == Vector{0.0f, 0.0f});
  // exact match is preferred over folding
  CHECK_FALSE(store.lookup("Paris").case_folded);
}

TEST_CASE("lookup is deterministic and linear in the stored vectors") {
  auto store = testutil::random_store({"x", "y", "z"}, 16, 3);
  auto twice = store.scaled(2.5f);
  for (const auto* w : {"x", "y", "z", "missing"}) {
    auto a = store.lookup(w);
    auto b = store.lookup(w);
    CHECK(a.vector == b.vector);
    auto s = twice.lookup(w).vector;
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == doctest::Approx(2.5f * a.vector[i]));
  }
}

TEST_CASE("base64 float payloads") {
  CHECK(base64_encode(std::vector<std::uint8_t>{'M', 'a', 'n'}) == "TWFu");
  CHECK(base64_encode(std::vector<std::uint8_t>{'M', 'a'}) == "TWE=");
  CHECK(base64_encode(std::vector<std::uint8_t>{'M'}) == "TQ==");
  CHECK(base64_decode("TWE=") == std::vector<std::uint8_t>{'M', 'a'});
  CHECK_THROWS_AS(base64_decode("TW=E"), FormatError);
  CHECK_THROWS_AS(base64_decode("TWF"), FormatError);
  CHECK_THROWS_AS(base64_decode("TW!u"), FormatError);

  // 1.0f is 0x3F800000, little-endian 00 00 80 3F
  CHECK(encode_f32_le(std::vector<float>{1.0f}) == "AACAPw==");

  std::mt19937 gen(11);
  std::uniform_int_distribution<std::uint32_t> bits;
  std::vector<float> values(257);
  for (auto& v : values) v = std::bit_cast<float>(bits(gen) & 0x7F7FFFFFu);
  auto back = decode_f32_le(encode_f32_le(values));
  REQUIRE(back.size() == values.size());
  CHECK(std::memcmp(back.data(), values.data(), values.size() * sizeof(float)) == 0);
}
