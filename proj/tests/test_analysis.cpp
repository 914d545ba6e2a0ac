#include <doctest.h>

#include <random>

#include "styleprobe/analysis.hpp"
#include "styleprobe/error.hpp"

using namespace styleprobe;

TEST_CASE("length bins") {
  const auto& labels = length_bin_labels();
  REQUIRE(labels.size() == 7);
  CHECK(labels[length_bin_index(1.0)] == "unigram");
  CHECK(labels[length_bin_index(1.5)] == "unigram");
  CHECK(labels[length_bin_index(2.0)] == "bigram");
  CHECK(labels[length_bin_index(2.5)] == "bigram");
  CHECK(labels[length_bin_index(4.5)] == "3-4");
  CHECK(labels[length_bin_index(5.0)] == "5-9");
  CHECK(labels[length_bin_index(14.5)] == "10-14");
  CHECK(labels[length_bin_index(19.5)] == "15-19");
  CHECK(labels[length_bin_index(20.0)] == ">20");
  CHECK(labels[length_bin_index(300.0)] == ">20");
}

TEST_CASE("bin accuracies match a naive tally") {
  std::mt19937 gen(6);
  std::vector<EvalReport> reports(3);
  std::map<std::string, std::pair<std::size_t, std::size_t>> naive;
  std::size_t total = 0;
  for (auto& r : reports) {
    std::size_t n = 20 + gen() % 50;
    for (std::size_t i = 0; i < n; ++i) {
      Prediction p;
      p.words0 = 1 + gen() % 25;
      p.words1 = 1 + gen() % 25;
      p.gold = gen() % 2;
      p.predicted = gen() % 2;
      r.predictions.push_back(p);
      double mean = (p.words0 + p.words1) / 2.0;
      std::string label = mean < 2    ? "unigram"
                          : mean < 3  ? "bigram"
                          : mean < 5  ? "3-4"
                          : mean < 10 ? "5-9"
                          : mean < 15 ? "10-14"
                          : mean < 20 ? "15-19"
                                      : ">20";
      naive[label].first += 1;
      naive[label].second += p.correct();
      ++total;
    }
  }
  auto bins = length_bin_analysis(reports);
  CHECK(bins.total() == total);
  for (const auto& b : bins.bins) {
    CHECK(b.n == naive[b.label].first);
    CHECK(b.correct == naive[b.label].second);
  }
}

TEST_CASE("compare_settings") {
  auto a = compare_settings({{"a", 0.6}, {"b", 0.7}}, {{"a", 0.7}, {"b", 0.7}});
  CHECK(a.pct_agg_at_least_single == 100.0);
  CHECK(a.mean_acc_gain == doctest::Approx(5.0));
  CHECK(a.deltas.at("a") == doctest::Approx(10.0));

  std::map<std::string, double> same{{"x", 0.55}, {"y", 0.8125}, {"z", 0.9}};
  auto b = compare_settings(same, same);
  CHECK(b.pct_agg_at_least_single == 100.0);
  CHECK(b.mean_acc_gain == 0.0);

  auto c = compare_settings({{"a", 0.75}, {"b", 0.5}}, {{"a", 0.5}, {"b", 0.5}});
  CHECK(c.pct_agg_at_least_single == 50.0);
  CHECK(c.mean_acc_gain == -12.5);

  CHECK_THROWS_AS(compare_settings({{"a", 0.5}}, {{"b", 0.5}}), UsageError);
}
