#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "styleprobe/eval_harness.hpp"

namespace styleprobe {

struct LengthBin {
  std::string label;
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(correct) / n; }
};

// Bin labels in display order: unigram, bigram, 3-4, 5-9, 10-14, 15-19, >20.
const std::vector<std::string>& length_bin_labels();

// Key = mean word count of the two texts: [0,2) unigram, [2,3) bigram,
// [3,5) 3-4, [5,10) 5-9, [10,15) 10-14, [15,20) 15-19, >= 20 ">20".
std::size_t length_bin_index(double mean_words);

struct BinReport {
  std::vector<LengthBin> bins;
  std::size_t total() const;
  nlohmann::ordered_json to_json() const;
};

// Pools predictions of several reports (e.g. short and long datasets of one feature).
BinReport length_bin_analysis(std::span<const EvalReport> reports);

struct SettingComparison {
  double pct_agg_at_least_single = 0.0;  // percent of configs
  double mean_acc_gain = 0.0;            // accuracy points (x100)
  std::map<std::string, double> deltas;  // agg - single, accuracy points

  nlohmann::ordered_json to_json() const;
};

// Both maps must have identical key sets; accuracies in [0,1].
SettingComparison compare_settings(const std::map<std::string, double>& single,
                                   const std::map<std::string, double>& aggregate);

}  // namespace styleprobe
