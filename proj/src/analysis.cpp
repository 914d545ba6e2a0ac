#include "styleprobe/analysis.hpp"

#include "styleprobe/error.hpp"

namespace styleprobe {

const std::vector<std::string>& length_bin_labels() {
  static const std::vector<std::string> labels = {"unigram", "bigram", "3-4",  "5-9",
                                                  "10-14",   "15-19",  ">20"};
  return labels;
}

std::size_t length_bin_index(double mean_words) {
  if (mean_words < 2.0) return 0;
  if (mean_words < 3.0) return 1;
  if (mean_words < 5.0) return 2;
  if (mean_words < 10.0) return 3;
  if (mean_words < 15.0) return 4;
  if (mean_words < 20.0) return 5;
  return 6;
}

std::size_t BinReport::total() const {
  std::size_t t = 0;
  for (const auto& b : bins) t += b.n;
  return t;
}

nlohmann::ordered_json BinReport::to_json() const {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& b : bins) {
    nlohmann::ordered_json j;
    j["bin"] = b.label;
    j["n"] = b.n;
    j["correct"] = b.correct;
    if (b.n > 0) j["accuracy"] = b.accuracy();
    else j["accuracy"] = nullptr;
    arr.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["total"] = total();
  out["bins"] = std::move(arr);
  return out;
}

BinReport length_bin_analysis(std::span<const EvalReport> reports) {
  BinReport out;
  for (const auto& label : length_bin_labels()) out.bins.push_back({label, 0, 0});
  for (const auto& r : reports) {
    for (const auto& p : r.predictions) {
      double mean_words = (static_cast<double>(p.words0) + static_cast<double>(p.words1)) / 2.0;
      auto& bin = out.bins[length_bin_index(mean_words)];
      ++bin.n;
      bin.correct += p.correct() ? 1 : 0;
    }
  }
  return out;
}

nlohmann::ordered_json SettingComparison::to_json() const {
  nlohmann::ordered_json j;
  j["pct_agg_at_least_single"] = pct_agg_at_least_single;
  j["mean_acc_gain"] = mean_acc_gain;
  nlohmann::ordered_json d = nlohmann::ordered_json::object();
  for (const auto& [k, v] : deltas) d[k] = v;
  j["deltas"] = std::move(d);
  return j;
}

SettingComparison compare_settings(const std::map<std::string, double>& single,
                                   const std::map<std::string, double>& aggregate) {
  if (single.size() != aggregate.size()) {
    throw UsageError("single-layer and aggregated results cover different configurations");
  }
  if (single.empty()) throw UsageError("no configurations to compare");
  SettingComparison out;
  std::size_t wins = 0;
  double gain = 0.0;
  for (const auto& [key, s] : single) {
    auto it = aggregate.find(key);
    if (it == aggregate.end()) {
      throw UsageError("configuration '" + key + "' has no aggregated result");
    }
    double delta = it->second - s;
    wins += it->second >= s ? 1 : 0;
    gain += delta;
    out.deltas[key] = delta * 100.0;
  }
  double n = static_cast<double>(single.size());
  out.pct_agg_at_least_single = 100.0 * static_cast<double>(wins) / n;
  out.mean_acc_gain = 100.0 * gain / n;
  return out;
}

}  // namespace styleprobe
