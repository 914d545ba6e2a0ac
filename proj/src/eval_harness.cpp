#include "styleprobe/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "styleprobe/error.hpp"
#include "styleprobe/rng.hpp"
#include "styleprobe/text_pipeline.hpp"

namespace styleprobe {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::set<std::string> token_set(const std::string& text) {
  auto surfaces = tokenize(text).surfaces();
  return {surfaces.begin(), surfaces.end()};
}

PairDataset derived(const PairDataset& ds, const char* step) {
  PairDataset out;
  out.feature = ds.feature;
  out.split = ds.split;
  out.provenance = ds.provenance;
  if (!out.provenance.contains("steps")) out.provenance["steps"] = nlohmann::ordered_json::array();
  out.provenance["steps"].push_back(step);
  return out;
}

}  // namespace

PairDataset parse_pair_dataset(std::istream& in, const std::string& feature,
                               const std::string& source) {
  PairDataset ds;
  ds.feature = feature;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3 && fields.size() != 4) {
      ++ds.skipped;
      continue;
    }
    PairExample ex{fields[0], fields[1], 0, std::nullopt};
    if (fields[2] == "0") ex.gold = 0;
    else if (fields[2] == "1") ex.gold = 1;
    else {
      ++ds.skipped;
      continue;
    }
    if (fields.size() == 4) {
      double a = 0;
      if (!parse_double(fields[3], a)) {
        ++ds.skipped;
        continue;
      }
      ex.agreement = a;
    }
    if (ex.text0.empty() || ex.text1.empty() || ex.text0 == ex.text1) {
      ++ds.skipped;
      continue;
    }
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) throw FormatError(source + ": no valid examples");
  ds.provenance["source"] = source;
  ds.provenance["skipped"] = ds.skipped;
  return ds;
}

PairDataset load_pair_dataset(const std::filesystem::path& path, const std::string& feature) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset: " + path.string());
  auto ds = parse_pair_dataset(in, feature, path.string());
  ds.split = path.stem().string();
  return ds;
}

void write_pair_dataset(const PairDataset& ds, std::ostream& out) {
  for (const auto& ex : ds.examples) {
    out << ex.text0 << '\t' << ex.text1 << '\t' << ex.gold;
    if (ex.agreement) {
      char buf[32];
      auto res = std::to_chars(buf, buf + sizeof(buf), *ex.agreement);
      out << '\t' << std::string_view(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

void write_pair_dataset(const PairDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  write_pair_dataset(ds, out);
}

PairDataset filter_min_agreement(const PairDataset& ds, double threshold) {
  auto out = derived(ds, "min_agreement");
  std::size_t missing = 0;
  for (const auto& ex : ds.examples) {
    if (!ex.agreement) {
      ++missing;
      continue;
    }
    if (*ex.agreement >= threshold) out.examples.push_back(ex);
  }
  if (missing > 0) {
    throw FormatError(std::to_string(missing) + " examples lack an agreement column");
  }
  out.provenance["min_agreement"] = threshold;
  return out;
}

PairDataset filter_token_overlap(const PairDataset& ds) {
  auto out = derived(ds, "token_overlap_filter");
  for (const auto& ex : ds.examples) {
    auto a = token_set(ex.text0);
    auto b = token_set(ex.text1);
    bool a_in_b = std::includes(b.begin(), b.end(), a.begin(), a.end());
    bool b_in_a = std::includes(a.begin(), a.end(), b.begin(), b.end());
    if (!a_in_b && !b_in_a) out.examples.push_back(ex);
  }
  out.provenance["overlap_removed"] = ds.size() - out.size();
  return out;
}

PairDataset balance_labels(const PairDataset& ds, std::uint64_t seed) {
  auto out = derived(ds, "balance_labels");
  Rng rng(seed);
  out.examples = ds.examples;
  for (auto& ex : out.examples) {
    if (rng.coin()) {
      std::swap(ex.text0, ex.text1);
      ex.gold = 1 - ex.gold;
    }
  }
  out.provenance["balance_seed"] = seed;
  return out;
}

SplitRatios parse_ratios(std::string_view s) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto colon = s.find(':', start);
    std::string piece(s.substr(start, colon == std::string_view::npos ? s.size() - start
                                                                      : colon - start));
    double v = 0;
    if (!parse_double(piece, v) || v < 0) throw UsageError("bad split ratio '" + std::string(s) + "'");
    parts.push_back(v);
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3) throw UsageError("split ratios need three parts: train:val:test");
  double total = parts[0] + parts[1] + parts[2];
  if (total <= 0) throw UsageError("split ratios sum to zero");
  return {parts[0] / total, parts[1] / total, parts[2] / total};
}

Splits split(const PairDataset& ds, SplitRatios ratios, std::uint64_t seed, bool allow_empty) {
  double total = ratios.train + ratios.val + ratios.test;
  if (std::abs(total - 1.0) > 1e-9) throw UsageError("split ratios must sum to 1");

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }

  const std::size_t n = ds.size();
  auto count = [&](double r) {
    return static_cast<std::size_t>(std::llround(r * static_cast<double>(n)));
  };
  std::size_t n_val = std::min(count(ratios.val), n);
  std::size_t n_test = std::min(count(ratios.test), n - n_val);
  std::size_t n_train = n - n_val - n_test;

  auto check = [&](const char* name, double r, std::size_t size) {
    if (size > 0) return;
    if (r == 0.0 && allow_empty) return;
    throw UsageError(std::string("split '") + name + "' would be empty for " +
                     std::to_string(n) + " examples");
  };
  check("train", ratios.train, n_train);
  check("val", ratios.val, n_val);
  check("test", ratios.test, n_test);

  Splits out;
  PairDataset* parts[3] = {&out.train, &out.val, &out.test};
  const char* names[3] = {"train", "val", "test"};
  std::size_t bounds[4] = {0, n_train, n_train + n_val, n};
  for (int p = 0; p < 3; ++p) {
    *parts[p] = derived(ds, "split");
    parts[p]->split = names[p];
    parts[p]->provenance["split_seed"] = seed;
    for (std::size_t i = bounds[p]; i < bounds[p + 1]; ++i) {
      parts[p]->examples.push_back(ds.examples[order[i]]);
    }
  }
  return out;
}

StyleScorer::StyleScorer(std::shared_ptr<const FeatureVector> fvec, EmbeddingSource source,
                         ScoreConfig cfg)
    : fvec_(std::move(fvec)), source_(std::move(source)), cfg_(cfg) {
  if (!fvec_) throw UsageError("null feature vector");
  if (source_.contextual()) cfg_.layer = source_.layer_setting();
  check_compatible(*fvec_, source_, cfg_);
}

double StyleScorer::score(std::string_view text) const { return score_full(text).value; }

FeatureScore StyleScorer::score_full(std::string_view text) const {
  return score_groups(source_.groups(text), *fvec_, cfg_);
}

std::size_t StyleScorer::word_count(std::string_view text) const {
  return source_.word_count(text);
}

nlohmann::ordered_json StyleScorer::describe() const {
  nlohmann::ordered_json j;
  j["kind"] = "style_vector";
  j["feature"] = fvec_->feature;
  j["source"] = source_.id();
  j["contextual"] = source_.contextual();
  j["score_config"] = cfg_.to_json();
  j["seed_hash"] = fvec_->provenance.seed_hash;
  return j;
}

FrequencyTable FrequencyTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open frequency table: " + path.string());
  FrequencyTable table;
  table.id_ = path.filename().string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    double c = 0;
    if (fields.size() != 2 || !parse_double(fields[1], c) || c < 0) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected `token<TAB>count`");
    }
    table.counts_[fields[0]] = c;
  }
  if (table.counts_.empty()) throw FormatError(path.string() + ": empty frequency table");
  return table;
}

FrequencyTable FrequencyTable::from_counts(std::unordered_map<std::string, double> counts) {
  FrequencyTable t;
  t.counts_ = std::move(counts);
  return t;
}

double FrequencyTable::count(std::string_view token) const {
  auto it = counts_.find(std::string(token));
  if (it == counts_.end()) it = counts_.find(ascii_lower(token));
  return it == counts_.end() ? 0.0 : it->second;
}

FrequencyScorer::FrequencyScorer(std::shared_ptr<const FrequencyTable> table, Pooling pooling)
    : table_(std::move(table)), pooling_(pooling) {}

double FrequencyScorer::score(std::string_view text) const {
  auto tok = tokenize(text);
  if (tok.tokens.empty()) throw FormatError("cannot score a text with zero tokens");
  std::vector<double> scores;
  scores.reserve(tok.tokens.size());
  for (const auto& t : tok.tokens) scores.push_back(std::log10(table_->count(t.surface) + 1.0));
  return pool(scores, pooling_);
}

std::size_t FrequencyScorer::word_count(std::string_view text) const {
  return tokenize(text).tokens.size();
}

nlohmann::ordered_json FrequencyScorer::describe() const {
  nlohmann::ordered_json j;
  j["kind"] = "frequency_baseline";
  j["table"] = table_->id();
  j["transform"] = "log10(count+1)";
  j["pooling"] = pooling_name(pooling_);
  return j;
}

Prediction decide(double score0, double score1, bool lower_means_more) {
  Prediction p;
  p.score0 = score0;
  p.score1 = score1;
  if (score0 == score1) {
    p.tie = true;
    p.predicted = 0;
  } else if (lower_means_more) {
    p.predicted = score1 < score0 ? 1 : 0;
  } else {
    p.predicted = score1 > score0 ? 1 : 0;
  }
  return p;
}

Prediction classify_pair(const PairExample& ex, const Scorer& scorer) {
  auto p = decide(scorer.score(ex.text0), scorer.score(ex.text1), scorer.lower_means_more());
  p.gold = ex.gold;
  p.words0 = scorer.word_count(ex.text0);
  p.words1 = scorer.word_count(ex.text1);
  return p;
}

EvalReport make_report(std::vector<Prediction> predictions) {
  EvalReport r;
  r.predictions = std::move(predictions);
  r.n = r.predictions.size();
  for (const auto& p : r.predictions) {
    r.correct += p.correct() ? 1 : 0;
    r.tie_count += p.tie ? 1 : 0;
  }
  r.accuracy = r.n == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.n);
  return r;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

EvalReport evaluate(const PairDataset& ds, const Scorer& scorer, unsigned threads) {
  std::vector<Prediction> preds(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    try {
      preds[i] = classify_pair(ds.examples[i], scorer);
    } catch (const Error& e) {
      throw FormatError("example " + std::to_string(i) + ": " + e.what());
    }
  });
  auto report = make_report(std::move(preds));
  report.config = scorer.describe();
  report.dataset = ds.feature + "/" + ds.split;
  return report;
}

EvalReport majority_baseline(const PairDataset& ds) {
  std::size_t ones = 0;
  for (const auto& ex : ds.examples) ones += ex.gold == 1 ? 1 : 0;
  int majority = ones * 2 > ds.size() ? 1 : 0;
  std::vector<Prediction> preds;
  preds.reserve(ds.size());
  for (const auto& ex : ds.examples) {
    Prediction p;
    p.predicted = majority;
    p.gold = ex.gold;
    p.words0 = tokenize(ex.text0).tokens.size();
    p.words1 = tokenize(ex.text1).tokens.size();
    preds.push_back(p);
  }
  auto report = make_report(std::move(preds));
  report.config["kind"] = "majority_baseline";
  report.config["label"] = majority;
  report.dataset = ds.feature + "/" + ds.split;
  return report;
}

nlohmann::ordered_json EvalReport::to_json(bool with_predictions) const {
  nlohmann::ordered_json j;
  j["dataset"] = dataset;
  j["accuracy"] = accuracy;
  j["n"] = n;
  j["correct"] = correct;
  j["tie_count"] = tie_count;
  j["config"] = config;
  if (with_predictions) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : predictions) {
      nlohmann::ordered_json e;
      e["predicted"] = p.predicted;
      e["gold"] = p.gold;
      e["score0"] = p.score0;
      e["score1"] = p.score1;
      e["tie"] = p.tie;
      e["words0"] = p.words0;
      e["words1"] = p.words1;
      arr.push_back(std::move(e));
    }
    j["predictions"] = std::move(arr);
  }
  return j;
}

std::size_t select_winner(const std::vector<double>& val_accuracy,
                          const std::vector<LayerSetting>& layers) {
  if (val_accuracy.empty()) throw UsageError("empty configuration grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_accuracy.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = layers[best];
    if (val_accuracy[i] != val_accuracy[best]) {
      if (val_accuracy[i] > val_accuracy[best]) best = i;
      continue;
    }
    if (a.layer != b.layer) {
      if (a.layer < b.layer) best = i;
      continue;
    }
    if (a.mode == LayerMode::single && b.mode == LayerMode::aggregate) best = i;
  }
  return best;
}

GridResult grid_search(const std::vector<GridCandidate>& grid, const PairDataset& val,
                       const PairDataset& test, unsigned threads) {
  if (grid.empty()) throw UsageError("empty configuration grid");
  GridResult result;
  result.val_reports.resize(grid.size());
  std::vector<double> acc(grid.size());
  std::vector<LayerSetting> layers(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    result.val_reports[i] = evaluate(val, *grid[i].scorer, threads);
    acc[i] = result.val_reports[i].accuracy;
    layers[i] = grid[i].layer;
  }
  result.winner = select_winner(acc, layers);
  result.test_report = evaluate(test, *grid[result.winner].scorer, threads);
  return result;
}

}  // namespace styleprobe
