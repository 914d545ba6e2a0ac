#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "app.hpp"
#include "styleprobe/analysis.hpp"
#include "styleprobe/error.hpp"
#include "styleprobe/eval_harness.hpp"
#include "styleprobe/layer_dump.hpp"
#include "styleprobe/style_vectors.hpp"

namespace styleprobe::cli {
namespace {

using ojson = nlohmann::ordered_json;

void write_json(const ojson& j, const std::string& path, std::ostream& fallback) {
  if (path.empty()) {
    fallback << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string fmt_pct(double acc) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", acc * 100.0);
  return buf;
}

std::string feature_name(const RunConfig& cfg, const std::string& fallback_path) {
  if (!cfg.feature.empty()) return cfg.feature;
  if (!fallback_path.empty()) return std::filesystem::path(fallback_path).stem().string();
  return "feature";
}

LayerSetting layer_setting(const RunConfig& cfg, std::optional<LayerSetting> fallback) {
  LayerSetting s = fallback.value_or(LayerSetting{});
  if (!cfg.layers.empty()) {
    auto layers = parse_layers(cfg.layers);
    if (layers.size() != 1) throw UsageError("--layer takes a single layer index");
    s.layer = layers.front();
  }
  if (!cfg.settings.empty()) s.mode = parse_layer_mode(cfg.settings.front());
  return s;
}

EmbeddingSource open_source(const RunConfig& cfg, std::optional<LayerSetting> fallback) {
  if (!cfg.static_paths.empty()) {
    auto store = std::make_shared<const StaticEmbeddings>(
        StaticEmbeddings::load(cfg.static_paths.front()));
    return EmbeddingSource::from_static(store, !cfg.no_case_fallback);
  }
  auto dump = std::make_shared<const LayerDump>(LayerDump::open(cfg.dump_paths.front()));
  return EmbeddingSource::from_dump(dump, layer_setting(cfg, fallback));
}

VectorConfig vector_config(const RunConfig& cfg, CorrectionMethod correction) {
  VectorConfig v;
  v.correction = correction;
  v.abtt_k = cfg.abtt_k;
  v.centered_projection = cfg.centered_projection;
  v.granularity = parse_granularity(cfg.fit_granularity);
  return v;
}

int cmd_build_vector(const RunConfig& cfg, std::ostream& out) {
  if (cfg.corrections.size() != 1) throw UsageError("--correction takes one method");
  auto correction = parse_correction(cfg.corrections.front());
  auto seeds = load_seed_set(cfg.seeds, feature_name(cfg, cfg.seeds));
  auto source = open_source(cfg, std::nullopt);
  auto fv = build_feature_vector(seeds, source, vector_config(cfg, correction));
  auto j = feature_vector_to_json(fv);
  j["run_config"] = cfg.to_json();
  write_json(j, cfg.out, out);

  out << "feature " << fv.feature << ": " << seeds.pairs.size() << " seed pairs, d=" << fv.dim()
      << ", correction " << correction_name(correction);
  if (fv.correction.stats && correction == CorrectionMethod::abtt) {
    out << " (k=" << fv.correction.stats->k;
    if (fv.correction.stats->k_reduced()) out << ", reduced from " << fv.correction.stats->requested_k;
    out << ")";
  }
  out << " -> " << cfg.out << '\n';
  return 0;
}

ScoreConfig score_config(const RunConfig& cfg, const FeatureVector& fv, const EmbeddingSource& src) {
  if (cfg.pooling.size() != 1) throw UsageError("--pooling takes one strategy");
  auto sc = ScoreConfig::for_correction(fv.correction.method, parse_pooling(cfg.pooling.front()));
  sc.skip_oov = cfg.skip_oov;
  if (src.contextual()) sc.layer = src.layer_setting();
  return sc;
}

std::optional<LayerSetting> vector_layer(const FeatureVector& fv) {
  if (!fv.provenance.contextual) return std::nullopt;
  return fv.provenance.layer;
}

int cmd_score(const RunConfig& cfg, std::ostream& out) {
  auto fv = load_feature_vector(cfg.dvec);
  auto source = open_source(cfg, vector_layer(fv));
  auto sc = score_config(cfg, fv, source);
  check_compatible(fv, source, sc);

  std::vector<std::string> texts = cfg.texts;
  if (!cfg.texts_file.empty()) {
    std::ifstream in(cfg.texts_file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) texts.push_back(line);
    }
  }

  std::ofstream file;
  std::ostream* sink = &out;
  if (!cfg.out.empty()) {
    file.open(cfg.out);
    if (!file) throw FormatError("cannot write " + cfg.out);
    sink = &file;
  }
  ojson config;
  config["score_config"] = sc.to_json();
  config["source"] = source.id();
  config["run_config"] = cfg.to_json();
  for (const auto& text : texts) {
    auto fs = score_text(text, fv, source, sc);
    ojson j;
    j["text"] = text;
    j["feature"] = fv.feature;
    j["value"] = fs.value;
    j["word_scores"] = fs.word_scores;
    j["oov_count"] = fs.oov_count;
    j["config"] = config;
    *sink << j.dump() << '\n';
  }
  return 0;
}

int cmd_preprocess(const RunConfig& cfg, std::ostream& out) {
  auto ds = load_pair_dataset(cfg.input, feature_name(cfg, cfg.input));
  std::size_t loaded = ds.size();
  if (cfg.min_agreement) ds = filter_min_agreement(ds, *cfg.min_agreement);
  std::size_t after_agreement = ds.size();
  if (cfg.filter_overlap) ds = filter_token_overlap(ds);
  std::size_t after_overlap = ds.size();
  // Independent streams for label balancing and splitting.
  std::uint64_t balance_seed = cfg.seed;
  std::uint64_t split_seed = cfg.seed ^ 0x9E3779B97F4A7C15ULL;
  if (cfg.balance) ds = balance_labels(ds, balance_seed);
  auto parts = split(ds, parse_ratios(cfg.ratios), split_seed, cfg.allow_empty);

  std::filesystem::create_directories(cfg.out);
  ojson manifest;
  manifest["feature"] = ds.feature;
  manifest["source"] = cfg.input;
  manifest["loaded"] = loaded;
  manifest["skipped_malformed"] = ds.provenance.value("skipped", std::size_t{0});
  manifest["after_min_agreement"] = after_agreement;
  manifest["after_overlap_filter"] = after_overlap;
  manifest["balance_seed"] = balance_seed;
  manifest["split_seed"] = split_seed;
  manifest["prng"] = "mt19937_64";
  ojson sizes;
  for (const auto* p : {&parts.train, &parts.val, &parts.test}) {
    sizes[p->split] = p->size();
    if (p->size() == 0) continue;
    write_pair_dataset(*p, std::filesystem::path(cfg.out) / (p->split + ".tsv"));
  }
  manifest["splits"] = sizes;
  manifest["run_config"] = cfg.to_json();
  write_json(manifest, (std::filesystem::path(cfg.out) / "manifest.json").string(), out);

  out << "preprocess " << ds.feature << ": loaded " << loaded << ", kept " << ds.size()
      << " -> train " << parts.train.size() << " / val " << parts.val.size() << " / test "
      << parts.test.size() << '\n';
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  auto ds = load_pair_dataset(cfg.dataset, feature_name(cfg, cfg.dataset));
  EvalReport report;
  if (cfg.baseline == "majority") {
    report = majority_baseline(ds);
  } else if (cfg.baseline == "frequency") {
    if (cfg.pooling.size() != 1) throw UsageError("--pooling takes one strategy");
    auto table = std::make_shared<const FrequencyTable>(FrequencyTable::load(cfg.freq_table));
    FrequencyScorer scorer(table, parse_pooling(cfg.pooling.front()));
    report = evaluate(ds, scorer, cfg.threads);
  } else {
    auto fv = std::make_shared<const FeatureVector>(load_feature_vector(cfg.dvec));
    auto source = open_source(cfg, vector_layer(*fv));
    StyleScorer scorer(fv, source, score_config(cfg, *fv, source));
    report = evaluate(ds, scorer, cfg.threads);
  }
  auto j = report.to_json();
  j["run_config"] = cfg.to_json();
  if (!cfg.out.empty()) write_json(j, cfg.out, out);
  out << "accuracy " << fmt_pct(report.accuracy) << " (" << report.correct << "/" << report.n
      << ", ties " << report.tie_count << ") on " << cfg.dataset << '\n';
  return 0;
}

struct SourceSpec {
  std::string path;
  bool contextual = false;
};

int cmd_grid(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto feature = feature_name(cfg, cfg.seeds);
  auto seeds = load_seed_set(cfg.seeds, feature);
  auto val = load_pair_dataset(cfg.val, feature);
  val.split = "val";
  auto test = load_pair_dataset(cfg.test, feature);
  test.split = "test";

  std::vector<Pooling> poolings;
  for (const auto& p : cfg.pooling) poolings.push_back(parse_pooling(p));
  std::vector<CorrectionMethod> corrections;
  for (const auto& c : cfg.corrections) corrections.push_back(parse_correction(c));
  std::vector<LayerMode> modes;
  for (const auto& s : cfg.settings) modes.push_back(parse_layer_mode(s));
  if (modes.empty()) modes.push_back(LayerMode::single);
  auto layers = cfg.layers.empty() ? std::vector<std::size_t>{0} : parse_layers(cfg.layers);

  struct Entry {
    GridCandidate candidate;
    std::string group;
    std::string model;
    Pooling pooling;
    CorrectionMethod correction;
    bool contextual;
  };
  std::vector<Entry> entries;

  auto add_source = [&](const EmbeddingSource& src, const std::string& model) {
    for (auto correction : corrections) {
      std::shared_ptr<const FeatureVector> fv;
      try {
        fv = std::make_shared<const FeatureVector>(
            build_feature_vector(seeds, src, vector_config(cfg, correction)));
      } catch (const NumericError& e) {
        err << "warning: skipping " << model << " " << src.layer_setting().to_string()
                  << " " << correction_name(correction) << ": " << e.what() << '\n';
        continue;
      }
      for (auto pooling : poolings) {
        auto sc = ScoreConfig::for_correction(correction, pooling);
        sc.skip_oov = cfg.skip_oov;
        auto scorer = std::make_shared<const StyleScorer>(fv, src, sc);
        std::string kind = src.contextual() ? std::string(layer_mode_name(src.layer_setting().mode))
                                            : "static";
        Entry e;
        e.candidate.scorer = scorer;
        e.candidate.layer = src.contextual() ? src.layer_setting() : LayerSetting{};
        e.candidate.name = model + (src.contextual() ? "@" + src.layer_setting().to_string() : "") +
                           "/" + std::string(correction_name(correction)) + "/" +
                           std::string(pooling_name(pooling));
        e.group = std::string(pooling_name(pooling)) + "/" + kind + "/" +
                  std::string(correction_name(correction));
        e.model = model;
        e.pooling = pooling;
        e.correction = correction;
        e.contextual = src.contextual();
        entries.push_back(std::move(e));
      }
    }
  };

  for (const auto& path : cfg.static_paths) {
    auto store = std::make_shared<const StaticEmbeddings>(StaticEmbeddings::load(path));
    add_source(EmbeddingSource::from_static(store, !cfg.no_case_fallback),
               std::filesystem::path(path).stem().string());
  }
  for (const auto& path : cfg.dump_paths) {
    auto dump = std::make_shared<const LayerDump>(LayerDump::open(path));
    auto model = dump->header().model_name.empty() ? std::filesystem::path(path).stem().string()
                                                   : dump->header().model_name;
    for (auto mode : modes) {
      for (auto layer : layers) {
        if (layer > dump->header().num_layers) continue;
        add_source(EmbeddingSource::from_dump(dump, {mode, layer}), model);
      }
    }
  }
  if (entries.empty()) throw UsageError("the configuration grid is empty");

  std::vector<EvalReport> val_reports(entries.size());
  std::vector<std::optional<EvalReport>> test_reports(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    val_reports[i] = evaluate(val, *entries[i].candidate.scorer, cfg.threads);
    if (cfg.all_test) test_reports[i] = evaluate(test, *entries[i].candidate.scorer, cfg.threads);
  }

  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::string> group_order;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!groups.count(entries[i].group)) group_order.push_back(entries[i].group);
    groups[entries[i].group].push_back(i);
  }

  ojson result;
  result["feature"] = feature;
  result["val"] = cfg.val;
  result["test"] = cfg.test;
  result["majority_val"] = majority_baseline(val).accuracy;
  result["majority_test"] = majority_baseline(test).accuracy;
  auto configs = ojson::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    ojson c;
    c["name"] = e.candidate.name;
    c["model"] = e.model;
    c["contextual"] = e.contextual;
    c["setting"] = e.contextual ? std::string(layer_mode_name(e.candidate.layer.mode)) : "static";
    c["layer"] = e.candidate.layer.layer;
    c["pooling"] = pooling_name(e.pooling);
    c["correction"] = correction_name(e.correction);
    c["val_accuracy"] = val_reports[i].accuracy;
    if (test_reports[i]) c["test_accuracy"] = test_reports[i]->accuracy;
    configs.push_back(std::move(c));
  }
  result["configs"] = std::move(configs);

  auto winners = ojson::array();
  out << std::left << std::setw(34) << "group" << std::setw(44) << "winner" << "val    test\n";
  for (const auto& g : group_order) {
    const auto& idx = groups[g];
    std::vector<double> acc;
    std::vector<LayerSetting> ls;
    for (auto i : idx) {
      acc.push_back(val_reports[i].accuracy);
      ls.push_back(entries[i].candidate.layer);
    }
    std::size_t w = idx[select_winner(acc, ls)];
    EvalReport test_report = test_reports[w] ? *test_reports[w]
                                             : evaluate(test, *entries[w].candidate.scorer,
                                                        cfg.threads);
    ojson wj;
    wj["group"] = g;
    wj["winner"] = entries[w].candidate.name;
    wj["config_index"] = w;
    wj["val_accuracy"] = val_reports[w].accuracy;
    wj["test_report"] = test_report.to_json();
    winners.push_back(std::move(wj));
    out << std::left << std::setw(34) << g << std::setw(44) << entries[w].candidate.name
        << std::setw(7) << fmt_pct(val_reports[w].accuracy) << fmt_pct(test_report.accuracy) << '\n';
  }
  result["winners"] = std::move(winners);
  result["run_config"] = cfg.to_json();
  write_json(result, cfg.out, out);
  return 0;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  ojson result;
  if (!cfg.grid_file.empty()) {
    std::ifstream in(cfg.grid_file);
    nlohmann::json grid;
    try {
      grid = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(cfg.grid_file + ": " + e.what());
    }
    // Pair single-layer and aggregated results for the same (model, layer, correction).
    std::map<std::string, std::map<std::string, double>> single, agg;
    std::map<std::string, std::map<std::string, std::map<std::size_t, double>>> curves;
    bool use_test = true;
    for (const auto& c : grid.at("configs")) use_test = use_test && c.contains("test_accuracy");
    const char* acc_key = use_test ? "test_accuracy" : "val_accuracy";
    for (const auto& c : grid.at("configs")) {
      if (!c.at("contextual").get<bool>()) continue;
      std::string pooling = c.at("pooling").get<std::string>();
      std::string key = c.at("model").get<std::string>() + "@" +
                        std::to_string(c.at("layer").get<std::size_t>()) + "/" +
                        c.at("correction").get<std::string>();
      double acc = c.at(acc_key).get<double>();
      std::string setting = c.at("setting").get<std::string>();
      (setting == "single" ? single : agg)[pooling][key] = acc;
      curves[pooling + "/" + setting + "/" + c.at("correction").get<std::string>()]
            [c.at("model").get<std::string>()][c.at("layer").get<std::size_t>()] = acc;
    }
    ojson comparisons = ojson::object();
    for (const auto& [pooling, s] : single) {
      if (!agg.count(pooling)) continue;
      auto cmp = compare_settings(s, agg[pooling]);
      comparisons[pooling] = cmp.to_json();
      out << pooling << ": aggregation >= single in " << std::fixed << std::setprecision(1)
          << cmp.pct_agg_at_least_single << "% of configs, mean gain " << cmp.mean_acc_gain
          << " points (" << acc_key << ")\n";
    }
    result["setting_comparison"] = comparisons;
    result["accuracy_source"] = acc_key;

    if (!cfg.csv.empty()) {
      std::ofstream csv(cfg.csv);
      if (!csv) throw FormatError("cannot write " + cfg.csv);
      csv << "series,model,layer,accuracy\n";
      for (const auto& [series, models] : curves) {
        for (const auto& [model, points] : models) {
          for (const auto& [layer, acc] : points) {
            csv << series << ',' << model << ',' << layer << ',' << acc << '\n';
          }
        }
      }
    }
  }
  if (!cfg.reports.empty()) {
    std::vector<EvalReport> reports;
    for (const auto& path : cfg.reports) {
      std::ifstream in(path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": " + e.what());
      }
      const auto& rj = j.contains("test_report") ? j["test_report"] : j;
      if (!rj.contains("predictions")) throw FormatError(path + ": report has no predictions");
      std::vector<Prediction> preds;
      for (const auto& p : rj["predictions"]) {
        Prediction pr;
        pr.predicted = p.at("predicted").get<int>();
        pr.gold = p.at("gold").get<int>();
        pr.score0 = p.value("score0", 0.0);
        pr.score1 = p.value("score1", 0.0);
        pr.tie = p.value("tie", false);
        pr.words0 = p.at("words0").get<std::size_t>();
        pr.words1 = p.at("words1").get<std::size_t>();
        preds.push_back(pr);
      }
      reports.push_back(make_report(std::move(preds)));
    }
    auto bins = length_bin_analysis(reports);
    result["length_bins"] = bins.to_json();
    for (const auto& b : bins.bins) {
      out << std::left << std::setw(9) << b.label << std::right << std::setw(7) << b.n << "  "
          << (b.n ? fmt_pct(b.accuracy()) : "-") << '\n';
    }
  }
  result["run_config"] = cfg.to_json();
  if (!cfg.out.empty()) write_json(result, cfg.out, out);
  return 0;
}

int cmd_validate_dump(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto report = validate_dump(cfg.dump_paths.front());
  ojson j;
  j["path"] = cfg.dump_paths.front();
  j["entries"] = report.entries;
  j["ok"] = report.ok();
  auto arr = ojson::array();
  for (const auto& v : report.violations) arr.push_back({{"text_id", v.text_id}, {"message", v.message}});
  j["violations"] = std::move(arr);
  j["run_config"] = cfg.to_json();
  write_json(j, cfg.out, out);
  if (!report.ok()) {
    for (const auto& v : report.violations) {
      err << (v.text_id.empty() ? "<header>" : v.text_id) << ": " << v.message << '\n';
    }
    return 2;
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  auto app = detail::make_app(cfg);
  try {
    app->parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    auto unknown = app->remaining(true);
    if (!unknown.empty()) {
      err << "error: unknown option";
      for (const auto& u : unknown) err << ' ' << u;
      err << "\n\n";
    } else if (dynamic_cast<const CLI::ConfigError*>(&e) != nullptr) {
      std::string what = e.what();
      auto at = what.find("parse ");
      err << "error: unknown config key "
          << (at == std::string::npos ? what : what.substr(at + 6)) << "\n\n";
    } else {
      err << "error: " << e.what() << "\n\n";
    }
    const CLI::App* target = app.get();
    for (const auto* sub : app->get_subcommands()) target = sub;
    err << target->help();
    return 1;
  }
  try {
    cfg.command = app->get_subcommands().front()->get_name();
    cfg.validate();
    if (cfg.command == "build-vector") return cmd_build_vector(cfg, out);
    if (cfg.command == "score") return cmd_score(cfg, out);
    if (cfg.command == "preprocess") return cmd_preprocess(cfg, out);
    if (cfg.command == "evaluate") return cmd_evaluate(cfg, out);
    if (cfg.command == "grid") return cmd_grid(cfg, out, err);
    if (cfg.command == "analyze") return cmd_analyze(cfg, out);
    if (cfg.command == "validate-dump") return cmd_validate_dump(cfg, out, err);
    throw UsageError("unknown command " + cfg.command);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace styleprobe::cli
