#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "app.hpp"
#include "styleprobe/error.hpp"

namespace styleprobe::cli {
namespace {

// Reads a flat JSON object whose keys are long flag names without the
// leading dashes ("no-case-fallback" or "no_case_fallback"). Items are routed
// to the subcommand being run.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      std::replace(item.name.begin(), item.name.end(), '_', '-');
      if (auto subs = root_->get_subcommands(); !subs.empty()) {
        item.parents = {subs.front()->get_name()};
      }
      auto as_text = [](const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
        return v.dump();
      };
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(as_text(v));
      } else {
        item.inputs.push_back(as_text(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* root_;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("STYLEPROBE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("STYLEPROBE_SEED is not an unsigned integer: ") + env);
    }
  }
  return 42;
}

void add_source_options(CLI::App* sub, RunConfig& cfg, bool many) {
  auto* st = sub->add_option("--static", cfg.static_paths,
                             many ? "static word-vector file (repeatable)"
                                  : "static word-vector file");
  auto* dp = sub->add_option("--dump", cfg.dump_paths,
                             many ? "layer dump file (repeatable)" : "layer dump file");
  if (!many) {
    st->expected(1);
    dp->expected(1);
    st->excludes(dp);
  }
  sub->add_flag("--no-case-fallback", cfg.no_case_fallback,
                "static lookups: no lowercase retry before the zero vector");
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  // --config lives on the root app, the only place CLI11 reads config files
  sub->fallthrough();
  sub->footer("Flags may also come from a JSON file: " + sub->get_name() +
              " --config FILE. Explicit flags override it.");
  sub->allow_config_extras(CLI::config_extras_mode::error);
  sub->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

std::vector<std::size_t> parse_layers(const std::string& spec) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  auto number = [&](const std::string& s) -> std::size_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("bad layer specification '" + spec + "'");
    }
    return std::stoul(s);
  };
  while (start <= spec.size()) {
    auto comma = spec.find(',', start);
    std::string piece = spec.substr(start, comma == std::string::npos ? std::string::npos
                                                                      : comma - start);
    auto dots = piece.find("..");
    if (dots == std::string::npos) {
      out.push_back(number(piece));
    } else {
      auto lo = number(piece.substr(0, dots));
      auto hi = number(piece.substr(dots + 2));
      if (hi < lo) throw UsageError("empty layer range '" + piece + "'");
      for (auto l = lo; l <= hi; ++l) out.push_back(l);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

namespace detail {

std::unique_ptr<CLI::App> make_app(RunConfig& cfg) {
  auto app = std::make_unique<CLI::App>(
      "styleprobe: lexical style directions in embedding space", "styleprobe");
  app->require_subcommand(1, 1);
  app->set_config("--config", "", "JSON run configuration; explicit flags override it");
  app->config_formatter(std::make_shared<JsonConfig>(app.get()));
  app->allow_config_extras(CLI::config_extras_mode::error);
  app->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cfg.seed = default_seed();
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());

  auto* build = app->add_subcommand("build-vector", "build a feature vector from seed pairs");
  add_common(build, cfg);
  build->add_option("--seeds", cfg.seeds, "seed pair TSV (low<TAB>high)")->required();
  build->add_option("--feature", cfg.feature, "feature name (default: seed file stem)");
  add_source_options(build, cfg, false);
  build->add_option("--layer", cfg.layers, "layer index for dump sources");
  build->add_option("--setting", cfg.settings, "single or agg")->expected(1);
  build->add_option("--correction", cfg.corrections, "none, abtt, standardization or rank")
      ->expected(1);
  build->add_option("--k", cfg.abtt_k, "abtt: number of removed components");
  build->add_flag("--centered-projection", cfg.centered_projection,
                  "abtt: project x - mu instead of x");
  build->add_option("--fit-granularity", cfg.fit_granularity, "token or text");
  build->add_option("--out", cfg.out, "output feature vector JSON")->required();

  auto* score = app->add_subcommand("score", "score texts along a feature vector");
  add_common(score, cfg);
  score->add_option("--dvec", cfg.dvec, "feature vector JSON")->required();
  add_source_options(score, cfg, false);
  score->add_option("--layer", cfg.layers, "layer index (default: the vector's)");
  score->add_option("--setting", cfg.settings, "single or agg")->expected(1);
  score->add_option("--text", cfg.texts, "text to score (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  score->add_option("--texts", cfg.texts_file, "file with one text per line");
  score->add_option("--pooling", cfg.pooling, "mean or max")->expected(1);
  score->add_flag("--skip-oov", cfg.skip_oov, "leave OOV words out of pooling");
  score->add_option("--out", cfg.out, "JSON Lines output (default: stdout)");

  auto* prep = app->add_subcommand("preprocess", "filter, balance and split a pair dataset");
  add_common(prep, cfg);
  prep->add_option("--input", cfg.input, "canonical TSV text0<TAB>text1<TAB>gold[<TAB>agreement]")
      ->required();
  prep->add_option("--feature", cfg.feature, "feature name");
  prep->add_option("--min-agreement", cfg.min_agreement, "keep pairs with agreement >= value");
  prep->add_flag("--filter-overlap", cfg.filter_overlap, "drop pairs with equal or nested token sets");
  prep->add_flag("--balance", cfg.balance, "randomly swap pairs to balance labels");
  prep->add_option("--ratios", cfg.ratios, "train:val:test ratios");
  prep->add_flag("--allow-empty", cfg.allow_empty, "allow empty splits with ratio 0");
  prep->add_option("--seed", cfg.seed, "PRNG seed (default: $STYLEPROBE_SEED or 42)");
  prep->add_option("--out", cfg.out, "output directory")->required();

  auto* eval = app->add_subcommand("evaluate", "pairwise accuracy on a dataset");
  add_common(eval, cfg);
  eval->add_option("--dataset", cfg.dataset, "pair dataset TSV")->required();
  eval->add_option("--feature", cfg.feature, "feature name");
  eval->add_option("--dvec", cfg.dvec, "feature vector JSON");
  add_source_options(eval, cfg, false);
  eval->add_option("--layer", cfg.layers, "layer index (default: the vector's)");
  eval->add_option("--setting", cfg.settings, "single or agg")->expected(1);
  eval->add_option("--pooling", cfg.pooling, "mean or max")->expected(1);
  eval->add_flag("--skip-oov", cfg.skip_oov, "leave OOV words out of pooling");
  eval->add_option("--baseline", cfg.baseline, "none, majority or frequency");
  eval->add_option("--freq", cfg.freq_table, "frequency table TSV (token<TAB>count)");
  eval->add_option("--out", cfg.out, "report JSON");

  auto* grid = app->add_subcommand("grid", "grid search over sources, layers and settings");
  add_common(grid, cfg);
  grid->add_option("--seeds", cfg.seeds, "seed pair TSV")->required();
  grid->add_option("--feature", cfg.feature, "feature name");
  grid->add_option("--val", cfg.val, "validation dataset TSV")->required();
  grid->add_option("--test", cfg.test, "test dataset TSV")->required();
  add_source_options(grid, cfg, true);
  grid->add_option("--layers", cfg.layers, "layers for dump sources, e.g. 0..12");
  grid->add_option("--settings", cfg.settings, "single,agg")->delimiter(',');
  grid->add_option("--pooling", cfg.pooling, "mean,max")->delimiter(',');
  grid->add_option("--correction", cfg.corrections, "none,abtt,standardization,rank")
      ->delimiter(',');
  grid->add_option("--k", cfg.abtt_k, "abtt: number of removed components");
  grid->add_flag("--centered-projection", cfg.centered_projection,
                 "abtt: project x - mu instead of x");
  grid->add_option("--fit-granularity", cfg.fit_granularity, "token or text");
  grid->add_flag("--skip-oov", cfg.skip_oov, "leave OOV words out of pooling");
  grid->add_flag("--all-test", cfg.all_test, "also evaluate every configuration on test");
  grid->add_option("--out", cfg.out, "grid result JSON")->required();

  auto* analyze = app->add_subcommand("analyze", "setting comparison, layer curves, length bins");
  add_common(analyze, cfg);
  analyze->add_option("--grid", cfg.grid_file, "grid result JSON");
  analyze->add_option("--report", cfg.reports, "evaluation report JSON (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  analyze->add_option("--csv", cfg.csv, "layer-curve CSV output");
  analyze->add_option("--out", cfg.out, "analysis JSON (default: stdout)");

  auto* validate = app->add_subcommand("validate-dump", "check a layer dump file");
  add_common(validate, cfg);
  validate->add_option("--dump", cfg.dump_paths, "layer dump file")->required()->expected(1);
  validate->add_option("--out", cfg.out, "report JSON (default: stdout)");

  return app;
}

}  // namespace detail

RunConfig load_run_config(int argc, const char* const* argv) {
  RunConfig cfg;
  auto app = detail::make_app(cfg);
  try {
    app->parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  cfg.command = app->get_subcommands().front()->get_name();
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) j[key] = v;
  };
  if (!static_paths.empty()) j["static"] = static_paths;
  if (!dump_paths.empty()) j["dump"] = dump_paths;
  put("seeds", seeds);
  put("feature", feature);
  put("dataset", dataset);
  put("val", val);
  put("test", test);
  put("freq", freq_table);
  put("dvec", dvec);
  put("input", input);
  if (!texts.empty()) j["text"] = texts;
  put("texts", texts_file);
  put("grid", grid_file);
  if (!reports.empty()) j["report"] = reports;
  put("out", out);
  put("csv", csv);
  j["pooling"] = pooling;
  j["correction"] = corrections;
  j["settings"] = settings;
  put("layers", layers);
  if (abtt_k) j["k"] = *abtt_k;
  j["fit_granularity"] = fit_granularity;
  j["baseline"] = baseline;
  j["skip_oov"] = skip_oov;
  j["no_case_fallback"] = no_case_fallback;
  j["centered_projection"] = centered_projection;
  j["all_test"] = all_test;
  if (min_agreement) j["min_agreement"] = *min_agreement;
  j["filter_overlap"] = filter_overlap;
  j["balance"] = balance;
  j["ratios"] = ratios;
  j["allow_empty"] = allow_empty;
  j["seed"] = seed;
  return j;
}

void RunConfig::validate() const {
  auto must_exist = [](const std::string& p, const char* what) {
    if (!p.empty() && !std::filesystem::exists(p)) {
      throw FormatError(std::string(what) + " not found: " + p);
    }
  };
  for (const auto& p : static_paths) must_exist(p, "static embeddings");
  for (const auto& p : dump_paths) must_exist(p, "layer dump");
  must_exist(seeds, "seed file");
  must_exist(dataset, "dataset");
  must_exist(val, "validation dataset");
  must_exist(test, "test dataset");
  must_exist(freq_table, "frequency table");
  must_exist(dvec, "feature vector");
  must_exist(input, "input dataset");
  must_exist(texts_file, "texts file");
  must_exist(grid_file, "grid result");
  for (const auto& p : reports) must_exist(p, "report");

  bool one_source = command == "build-vector" || command == "score" ||
                    (command == "evaluate" && baseline == "none");
  if (one_source && static_paths.size() + dump_paths.size() != 1) {
    throw UsageError("exactly one of --static or --dump is required");
  }
  if (command == "grid" && static_paths.empty() && dump_paths.empty()) {
    throw UsageError("grid needs at least one --static or --dump source");
  }
  if (command == "evaluate") {
    if (baseline != "none" && baseline != "majority" && baseline != "frequency") {
      throw UsageError("unknown baseline '" + baseline + "'");
    }
    if (baseline == "none" && dvec.empty()) throw UsageError("evaluate needs --dvec or --baseline");
    if (baseline == "frequency" && freq_table.empty()) {
      throw UsageError("the frequency baseline needs --freq");
    }
  }
  if (command == "score" && texts.empty() && texts_file.empty()) {
    throw UsageError("score needs --text or --texts");
  }
  if (command == "analyze" && grid_file.empty() && reports.empty()) {
    throw UsageError("analyze needs --grid or --report");
  }
  if (!layers.empty()) parse_layers(layers);
}

}  // namespace styleprobe::cli
