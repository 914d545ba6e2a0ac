#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace styleprobe::cli {

/// Fully resolved options of one CLI invocation. Echoed into every output.
struct RunConfig {
  std::string command;

  // inputs
  std::vector<std::string> static_paths;  // only grid accepts more than one
  std::vector<std::string> dump_paths;
  std::string seeds;
  std::string feature;
  std::string dataset;
  std::string val;
  std::string test;
  std::string freq_table;
  std::string dvec;
  std::string input;
  std::vector<std::string> texts;
  std::string texts_file;
  std::string grid_file;
  std::vector<std::string> reports;

  // outputs
  std::string out;
  std::string csv;

  // scoring
  std::vector<std::string> pooling = {"mean"};
  std::vector<std::string> corrections = {"none"};
  std::vector<std::string> settings;  // empty: single, or the vector's own setting
  std::string layers;  // "4", "0..12", "0,3,6"
  std::optional<std::size_t> abtt_k;
  std::string fit_granularity = "token";
  std::string baseline = "none";
  bool skip_oov = false;
  bool no_case_fallback = false;
  bool centered_projection = false;
  bool all_test = false;

  // preprocessing
  std::optional<double> min_agreement;
  bool filter_overlap = false;
  bool balance = false;
  std::string ratios = "8:1:1";
  bool allow_empty = false;

  std::uint64_t seed = 42;
  unsigned threads = 1;

  nlohmann::ordered_json to_json() const;
  // Source exclusivity and path existence; throws before any work starts.
  void validate() const;
};

std::vector<std::size_t> parse_layers(const std::string& spec);

// Parses argv (argv[0] is the program name). Throws UsageError on bad flags.
RunConfig load_run_config(int argc, const char* const* argv);

// Entry point: returns the process exit code (0 ok, 1 usage, 2 input, 3 numeric).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace styleprobe::cli
