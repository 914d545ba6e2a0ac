#pragma once

#include <memory>

#include <CLI11.hpp>

#include "styleprobe/cli.hpp"

namespace styleprobe::cli::detail {

// Subcommand options are bound directly to the fields of cfg.
std::unique_ptr<CLI::App> make_app(RunConfig& cfg);

}  // namespace styleprobe::cli::detail
