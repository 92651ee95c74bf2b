#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <boost/property_tree/ptree.hpp>

#include "setpar/estimation.hpp"
#include "setpar/mc_study.hpp"
#include "setpar/model.hpp"

namespace setpar::app {

/// INI-style key/value text: `key = value` lines, `[section]` headers, `;` or `#` comments.
using ConfigTree = boost::property_tree::ptree;

ConfigTree load_config(const std::filesystem::path& path);
ConfigTree parse_config(const std::string& text, const std::string& source = "config");

/// `r` at top level, `d`, `a`, `b` under [lower] and [upper].
SetparParams params_from(const ConfigTree& tree);

struct SimulationConfig {
    SetparParams params;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t burn_in = 500;
    std::optional<double> lambda_init;
};

/// Keys: n, seed, burn_in (optional), lambda_init (optional) plus the parameter blocks.
SimulationConfig simulation_config(const ConfigTree& tree);

/// Optional keys: alpha1, alpha2, thresholds (comma list), lambda_init (mean, first or
/// a number), epsilon, tol,
/// max_iter, starts, warm_start, workers, min_regime_obs. Missing keys keep defaults.
FitConfig fit_config_from(const ConfigTree& tree, FitConfig base = {});

/// Keys: sizes (comma list), replications, seed, burn_in (optional), the parameter
/// blocks and an optional [fit] section.
McDesign design_from(const ConfigTree& tree);

/// "mean", "first" or a positive number.
void apply_lambda_init(const std::string& text, FitConfig& cfg, const std::string& field);

std::vector<Count> parse_count_list(const std::string& text, const std::string& field);

}  // namespace setpar::app
