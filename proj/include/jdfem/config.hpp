#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "jdfem/experiment.hpp"

namespace jdfem {

/// INI-style experiment configuration. Sections and keys:
///
///   [subordinator] family (poisson|gamma), intensity, shape, rate,
///                  method (exact|grid), downscale
///   [fields]       sigma1, r1, sigma2, r2
///   [coefficient]  abar, phi1, phi2, K, A (inf disables the cut-off)
///   [pde]          bc (mixed|dirichlet), source
///   [levels]       h_base, ratio, count, reference, reference_mesh
///   [sampling]     samples, rel_std, max_samples
///   [equilibration] gamma, rc, kappa_adapted, kappa_standard, kappa_reference
///   [run]          seed, arms (comma separated: adapted, standard)
///
/// Missing keys keep their defaults; unknown keys are errors.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Sets one dotted key ("fields.sigma1") from its text form.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const ExperimentConfig& config, std::string_view key);

/// Every known key, dotted, in echo order.
const std::vector<std::string>& config_keys();

/// Full INI text that parses back to an identical configuration.
std::string echo_config(const ExperimentConfig& config);

/// Shortest text that round-trips the double exactly.
std::string format_double(double value);

}  // namespace jdfem
