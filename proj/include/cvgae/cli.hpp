//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cvgae/molgraph.hpp"
#include "cvgae/mpnn.hpp"
#include "cvgae/train.hpp"

namespace cvgae {

inline constexpr std::string_view kVersion = "0.1.0";

class ConfigError: public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DatasetConfig {
  std::vector<std::string> sdf;
  /// "qm9", "cod", "csd", "none" (connectivity only) or a custom profile.
  std::string profile = "qm9";
  std::optional<FilterProfile> custom_profile;
  std::size_t valid = 0;
  std::size_t test = 0;
};

struct SamplingConfig {
  std::size_t samples = 100;
  double baseline_scale = 1.0;
};

/// One JSON document drives every command. Every section and key is
/// optional; unknown keys anywhere are rejected.
struct RunConfig {
  DatasetConfig dataset;
  MpnnConfig model;
  TrainConfig train;
  SamplingConfig sampling;
  std::string output_dir;
  std::uint64_t seed = 0;

  void validate() const;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string &path);

/// Canonical JSON of the resolved configuration (stable key order).
std::string run_config_json(const RunConfig &config);

/// Seeds of the individual random streams, derived from RunConfig::seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

/// Entry point of the `cvgae` tool. Returns the process exit code.
int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err);

}  // namespace cvgae
