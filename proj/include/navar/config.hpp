#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "navar/backbone.hpp"

namespace navar {

struct NavarConfig {
  BackboneKind backbone = BackboneKind::kMlp;
  std::size_t lags = 1;  // K
  std::size_t hidden_units = 16;
  std::size_t hidden_layers = 1;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double lambda = 0.1;  // contribution penalty
  double mu = 0.0;      // weight decay
  std::size_t epochs = 5000;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;

  void validate() const;

  /// Assigns one field from its textual form; unknown keys are config errors.
  void set(const std::string& key, const std::string& value);
  /// Every field as (key, value) in a fixed order; values round-trip through set().
  std::vector<std::pair<std::string, std::string>> entries() const;

  friend bool operator==(const NavarConfig&, const NavarConfig&) = default;
};

/// Flat key=value text. Blank lines and '#' comments are ignored.
NavarConfig parse_config(const std::string& text, NavarConfig base = {});
NavarConfig load_config_file(const std::string& path, NavarConfig base = {});
std::string format_config(const NavarConfig& config);

struct Preset {
  const char* name;
  const char* description;
  NavarConfig config;
};

/// Tuned hyperparameters shipped with the library.
std::span<const Preset> presets();
const Preset& find_preset(const std::string& name);

}  // namespace navar
