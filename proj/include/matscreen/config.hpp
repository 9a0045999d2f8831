// Copyright 2026 The matscreen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "matscreen/active.hpp"
#include "matscreen/error.hpp"
#include "matscreen/explore.hpp"
#include "matscreen/relax.hpp"

namespace matscreen {

/// Validation failure listing every problem as "<field.path>: <message>".
class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// Accepts "lo..hi step dt" (inclusive of hi when it falls on the grid), a
/// JSON array of numbers, or a single number.
std::vector<double> parse_temperature_grid(const nlohmann::json& j);
std::vector<double> parse_temperature_grid(std::string_view text);

struct PhononSettings {
  IVec3 mesh{4, 4, 4};
  double supercell_width = 8.0;  // A, minimum perpendicular width
  double amplitude = 0.01;       // A
  std::size_t top_k = 50;        // candidates that receive phonons
};

struct MdSettings {
  std::size_t top_k = 10;
  double temperature = 300.0;  // K
  double dt = 1.0;             // fs
  long long steps = 1000;      // 1 ps at the default step
  double friction = 0.01;      // 1/fs
  int stride = 1;
};

struct DopantSettings {
  std::size_t hosts = 0;  // top-ranked hosts analysed; 0 disables
  std::vector<std::string> dopants;
  std::vector<std::string> sites;
  double concentration = 0.10;
  int occupations = 3;
};

struct CostSettings {
  /// Per-structure costs in arbitrary consistent units (seconds by
  /// default). Missing values are taken from the measured ledger.
  std::optional<double> oracle_cost;
  std::optional<double> surrogate_cost;
  std::optional<double> training_cost;
  std::optional<std::size_t> training_labels;
};

struct CampaignConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "campaign-out";
  int workers = 1;

  GeneratorSpec generator;
  std::size_t candidates = 60;
  std::vector<double> temperatures;  // K, ascending
  double t_star = 1750.0;            // K, ranking temperature
  double pressure = 0.0;             // eV/A^3
  Thresholds thresholds;
  std::map<std::string, double> references;  // eV/atom chemical potentials

  /// Ground-truth model in checkpoint form.
  nlohmann::json oracle;
  /// "oracle" screens with the ground truth itself, "checkpoint" loads
  /// potential_path, "active_learning" trains an ensemble first.
  std::string potential_source = "active_learning";
  std::string potential_path;
  AlOptions active_learning;

  bool relax_cell = true;
  CellRelaxOptions relax;
  PhononSettings phonon;
  MdSettings md;
  DopantSettings dopants;
  CostSettings cost;

  /// Effective configuration with every default filled in.
  nlohmann::json to_json() const;
  /// Digest of the effective configuration minus output_dir and workers.
  std::string hash() const;
};

CampaignConfig campaign_config_from_json(const nlohmann::json& j);
/// Parses JSON text; syntax errors raise ParseError, invariant violations
/// raise ConfigError.
CampaignConfig load_config(std::string_view text);

}  // namespace matscreen
