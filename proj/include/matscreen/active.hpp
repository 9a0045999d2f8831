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

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "matscreen/descriptor.hpp"
#include "matscreen/explore.hpp"
#include "matscreen/fit.hpp"
#include "matscreen/io.hpp"
#include "matscreen/relax.hpp"

namespace matscreen {

struct Thresholds {
  double energy_std_max = 0.040;  // eV/atom
  double force_std_max = 1.0;     // eV/A
  /// eV/A^3; infinity disables the stress criterion.
  double stress_std_max = std::numeric_limits<double>::infinity();
  double pass_fraction_min = 0.90;
  int max_cycles = 15;
  /// pass_fraction_min may be 0 here (always terminate after one cycle).
  void validate() const;
};

nlohmann::json to_json(const Thresholds& t);
Thresholds thresholds_from_json(const nlohmann::json& j);

/// Either criterion exceeding its threshold flags the structure.
bool is_flagged(const EnsembleStats& stats, const Thresholds& th);
bool should_terminate(double pass_fraction, const Thresholds& th);

struct FlagResult {
  std::vector<std::size_t> flagged;  // indices into the input list
  std::vector<EnsembleStats> stats;
  double pass_fraction = 1.0;
};

/// Structures whose evaluation throws or returns non-finite values are
/// flagged as well.
FlagResult flag_uncertain(const EnsemblePotential& e, const std::vector<Structure>& structures,
                          const Thresholds& th);

struct ALCycleRecord {
  int cycle = 0;  // 1-based
  std::size_t candidates = 0;
  std::size_t flagged = 0;
  double pass_fraction = 0.0;
  /// Errors of the ensemble that did the flagging in this cycle, on the
  /// held-out validation set.
  double validation_energy_mae = 0.0;  // meV/atom
  double validation_force_mae = 0.0;   // eV/A per component
  std::size_t labeled = 0;             // new oracle labels this cycle
  std::size_t training_size = 0;       // after augmentation
  bool terminated = false;
};

nlohmann::json to_json(const ALCycleRecord& r);
ALCycleRecord al_cycle_record_from_json(const nlohmann::json& j);

struct AlOptions {
  GeneratorSpec generator;
  Thresholds thresholds;
  std::size_t seed_count = 50;        // initial oracle-labeled structures
  std::size_t per_cycle = 20;         // candidates per cycle
  std::size_t validation_count = 100;
  std::vector<std::uint64_t> member_seeds{1, 2, 3, 4};
  FitHyperparams fit;
  bool relax_candidates = true;
  RelaxOptions relax{0.05, 100, 0.2, 70.0, 1e-4, 0.5, false};
  /// Relaxed candidates closer than this fraction of the generator minimum
  /// distance are labeled in their unrelaxed geometry instead.
  double collapse_fraction = 0.5;
  void validate() const;
};

nlohmann::json to_json(const AlOptions& o);
AlOptions al_options_from_json(const nlohmann::json& j);

struct AlCounters {
  std::size_t oracle_evaluations = 0;
  std::size_t surrogate_evaluations = 0;
  std::size_t training_runs = 0;
};

struct AlResult {
  std::vector<ALCycleRecord> records;
  std::shared_ptr<EnsemblePotential> ensemble;
  std::vector<LabeledFrame> training;
  std::vector<LabeledFrame> validation;
  AlCounters counters;
  bool converged = false;  // terminated on the pass-fraction criterion
};

/// Generator index ranges that keep the seed, validation and per-cycle
/// candidate pools disjoint.
inline constexpr std::size_t kValidationIndexBase = std::size_t{1} << 40;
inline constexpr std::size_t kCycleIndexStride = std::size_t{1} << 32;

/// Labels a structure with the oracle.
LabeledFrame oracle_label(const Potential& oracle, const Structure& s);

/// Seed set -> train -> per cycle: generate, relax with the ensemble mean,
/// flag, label the flagged ones, retrain from scratch. Stops when the pass
/// fraction reaches the threshold (that cycle's flagged structures are not
/// labeled) or after max_cycles.
AlResult run_al_loop(const Potential& oracle, const AlOptions& opt,
                     const std::function<void(const ALCycleRecord&)>& on_cycle = {});

}  // namespace matscreen
