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
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "matscreen/structure.hpp"

namespace matscreen {

/// Constrained random crystals at fixed stoichiometry.
struct GeneratorSpec {
  std::vector<std::pair<std::string, int>> composition;  // element, count
  int max_atoms = 30;
  double volume_min = 8.0;   // A^3 per atom
  double volume_max = 25.0;
  double angle_min = 60.0;   // degrees
  double angle_max = 120.0;
  double length_ratio_max = 2.0;  // longest / shortest lattice vector
  /// Pair minimum distance = scale * (sum of covalent radii) unless
  /// overridden per pair.
  double min_distance_scale = 0.7;
  std::map<std::pair<std::string, std::string>, double> min_distance_overrides;
  int max_attempts = 2000;     // lattice draws per structure
  int placement_attempts = 200;  // position draws per atom
  std::uint64_t seed = 0;

  int atom_count() const;
  double min_distance(const std::string& a, const std::string& b) const;
  void validate() const;
};

nlohmann::json to_json(const GeneratorSpec& g);
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);

struct GenerationStats {
  std::size_t accepted = 0;
  std::size_t lattice_draws = 0;
  std::size_t placement_draws = 0;
  double acceptance_rate() const {
    return lattice_draws ? static_cast<double>(accepted) / static_cast<double>(lattice_draws) : 0.0;
  }
};

struct GenerationResult {
  std::vector<Structure> structures;
  GenerationStats stats;
};

/// Structure k draws from its own stream (seed, first_index + k), so any
/// slice of the sequence is reproducible on its own. Structures carry an
/// "id" tag of the form gen-<seed>-<index>.
GenerationResult generate_candidates(const GeneratorSpec& spec, std::size_t count,
                                     std::size_t first_index = 0);

struct SubstitutionSpec {
  Structure host;
  std::string dopant;
  std::string site;            // species replaced
  double concentration = 0.10; // fraction of the site species replaced
  int occupations = 5;         // distinct site subsets requested
  std::uint64_t seed = 0;
};

struct Substitution {
  Structure structure;
  std::vector<std::size_t> sites;  // host indices replaced, ascending
};

/// Number of sites replaced: round(concentration * site count).
std::size_t substitution_size(std::size_t site_count, double concentration);

/// Distinct site subsets in lexicographic order. Small subset spaces are
/// enumerated exhaustively; larger ones are sampled without repetition.
std::vector<Substitution> enumerate_substitutions(const SubstitutionSpec& spec);

struct FormationFreeEnergy {
  double value = 0.0;        // eV/atom
  double temperature = 0.0;  // K
  double pressure = 0.0;     // eV/A^3
};

struct StabilizationRow {
  std::string dopant;
  std::string site;
  double ddg = 0.0;            // eV/atom, best occupation
  std::size_t best_occupation = 0;
  double temperature = 0.0;
  std::string bucket;          // blue (stabilizing), red, white (zero)
};

std::string stabilization_bucket(double ddg);

/// ddG = min over occupations of (dG_doped - dG_host).
StabilizationRow rank_stabilization(const FormationFreeEnergy& host,
                                    const std::vector<FormationFreeEnergy>& doped,
                                    const std::string& dopant, const std::string& site);

}  // namespace matscreen
