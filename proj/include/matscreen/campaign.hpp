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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "matscreen/active.hpp"
#include "matscreen/config.hpp"
#include "matscreen/potential.hpp"

namespace matscreen {

// ---------------------------------------------------------------------------
// Cost accounting
// ---------------------------------------------------------------------------

struct CostLedger {
  std::size_t oracle_evaluations = 0;
  std::size_t surrogate_evaluations = 0;
  std::size_t training_runs = 0;
  std::size_t training_labels = 0;      // oracle-labeled training structures
  std::size_t structures_screened = 0;  // candidates pushed through the surrogate path
  double oracle_seconds = 0.0;
  double surrogate_seconds = 0.0;
  double training_seconds = 0.0;

  void validate() const;
  CostLedger& operator+=(const CostLedger& o);
};

nlohmann::json to_json(const CostLedger& l);
CostLedger cost_ledger_from_json(const nlohmann::json& j);

/// Per-structure oracle and surrogate costs plus the one-off training cost,
/// in any consistent unit.
struct CostModel {
  double oracle_cost = 0.0;
  double surrogate_cost = 0.0;
  double training_cost = 0.0;
  std::size_t training_labels = 0;
};

/// Explicit settings win; gaps are filled from the ledger's measurements.
/// The oracle cost of a structure is the surrogate evaluations it needed
/// times the measured oracle cost per evaluation. Throws InvalidArgument
/// when no oracle cost can be determined.
CostModel cost_model(const CostLedger& ledger, const CostSettings& settings);

struct CostReport {
  CostModel model;
  /// Screening size M* where (N c_o + C_train + M c_s) = M c_o; absent when
  /// the surrogate is not cheaper than the oracle.
  std::optional<double> crossover;
  std::optional<std::size_t> crossover_count;  // ceil(M*)
  double speedup = 0.0;                         // c_o / c_s, 0 when c_s = 0
  std::vector<std::size_t> scan_size;
  std::vector<double> oracle_path;
  std::vector<double> surrogate_path;
};

CostReport cost_report(const CostModel& model, std::size_t scan_points = 101);
nlohmann::json to_json(const CostReport& r);
std::string cost_csv(const CostReport& r);

// ---------------------------------------------------------------------------
// Free energies
// ---------------------------------------------------------------------------

struct FormationFreeEnergyCurve {
  double energy = 0.0;          // static total energy, eV
  double formation_energy = 0.0;  // static, eV/atom
  std::vector<double> temperatures;
  std::vector<double> dg;       // eV/atom at each temperature
  bool imaginary = false;
  double min_frequency = 0.0;   // THz
};

/// Harmonic formation free energy per atom of a relaxed cell:
/// (E + F_vib(T) + p V - sum n_e mu_e) / n with phonons on a
/// Monkhorst-Pack mesh.
FormationFreeEnergyCurve formation_free_energy(const Structure& s, const Potential& p,
                                               const std::vector<double>& temperatures, double pressure,
                                               const std::map<std::string, double>& references,
                                               const PhononSettings& settings);

// ---------------------------------------------------------------------------
// Screening
// ---------------------------------------------------------------------------

struct PolymorphRow {
  std::string id;
  std::string hash;  // content hash of the relaxed structure
  std::string formula;
  std::size_t natoms = 0;
  double formation_energy = 0.0;  // static, eV/atom
  double dg_tstar = 0.0;          // eV/atom at T*
  std::vector<double> dg;         // eV/atom on the temperature grid
  std::array<double, 6> lattice{};  // a, b, c (A), alpha, beta, gamma (deg)
  double volume = 0.0;
  bool converged = false;  // relaxation
  bool imaginary = false;  // phonons
};

struct DiffusivityRow {
  std::string id;
  std::map<std::string, double> D;  // cm^2/s per species
  std::map<std::string, std::string> mobility;
  double D_total = 0.0;
  std::string mobility_total;
};

struct HeatmapRow {
  std::string host;
  std::string dopant;
  std::string site;
  std::size_t substituted = 0;  // sites replaced per variant
  std::size_t occupations = 0;
  double ddg_tstar = 0.0;  // eV/atom
  double ddg_zero = 0.0;   // eV/atom at 0 K
  std::string bucket_tstar;
  std::string bucket_zero;
  std::size_t best_occupation = 0;
};

struct FailureRow {
  std::string id;
  std::string stage;
  std::string message;
};

struct StaticRow {
  std::string id;
  std::string hash;
  double formation_energy = 0.0;
  bool converged = false;
};

inline constexpr int kReportSchemaVersion = 1;

struct ScreenReport {
  int schema_version = kReportSchemaVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string potential_source;
  std::string potential_hash;
  double t_star = 0.0;
  double pressure = 0.0;
  std::vector<double> temperatures;
  std::size_t candidates = 0;
  std::vector<StaticRow> relaxed;        // every relaxed candidate, by static energy
  std::vector<PolymorphRow> ranked;      // phonon candidates, ranked at T*
  std::vector<DiffusivityRow> diffusivity;
  std::vector<HeatmapRow> dopants;
  std::vector<FailureRow> failures;
  std::vector<ALCycleRecord> al_cycles;
};

nlohmann::json to_json(const ScreenReport& r);
ScreenReport screen_report_from_json(const nlohmann::json& j);
std::string polymorph_csv(const ScreenReport& r);
std::string diffusivity_csv(const ScreenReport& r);
std::string dopant_csv(const ScreenReport& r);

/// Strict order used for the ranked table: real-mode candidates first,
/// then by dG at T*, then by content hash.
bool ranks_before(const PolymorphRow& a, const PolymorphRow& b);

struct ScreenOutcome {
  ScreenReport report;
  CostLedger ledger;
};

/// Runs the full pipeline and writes every artifact under
/// config.output_dir. Stage outputs are cached by content so a repeated
/// run performs no new oracle evaluations.
ScreenOutcome screen(const CampaignConfig& config);

/// Substitutional doping of the given hosts. Hosts are expanded into
/// supercells until the concentration gives at least one substitution.
std::vector<HeatmapRow> dopant_analysis(const CampaignConfig& config, const Potential& p,
                                        const std::vector<std::pair<std::string, Structure>>& hosts);

/// Smallest supercell repeat of `s` in which round(c * count(site)) >= 1.
IVec3 doping_repeat(const Structure& s, const std::string& site, double concentration);

struct VerifyResult {
  std::size_t checked = 0;
  std::vector<std::string> mismatches;
  bool ok() const { return mismatches.empty(); }
};

/// Re-derives a seeded sample (fraction, at least one row per table) of
/// report numbers from stored structures and the stored potential and
/// requires exact equality.
VerifyResult verify(const CampaignConfig& config, double fraction = 0.1);

/// Loads the campaign's surrogate: the oracle itself, a checkpoint file, or
/// the stored active-learning ensemble under output_dir.
PotentialPtr campaign_potential(const CampaignConfig& config);

}  // namespace matscreen
