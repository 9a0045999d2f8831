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
#include <vector>

#include "matscreen/potential.hpp"

namespace matscreen {

struct MdOptions {
  double temperature = 300.0;  // K
  double dt = 1.0;             // fs, at most 2
  long long steps = 1000;
  double friction = 0.01;      // 1/fs; 0 gives plain velocity Verlet
  std::uint64_t seed = 0;
  int stride = 1;              // frames are stored every stride steps
  /// Initial velocities (A/fs); drawn from Maxwell-Boltzmann when empty.
  std::vector<Vec3> velocities;
};

nlohmann::json to_json(const MdOptions& o);
MdOptions md_options_from_json(const nlohmann::json& j);

/// Frames of unwrapped Cartesian positions (A) and velocities (A/fs).
struct Trajectory {
  double dt = 1.0;  // fs
  int stride = 1;
  double temperature = 0.0;  // thermostat target, K
  double friction = 0.0;
  std::uint64_t seed = 0;
  Structure initial;
  std::vector<std::vector<Vec3>> positions;
  std::vector<std::vector<Vec3>> velocities;
  std::vector<double> potential_energy;  // eV
  std::vector<double> kinetic_energy;    // eV

  std::size_t frames() const { return positions.size(); }
  double frame_interval() const { return dt * stride; }  // fs
  double span() const { return frames() > 1 ? frame_interval() * static_cast<double>(frames() - 1) : 0.0; }
  /// Instantaneous kinetic temperature of frame k, K.
  double temperature_at(std::size_t k) const;
  std::size_t degrees_of_freedom() const;
};

/// Langevin dynamics with the BAOAB splitting; friction 0 reduces it to
/// velocity Verlet. Center-of-mass momentum is removed from the initial
/// velocities for more than one atom. Aborts when the smoothed kinetic
/// temperature exceeds ten times the target.
Trajectory run_nvt(const Structure& s, const Potential& p, const MdOptions& opt);

struct DiffusivityOptions {
  std::vector<std::string> species;  // empty = every species present
  int dimension = 3;                 // uses the first d Cartesian components
  /// Subtracts the mass-weighted centre-of-mass displacement of all atoms
  /// before computing the MSD. With a single atom this leaves no motion.
  bool remove_drift = true;
  /// Lag window in fs. Defaults to [20%, 80%] of the longest lag, which is a
  /// quarter of the trajectory span.
  std::optional<double> t_min, t_max;
};

struct SpeciesDiffusivity {
  double D = 0.0;           // cm^2/s, clamped at 0
  double slope = 0.0;       // A^2/fs, raw fit slope
  double r2 = 0.0;
  double exponent = 0.0;    // d log MSD / d log t over the window
  bool diffusive = false;   // exponent near 1 with a good linear fit
};

struct DiffusivityReport {
  std::map<std::string, SpeciesDiffusivity> species;
  std::vector<double> lag_time;  // fs
  std::vector<double> msd;       // A^2, all selected atoms
  double t_min = 0.0, t_max = 0.0;
  int dimension = 3;
  double D = 0.0;  // cm^2/s over all selected atoms
  double r2 = 0.0;
  double exponent = 0.0;
};

/// D = slope / (2d) of a least-squares line through the multi-origin,
/// particle-averaged mean squared displacement on the lag window.
DiffusivityReport einstein_diffusivity(const Trajectory& traj, const DiffusivityOptions& opt = {});

enum class Mobility { kMobile, kInert };
inline constexpr double kMobilityThreshold = 1e-7;  // cm^2/s

/// Inert iff D < threshold.
Mobility classify_mobility(double D, double threshold = kMobilityThreshold);
std::string to_string(Mobility m);

nlohmann::json to_json(const DiffusivityReport& r);
std::string msd_csv(const DiffusivityReport& r);
/// Multi-frame extended XYZ of wrapped frames.
std::string trajectory_extxyz(const Trajectory& t);

}  // namespace matscreen
