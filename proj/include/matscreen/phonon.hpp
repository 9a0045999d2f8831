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

#include <complex>
#include <optional>
#include <vector>

#include "matscreen/potential.hpp"

namespace matscreen {

/// Second-order force constants Phi(i a, j b) = d2E / du_ia du_jb in eV/A^2,
/// stored for the home-cell atoms i (rows) against every supercell atom j
/// (columns); the remaining blocks follow from lattice translation.
struct ForceConstants {
  Supercell supercell;
  double amplitude = 0.01;  // A
  Eigen::MatrixXd phi;      // (3n) x (3N)

  std::size_t primitive_atoms() const { return supercell.base.size(); }
  /// Phi between any two supercell atoms, using translation symmetry.
  double at(std::size_t i, int a, std::size_t j, int b) const;
  /// Largest |Phi(ia, jb) - Phi(jb, ia)| over all pairs.
  double symmetry_error() const;
  /// Largest |sum_j Phi(ia, jb)| over rows.
  double sum_rule_error() const;
};

/// Central finite differences of forces for displacements of the home-cell
/// atoms; the acoustic sum rule is then imposed on the self terms.
ForceConstants force_constants(const Structure& s, const Potential& p, const IVec3& repeat,
                               double amplitude = 0.01);

/// Smallest repeat whose perpendicular widths all reach min_width.
IVec3 repeat_for_width(const Structure& s, double min_width);

inline constexpr double kZeroFrequencyTol = 1e-3;  // THz

struct PhononResult {
  std::vector<Vec3> qpoints;           // fractional reciprocal coordinates
  Eigen::MatrixXd frequencies;         // nq x 3n, THz, ascending; imaginary as negative
  std::vector<Eigen::MatrixXcd> eigenvectors;  // optional, 3n x 3n per q
  /// Group velocities, A/fs, [q][band]; empty unless requested.
  std::vector<std::vector<Vec3>> velocities;
  std::size_t natoms = 0;
  double volume = 0.0;  // primitive cell, A^3
  std::vector<std::size_t> imaginary_q;  // q indices with a mode below -tol

  std::size_t qcount() const { return qpoints.size(); }
  std::size_t bands() const { return 3 * natoms; }
  bool has_imaginary() const { return !imaginary_q.empty(); }
};

struct DispersionOptions {
  bool eigenvectors = false;
  bool velocities = false;
  double velocity_step = 1e-4;  // 1/A, Cartesian q step for central differences
};

/// Dynamical matrix at fractional q of the primitive reciprocal lattice.
Eigen::MatrixXcd dynamical_matrix(const ForceConstants& fc, const Vec3& q_frac);

PhononResult dispersion(const ForceConstants& fc, const std::vector<Vec3>& qpoints,
                        const DispersionOptions& opt = {});

/// Gamma-centered regular grid of n1 x n2 x n3 points.
std::vector<Vec3> monkhorst_pack(const IVec3& mesh);

/// Straight path between fractional q points, `points` samples per segment.
std::vector<Vec3> qpath(const std::vector<Vec3>& corners, int points);

/// Harmonic free energy per primitive cell, eV. Modes with |nu| below the
/// zero tolerance are skipped. Throws when imaginary modes are present.
double helmholtz_free_energy(const PhononResult& ph, double T);
/// Heat capacity per primitive cell, eV/K.
double heat_capacity(const PhononResult& ph, double T);
/// Vibrational entropy per primitive cell, eV/K.
double entropy(const PhononResult& ph, double T);
/// Heat capacity of every (q, band) mode, eV/K, same layout as frequencies.
Eigen::MatrixXd mode_heat_capacities(const PhononResult& ph, double T);

struct DosTable {
  std::vector<double> frequency;  // THz
  std::vector<double> density;    // states per THz per primitive cell
  double spacing = 0.0;
  double smearing = 0.0;

  double integral() const;
};

/// Gaussian-smeared density of states on a uniform frequency grid. The
/// default smearing is twice the grid spacing.
DosTable dos(const PhononResult& ph, double spacing = 0.05, std::optional<double> smearing = {});

/// Volume sample for quasi-harmonic minimization.
struct QhaSample {
  double volume;        // A^3
  double energy;        // static energy, eV
  PhononResult phonons;
};

struct QhaResult {
  double gibbs = 0.0;   // eV
  double volume = 0.0;  // A^3
};

/// Minimizes a quartic least-squares fit of phi(V) on the sampled interval.
/// Throws when the minimum sits on the interval boundary.
QhaResult minimize_quartic(const std::vector<double>& volumes, const std::vector<double>& values);

/// G(T, p) = min_V [E(V) + F_vib(V, T) + pV].
QhaResult gibbs_qha(const std::vector<QhaSample>& samples, double T, double p);

/// Constant-relaxation-time lattice conductivity in W/(m K). tau is either
/// one constant (size 1) or one value per mode (nq * 3n), in fs.
Mat3 kappa_crta(const PhononResult& ph, const Eigen::MatrixXd& mode_cv, const std::vector<double>& tau);

nlohmann::json to_json(const PhononResult& ph);
std::string dispersion_csv(const PhononResult& ph);
std::string dos_csv(const DosTable& d);

}  // namespace matscreen
