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

// Internal unit system: eV, Angstrom, fs, amu, K. Stress is eV/A^3.
namespace matscreen::units {

inline constexpr double kPi = 3.14159265358979323846;

/// Boltzmann constant, eV/K.
inline constexpr double kBoltzmann = 8.617333262e-5;
/// Planck constant h in eV/THz, so that E = h * nu for nu in THz.
inline constexpr double kPlanckEvPerThz = 4.135667696e-3;
/// eV/A^3 -> GPa.
inline constexpr double kEvPerA3ToGPa = 160.21766208;
/// Acceleration of 1 eV/A acting on 1 amu, in A/fs^2.
inline constexpr double kForceToAccel = 9.648533215665327e-3;
/// sqrt(eV / (A^2 amu)) expressed as an ordinary frequency in THz.
inline constexpr double kSqrtEvA2AmuToThz = 15.633304239856193;
/// 1 A^2/fs = 0.1 cm^2/s.
inline constexpr double kA2PerFsToCm2PerS = 0.1;
/// eV / (K A fs) -> W / (m K).
inline constexpr double kConductivityToSI = 1.602176634e6;

}  // namespace matscreen::units
