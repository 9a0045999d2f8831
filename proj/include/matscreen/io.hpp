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

#include <string>
#include <string_view>
#include <vector>

#include "matscreen/structure.hpp"

namespace matscreen {

enum class Provenance { kOracle, kExternal, kPredicted };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

/// A training sample: structure plus total energy (eV), forces (eV/A) and
/// stress (eV/A^3, symmetric).
struct LabeledFrame {
  Structure structure;
  double energy = 0.0;
  std::vector<Vec3> forces;
  Mat3 stress = Mat3::Zero();
  Provenance provenance = Provenance::kExternal;

  /// Checks the force row count and stress symmetry (1e-10).
  void validate() const;
};

namespace io {

/// VASP 5 POSCAR. A negative scale is read as the target cell volume.
Structure read_poscar(std::string_view text);
std::string write_poscar(const Structure& s);

/// Extended XYZ with Lattice, Properties=species:S:1:pos:R:3:forces:R:3,
/// energy and a 9-component stress on the comment line. Multi-frame.
std::vector<LabeledFrame> read_extxyz(std::string_view text);
std::string write_extxyz(const std::vector<LabeledFrame>& frames);

/// Unlabeled variant (Properties=species:S:1:pos:R:3), used for
/// candidate pools and trajectories. Extra per-atom columns and keys are
/// accepted on read and ignored.
std::vector<Structure> read_extxyz_structures(std::string_view text);
std::string write_extxyz_structures(const std::vector<Structure>& structures);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace io
}  // namespace matscreen
