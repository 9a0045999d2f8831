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

#include <limits>
#include <vector>

#include "matscreen/io.hpp"
#include "matscreen/potential.hpp"

namespace matscreen {

struct RelaxOptions {
  double f_tol = 0.05;          // eV/A, max per-atom force magnitude
  int max_iter = 500;
  double max_step = 0.2;        // A, largest single-atom displacement per step
  double hessian_scale = 70.0;  // eV/A^2, initial Hessian = scale * I
  double armijo_c = 1e-4;
  double shrink = 0.5;
  bool record_trajectory = true;
};

struct RelaxResult {
  Structure structure;
  EvalResult result;
  int iterations = 0;
  bool converged = false;
  std::vector<LabeledFrame> trajectory;  // accepted steps, provenance=predicted
  double max_force = 0.0;                // eV/A
  double max_stress_residual = 0.0;      // eV/A^3, cell relaxations only
  int cell_steps = 0;
};

nlohmann::json to_json(const RelaxOptions& o);
RelaxOptions relax_options_from_json(const nlohmann::json& j);

/// BFGS on Cartesian positions with a backtracking Armijo line search. The
/// inverse Hessian is reset whenever the search direction is not downhill.
/// Returns the best structure found; converged=false when max_iter is hit.
RelaxResult relax_positions(const Structure& s, const Potential& p, const RelaxOptions& opt = {});

struct CellRelaxOptions {
  RelaxOptions positions;
  double stress_tol = 1e-3;  // eV/A^3 on |sigma + p I| (max component)
  double pressure = 0.0;     // eV/A^3
  int max_cell_steps = 200;
  double max_strain_step = 0.03;
};

nlohmann::json to_json(const CellRelaxOptions& o);
CellRelaxOptions cell_relax_options_from_json(const nlohmann::json& j);

/// Alternates position relaxation with lattice steps along -(sigma + p I),
/// each lattice step accepted by an Armijo test on the enthalpy E + pV.
/// Aborts if the cell volume drops below a tenth of its initial value. With
/// an infinite stress tolerance this is relax_positions.
RelaxResult relax_cell(const Structure& s, const Potential& p, const CellRelaxOptions& opt = {});

}  // namespace matscreen
