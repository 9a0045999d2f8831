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

#include <vector>

#include "matscreen/potential.hpp"
#include "matscreen/relax.hpp"

namespace matscreen {

using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

/// Symmetric strain tensor from Voigt components (xx, yy, zz, yz, xz, xy)
/// with engineering shears, so the off-diagonal entries are half the shear.
Mat3 voigt_strain(const Vector6& e);
/// Voigt vector (xx, yy, zz, yz, xz, xy) of a symmetric stress.
Vector6 voigt_stress(const Mat3& sigma);

struct ElasticOptions {
  double delta = 0.005;
  bool relax_ions = false;
  RelaxOptions relax{.f_tol = 1e-4, .max_iter = 1000};
};

struct ElasticTensor {
  Matrix6 C = Matrix6::Zero();         // energy-based, eV/A^3
  Matrix6 C_stress = Matrix6::Zero();  // stress-based, eV/A^3
  double volume = 0.0;                 // A^3
  double delta = 0.0;
  bool relax_ions = false;

  Matrix6 gpa() const;
  double bulk_modulus_voigt() const;  // eV/A^3
  double shear_modulus_voigt() const;
  Vector6 eigenvalues() const;
  bool positive_definite() const;
  double symmetry_error() const;  // max |C_ij - C_ji| / max |C|
};

/// C_ij = (1/V0) d2E/de_i de_j from central differences of E under
/// L -> L (I + eps), cross-checked by d sigma_i / d e_j.
ElasticTensor elastic_tensor(const Structure& s, const Potential& p, const ElasticOptions& opt = {});

nlohmann::json to_json(const ElasticTensor& c);

struct ShearOptions {
  Vec3 normal{0.0, 0.0, 1.0};     // shear plane normal
  Vec3 direction{1.0, 0.0, 0.0};  // shear direction, perpendicular to normal
  double dgamma = 0.01;
  int steps = 30;
  bool relax_ions = false;
  RelaxOptions relax{.f_tol = 1e-3, .max_iter = 1000};
};

struct ShearCurve {
  std::vector<double> gamma;   // 0, dg, ..., steps*dg
  std::vector<double> energy;  // eV
  std::vector<double> stress;  // tau_xy, eV/A^3
  double tau_max = 0.0;
  double gamma_max = 0.0;
  bool maximum_found = false;
  bool relax_ions = false;
  double volume = 0.0;
  std::vector<int> unconverged;  // grid indices whose ionic relaxation failed
};

/// Simple shear r -> r + gamma (r . n) d.
Structure sheared(const Structure& s, const Vec3& normal, const Vec3& direction, double gamma);

/// Energy along an incremental shear; tau = (1/V0) dE/dgamma by central
/// differences. tau_max is the value before the first non-positive slope.
ShearCurve ideal_shear(const Structure& s, const Potential& p, const ShearOptions& opt = {});

nlohmann::json to_json(const ShearCurve& c);
std::string shear_csv(const ShearCurve& c);

}  // namespace matscreen
