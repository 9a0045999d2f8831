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

// Shared fixtures for the unit tests.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "matscreen/explore.hpp"
#include "matscreen/potential.hpp"
#include "matscreen/structure.hpp"

namespace matscreen::testing {

inline Mat3 cubic(double a) { return a * Mat3::Identity(); }

inline Structure fcc(const std::string& sym, double a, const IVec3& repeat = {1, 1, 1}) {
  const std::vector<Vec3> f{{0, 0, 0}, {0.5, 0.5, 0}, {0.5, 0, 0.5}, {0, 0.5, 0.5}};
  Structure base(std::vector<std::string>(4, sym), f, cubic(a));
  return make_supercell(base, repeat).structure;
}

inline Structure fcc_primitive(const std::string& sym, double a) {
  Mat3 L;
  L << 0, a / 2, a / 2, a / 2, 0, a / 2, a / 2, a / 2, 0;
  return Structure({sym}, {Vec3::Zero()}, L);
}

// Random structures from the generator with explicit minimum distances.
inline std::vector<Structure> random_structures(const std::vector<std::pair<std::string, int>>& comp,
                                                std::size_t count, std::uint64_t seed, double min_dist,
                                                double vmin, double vmax) {
  GeneratorSpec g;
  g.composition = comp;
  g.seed = seed;
  g.volume_min = vmin;
  g.volume_max = vmax;
  for (const auto& [a, na] : comp)
    for (const auto& [b, nb] : comp) g.min_distance_overrides[{std::min(a, b), std::max(a, b)}] = min_dist;
  return generate_candidates(g, count).structures;
}

// Largest |F_analytic - (-dE/dx)| with central differences of step h.
inline double max_force_fd_error(const Potential& p, const Structure& s, double h = 1e-4) {
  const auto r = p.evaluate(s);
  const auto cart = s.cart_coords();
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      auto plus = cart, minus = cart;
      plus[i][k] += h;
      minus[i][k] -= h;
      const double ep = p.energy(s.with_cart_coords(plus));
      const double em = p.energy(s.with_cart_coords(minus));
      worst = std::max(worst, std::abs(r.forces[i][k] + (ep - em) / (2.0 * h)));
    }
  return worst;
}

// Largest |sigma - (1/V) dE/d(strain)| for symmetric strains of step h.
inline double max_stress_fd_error(const Potential& p, const Structure& s, double h = 1e-5) {
  const auto r = p.evaluate(s);
  double worst = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      Mat3 e = Mat3::Zero();
      e(a, b) += 0.5 * h;
      e(b, a) += 0.5 * h;
      const double ep = p.energy(s.deformed(Mat3::Identity() + e));
      const double em = p.energy(s.deformed(Mat3::Identity() - e));
      const double fd = (ep - em) / (2.0 * h) / s.volume();
      worst = std::max(worst, std::abs(r.stress(a, b) - fd));
    }
  return worst;
}

}  // namespace matscreen::testing
