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

#include <doctest.h>

#include <limits>

#include "helpers.hpp"
#include "matscreen/relax.hpp"

using namespace matscreen;
using namespace matscreen::testing;

namespace {

Structure dimer(double r) {
  return Structure::from_cartesian({"Ar", "Ar"}, {Vec3(5, 5, 5), Vec3(5 + r, 5, 5)}, cubic(20.0));
}

double fcc_lj_minimum_a(double sigma) {
  // Nearest-neighbour spacing of the fully summed LJ FCC lattice is 1.09017 sigma.
  return 1.09017 * sigma * std::sqrt(2.0);
}

}  // namespace

TEST_SUITE("relax") {

TEST_CASE("Lennard-Jones dimer reaches the analytic minimum") {
  LennardJones lj({1.0, 1.0}, 4.0);
  RelaxOptions opt;
  opt.f_tol = 1e-6;
  const auto r = relax_positions(dimer(1.3), lj, opt);
  REQUIRE(r.converged);
  const double d = (r.structure.cart(1) - r.structure.cart(0)).norm();
  CHECK(std::abs(d - std::pow(2.0, 1.0 / 6.0)) < 1e-4);
  CHECK(std::abs(r.result.energy + 1.0) < 1e-8);
  CHECK(r.max_force < opt.f_tol);
  // Energies along accepted steps never increase.
  for (std::size_t k = 1; k < r.trajectory.size(); ++k)
    CHECK(r.trajectory[k].energy <= r.trajectory[k - 1].energy + 1e-14);
}

TEST_CASE("early exit below the force tolerance") {
  LennardJones lj({1.0, 1.0}, 4.0);
  // Small residual force near the minimum.
  Structure s = dimer(std::pow(2.0, 1.0 / 6.0) + 2e-4);
  const double f0 = lj.evaluate(s).max_force();
  REQUIRE(f0 < 0.05);
  const auto r = relax_positions(s, lj);
  CHECK(r.converged);
  CHECK(r.iterations == 0);

  LennardJones lj2({0.01, 2.3}, 6.0);
  const auto perfect = fcc("Cu", 3.6, {2, 2, 2});
  const auto q = relax_positions(perfect, lj2);
  CHECK(q.converged);
  CHECK(q.iterations == 0);
  CHECK(q.result.max_force() < 1e-10);
}

TEST_CASE("relaxation lowers energy, is deterministic and gauge independent") {
  auto oracle = oracle_potential({});
  for (const auto& s : random_structures({{"Ca", 2}, {"O", 2}}, 3, 31, 1.9, 12, 20)) {
    const auto a = relax_positions(s, *oracle), b = relax_positions(s, *oracle);
    CHECK(a.result.energy <= oracle->evaluate(s).energy);
    CHECK(a.structure.content_hash() == b.structure.content_hash());
    CHECK(a.iterations == b.iterations);
    if (a.converged) CHECK(a.max_force < 0.05);

    auto cart = s.cart_coords();
    for (auto& x : cart) x += Vec3(0.3, -0.2, 0.1);
    const auto t = relax_positions(s.with_cart_coords(cart), *oracle);
    CHECK(std::abs(t.result.energy - a.result.energy) < 1e-9);
  }
}

TEST_CASE("cell relaxation under pressure") {
  LennardJones lj({0.01, 2.3}, 6.0, true);
  const Structure s = fcc("Cu", 3.6);
  double previous = std::numeric_limits<double>::infinity();
  for (double p : {0.0, 0.002, 0.005, 0.01}) {
    CellRelaxOptions opt;
    opt.pressure = p;
    opt.stress_tol = 1e-5;
    const auto r = relax_cell(s, lj, opt);
    REQUIRE(r.converged);
    CHECK(r.structure.volume() < previous);
    previous = r.structure.volume();
  }
}

TEST_CASE("cell relaxation at zero stress and with infinite tolerance") {
  LennardJones lj({0.01, 2.3}, 6.0, true);
  CellRelaxOptions opt;
  opt.stress_tol = 1e-7;
  opt.positions.f_tol = 1e-8;
  const auto relaxed = relax_cell(fcc("Cu", fcc_lj_minimum_a(2.3)), lj, opt);
  REQUIRE(relaxed.converged);
  const auto again = relax_cell(relaxed.structure, lj, opt);
  CHECK((again.structure.lattice() - relaxed.structure.lattice()).cwiseAbs().maxCoeff() < 1e-10);

  auto oracle = oracle_potential({});
  const auto s = random_structures({{"Ca", 2}, {"O", 2}}, 1, 40, 1.9, 12, 20)[0];
  CellRelaxOptions inf;
  inf.stress_tol = std::numeric_limits<double>::infinity();
  const auto a = relax_cell(s, *oracle, inf);
  const auto b = relax_positions(s, *oracle, inf.positions);
  CHECK(a.structure.content_hash() == b.structure.content_hash());
  CHECK(a.result.energy == b.result.energy);
  CHECK((a.structure.lattice() - s.lattice()).norm() == 0.0);
}

}  // TEST_SUITE
