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

#include "helpers.hpp"
#include "matscreen/active.hpp"
#include "matscreen/descriptor.hpp"
#include "matscreen/error.hpp"
#include "matscreen/potential.hpp"
#include "matscreen/util.hpp"

using namespace matscreen;
using namespace matscreen::testing;

namespace {

Structure dimer(double r, const std::string& a = "Ar", const std::string& b = "Ar") {
  return Structure::from_cartesian({a, b}, {Vec3(5, 5, 5), Vec3(5 + r, 5, 5)}, cubic(20.0));
}

std::shared_ptr<DescriptorPotential> random_descriptor(std::uint64_t seed, std::vector<std::string> species) {
  DescriptorSpec spec;
  spec.species = std::move(species);
  auto p = std::make_shared<DescriptorPotential>(spec, seed);
  p->energy_scale = 0.1;
  p->species_energy.assign(p->spec().species.size(), -1.0);
  return p;
}

}  // namespace

TEST_SUITE("potential") {

TEST_CASE("Lennard-Jones dimer") {
  LennardJones lj({1.0, 1.0}, 3.0);
  const auto at_min = lj.evaluate(dimer(std::pow(2.0, 1.0 / 6.0)));
  CHECK(at_min.energy == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(at_min.max_force() < 1e-12);
  CHECK((at_min.forces[0] + at_min.forces[1]).norm() < 1e-14);
  CHECK(std::abs(lj.evaluate(dimer(1.0)).energy) < 1e-14);
}

TEST_CASE("translation invariance") {
  LennardJones lj({0.01, 2.5}, 7.0);
  auto oracle = oracle_potential({});
  for (const auto& s : random_structures({{"Ca", 2}, {"O", 3}}, 5, 3, 1.9, 12, 22)) {
    auto cart = s.cart_coords();
    for (auto& r : cart) r += Vec3(1.0, 1.0, 1.0);
    const Structure t = s.with_cart_coords(cart);
    for (const Potential* p : {static_cast<const Potential*>(&lj), static_cast<const Potential*>(oracle.get())}) {
      const auto a = p->evaluate(s), b = p->evaluate(t);
      CHECK(b.energy == doctest::Approx(a.energy).epsilon(1e-10));
      for (std::size_t i = 0; i < s.size(); ++i) CHECK((a.forces[i] - b.forces[i]).norm() < 1e-9);
      CHECK((a.stress - b.stress).norm() < 1e-10);
    }
  }
}

TEST_CASE("rotation invariance and covariant forces") {
  auto oracle = oracle_potential({});
  auto desc = random_descriptor(6, {"Ca", "O"});
  const Mat3 R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  for (const auto& s : random_structures({{"Ca", 2}, {"O", 3}}, 4, 23, 1.9, 12, 22)) {
    const Structure t(s.species(), s.frac_coords(), s.lattice() * R.transpose());
    for (const Potential* p : {static_cast<const Potential*>(oracle.get()), static_cast<const Potential*>(desc.get())}) {
      const auto a = p->evaluate(s), b = p->evaluate(t);
      CHECK(std::abs(a.energy - b.energy) < 1e-9);
      for (std::size_t i = 0; i < s.size(); ++i) CHECK((R * a.forces[i] - b.forces[i]).norm() < 1e-9);
    }
  }
}

TEST_CASE("analytic forces and stress match finite differences") {
  // Physical spacings: the central-difference truncation error grows steeply
  // inside the repulsive wall.
  const auto structures = random_structures({{"Ca", 2}, {"O", 3}}, 6, 17, 2.3, 12, 22);
  LennardJones lj({0.01, 2.5}, 10.0);
  OracleSpec os;
  auto oracle = oracle_potential(os);
  auto desc = random_descriptor(4, {"Ca", "O"});
  for (const auto& s : structures) {
    CHECK(max_force_fd_error(lj, s) < 1e-5);
    CHECK(max_force_fd_error(*oracle, s) < 1e-5);
    CHECK(max_force_fd_error(*desc, s) < 1e-6);
    CHECK(max_stress_fd_error(lj, s) < 1e-6);
    CHECK(max_stress_fd_error(*oracle, s) < 1e-6);
    CHECK(max_stress_fd_error(*desc, s) < 1e-6);
  }
}

TEST_CASE("oracle coverage and determinism") {
  OracleSpec a;
  a.seed = 3;
  const auto p = oracle_potential(a), q = oracle_potential(a);
  const auto s = random_structures({{"Si", 2}, {"O", 4}}, 1, 1, 1.4, 10, 20)[0];
  CHECK(p->evaluate(s).energy == q->evaluate(s).energy);
  CHECK(p->morse("Si", "O").r0 == p->morse("O", "Si").r0);
  a.site_energies["O"] = -2.5;
  CHECK(oracle_potential(a)->site_energy("O") == -2.5);
}

TEST_CASE("descriptor determinism and permutation symmetry") {
  auto a = random_descriptor(9, {"Ca", "O"});
  auto b = random_descriptor(9, {"Ca", "O"});
  const auto structures = random_structures({{"Ca", 2}, {"O", 2}}, 100, 5, 1.9, 12, 22);
  for (const auto& s : structures) REQUIRE(a->evaluate(s).energy == b->evaluate(s).energy);
  // Swap the two Ca atoms.
  const auto& s = structures[0];
  std::vector<std::string> sp = s.species();
  std::vector<Vec3> f = s.frac_coords();
  std::size_t i0 = 0, i1 = 0;
  for (std::size_t k = 0, seen = 0; k < sp.size(); ++k)
    if (sp[k] == "Ca") (seen++ == 0 ? i0 : i1) = k;
  std::swap(f[i0], f[i1]);
  const Structure t(sp, f, s.lattice());
  CHECK(a->evaluate(t).energy == doctest::Approx(a->evaluate(s).energy).epsilon(1e-12));
}

TEST_CASE("descriptor rejects uncovered species") {
  auto a = random_descriptor(1, {"Ca", "O"});
  const Structure s = dimer(2.0, "Ca", "Na");
  CHECK_THROWS_AS(a->compute(s), InvalidArgument);
  try {
    a->compute(s);
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("Na") != std::string::npos);
  }
}

TEST_CASE("ensemble statistics") {
  auto m = random_descriptor(5, {"Ca", "O"});
  EnsemblePotential same({m, m, m});
  const auto s = random_structures({{"Ca", 2}, {"O", 2}}, 1, 2, 1.9, 12, 22)[0];
  const auto st = ensemble_stats(same, s);
  CHECK(st.energy_std == 0.0);
  CHECK(st.force_std < 1e-14);
  const auto single = m->evaluate(s);
  CHECK(st.mean.energy == doctest::Approx(single.energy).epsilon(1e-12));
  for (std::size_t i = 0; i < s.size(); ++i) CHECK((st.mean.forces[i] - single.forces[i]).norm() < 1e-12);

  // Two members with per-atom energies -1.00 and -1.04 eV/atom on 2 atoms.
  std::vector<EvalResult> r(2);
  r[0].energy = -2.00;
  r[1].energy = -2.08;
  for (auto& x : r) x.forces.assign(2, Vec3::Zero());
  const auto t = ensemble_stats(r, 2);
  CHECK(t.energy_std == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(t.force_std == 0.0);

  // Force std is the max over atoms of the std of |F_i|.
  r[0].forces[1] = Vec3(3, 0, 0);
  r[1].forces[1] = Vec3(0, 1, 0);
  CHECK(ensemble_stats(r, 2).force_std == doctest::Approx(1.0).epsilon(1e-12));

  EnsembleStats flag;
  flag.energy_std = 0.045;
  CHECK(is_flagged(flag, Thresholds{}));
}

TEST_CASE("formation energy") {
  Structure one({"Ar", "Ar"}, {Vec3::Zero(), Vec3(0.5, 0.5, 0.5)}, cubic(5.0));
  CHECK(compute_formation_energy(2 * -0.7, one, {{"Ar", -0.7}}) == doctest::Approx(0.0));
  Structure ab({"Ca", "O"}, {Vec3::Zero(), Vec3(0.5, 0.5, 0.5)}, cubic(5.0));
  CHECK(compute_formation_energy(-10.0, ab, {{"Ca", -3.0}, {"O", -4.0}}) == doctest::Approx(-1.5));
  const auto big = make_supercell(ab, {2, 1, 1}).structure;
  CHECK(compute_formation_energy(-20.0, big, {{"Ca", -3.0}, {"O", -4.0}}) == doctest::Approx(-1.5));
  CHECK_THROWS_AS(compute_formation_energy(-10.0, ab, {{"Ca", -3.0}}), InvalidArgument);
}

TEST_CASE("checkpoints round trip byte for byte") {
  LennardJones lj({0.01, 2.5}, 7.0, true);
  lj.set_pair("Ca", "O", {0.3, 2.0});
  auto desc = random_descriptor(3, {"Ca", "O"});
  auto e = std::make_shared<EnsemblePotential>(std::vector<DescriptorPtr>{desc, random_descriptor(4, {"Ca", "O"})});
  const auto s = random_structures({{"Ca", 2}, {"O", 2}}, 1, 8, 1.9, 12, 22)[0];
  const auto oracle = oracle_potential({});
  for (const Potential* p : std::initializer_list<const Potential*>{&lj, desc.get(), e.get(), oracle.get()}) {
    const std::string text = save_potential(*p);
    const auto back = load_potential(text);
    CHECK(back->kind() == p->kind());
    CHECK(save_potential(*back) == text);
    CHECK(back->evaluate(s).energy == p->evaluate(s).energy);
  }
  CHECK_THROWS_AS(load_potential("{\"format\":\"other\"}"), ParseError);
  CHECK_THROWS_AS(load_potential("not json"), ParseError);
}

TEST_CASE("counting wrapper") {
  auto inner = std::make_shared<LennardJones>(LennardJonesParams{0.01, 2.5}, 7.0);
  CountingPotential c(inner);
  const auto s = dimer(3.0);
  c.evaluate(s);
  c.energy(s);
  CHECK(c.calls() == 2);
  CHECK(c.seconds() >= 0.0);
}

}  // TEST_SUITE
