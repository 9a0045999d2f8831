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
#include "matscreen/elements.hpp"
#include "matscreen/error.hpp"
#include "matscreen/phonon.hpp"

using namespace matscreen;
using namespace matscreen::testing;

namespace {

constexpr double kEv = 1.602176634e-19;     // J
constexpr double kAmu = 1.66053906660e-27;  // kg
constexpr double kKb = 8.617333262e-5;      // eV/K
constexpr double kH = 4.135667696e-15;      // eV s
constexpr double kPi = 3.14159265358979323846;

// Chain of atoms along x with spacing a; wide vacuum in y and z.
Structure chain(double a) { return Structure({"Ar"}, {Vec3::Zero()}, Vec3(a, 12.0, 12.0).asDiagonal()); }

// sqrt(k/m) in rad/s for k in eV/A^2 and m in amu.
double omega0(double k, double m) { return std::sqrt(k * kEv / (1e-20 * m * kAmu)); }

LennardJones fcc_lj() { return LennardJones({0.2, 2.3}, 6.0, true); }

const double kFccA = 1.09017 * 2.3 * std::sqrt(2.0);

PhononResult single_mode(double nu) {
  PhononResult ph;
  ph.qpoints = {Vec3::Zero()};
  ph.natoms = 1;
  ph.frequencies = Eigen::MatrixXd::Zero(1, 3);
  ph.frequencies(0, 2) = nu;
  if (nu < -kZeroFrequencyTol) ph.imaginary_q = {0};
  ph.volume = 10.0;
  return ph;
}

}  // namespace

TEST_SUITE("phonon") {

TEST_CASE("monatomic chain dispersion") {
  const double a = 2.5, k = 1.7;
  HarmonicPair hp(k, a, 1.5 * a);
  const auto s = chain(a);
  const auto fc = force_constants(s, hp, {10, 1, 1});
  CHECK(fc.sum_rule_error() < 1e-12);
  CHECK(fc.symmetry_error() < 1e-8);
  const double m = element("Ar").mass;
  std::vector<Vec3> qs;
  for (double x : {0.0, 0.1, 0.25, 0.37, 0.5, -0.3}) qs.push_back(Vec3(x, 0, 0));
  const auto ph = dispersion(fc, qs);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const double expected = 2.0 * omega0(k, m) * std::abs(std::sin(kPi * qs[i][0])) / (2.0 * kPi) * 1e-12;
    const double got = ph.frequencies(static_cast<Eigen::Index>(i), 2);
    if (expected > 0) CHECK(std::abs(got - expected) / expected < 1e-6);
    else CHECK(std::abs(got) < 1e-3);
  }
}

TEST_CASE("force constant invariants and dynamical matrix for LJ FCC") {
  const auto lj = fcc_lj();
  const auto s = fcc_primitive("Cu", kFccA);
  const auto fc = force_constants(s, lj, {4, 4, 4});
  CHECK(fc.sum_rule_error() < 1e-10);
  CHECK(fc.symmetry_error() < 1e-6);

  // Uniform translation of all atoms produces no restoring force.
  double worst = 0.0;
  const std::size_t N = fc.supercell.structure.size();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double sum = 0.0;
      for (std::size_t j = 0; j < N; ++j) sum += fc.at(0, a, j, b);
      worst = std::max(worst, std::abs(sum));
    }
  CHECK(worst < 1e-10);

  for (const Vec3& q : {Vec3(0.1, 0.2, 0.3), Vec3(0.5, 0.0, 0.5), Vec3(-0.25, 0.4, 0.1)}) {
    const Eigen::MatrixXcd D = dynamical_matrix(fc, q);
    CHECK((D - D.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  }

  const auto ph = dispersion(fc, {Vec3::Zero(), Vec3(0.1, 0.2, 0.3), Vec3(-0.1, -0.2, -0.3)});
  for (int b = 0; b < 3; ++b) CHECK(std::abs(ph.frequencies(0, b)) < 1e-3);
  for (int b = 0; b < 3; ++b) CHECK(ph.frequencies(1, b) == doctest::Approx(ph.frequencies(2, b)).epsilon(1e-10));
  for (int b = 1; b < 3; ++b) CHECK(ph.frequencies(1, b) >= ph.frequencies(1, b - 1));
  CHECK_FALSE(ph.has_imaginary());
}

TEST_CASE("displacement amplitude and supercell convergence") {
  const auto lj = fcc_lj();
  const auto s = fcc_primitive("Cu", kFccA);
  const std::vector<Vec3> qs{Vec3(1.0 / 3, 0, 0), Vec3(1.0 / 3, 1.0 / 3, 0), Vec3(0, 1.0 / 3, 2.0 / 3)};
  const auto a = dispersion(force_constants(s, lj, {6, 6, 6}, 0.01), qs);
  const auto b = dispersion(force_constants(s, lj, {6, 6, 6}, 0.005), qs);
  const auto c = dispersion(force_constants(s, lj, {3, 3, 3}, 0.01), qs);
  CHECK(((a.frequencies - b.frequencies).array() / a.frequencies.array()).abs().maxCoeff() < 1e-3);
  CHECK(((a.frequencies - c.frequencies).array() / a.frequencies.array()).abs().maxCoeff() < 1e-2);
}

TEST_CASE("single-mode thermodynamics") {
  const double T = 300.0;
  const double e = kKb * T;          // eV
  const double nu = e / kH * 1e-12;  // THz
  const auto ph = single_mode(nu);
  CHECK(helmholtz_free_energy(ph, T) == doctest::Approx(0.5 * e + e * std::log(1.0 - std::exp(-1.0))).epsilon(1e-9));
  CHECK(helmholtz_free_energy(ph, 0.0) == doctest::Approx(0.5 * e).epsilon(1e-9));
  CHECK(heat_capacity(ph, 0.0) == 0.0);
  const double cv = kKb * std::exp(1.0) / std::pow(std::exp(1.0) - 1.0, 2);
  CHECK(heat_capacity(ph, T) == doctest::Approx(cv).epsilon(1e-9));
  CHECK_THROWS_AS(helmholtz_free_energy(single_mode(-1.0), T), Error);
}

TEST_CASE("LJ FCC thermodynamics on a mesh") {
  const auto lj = fcc_lj();
  const auto s = fcc_primitive("Cu", kFccA);
  const auto fc = force_constants(s, lj, {6, 6, 6});
  const auto ph = dispersion(fc, monkhorst_pack({8, 8, 8}));
  CHECK(ph.qcount() == 512);

  const auto d = dos(ph, 0.02);
  CHECK(std::abs(d.integral() - 3.0) < 1e-6);

  const double numax = ph.frequencies.maxCoeff();
  const double Thigh = kH * numax * 1e12 / kKb / 0.05;
  CHECK(std::abs(heat_capacity(ph, Thigh) / (3 * kKb) - 1.0) < 5e-3);

  const double T = 300.0, h = 1.0;
  const double d2F = (helmholtz_free_energy(ph, T + h) - 2 * helmholtz_free_energy(ph, T) +
                      helmholtz_free_energy(ph, T - h)) / (h * h);
  CHECK(std::abs(-T * d2F / heat_capacity(ph, T) - 1.0) < 1e-3);

  // S = -dF/dT
  const double dF = (helmholtz_free_energy(ph, T + h) - helmholtz_free_energy(ph, T - h)) / (2 * h);
  CHECK(entropy(ph, T) == doctest::Approx(-dF).epsilon(1e-6));
}

TEST_CASE("quasi-harmonic minimisation of a parabola") {
  const double V0 = 20.0;
  std::vector<QhaSample> samples;
  for (int i = 0; i < 7; ++i) {
    const double V = V0 - 1.5 + 0.5 * i;
    samples.push_back({V, (V - V0) * (V - V0), single_mode(0.0)});
  }
  const auto r0 = gibbs_qha(samples, 300.0, 0.0);
  CHECK(r0.volume == doctest::Approx(V0).epsilon(1e-9));
  CHECK(std::abs(r0.gibbs) < 1e-9);
  for (double p : {0.1, 0.5, 1.0}) {
    const auto r = gibbs_qha(samples, 300.0, p);
    CHECK(std::abs(r.volume - (V0 - p / 2)) < 1e-6);
  }
  // The minimum must lie inside the sampled interval.
  CHECK_THROWS_AS(gibbs_qha(samples, 300.0, 10.0), Error);
}

TEST_CASE("constant relaxation time conductivity") {
  const double a = 2.5, k = 1.7;
  HarmonicPair hp(k, a, 1.5 * a);
  const auto s = chain(a);
  const auto fc = force_constants(s, hp, {10, 1, 1});
  const int N = 40;
  DispersionOptions opt;
  opt.velocities = true;
  const auto ph = dispersion(fc, monkhorst_pack({N, 1, 1}), opt);
  const double T = 200.0;
  const auto cv = mode_heat_capacities(ph, T);

  CHECK(kappa_crta(ph, cv, {0.0}).norm() == 0.0);
  const Mat3 k1 = kappa_crta(ph, cv, {5.0});
  const Mat3 k2 = kappa_crta(ph, cv, {10.0});
  CHECK((k2 - 2.0 * k1).norm() < 1e-12 * k1.norm());
  CHECK_THROWS_AS(kappa_crta(ph, cv, {}), InvalidArgument);

  // Brute-force sum with analytic group velocities of the longitudinal branch.
  const double m = element("Ar").mass;
  const double w0 = omega0(k, m) * 1e-15;  // rad/fs
  double sum = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = ph.qpoints[static_cast<std::size_t>(i)][0];
    const double q = 2 * kPi * x / a;
    const double v = a * w0 * std::cos(q * a / 2) * (std::sin(q * a / 2) >= 0 ? 1 : -1);  // A/fs
    const double nu = 2 * w0 * std::abs(std::sin(q * a / 2)) / (2 * kPi) * 1e3;         // THz
    if (nu < 1e-3) continue;
    const double xx = kH * nu * 1e12 / (kKb * T);
    const double c = kKb * xx * xx * std::exp(xx) / std::pow(std::expm1(xx), 2);
    sum += c * v * v * 5.0;
  }
  const double expected = sum / (N * s.volume()) * kEv / (1e-10 * 1e-15) / 1.0;  // J/(K m s)
  CHECK(k1(0, 0) == doctest::Approx(expected).epsilon(1e-6));
  CHECK(std::abs(k1(1, 1)) < 1e-12 * k1(0, 0));
}

}  // TEST_SUITE
