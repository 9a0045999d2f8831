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

#include "matscreen/potential.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "matscreen/elements.hpp"
#include "matscreen/error.hpp"
#include "matscreen/units.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

double EvalResult::max_force() const {
  double m = 0.0;
  for (const auto& f : forces) m = std::max(m, f.norm());
  return m;
}

void Potential::check_coverage(const Structure& s) const {
  for (const auto& sym : s.unique_species())
    if (!covers(sym))
      throw InvalidArgument("potential '" + kind() + "' does not cover element " + sym);
}

EvalResult Potential::compute(const Structure& s) const {
  check_coverage(s);
  EvalResult r = evaluate(s);
  bool finite = std::isfinite(r.energy) && r.stress.allFinite();
  for (const auto& f : r.forces) finite = finite && f.allFinite();
  if (!finite) throw RuntimeError("potential '" + kind() + "' produced non-finite values");
  return r;
}

EvalResult ForceAccumulator::finish(double energy, double volume) && {
  EvalResult r;
  r.energy = energy;
  r.forces = std::move(forces_);
  r.stress = (0.5 / volume) * (virial_ + virial_.transpose());
  return r;
}

// ---------------------------------------------------------------------------
// Pair potentials
// ---------------------------------------------------------------------------

EvalResult PairPotential::evaluate(const Structure& s) const {
  ForceAccumulator acc(s.size());
  double energy = 0.0;
  if (cutoff() > 0.0) {
    const auto nl = build_neighbor_list(s, cutoff());
    for (const auto& p : nl.pairs) {
      const auto [phi, dphi] = pair(s.species(p.i), s.species(p.j), p.distance);
      energy += 0.5 * phi;
      acc.add(p.i, p.j, p.displacement, (0.5 * dphi / p.distance) * p.displacement);
    }
  }
  return std::move(acc).finish(energy, s.volume());
}

LennardJones::LennardJones(LennardJonesParams params, double cutoff, bool shift)
    : default_(params), cutoff_(cutoff), shift_(shift) {
  if (!(params.epsilon >= 0.0) || !(params.sigma > 0.0) || !(cutoff > 0.0))
    throw InvalidArgument("Lennard-Jones requires epsilon >= 0, sigma > 0, cutoff > 0");
}

void LennardJones::set_pair(const std::string& a, const std::string& b, LennardJonesParams params) {
  overrides_[std::minmax(a, b)] = params;
}

const LennardJonesParams& LennardJones::params_for(const std::string& a,
                                                   const std::string& b) const {
  if (overrides_.empty()) return default_;
  auto it = overrides_.find(std::minmax(a, b));
  return it == overrides_.end() ? default_ : it->second;
}

std::pair<double, double> LennardJones::pair(const std::string& a, const std::string& b,
                                             double r) const {
  const auto& p = params_for(a, b);
  auto lj = [&](double x) {
    const double sr6 = std::pow(p.sigma / x, 6);
    return 4.0 * p.epsilon * (sr6 * sr6 - sr6);
  };
  const double sr6 = std::pow(p.sigma / r, 6);
  double phi = 4.0 * p.epsilon * (sr6 * sr6 - sr6);
  const double dphi = -24.0 * p.epsilon * (2.0 * sr6 * sr6 - sr6) / r;
  if (shift_) phi -= lj(cutoff_);
  return {phi, dphi};
}

nlohmann::json LennardJones::to_json() const {
  nlohmann::json j{{"epsilon", default_.epsilon},
                   {"sigma", default_.sigma},
                   {"cutoff", cutoff_},
                   {"shift", shift_}};
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [key, p] : overrides_)
    pairs.push_back({{"a", key.first}, {"b", key.second}, {"epsilon", p.epsilon}, {"sigma", p.sigma}});
  j["pairs"] = pairs;
  return j;
}

std::shared_ptr<LennardJones> LennardJones::from_json(const nlohmann::json& j) {
  auto lj = std::make_shared<LennardJones>(
      LennardJonesParams{j.value("epsilon", 1.0), j.value("sigma", 1.0)}, j.value("cutoff", 3.0),
      j.value("shift", false));
  if (j.contains("pairs"))
    for (const auto& p : j.at("pairs"))
      lj->set_pair(p.at("a").get<std::string>(), p.at("b").get<std::string>(),
                   {p.at("epsilon").get<double>(), p.at("sigma").get<double>()});
  return lj;
}

std::pair<double, double> HarmonicPair::pair(const std::string&, const std::string&,
                                             double r) const {
  const double x = r - r0_;
  return {0.5 * k_ * x * x, k_ * x};
}

nlohmann::json HarmonicPair::to_json() const {
  return {{"k", k_}, {"r0", r0_}, {"cutoff", cutoff_}};
}

EvalResult ZeroPotential::evaluate(const Structure& s) const {
  EvalResult r;
  r.forces.assign(s.size(), Vec3::Zero());
  return r;
}

nlohmann::json ZeroPotential::to_json() const { return nlohmann::json::object(); }

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

nlohmann::json to_json(const OracleSpec& spec) {
  return {{"seed", spec.seed},
          {"pair_cutoff", spec.pair_cutoff},
          {"switch_width", spec.switch_width},
          {"three_body_cutoff", spec.three_body_cutoff},
          {"three_body_switch", spec.three_body_switch},
          {"three_body_scale", spec.three_body_scale},
          {"site_energies", spec.site_energies}};
}

OracleSpec oracle_spec_from_json(const nlohmann::json& j) {
  OracleSpec s;
  s.seed = j.value("seed", s.seed);
  s.pair_cutoff = j.value("pair_cutoff", s.pair_cutoff);
  s.switch_width = j.value("switch_width", s.switch_width);
  s.three_body_cutoff = j.value("three_body_cutoff", s.three_body_cutoff);
  s.three_body_switch = j.value("three_body_switch", s.three_body_switch);
  s.three_body_scale = j.value("three_body_scale", s.three_body_scale);
  if (j.contains("site_energies"))
    s.site_energies = j.at("site_energies").get<std::map<std::string, double>>();
  return s;
}

namespace {

/// Quintic switch: 1 below r_on, 0 above rc, C2 in between.
inline std::pair<double, double> smooth_switch(double r, double r_on, double rc) {
  if (r <= r_on) return {1.0, 0.0};
  if (r >= rc) return {0.0, 0.0};
  const double w = rc - r_on;
  const double t = (r - r_on) / w;
  const double t2 = t * t;
  const double s = 1.0 - t2 * t * (10.0 - 15.0 * t + 6.0 * t2);
  const double ds = -30.0 * t2 * (1.0 - t) * (1.0 - t) / w;
  return {s, ds};
}

Rng parameter_rng(std::uint64_t seed, std::string_view tag) {
  Fnv1a h;
  h.update(tag);
  return Rng(seed, h.digest());
}

}  // namespace

OraclePotential::OraclePotential(OracleSpec spec) : spec_(std::move(spec)) {
  if (!(spec_.pair_cutoff > spec_.switch_width) || !(spec_.switch_width > 0.0))
    throw InvalidArgument("oracle pair cutoff must exceed a positive switch width");
  if (!(spec_.three_body_cutoff > spec_.three_body_switch) || !(spec_.three_body_switch > 0.0))
    throw InvalidArgument("oracle three-body cutoff must exceed a positive switch width");
  for (const auto& [sym, e] : spec_.site_energies) element(sym);
}

bool OraclePotential::covers(const std::string& symbol) const { return is_element(symbol); }

OraclePotential::MorseParams OraclePotential::morse(const std::string& a,
                                                     const std::string& b) const {
  const auto [lo, hi] = std::minmax(a, b);
  Rng rng = parameter_rng(spec_.seed, "morse:" + lo + "-" + hi);
  const double radii = element(a).covalent_radius + element(b).covalent_radius;
  MorseParams p{};
  p.depth = 0.4 + 0.6 * rng.uniform();
  p.alpha = 1.4 + 0.8 * rng.uniform();
  p.r0 = radii * (0.95 + 0.15 * rng.uniform());
  return p;
}

OraclePotential::AngularParams OraclePotential::angular(const std::string& center) const {
  Rng rng = parameter_rng(spec_.seed, "angular:" + center);
  AngularParams p{};
  p.strength = spec_.three_body_scale * (0.2 + 0.6 * rng.uniform());
  p.cos0 = -0.5 + 0.4 * rng.uniform();
  return p;
}

double OraclePotential::site_energy(const std::string& symbol) const {
  if (auto it = spec_.site_energies.find(symbol); it != spec_.site_energies.end()) return it->second;
  Rng rng = parameter_rng(spec_.seed, "site:" + symbol);
  return -(1.0 + 3.0 * rng.uniform());
}

EvalResult OraclePotential::evaluate(const Structure& s) const {
  const std::size_t n = s.size();
  const auto kinds = s.unique_species();
  std::vector<std::size_t> kind(n);
  for (std::size_t i = 0; i < n; ++i)
    kind[i] = static_cast<std::size_t>(std::find(kinds.begin(), kinds.end(), s.species(i)) - kinds.begin());
  const std::size_t nk = kinds.size();
  std::vector<MorseParams> morse_table(nk * nk);
  std::vector<AngularParams> angular_table(nk);
  for (std::size_t a = 0; a < nk; ++a) {
    angular_table[a] = angular(kinds[a]);
    for (std::size_t b = 0; b < nk; ++b) morse_table[a * nk + b] = morse(kinds[a], kinds[b]);
  }

  ForceAccumulator acc(n);
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) energy += site_energy(s.species(i));

  const double r_on = spec_.pair_cutoff - spec_.switch_width;
  const double r3 = spec_.three_body_cutoff;
  const double r3_on = r3 - spec_.three_body_switch;
  const auto nl = build_neighbor_list(s, spec_.pair_cutoff);

  struct Near {
    std::size_t j;
    Vec3 d;
    double r, sw, dsw;
  };
  std::vector<Near> near;
  for (std::size_t i = 0; i < n; ++i) {
    near.clear();
    for (std::size_t k = nl.begin[i]; k < nl.begin[i + 1]; ++k) {
      const auto& p = nl.pairs[k];
      const double r = p.distance;
      const auto& m = morse_table[kind[i] * nk + kind[p.j]];
      const double e1 = std::exp(-m.alpha * (r - m.r0));
      const double phi = m.depth * (e1 * e1 - 2.0 * e1);
      const double dphi = 2.0 * m.depth * m.alpha * (e1 - e1 * e1);
      const auto [sw, dsw] = smooth_switch(r, r_on, spec_.pair_cutoff);
      energy += 0.5 * phi * sw;
      acc.add(i, p.j, p.displacement, (0.5 * (dphi * sw + phi * dsw) / r) * p.displacement);
      if (r < r3) {
        const auto [s3, ds3] = smooth_switch(r, r3_on, r3);
        near.push_back({p.j, p.displacement, r, s3, ds3});
      }
    }

    const auto& ang = angular_table[kind[i]];
    if (ang.strength == 0.0) continue;
    for (std::size_t a = 0; a < near.size(); ++a)
      for (std::size_t b = a + 1; b < near.size(); ++b) {
        const Near& u = near[a];
        const Near& v = near[b];
        const double inv = 1.0 / (u.r * v.r);
        const double c = u.d.dot(v.d) * inv;
        const double delta = c - ang.cos0;
        const double w = u.sw * v.sw;
        energy += ang.strength * delta * delta * w;
        const Vec3 dc_du = v.d * inv - (c / (u.r * u.r)) * u.d;
        const Vec3 dc_dv = u.d * inv - (c / (v.r * v.r)) * v.d;
        const double k2 = 2.0 * ang.strength * delta * w;
        const double kk = ang.strength * delta * delta;
        const Vec3 gu = k2 * dc_du + (kk * u.dsw * v.sw / u.r) * u.d;
        const Vec3 gv = k2 * dc_dv + (kk * v.dsw * u.sw / v.r) * v.d;
        acc.add(i, u.j, u.d, gu);
        acc.add(i, v.j, v.d, gv);
      }
  }
  return std::move(acc).finish(energy, s.volume());
}

nlohmann::json OraclePotential::to_json() const { return matscreen::to_json(spec_); }

std::shared_ptr<OraclePotential> oracle_potential(const OracleSpec& spec) {
  return std::make_shared<OraclePotential>(spec);
}

namespace {

template <class F>
auto timed(std::atomic<std::size_t>& calls, std::atomic<long long>& nanos, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  auto out = f();
  nanos += std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
  ++calls;
  return out;
}

}  // namespace

EvalResult CountingPotential::evaluate(const Structure& s) const {
  return timed(calls_, nanos_, [&] { return inner_->evaluate(s); });
}

double CountingPotential::energy(const Structure& s) const {
  return timed(calls_, nanos_, [&] { return inner_->energy(s); });
}

double compute_formation_energy(double total_energy, const Structure& s,
                                const std::map<std::string, double>& references) {
  double ref = 0.0;
  for (const auto& sym : s.species()) {
    auto it = references.find(sym);
    if (it == references.end()) throw InvalidArgument("missing reference energy for element " + sym);
    ref += it->second;
  }
  return (total_energy - ref) / static_cast<double>(s.size());
}

}  // namespace matscreen
