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

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "matscreen/io.hpp"
#include "matscreen/structure.hpp"

namespace matscreen {

/// Energy (eV), forces (eV/A) and stress (eV/A^3).
///
/// Stress is (1/V) dE/d(strain): positive entries mean the cell would
/// lower its energy by shrinking along that direction, and the hydrostatic
/// pressure is -trace/3.
struct EvalResult {
  double energy = 0.0;
  std::vector<Vec3> forces;
  Mat3 stress = Mat3::Zero();

  double max_force() const;
};

/// Evaluatable interatomic model. Implementations are immutable after
/// construction and safe to evaluate concurrently.
class Potential {
 public:
  virtual ~Potential() = default;

  virtual EvalResult evaluate(const Structure& s) const = 0;
  virtual double cutoff() const = 0;
  virtual bool covers(const std::string& symbol) const = 0;
  virtual std::string kind() const = 0;
  /// Self-describing checkpoint payload; see docs/checkpoint.md.
  virtual nlohmann::json to_json() const = 0;

  /// Throws InvalidArgument naming the first species this model lacks.
  void check_coverage(const Structure& s) const;
  /// Wraps evaluate() with a coverage check and a finiteness check.
  EvalResult compute(const Structure& s) const;
  /// Energy only; defaults to evaluate().energy.
  virtual double energy(const Structure& s) const { return evaluate(s).energy; }
};

using PotentialPtr = std::shared_ptr<const Potential>;

/// Gradient accumulator shared by the analytic models. Every energy term is
/// written as a function of neighbor displacement vectors d = r_j - r_i; the
/// gradient dE/dd feeds forces on both atoms and the virial.
class ForceAccumulator {
 public:
  explicit ForceAccumulator(std::size_t n) : forces_(n, Vec3::Zero()) {}
  void add(std::size_t i, std::size_t j, const Vec3& d, const Vec3& grad) {
    forces_[i] += grad;
    forces_[j] -= grad;
    virial_ += d * grad.transpose();
  }
  EvalResult finish(double energy, double volume) &&;

 private:
  std::vector<Vec3> forces_;
  Mat3 virial_ = Mat3::Zero();
};

// ---------------------------------------------------------------------------
// Pair potentials
// ---------------------------------------------------------------------------

/// Base for radial pair models; subclasses supply phi(r) and phi'(r).
class PairPotential : public Potential {
 public:
  EvalResult evaluate(const Structure& s) const override;

 protected:
  /// Pair energy and derivative for species indices of the concrete model.
  virtual std::pair<double, double> pair(const std::string& a, const std::string& b,
                                         double r) const = 0;
};

struct LennardJonesParams {
  double epsilon = 1.0;  // eV
  double sigma = 1.0;    // A
};

/// 12-6 Lennard-Jones. A single parameter set applies to every species pair
/// unless per-pair overrides are given. With shift=true the pair energy is
/// shifted to vanish at the cutoff.
class LennardJones : public PairPotential {
 public:
  LennardJones(LennardJonesParams params, double cutoff, bool shift = false);
  void set_pair(const std::string& a, const std::string& b, LennardJonesParams params);

  double cutoff() const override { return cutoff_; }
  bool covers(const std::string&) const override { return true; }
  std::string kind() const override { return "lennard_jones"; }
  nlohmann::json to_json() const override;
  static std::shared_ptr<LennardJones> from_json(const nlohmann::json& j);

 protected:
  std::pair<double, double> pair(const std::string& a, const std::string& b,
                                 double r) const override;

 private:
  const LennardJonesParams& params_for(const std::string& a, const std::string& b) const;

  LennardJonesParams default_;
  std::map<std::pair<std::string, std::string>, LennardJonesParams> overrides_;
  double cutoff_;
  bool shift_;
};

/// phi(r) = k/2 (r - r0)^2 for r < cutoff.
class HarmonicPair : public PairPotential {
 public:
  HarmonicPair(double k, double r0, double cutoff) : k_(k), r0_(r0), cutoff_(cutoff) {}
  double cutoff() const override { return cutoff_; }
  bool covers(const std::string&) const override { return true; }
  std::string kind() const override { return "harmonic_pair"; }
  nlohmann::json to_json() const override;

 protected:
  std::pair<double, double> pair(const std::string&, const std::string&, double r) const override;

 private:
  double k_, r0_, cutoff_;
};

/// No interactions; every atom is free.
class ZeroPotential : public Potential {
 public:
  EvalResult evaluate(const Structure& s) const override;
  double cutoff() const override { return 0.0; }
  bool covers(const std::string&) const override { return true; }
  std::string kind() const override { return "zero"; }
  nlohmann::json to_json() const override;
};

// ---------------------------------------------------------------------------
// Synthetic ground-truth oracle
// ---------------------------------------------------------------------------

struct OracleSpec {
  std::uint64_t seed = 7;
  double pair_cutoff = 6.0;         // A
  double switch_width = 1.0;        // A, smooth taper before the cutoff
  double three_body_cutoff = 3.2;   // A
  double three_body_switch = 0.6;   // A
  double three_body_scale = 1.0;    // multiplies every angular strength
  /// Per-element on-site energy overrides (eV/atom). Elements not listed
  /// draw theirs from the seed.
  std::map<std::string, double> site_energies;
};

nlohmann::json to_json(const OracleSpec& spec);
OracleSpec oracle_spec_from_json(const nlohmann::json& j);

/// Stand-in for first-principles labels: species-dependent Morse pairs with
/// a smooth cutoff, a three-body angular penalty and per-element on-site
/// energies. Every parameter derives deterministically from the seed and
/// the element symbols, so any element in the table is covered.
class OraclePotential : public Potential {
 public:
  explicit OraclePotential(OracleSpec spec);

  EvalResult evaluate(const Structure& s) const override;
  double cutoff() const override { return spec_.pair_cutoff; }
  bool covers(const std::string& symbol) const override;
  std::string kind() const override { return "oracle"; }
  nlohmann::json to_json() const override;
  const OracleSpec& spec() const { return spec_; }

  struct MorseParams {
    double depth;   // eV
    double alpha;   // 1/A
    double r0;      // A
  };
  struct AngularParams {
    double strength;  // eV
    double cos0;
  };
  MorseParams morse(const std::string& a, const std::string& b) const;
  AngularParams angular(const std::string& center) const;
  double site_energy(const std::string& symbol) const;

 private:
  OracleSpec spec_;
};

std::shared_ptr<OraclePotential> oracle_potential(const OracleSpec& spec);

// ---------------------------------------------------------------------------
// Evaluation accounting
// ---------------------------------------------------------------------------

/// Forwards to a wrapped model and counts calls and wall time. Safe to use
/// from several threads.
class CountingPotential : public Potential {
 public:
  explicit CountingPotential(PotentialPtr inner) : inner_(std::move(inner)) {}
  EvalResult evaluate(const Structure& s) const override;
  double energy(const Structure& s) const override;
  double cutoff() const override { return inner_->cutoff(); }
  bool covers(const std::string& symbol) const override { return inner_->covers(symbol); }
  std::string kind() const override { return inner_->kind(); }
  nlohmann::json to_json() const override { return inner_->to_json(); }
  const PotentialPtr& inner() const { return inner_; }
  std::size_t calls() const { return calls_.load(); }
  double seconds() const { return static_cast<double>(nanos_.load()) * 1e-9; }

 private:
  PotentialPtr inner_;
  mutable std::atomic<std::size_t> calls_{0};
  mutable std::atomic<long long> nanos_{0};
};

// ---------------------------------------------------------------------------
// Formation energy
// ---------------------------------------------------------------------------

/// (E_total - sum_e n_e mu_e) / n, in eV/atom.
double compute_formation_energy(double total_energy, const Structure& s,
                                const std::map<std::string, double>& references);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

/// Serializes any built-in model into the versioned checkpoint container.
std::string save_potential(const Potential& p);
PotentialPtr load_potential(const std::string& text);
PotentialPtr potential_from_json(const nlohmann::json& j);

}  // namespace matscreen
