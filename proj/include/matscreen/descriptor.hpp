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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "matscreen/potential.hpp"

namespace matscreen {

/// Radial Gaussian descriptors resolved by neighbor species:
///   G_i[k, b] = sum_{j of species b} exp(-eta (r_ij - mu_k)^2) fc(r_ij)
/// with the cosine cutoff fc(r) = (1 + cos(pi r / rc)) / 2.
struct DescriptorSpec {
  std::vector<std::string> species;
  int num_centers = 8;
  double r_min = 0.5;   // first Gaussian center, A
  double cutoff = 5.0;  // A; last center sits here
  double eta = 4.0;     // 1/A^2
  std::vector<int> hidden{16, 16};

  std::vector<double> centers() const;
  std::size_t feature_count() const { return species.size() * static_cast<std::size_t>(num_centers); }
  int species_index(const std::string& symbol) const;  // -1 when absent
  void validate() const;
  bool operator==(const DescriptorSpec&) const = default;
};

nlohmann::json to_json(const DescriptorSpec& spec);
DescriptorSpec descriptor_spec_from_json(const nlohmann::json& j);

/// Fully connected tanh network with a linear scalar output. Parameters are
/// stored flat: for each hidden layer W (row-major, out x in) then b, then
/// the output weights and bias.
class AtomicNetwork {
 public:
  AtomicNetwork() = default;
  AtomicNetwork(int inputs, std::vector<int> hidden);

  std::size_t parameter_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  int inputs() const { return inputs_; }
  const std::vector<int>& hidden() const { return hidden_; }

  /// Glorot-normal weights, zero biases.
  void initialize(std::uint64_t seed);

  struct Workspace {
    std::vector<std::vector<double>> h, hdot, bar_h, bar_hdot, tmp;
  };

  /// Returns y(x) and writes dy/dx into grad_x.
  double forward(const double* x, double* grad_x, Workspace& ws) const;

  /// Accumulates d/dparams of [ybar * y(x) + v . grad_x y(x)] into grad.
  void backward(const double* x, const double* v, double ybar, double* grad, Workspace& ws) const;

 private:
  int inputs_ = 0;
  std::vector<int> hidden_;
  std::vector<double> params_;
};

/// Geometry of one structure in descriptor space; independent of weights,
/// so training computes it once per frame.
struct DescriptorFrame {
  struct Pair {
    std::uint32_t i;
    std::uint32_t j;
    std::uint32_t block;  // feature offset of j's species
    double r;
    Vec3 d;
  };
  std::size_t n = 0;
  double volume = 0.0;
  std::vector<int> species;        // model species index per atom
  std::vector<double> features;    // n x D raw descriptors
  std::vector<Pair> pairs;
  std::vector<double> dg;          // pairs x K, dg_k/dr
};

DescriptorFrame prepare_descriptor_frame(const DescriptorSpec& spec, const Structure& s);

/// Atomic-energy model E = sum_i [e0(s_i) + scale * net_{s_i}(x_i)] where x_i
/// are the descriptors standardized per species.
class DescriptorPotential : public Potential {
 public:
  DescriptorPotential(DescriptorSpec spec, std::uint64_t init_seed);

  EvalResult evaluate(const Structure& s) const override;
  double energy(const Structure& s) const override;
  double cutoff() const override { return spec_.cutoff; }
  bool covers(const std::string& symbol) const override { return spec_.species_index(symbol) >= 0; }
  std::string kind() const override { return "descriptor"; }
  nlohmann::json to_json() const override;
  static std::shared_ptr<DescriptorPotential> from_json(const nlohmann::json& j);

  const DescriptorSpec& spec() const { return spec_; }

  struct Prediction {
    double energy = 0.0;
    std::vector<Vec3> forces;
    Mat3 stress = Mat3::Zero();
    std::vector<double> dE_dG;  // n x D, derivative w.r.t. raw descriptors
  };
  Prediction predict(const DescriptorFrame& frame, bool with_forces = true) const;

  /// Adds d(loss)/d(network parameters) to grads[species] given adjoints
  /// dL/dE, dL/dF_j and dL/dsigma of a prediction made on the same frame.
  void accumulate_gradient(const DescriptorFrame& frame, const Prediction& pred,
                           double energy_adjoint, const std::vector<Vec3>& force_adjoint,
                           const Mat3& stress_adjoint,
                           std::vector<std::vector<double>>& grads) const;

  // Normalization and reference energies, set by the trainer before fitting.
  std::vector<std::vector<double>> feature_mean;   // per species, D
  std::vector<std::vector<double>> feature_scale;  // per species, D
  std::vector<double> species_energy;              // e0, eV
  double energy_scale = 1.0;                       // eV per unit network output

  std::vector<AtomicNetwork> networks;  // per species

  struct TrainingMeta {
    std::uint64_t seed = 0;
    double alpha_energy = 1.0;
    double alpha_force = 10.0;
    double alpha_stress = 0.1;
  } meta;

 private:
  DescriptorSpec spec_;
};

using DescriptorPtr = std::shared_ptr<const DescriptorPotential>;

/// Arithmetic mean of member predictions.
class EnsemblePotential : public Potential {
 public:
  explicit EnsemblePotential(std::vector<DescriptorPtr> members);

  EvalResult evaluate(const Structure& s) const override;
  double cutoff() const override;
  bool covers(const std::string& symbol) const override;
  std::string kind() const override { return "ensemble"; }
  nlohmann::json to_json() const override;
  static std::shared_ptr<EnsemblePotential> from_json(const nlohmann::json& j);

  const std::vector<DescriptorPtr>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  /// Per-member predictions; descriptors are built once when members share
  /// a spec.
  std::vector<EvalResult> member_results(const Structure& s) const;

 private:
  std::vector<DescriptorPtr> members_;
};

struct EnsembleStats {
  EvalResult mean;
  double energy_std = 0.0;  // eV/atom, population std of member E/n
  double force_std = 0.0;   // eV/A, max over atoms of std of |F_i|
  double stress_std = 0.0;  // eV/A^3, max over components of the std
};

EnsembleStats ensemble_stats(const EnsemblePotential& e, const Structure& s);
EnsembleStats ensemble_stats(const std::vector<EvalResult>& members, std::size_t natoms);

}  // namespace matscreen
