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
#include <vector>

#include "matscreen/descriptor.hpp"
#include "matscreen/io.hpp"

namespace matscreen {

struct LossWeights {
  double energy = 1.0;
  double force = 10.0;
  double stress = 0.1;
};

/// Weighted multi-target loss averaged over N frames:
///   L = (1/N) sum_i [ aE ((E_i - E^_i)/n_i)^2
///                   + aF (1/n_i) sum_atoms |F - F^|^2
///                   + aS |sigma_i - sigma^_i|_F^2 ]
/// Energies enter per atom; force residuals are averaged over the atoms of
/// each frame.
double loss(const std::vector<LabeledFrame>& frames, const std::vector<EvalResult>& predictions,
            const LossWeights& weights);

struct FitHyperparams {
  double validation_fraction = 0.2;
  int epochs = 300;
  int batch_size = 8;  // 0 = full batch
  double learning_rate = 0.005;
  double final_lr_fraction = 0.02;  // cosine decay floor, relative
  double momentum = 0.9;
  double grad_clip = 10.0;  // global norm; 0 disables
  LossWeights weights;
  /// Seed of the train/validation split. Shared by ensemble members so they
  /// see identical data.
  std::uint64_t split_seed = 0;
  DescriptorSpec descriptor;

  void validate() const;
};

nlohmann::json to_json(const FitHyperparams& h);
FitHyperparams fit_hyperparams_from_json(const nlohmann::json& j);

struct TargetErrors {
  double energy_mae = 0.0;   // eV/atom
  double energy_rmse = 0.0;  // eV/atom
  double force_mae = 0.0;    // eV/A per component
  double force_rmse = 0.0;
  double stress_mae = 0.0;   // eV/A^3 per component
  double stress_rmse = 0.0;
};

TargetErrors target_errors(const std::vector<LabeledFrame>& frames,
                           const std::vector<EvalResult>& predictions);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double best_validation_loss = 0.0;
};

struct FitReport {
  std::uint64_t seed = 0;
  double final_loss = 0.0;  // normalized objective of the returned model on the train split
  int best_epoch = 0;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
  TargetErrors train;
  TargetErrors validation;
  std::vector<EpochRecord> history;
};

nlohmann::json to_json(const FitReport& r);

/// Frames with precomputed descriptors.
class TrainingSet {
 public:
  TrainingSet(const DescriptorSpec& spec, const std::vector<LabeledFrame>& frames);
  std::size_t size() const { return frames_.size(); }
  const LabeledFrame& frame(std::size_t i) const { return frames_[i]; }
  const DescriptorFrame& descriptors(std::size_t i) const { return desc_[i]; }

 private:
  std::vector<LabeledFrame> frames_;
  std::vector<DescriptorFrame> desc_;
};

/// Target standard deviations over a subset: per-atom energy after removing
/// the fitted reference energies, force components, stress components.
struct TargetScales {
  double energy = 1.0;
  double force = 1.0;
  double stress = 1.0;
};

/// Sets feature standardization, per-species reference energies and the
/// output energy scale from the frames in idx. Returns the target scales.
TargetScales initialize_normalization(DescriptorPotential& model, const TrainingSet& data,
                                      const std::vector<std::size_t>& idx);

/// Loss over frames idx with the given (already scaled) weights. When grads
/// is non-null d(loss)/d(params) is added to it, one vector per species; an
/// empty buffer is first sized and zeroed.
double objective(const DescriptorPotential& model, const TrainingSet& data,
                 const std::vector<std::size_t>& idx, const LossWeights& weights,
                 std::vector<std::vector<double>>* grads);

struct FitResult {
  std::shared_ptr<DescriptorPotential> model;
  FitReport report;
};

/// Mini-batch momentum gradient descent with cosine-decayed step. Returns
/// the checkpoint with the best validation loss.
FitResult train(const std::vector<LabeledFrame>& frames, const FitHyperparams& hp,
                std::uint64_t seed);

struct EnsembleFitResult {
  std::shared_ptr<EnsemblePotential> ensemble;
  std::vector<FitReport> reports;
};

/// One member per seed, all trained on the same frames and split.
EnsembleFitResult train_ensemble(const std::vector<LabeledFrame>& frames, const FitHyperparams& hp,
                                 const std::vector<std::uint64_t>& seeds);

/// Species list in order of first appearance across frames.
std::vector<std::string> species_of(const std::vector<LabeledFrame>& frames);

}  // namespace matscreen
