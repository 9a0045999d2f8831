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

#include "matscreen/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "matscreen/error.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

double loss(const std::vector<LabeledFrame>& frames, const std::vector<EvalResult>& predictions,
            const LossWeights& w) {
  if (frames.size() != predictions.size())
    throw InvalidArgument("loss: frame and prediction counts differ");
  if (frames.empty()) throw InvalidArgument("loss: no frames");
  double total = 0.0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& ref = frames[f];
    const auto& pred = predictions[f];
    const std::size_t n = ref.structure.size();
    if (pred.forces.size() != n || ref.forces.size() != n)
      throw InvalidArgument("loss: force array size mismatch in frame " + std::to_string(f));
    const double de = (pred.energy - ref.energy) / static_cast<double>(n);
    double df = 0.0;
    for (std::size_t i = 0; i < n; ++i) df += (pred.forces[i] - ref.forces[i]).squaredNorm();
    df /= static_cast<double>(n);
    const double ds = (pred.stress - ref.stress).squaredNorm();
    total += w.energy * de * de + w.force * df + w.stress * ds;
  }
  return total / static_cast<double>(frames.size());
}

void FitHyperparams::validate() const {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw InvalidArgument("fit: validation_fraction must lie in (0, 1)");
  if (epochs < 1) throw InvalidArgument("fit: epochs must be >= 1");
  if (batch_size < 0) throw InvalidArgument("fit: batch_size must be >= 0");
  if (!(learning_rate > 0.0)) throw InvalidArgument("fit: learning_rate must be positive");
  if (!(final_lr_fraction >= 0.0 && final_lr_fraction <= 1.0))
    throw InvalidArgument("fit: final_lr_fraction must lie in [0, 1]");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("fit: momentum must lie in [0, 1)");
  if (!(grad_clip >= 0.0)) throw InvalidArgument("fit: grad_clip must be >= 0");
  if (!(weights.energy >= 0.0 && weights.force >= 0.0 && weights.stress >= 0.0))
    throw InvalidArgument("fit: loss weights must be non-negative");
}

nlohmann::json to_json(const FitHyperparams& h) {
  return {{"validation_fraction", h.validation_fraction},
          {"epochs", h.epochs},
          {"batch_size", h.batch_size},
          {"learning_rate", h.learning_rate},
          {"final_lr_fraction", h.final_lr_fraction},
          {"momentum", h.momentum},
          {"grad_clip", h.grad_clip},
          {"alpha_energy", h.weights.energy},
          {"alpha_force", h.weights.force},
          {"alpha_stress", h.weights.stress},
          {"split_seed", h.split_seed},
          {"descriptor", to_json(h.descriptor)}};
}

FitHyperparams fit_hyperparams_from_json(const nlohmann::json& j) {
  FitHyperparams h;
  h.validation_fraction = j.value("validation_fraction", h.validation_fraction);
  h.epochs = j.value("epochs", h.epochs);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.learning_rate = j.value("learning_rate", h.learning_rate);
  h.final_lr_fraction = j.value("final_lr_fraction", h.final_lr_fraction);
  h.momentum = j.value("momentum", h.momentum);
  h.grad_clip = j.value("grad_clip", h.grad_clip);
  h.weights.energy = j.value("alpha_energy", h.weights.energy);
  h.weights.force = j.value("alpha_force", h.weights.force);
  h.weights.stress = j.value("alpha_stress", h.weights.stress);
  h.split_seed = j.value("split_seed", h.split_seed);
  if (j.contains("descriptor")) {
    auto d = j.at("descriptor");
    if (!d.contains("species")) d["species"] = std::vector<std::string>{};
    DescriptorSpec s;
    s.species = d.at("species").get<std::vector<std::string>>();
    s.num_centers = d.value("num_centers", s.num_centers);
    s.r_min = d.value("r_min", s.r_min);
    s.cutoff = d.value("cutoff", s.cutoff);
    s.eta = d.value("eta", s.eta);
    if (d.contains("hidden")) s.hidden = d.at("hidden").get<std::vector<int>>();
    h.descriptor = s;
  }
  h.validate();
  return h;
}

TargetErrors target_errors(const std::vector<LabeledFrame>& frames,
                           const std::vector<EvalResult>& predictions) {
  if (frames.size() != predictions.size())
    throw InvalidArgument("target_errors: frame and prediction counts differ");
  TargetErrors e;
  if (frames.empty()) return e;
  std::size_t nf = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& ref = frames[f];
    const auto& pred = predictions[f];
    const double n = static_cast<double>(ref.structure.size());
    const double de = std::abs(pred.energy - ref.energy) / n;
    e.energy_mae += de;
    e.energy_rmse += de * de;
    for (std::size_t i = 0; i < ref.forces.size(); ++i)
      for (int c = 0; c < 3; ++c) {
        const double d = std::abs(pred.forces[i][c] - ref.forces[i][c]);
        e.force_mae += d;
        e.force_rmse += d * d;
        ++nf;
      }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double d = std::abs(pred.stress(a, b) - ref.stress(a, b));
        e.stress_mae += d;
        e.stress_rmse += d * d;
      }
  }
  const double N = static_cast<double>(frames.size());
  e.energy_mae /= N;
  e.energy_rmse = std::sqrt(e.energy_rmse / N);
  e.force_mae /= static_cast<double>(nf);
  e.force_rmse = std::sqrt(e.force_rmse / static_cast<double>(nf));
  e.stress_mae /= 9.0 * N;
  e.stress_rmse = std::sqrt(e.stress_rmse / (9.0 * N));
  return e;
}

namespace {

nlohmann::json errors_json(const TargetErrors& e) {
  return {{"energy_mae", e.energy_mae}, {"energy_rmse", e.energy_rmse},
          {"force_mae", e.force_mae},   {"force_rmse", e.force_rmse},
          {"stress_mae", e.stress_mae}, {"stress_rmse", e.stress_rmse}};
}

}  // namespace

nlohmann::json to_json(const FitReport& r) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : r.history)
    hist.push_back({{"epoch", h.epoch},
                    {"train_loss", h.train_loss},
                    {"validation_loss", h.validation_loss},
                    {"best_validation_loss", h.best_validation_loss}});
  return {{"seed", r.seed},
          {"final_loss", r.final_loss},
          {"best_epoch", r.best_epoch},
          {"train_count", r.train_count},
          {"validation_count", r.validation_count},
          {"train", errors_json(r.train)},
          {"validation", errors_json(r.validation)},
          {"history", hist}};
}

std::vector<std::string> species_of(const std::vector<LabeledFrame>& frames) {
  std::vector<std::string> out;
  for (const auto& f : frames)
    for (const auto& s : f.structure.species())
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  return out;
}

TrainingSet::TrainingSet(const DescriptorSpec& spec, const std::vector<LabeledFrame>& frames)
    : frames_(frames), desc_(frames.size()) {
  parallel_for(frames_.size(),
               [&](std::size_t i) { desc_[i] = prepare_descriptor_frame(spec, frames_[i].structure); });
}

TargetScales initialize_normalization(DescriptorPotential& model, const TrainingSet& data,
                                      const std::vector<std::size_t>& idx) {
  const auto& spec = model.spec();
  const std::size_t S = spec.species.size();
  const std::size_t D = spec.feature_count();

  // Feature standardization per species of the center atom.
  std::vector<std::vector<double>> sum(S, std::vector<double>(D, 0.0)), sq = sum;
  std::vector<double> count(S, 0.0);
  for (std::size_t f : idx) {
    const auto& df = data.descriptors(f);
    for (std::size_t i = 0; i < df.n; ++i) {
      const int a = df.species[i];
      count[a] += 1.0;
      for (std::size_t d = 0; d < D; ++d) {
        const double g = df.features[i * D + d];
        sum[a][d] += g;
        sq[a][d] += g * g;
      }
    }
  }
  for (std::size_t a = 0; a < S; ++a)
    for (std::size_t d = 0; d < D; ++d) {
      if (count[a] == 0.0) {
        model.feature_mean[a][d] = 0.0;
        model.feature_scale[a][d] = 1.0;
        continue;
      }
      const double m = sum[a][d] / count[a];
      const double var = std::max(0.0, sq[a][d] / count[a] - m * m);
      model.feature_mean[a][d] = m;
      model.feature_scale[a][d] = std::sqrt(var) > 1e-6 ? std::sqrt(var) : 1.0;
    }

  // Reference energies by least squares on composition.
  Eigen::MatrixXd A(idx.size(), S);
  Eigen::VectorXd b(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& df = data.descriptors(idx[r]);
    A.row(r).setZero();
    for (std::size_t i = 0; i < df.n; ++i) A(r, df.species[i]) += 1.0;
    b[r] = data.frame(idx[r]).energy;
  }
  const Eigen::VectorXd e0 = A.completeOrthogonalDecomposition().solve(b);
  for (std::size_t a = 0; a < S; ++a) model.species_energy[a] = e0[a];

  TargetScales ts;
  double se = 0.0, se2 = 0.0, sf = 0.0, ss = 0.0;
  double nf = 0.0;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& fr = data.frame(idx[r]);
    const double n = static_cast<double>(fr.structure.size());
    const double res = (b[r] - A.row(r).dot(e0)) / n;
    se += res;
    se2 += res * res;
    for (const auto& f : fr.forces) {
      sf += f.squaredNorm();
      nf += 3.0;
    }
    ss += fr.stress.squaredNorm();
  }
  const double N = static_cast<double>(idx.size());
  const double ev = std::max(0.0, se2 / N - (se / N) * (se / N));
  auto floor_scale = [](double v, double fallback) { return v > 1e-8 ? v : fallback; };
  ts.energy = floor_scale(std::sqrt(ev), 1e-3);
  ts.force = floor_scale(nf > 0 ? std::sqrt(sf / nf) : 0.0, 1.0);
  ts.stress = floor_scale(std::sqrt(ss / (9.0 * N)), 1.0);
  model.energy_scale = ts.energy;
  return ts;
}

double objective(const DescriptorPotential& model, const TrainingSet& data,
                 const std::vector<std::size_t>& idx, const LossWeights& w,
                 std::vector<std::vector<double>>* grads) {
  if (idx.empty()) throw InvalidArgument("objective: empty batch");
  if (grads && grads->empty())
    for (const auto& net : model.networks) grads->emplace_back(net.parameter_count(), 0.0);
  if (grads && grads->size() != model.networks.size())
    throw InvalidArgument("objective: gradient buffer has the wrong species count");
  const double N = static_cast<double>(idx.size());
  double total = 0.0;
  const bool need_forces = w.force != 0.0 || w.stress != 0.0;
  std::vector<Vec3> fadj;
  for (std::size_t f : idx) {
    const auto& df = data.descriptors(f);
    const auto& ref = data.frame(f);
    const auto pred = model.predict(df, need_forces);
    const double n = static_cast<double>(df.n);
    const double de = (pred.energy - ref.energy) / n;
    double term = w.energy * de * de;
    Mat3 sadj = Mat3::Zero();
    fadj.clear();
    if (need_forces) {
      double ff = 0.0;
      if (w.force != 0.0) {
        fadj.resize(df.n);
        for (std::size_t i = 0; i < df.n; ++i) {
          const Vec3 r = pred.forces[i] - ref.forces[i];
          ff += r.squaredNorm();
          fadj[i] = (2.0 * w.force / (N * n)) * r;
        }
        term += w.force * ff / n;
      }
      if (w.stress != 0.0) {
        const Mat3 r = pred.stress - ref.stress;
        term += w.stress * r.squaredNorm();
        sadj = (2.0 * w.stress / N) * r;
      }
    }
    if (!std::isfinite(term))
      throw RuntimeError("non-finite loss at frame " + std::to_string(f));
    total += term;
    if (grads) {
      const double eadj = 2.0 * w.energy * de / (N * n);
      model.accumulate_gradient(df, pred, eadj, fadj, sadj, *grads);
    }
  }
  return total / N;
}

namespace {

std::vector<std::vector<double>> zero_grads(const DescriptorPotential& m) {
  std::vector<std::vector<double>> g;
  for (const auto& net : m.networks) g.emplace_back(net.parameter_count(), 0.0);
  return g;
}

LossWeights scaled_weights(const LossWeights& w, const TargetScales& s) {
  return {w.energy / (s.energy * s.energy), w.force / (s.force * s.force),
          w.stress / (s.stress * s.stress)};
}

struct Split {
  std::vector<std::size_t> train, validation;
};

Split make_split(std::size_t n, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, 0x5eed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  std::size_t nv = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  nv = std::clamp<std::size_t>(nv, 1, n - 1);
  Split s;
  s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nv));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(nv), order.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

std::vector<EvalResult> predictions_for(const DescriptorPotential& m, const TrainingSet& data,
                                        const std::vector<std::size_t>& idx) {
  std::vector<EvalResult> out;
  for (std::size_t f : idx) {
    auto p = m.predict(data.descriptors(f), true);
    out.push_back({p.energy, std::move(p.forces), p.stress});
  }
  return out;
}

std::vector<LabeledFrame> frames_for(const TrainingSet& data, const std::vector<std::size_t>& idx) {
  std::vector<LabeledFrame> out;
  for (std::size_t f : idx) out.push_back(data.frame(f));
  return out;
}

DescriptorSpec resolve_spec(const std::vector<LabeledFrame>& frames, const FitHyperparams& hp) {
  DescriptorSpec spec = hp.descriptor;
  if (spec.species.empty()) spec.species = species_of(frames);
  for (const auto& s : species_of(frames))
    if (spec.species_index(s) < 0)
      throw InvalidArgument("fit: descriptor species list lacks element " + s);
  spec.validate();
  return spec;
}

FitResult train_on(const TrainingSet& data, const DescriptorSpec& spec, const FitHyperparams& hp,
                   std::uint64_t seed) {
  const Split split = make_split(data.size(), hp.validation_fraction, hp.split_seed);
  auto model = std::make_shared<DescriptorPotential>(spec, seed);
  model->meta.alpha_energy = hp.weights.energy;
  model->meta.alpha_force = hp.weights.force;
  model->meta.alpha_stress = hp.weights.stress;
  const TargetScales scales = initialize_normalization(*model, data, split.train);
  const LossWeights w = scaled_weights(hp.weights, scales);

  const std::size_t S = model->networks.size();
  auto velocity = zero_grads(*model);
  auto best = model->networks;
  FitReport report;
  report.seed = seed;
  report.train_count = split.train.size();
  report.validation_count = split.validation.size();
  double best_val = objective(*model, data, split.validation, w, nullptr);
  report.best_epoch = 0;

  const std::size_t B = hp.batch_size == 0 ? split.train.size()
                                           : std::min<std::size_t>(hp.batch_size, split.train.size());
  std::vector<std::size_t> order = split.train;
  Rng rng(seed, 0xba7c4);
  std::vector<std::size_t> batch;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    const double t = static_cast<double>(epoch - 1) / std::max(1, hp.epochs - 1);
    const double lr = hp.learning_rate *
                      (hp.final_lr_fraction +
                       (1.0 - hp.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
    if (B < order.size())
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += B) {
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + B)));
      auto g = zero_grads(*model);
      epoch_loss += objective(*model, data, batch, w, &g);
      ++batches;
      double norm2 = 0.0;
      for (const auto& ga : g)
        for (double x : ga) norm2 += x * x;
      double clip = 1.0;
      if (hp.grad_clip > 0.0 && norm2 > hp.grad_clip * hp.grad_clip)
        clip = hp.grad_clip / std::sqrt(norm2);
      for (std::size_t a = 0; a < S; ++a) {
        auto& p = model->networks[a].params();
        for (std::size_t k = 0; k < p.size(); ++k) {
          velocity[a][k] = hp.momentum * velocity[a][k] - lr * clip * g[a][k];
          p[k] += velocity[a][k];
        }
      }
    }
    const double val = objective(*model, data, split.validation, w, nullptr);
    if (val < best_val) {
      best_val = val;
      best = model->networks;
      report.best_epoch = epoch;
    }
    report.history.push_back({epoch, epoch_loss / static_cast<double>(batches), val, best_val});
  }
  model->networks = best;
  report.final_loss = objective(*model, data, split.train, w, nullptr);
  report.train = target_errors(frames_for(data, split.train), predictions_for(*model, data, split.train));
  report.validation = target_errors(frames_for(data, split.validation),
                                    predictions_for(*model, data, split.validation));
  return {model, report};
}

}  // namespace

FitResult train(const std::vector<LabeledFrame>& frames, const FitHyperparams& hp,
                std::uint64_t seed) {
  hp.validate();
  if (frames.size() < 10) throw InvalidArgument("fit: at least 10 frames are required");
  const auto spec = resolve_spec(frames, hp);
  const TrainingSet data(spec, frames);
  return train_on(data, spec, hp, seed);
}

EnsembleFitResult train_ensemble(const std::vector<LabeledFrame>& frames, const FitHyperparams& hp,
                                 const std::vector<std::uint64_t>& seeds) {
  hp.validate();
  if (seeds.size() < 2) throw InvalidArgument("train_ensemble: at least 2 seeds are required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw InvalidArgument("train_ensemble: duplicate seeds");
  if (frames.size() < 10) throw InvalidArgument("fit: at least 10 frames are required");
  const auto spec = resolve_spec(frames, hp);
  const TrainingSet data(spec, frames);
  std::vector<FitResult> results(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t k) { results[k] = train_on(data, spec, hp, seeds[k]); });
  EnsembleFitResult out;
  std::vector<DescriptorPtr> members;
  for (auto& r : results) {
    members.push_back(r.model);
    out.reports.push_back(std::move(r.report));
  }
  out.ensemble = std::make_shared<EnsemblePotential>(std::move(members));
  return out;
}

}  // namespace matscreen
