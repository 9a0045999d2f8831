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
#include "matscreen/error.hpp"
#include "matscreen/fit.hpp"

using namespace matscreen;
using namespace matscreen::testing;

namespace {

DescriptorSpec small_spec() {
  DescriptorSpec spec;
  spec.species = {"Ca", "O"};
  spec.hidden = {8, 8};
  return spec;
}

std::shared_ptr<DescriptorPotential> teacher() {
  auto t = std::make_shared<DescriptorPotential>(small_spec(), 77);
  t->energy_scale = 0.05;
  t->species_energy = {-2.0, -1.0};
  return t;
}

std::vector<Structure> physical(std::size_t count, std::uint64_t seed, double vmin = 12, double vmax = 22) {
  GeneratorSpec g;
  g.composition = {{"Ca", 2}, {"O", 2}};
  g.seed = seed;
  g.min_distance_scale = 0.85;
  g.volume_min = vmin;
  g.volume_max = vmax;
  return generate_candidates(g, count).structures;
}

std::vector<LabeledFrame> labeled(const Potential& p, std::size_t count, std::uint64_t seed) {
  std::vector<LabeledFrame> out;
  for (const auto& s : physical(count, seed)) out.push_back(oracle_label(p, s));
  return out;
}

// Loss weights divided by the squared target spreads, as in training.
LossWeights normalized(const TargetScales& ts) {
  return {1.0 / (ts.energy * ts.energy), 10.0 / (ts.force * ts.force), 0.1 / (ts.stress * ts.stress)};
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("loss examples") {
  LabeledFrame f;
  f.structure = Structure({"Ca"}, {Vec3::Zero()}, cubic(4.0));
  f.energy = -1.0;
  f.forces = {Vec3::Zero()};
  EvalResult exact;
  exact.energy = -1.0;
  exact.forces = {Vec3::Zero()};
  CHECK(loss({f}, {exact}, {}) == 0.0);

  EvalResult off = exact;
  off.energy = -0.9;
  off.forces = {Vec3(0.1, 0, 0)};
  CHECK(loss({f}, {off}, {1.0, 1.0, 0.0}) == doctest::Approx(0.02).epsilon(1e-12));

  // A stress residual is ignored when its weight is zero.
  EvalResult stressed = off;
  stressed.stress = Mat3::Identity();
  CHECK(loss({f}, {stressed}, {1.0, 1.0, 0.0}) == loss({f}, {off}, {1.0, 1.0, 0.0}));
  CHECK(loss({f}, {stressed}, {1.0, 1.0, 0.5}) == doctest::Approx(0.02 + 1.5).epsilon(1e-12));
  CHECK_THROWS_AS(loss({f}, {}, {}), InvalidArgument);
}

TEST_CASE("analytic parameter gradient matches finite differences") {
  const auto frames = labeled(*oracle_potential({}), 4, 3);
  const auto spec = small_spec();
  TrainingSet data(spec, frames);
  DescriptorPotential model(spec, 5);
  const std::vector<std::size_t> idx{0, 1, 2, 3};
  const LossWeights w = normalized(initialize_normalization(model, data, idx));
  std::vector<std::vector<double>> grads;
  objective(model, data, idx, w, &grads);
  double worst = 0.0;
  for (std::size_t a = 0; a < model.networks.size(); ++a) {
    auto& params = model.networks[a].params();
    for (std::size_t k = 0; k < params.size(); k += 7) {
      const double keep = params[k], h = 1e-5;
      params[k] = keep + h;
      const double lp = objective(model, data, idx, w, nullptr);
      params[k] = keep - h;
      const double lm = objective(model, data, idx, w, nullptr);
      params[k] = keep;
      const double fd = (lp - lm) / (2 * h);
      const double g = grads[a][k];
      if (std::abs(fd) > 1e-6) worst = std::max(worst, std::abs(g - fd) / std::abs(fd));
      else CHECK(std::abs(g - fd) < 1e-8);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("full-batch gradient descent with a small step never increases the loss") {
  const auto frames = labeled(*oracle_potential({}), 6, 9);
  const auto spec = small_spec();
  TrainingSet data(spec, frames);
  DescriptorPotential model(spec, 2);
  std::vector<std::size_t> idx(frames.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const LossWeights w = normalized(initialize_normalization(model, data, idx));
  std::vector<std::vector<double>> grads;
  double prev = objective(model, data, idx, w, &grads);
  for (int step = 0; step < 50; ++step) {
    for (std::size_t a = 0; a < model.networks.size(); ++a)
      for (std::size_t k = 0; k < grads[a].size(); ++k) model.networks[a].params()[k] -= 1e-4 * grads[a][k];
    grads.clear();
    const double cur = objective(model, data, idx, w, &grads);
    REQUIRE(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("training is deterministic per seed") {
  const auto frames = labeled(*oracle_potential({}), 20, 4);
  FitHyperparams hp;
  hp.epochs = 20;
  hp.descriptor = small_spec();
  const auto a = train(frames, hp, 1), b = train(frames, hp, 1), c = train(frames, hp, 2);
  CHECK(save_potential(*a.model) == save_potential(*b.model));
  CHECK(save_potential(*a.model) != save_potential(*c.model));
  CHECK(a.report.train_count + a.report.validation_count == frames.size());
  CHECK(a.report.validation_count == 4);
  // Best validation loss in the history never increases.
  for (std::size_t k = 1; k < a.report.history.size(); ++k)
    CHECK(a.report.history[k].best_validation_loss <= a.report.history[k - 1].best_validation_loss);
}

TEST_CASE("a target inside the model family is learned") {
  const auto t = teacher();
  const auto frames = labeled(*t, 60, 12);
  FitHyperparams hp;
  hp.descriptor = small_spec();
  hp.epochs = 400;
  const auto a = train(frames, hp, 1), b = train(frames, hp, 2);
  MESSAGE("validation MAE (meV/atom): " << 1e3 * a.report.validation.energy_mae << ", "
                                        << 1e3 * b.report.validation.energy_mae);
  CHECK(a.report.validation.energy_mae < 1e-3);
  const double ma = a.report.validation.energy_mae, mb = b.report.validation.energy_mae;
  CHECK(std::max(ma, mb) <= 2.0 * std::min(ma, mb));
}

TEST_CASE("ensembles") {
  const auto frames = labeled(*oracle_potential({}), 30, 6);
  FitHyperparams hp;
  hp.descriptor = small_spec();
  hp.epochs = 60;
  CHECK_THROWS_AS(train_ensemble(frames, hp, {1}), InvalidArgument);
  CHECK_THROWS_AS(train_ensemble(frames, hp, {1, 1}), InvalidArgument);
  const auto e = train_ensemble(frames, hp, {1, 2, 3, 4});
  REQUIRE(e.ensemble->size() == 4);
  for (const auto& r : e.reports) CHECK(r.train_count == e.reports[0].train_count);

  // Spread is larger away from the training distribution.
  const auto inside = physical(100, 101);
  const auto outside = physical(100, 102, 40, 60);
  double si = 0.0, so = 0.0;
  for (const auto& s : inside) si += ensemble_stats(*e.ensemble, s).energy_std;
  for (const auto& s : outside) so += ensemble_stats(*e.ensemble, s).energy_std;
  MESSAGE("mean energy std inside " << si / 100 << ", outside " << so / 100);
  CHECK(si < so);
}

TEST_CASE("species order and validation") {
  const auto frames = labeled(*oracle_potential({}), 3, 1);
  CHECK(species_of(frames).size() == 2);
  FitHyperparams hp;
  hp.validation_fraction = 1.0;
  CHECK_THROWS_AS(hp.validate(), InvalidArgument);
  FitHyperparams ok;
  CHECK_THROWS_AS(train(frames, ok, 1), InvalidArgument);
}

}  // TEST_SUITE
