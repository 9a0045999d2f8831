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

#include "matscreen/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "matscreen/elements.hpp"
#include "matscreen/error.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

// ---------------------------------------------------------------------------
// DescriptorSpec
// ---------------------------------------------------------------------------

std::vector<double> DescriptorSpec::centers() const {
  std::vector<double> mu(static_cast<std::size_t>(num_centers));
  for (int k = 0; k < num_centers; ++k)
    mu[k] = num_centers == 1 ? r_min : r_min + (cutoff - r_min) * k / (num_centers - 1);
  return mu;
}

int DescriptorSpec::species_index(const std::string& symbol) const {
  auto it = std::find(species.begin(), species.end(), symbol);
  return it == species.end() ? -1 : static_cast<int>(it - species.begin());
}

void DescriptorSpec::validate() const {
  if (species.empty()) throw InvalidArgument("descriptor: species list is empty");
  for (std::size_t a = 0; a < species.size(); ++a) {
    element(species[a]);
    for (std::size_t b = a + 1; b < species.size(); ++b)
      if (species[a] == species[b]) throw InvalidArgument("descriptor: duplicate species " + species[a]);
  }
  if (num_centers < 1) throw InvalidArgument("descriptor: num_centers must be >= 1");
  if (!(cutoff > 0.0) || !(r_min >= 0.0) || !(r_min < cutoff))
    throw InvalidArgument("descriptor: require 0 <= r_min < cutoff");
  if (!(eta > 0.0)) throw InvalidArgument("descriptor: eta must be positive");
  for (int h : hidden)
    if (h < 1) throw InvalidArgument("descriptor: hidden layer widths must be >= 1");
}

nlohmann::json to_json(const DescriptorSpec& spec) {
  return {{"species", spec.species}, {"num_centers", spec.num_centers},
          {"r_min", spec.r_min},     {"cutoff", spec.cutoff},
          {"eta", spec.eta},         {"hidden", spec.hidden}};
}

DescriptorSpec descriptor_spec_from_json(const nlohmann::json& j) {
  DescriptorSpec s;
  s.species = j.at("species").get<std::vector<std::string>>();
  s.num_centers = j.value("num_centers", s.num_centers);
  s.r_min = j.value("r_min", s.r_min);
  s.cutoff = j.value("cutoff", s.cutoff);
  s.eta = j.value("eta", s.eta);
  if (j.contains("hidden")) s.hidden = j.at("hidden").get<std::vector<int>>();
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// AtomicNetwork
// ---------------------------------------------------------------------------

AtomicNetwork::AtomicNetwork(int inputs, std::vector<int> hidden)
    : inputs_(inputs), hidden_(std::move(hidden)) {
  std::size_t count = 0;
  int prev = inputs_;
  for (int h : hidden_) {
    count += static_cast<std::size_t>(h) * prev + h;
    prev = h;
  }
  count += static_cast<std::size_t>(prev) + 1;
  params_.assign(count, 0.0);
}

void AtomicNetwork::initialize(std::uint64_t seed) {
  Rng rng(seed);
  std::size_t off = 0;
  int prev = inputs_;
  auto fill = [&](int out, int in) {
    const double sd = std::sqrt(2.0 / (in + out));
    for (int k = 0; k < out * in; ++k) params_[off++] = sd * rng.normal();
    for (int k = 0; k < out; ++k) params_[off++] = 0.0;
  };
  for (int h : hidden_) {
    fill(h, prev);
    prev = h;
  }
  fill(1, prev);
}

namespace {

void resize_workspace(AtomicNetwork::Workspace& ws, const std::vector<int>& hidden) {
  const std::size_t L = hidden.size();
  if (ws.h.size() == L) return;
  ws.h.resize(L);
  ws.hdot.resize(L);
  ws.bar_h.resize(L);
  ws.bar_hdot.resize(L);
  ws.tmp.resize(L + 1);
  for (std::size_t l = 0; l < L; ++l) {
    ws.h[l].assign(hidden[l], 0.0);
    ws.hdot[l].assign(hidden[l], 0.0);
    ws.bar_h[l].assign(hidden[l], 0.0);
    ws.bar_hdot[l].assign(hidden[l], 0.0);
  }
}

// out = W in + b, W row-major (rows x cols).
inline void affine(const double* W, const double* b, const double* in, int rows, int cols,
                   double* out) {
  for (int r = 0; r < rows; ++r) {
    const double* w = W + static_cast<std::size_t>(r) * cols;
    double acc = b ? b[r] : 0.0;
    for (int c = 0; c < cols; ++c) acc += w[c] * in[c];
    out[r] = acc;
  }
}

}  // namespace

double AtomicNetwork::forward(const double* x, double* grad_x, Workspace& ws) const {
  resize_workspace(ws, hidden_);
  const std::size_t L = hidden_.size();
  std::vector<std::size_t> offsets(L + 1);
  std::size_t off = 0;
  int prev = inputs_;
  const double* in = x;
  for (std::size_t l = 0; l < L; ++l) {
    const int h = hidden_[l];
    offsets[l] = off;
    affine(&params_[off], &params_[off + static_cast<std::size_t>(h) * prev], in, h, prev,
           ws.h[l].data());
    for (double& v : ws.h[l]) v = std::tanh(v);
    off += static_cast<std::size_t>(h) * prev + h;
    prev = h;
    in = ws.h[l].data();
  }
  offsets[L] = off;
  const double* wo = &params_[off];
  double y = params_[off + prev];
  for (int c = 0; c < prev; ++c) y += wo[c] * in[c];
  if (!grad_x) return y;

  // Reverse sweep for dy/dx; bar_h holds dy/dz of each layer.
  std::vector<double> a(wo, wo + prev);
  for (std::size_t l = L; l-- > 0;) {
    const int h = hidden_[l];
    const int cols = l == 0 ? inputs_ : hidden_[l - 1];
    auto& s = ws.bar_h[l];
    for (int r = 0; r < h; ++r) s[r] = a[r] * (1.0 - ws.h[l][r] * ws.h[l][r]);
    const double* W = &params_[offsets[l]];
    a.assign(cols, 0.0);
    for (int r = 0; r < h; ++r) {
      const double* w = W + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) a[c] += w[c] * s[r];
    }
  }
  std::copy(a.begin(), a.end(), grad_x);
  return y;
}

void AtomicNetwork::backward(const double* x, const double* v, double ybar, double* grad,
                             Workspace& ws) const {
  resize_workspace(ws, hidden_);
  const std::size_t L = hidden_.size();
  std::vector<std::size_t> offsets(L + 1);
  // Forward with tangent: hdot holds dz/dt along v, h holds activations.
  std::size_t off = 0;
  int prev = inputs_;
  const double* in = x;
  const double* din = v;
  for (std::size_t l = 0; l < L; ++l) {
    const int h = hidden_[l];
    offsets[l] = off;
    const double* W = &params_[off];
    affine(W, W + static_cast<std::size_t>(h) * prev, in, h, prev, ws.h[l].data());
    affine(W, nullptr, din, h, prev, ws.hdot[l].data());
    auto& t = ws.tmp[l];
    t.resize(h);
    for (int r = 0; r < h; ++r) {
      ws.h[l][r] = std::tanh(ws.h[l][r]);
      t[r] = (1.0 - ws.h[l][r] * ws.h[l][r]) * ws.hdot[l][r];  // tangent of activation
    }
    off += static_cast<std::size_t>(h) * prev + h;
    prev = h;
    in = ws.h[l].data();
    din = t.data();
  }
  offsets[L] = off;

  // Output layer: T = ybar * y + ydot.
  const double* wo = &params_[off];
  for (int c = 0; c < prev; ++c) grad[off + c] += ybar * in[c] + din[c];
  grad[off + prev] += ybar;
  std::vector<double> bar_a(prev), bar_adot(prev);
  for (int c = 0; c < prev; ++c) {
    bar_a[c] = ybar * wo[c];
    bar_adot[c] = wo[c];
  }

  std::vector<double> bar_z, bar_zdot;
  for (std::size_t l = L; l-- > 0;) {
    const int h = hidden_[l];
    const int cols = l == 0 ? inputs_ : hidden_[l - 1];
    const double* hin = l == 0 ? x : ws.h[l - 1].data();
    const double* dhin = l == 0 ? v : ws.tmp[l - 1].data();
    bar_z.assign(h, 0.0);
    bar_zdot.assign(h, 0.0);
    for (int r = 0; r < h; ++r) {
      const double a = ws.h[l][r];
      const double da = 1.0 - a * a;
      const double zdot = ws.hdot[l][r];
      bar_zdot[r] = bar_adot[r] * da;
      const double bar_act = bar_a[r] - 2.0 * a * zdot * bar_adot[r];
      bar_z[r] = bar_act * da;
    }
    double* gW = grad + offsets[l];
    double* gb = gW + static_cast<std::size_t>(h) * cols;
    for (int r = 0; r < h; ++r) {
      double* g = gW + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) g[c] += bar_z[r] * hin[c] + bar_zdot[r] * dhin[c];
      gb[r] += bar_z[r];
    }
    if (l == 0) break;
    const double* W = &params_[offsets[l]];
    bar_a.assign(cols, 0.0);
    bar_adot.assign(cols, 0.0);
    for (int r = 0; r < h; ++r) {
      const double* w = W + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) {
        bar_a[c] += w[c] * bar_z[r];
        bar_adot[c] += w[c] * bar_zdot[r];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Descriptor frames
// ---------------------------------------------------------------------------

DescriptorFrame prepare_descriptor_frame(const DescriptorSpec& spec, const Structure& s) {
  DescriptorFrame f;
  f.n = s.size();
  f.volume = s.volume();
  f.species.resize(f.n);
  for (std::size_t i = 0; i < f.n; ++i) {
    f.species[i] = spec.species_index(s.species(i));
    if (f.species[i] < 0)
      throw InvalidArgument("descriptor model does not cover element " + s.species(i));
  }
  const std::size_t K = static_cast<std::size_t>(spec.num_centers);
  const std::size_t D = spec.feature_count();
  const auto mu = spec.centers();
  f.features.assign(f.n * D, 0.0);
  const auto nl = build_neighbor_list(s, spec.cutoff);
  f.pairs.reserve(nl.size());
  f.dg.reserve(nl.size() * K);
  const double pi_rc = std::numbers::pi / spec.cutoff;
  for (const auto& p : nl.pairs) {
    const double r = p.distance;
    if (r >= spec.cutoff) continue;
    const double fc = 0.5 * (1.0 + std::cos(pi_rc * r));
    const double dfc = -0.5 * pi_rc * std::sin(pi_rc * r);
    const std::uint32_t block = static_cast<std::uint32_t>(f.species[p.j] * K);
    double* g = &f.features[p.i * D + block];
    for (std::size_t k = 0; k < K; ++k) {
      const double x = r - mu[k];
      const double e = std::exp(-spec.eta * x * x);
      g[k] += e * fc;
      f.dg.push_back(e * (dfc - 2.0 * spec.eta * x * fc));
    }
    f.pairs.push_back({static_cast<std::uint32_t>(p.i), static_cast<std::uint32_t>(p.j), block, r,
                       p.displacement});
  }
  return f;
}

// ---------------------------------------------------------------------------
// DescriptorPotential
// ---------------------------------------------------------------------------

DescriptorPotential::DescriptorPotential(DescriptorSpec spec, std::uint64_t init_seed)
    : spec_(std::move(spec)) {
  spec_.validate();
  const std::size_t S = spec_.species.size();
  const std::size_t D = spec_.feature_count();
  feature_mean.assign(S, std::vector<double>(D, 0.0));
  feature_scale.assign(S, std::vector<double>(D, 1.0));
  species_energy.assign(S, 0.0);
  meta.seed = init_seed;
  for (std::size_t a = 0; a < S; ++a) {
    networks.emplace_back(static_cast<int>(D), spec_.hidden);
    networks.back().initialize(mix_seed(init_seed, a));
  }
}

DescriptorPotential::Prediction DescriptorPotential::predict(const DescriptorFrame& frame,
                                                             bool with_forces) const {
  const std::size_t D = spec_.feature_count();
  const std::size_t K = static_cast<std::size_t>(spec_.num_centers);
  Prediction pred;
  pred.dE_dG.assign(frame.n * D, 0.0);
  AtomicNetwork::Workspace ws;
  std::vector<double> x(D), gx(D);
  for (std::size_t i = 0; i < frame.n; ++i) {
    const int a = frame.species[i];
    const double* G = &frame.features[i * D];
    const auto& mean = feature_mean[a];
    const auto& scale = feature_scale[a];
    for (std::size_t d = 0; d < D; ++d) x[d] = (G[d] - mean[d]) / scale[d];
    const double y = networks[a].forward(x.data(), with_forces ? gx.data() : nullptr, ws);
    pred.energy += species_energy[a] + energy_scale * y;
    if (with_forces)
      for (std::size_t d = 0; d < D; ++d) pred.dE_dG[i * D + d] = energy_scale * gx[d] / scale[d];
  }
  if (!with_forces) return pred;

  ForceAccumulator acc(frame.n);
  for (std::size_t p = 0; p < frame.pairs.size(); ++p) {
    const auto& pr = frame.pairs[p];
    const double* phi = &pred.dE_dG[pr.i * D + pr.block];
    const double* dg = &frame.dg[p * K];
    double c = 0.0;
    for (std::size_t k = 0; k < K; ++k) c += phi[k] * dg[k];
    acc.add(pr.i, pr.j, pr.d, (c / pr.r) * pr.d);
  }
  EvalResult r = std::move(acc).finish(pred.energy, frame.volume);
  pred.forces = std::move(r.forces);
  pred.stress = r.stress;
  return pred;
}

void DescriptorPotential::accumulate_gradient(const DescriptorFrame& frame, const Prediction&,
                                              double energy_adjoint,
                                              const std::vector<Vec3>& force_adjoint,
                                              const Mat3& stress_adjoint,
                                              std::vector<std::vector<double>>& grads) const {
  const std::size_t D = spec_.feature_count();
  const std::size_t K = static_cast<std::size_t>(spec_.num_centers);
  std::vector<double> v(frame.n * D, 0.0);
  const bool forces = !force_adjoint.empty();
  const bool stress = stress_adjoint.squaredNorm() != 0.0;
  if (forces || stress) {
    const Mat3 sym = 0.5 * (stress_adjoint + stress_adjoint.transpose()) / frame.volume;
    for (std::size_t p = 0; p < frame.pairs.size(); ++p) {
      const auto& pr = frame.pairs[p];
      double w = 0.0;
      if (forces) w += (force_adjoint[pr.i] - force_adjoint[pr.j]).dot(pr.d);
      if (stress) w += pr.d.dot(sym * pr.d);
      if (w == 0.0) continue;
      w /= pr.r;
      const double* dg = &frame.dg[p * K];
      double* vi = &v[pr.i * D + pr.block];
      for (std::size_t k = 0; k < K; ++k) vi[k] += w * dg[k];
    }
  }

  AtomicNetwork::Workspace ws;
  std::vector<double> x(D), vhat(D);
  const double ybar = energy_adjoint * energy_scale;
  for (std::size_t i = 0; i < frame.n; ++i) {
    const int a = frame.species[i];
    const double* G = &frame.features[i * D];
    for (std::size_t d = 0; d < D; ++d) {
      x[d] = (G[d] - feature_mean[a][d]) / feature_scale[a][d];
      vhat[d] = v[i * D + d] * energy_scale / feature_scale[a][d];
    }
    networks[a].backward(x.data(), vhat.data(), ybar, grads[a].data(), ws);
  }
}

EvalResult DescriptorPotential::evaluate(const Structure& s) const {
  const auto frame = prepare_descriptor_frame(spec_, s);
  auto pred = predict(frame, true);
  EvalResult r;
  r.energy = pred.energy;
  r.forces = std::move(pred.forces);
  r.stress = pred.stress;
  return r;
}

double DescriptorPotential::energy(const Structure& s) const {
  return predict(prepare_descriptor_frame(spec_, s), false).energy;
}

nlohmann::json DescriptorPotential::to_json() const {
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& net : networks) nets.push_back(net.params());
  return {{"spec", matscreen::to_json(spec_)},
          {"feature_mean", feature_mean},
          {"feature_scale", feature_scale},
          {"species_energy", species_energy},
          {"energy_scale", energy_scale},
          {"networks", nets},
          {"meta",
           {{"seed", meta.seed},
            {"alpha_energy", meta.alpha_energy},
            {"alpha_force", meta.alpha_force},
            {"alpha_stress", meta.alpha_stress}}}};
}

std::shared_ptr<DescriptorPotential> DescriptorPotential::from_json(const nlohmann::json& j) {
  auto spec = descriptor_spec_from_json(j.at("spec"));
  auto p = std::make_shared<DescriptorPotential>(spec, 0);
  const std::size_t S = spec.species.size();
  const std::size_t D = spec.feature_count();
  p->feature_mean = j.at("feature_mean").get<std::vector<std::vector<double>>>();
  p->feature_scale = j.at("feature_scale").get<std::vector<std::vector<double>>>();
  p->species_energy = j.at("species_energy").get<std::vector<double>>();
  p->energy_scale = j.at("energy_scale").get<double>();
  auto nets = j.at("networks").get<std::vector<std::vector<double>>>();
  if (p->feature_mean.size() != S || p->feature_scale.size() != S || p->species_energy.size() != S ||
      nets.size() != S)
    throw ParseError("descriptor checkpoint: per-species arrays do not match species count");
  for (std::size_t a = 0; a < S; ++a) {
    if (p->feature_mean[a].size() != D || p->feature_scale[a].size() != D)
      throw ParseError("descriptor checkpoint: feature normalization has wrong length");
    if (nets[a].size() != p->networks[a].parameter_count())
      throw ParseError("descriptor checkpoint: network " + spec.species[a] + " has wrong size");
    p->networks[a].params() = std::move(nets[a]);
  }
  if (j.contains("meta")) {
    const auto& m = j.at("meta");
    p->meta.seed = m.value("seed", std::uint64_t{0});
    p->meta.alpha_energy = m.value("alpha_energy", 1.0);
    p->meta.alpha_force = m.value("alpha_force", 10.0);
    p->meta.alpha_stress = m.value("alpha_stress", 0.1);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

EnsemblePotential::EnsemblePotential(std::vector<DescriptorPtr> members)
    : members_(std::move(members)) {
  if (members_.size() < 2) throw InvalidArgument("an ensemble needs at least 2 members");
  for (const auto& m : members_)
    if (!m) throw InvalidArgument("ensemble member is null");
}

double EnsemblePotential::cutoff() const {
  double rc = 0.0;
  for (const auto& m : members_) rc = std::max(rc, m->cutoff());
  return rc;
}

bool EnsemblePotential::covers(const std::string& symbol) const {
  return std::all_of(members_.begin(), members_.end(),
                     [&](const DescriptorPtr& m) { return m->covers(symbol); });
}

std::vector<EvalResult> EnsemblePotential::member_results(const Structure& s) const {
  std::vector<EvalResult> out;
  out.reserve(members_.size());
  const bool shared = std::all_of(members_.begin(), members_.end(), [&](const DescriptorPtr& m) {
    return m->spec() == members_.front()->spec();
  });
  if (shared) {
    const auto frame = prepare_descriptor_frame(members_.front()->spec(), s);
    for (const auto& m : members_) {
      auto pred = m->predict(frame, true);
      out.push_back({pred.energy, std::move(pred.forces), pred.stress});
    }
  } else {
    for (const auto& m : members_) out.push_back(m->evaluate(s));
  }
  return out;
}

EvalResult EnsemblePotential::evaluate(const Structure& s) const {
  return ensemble_stats(member_results(s), s.size()).mean;
}

nlohmann::json EnsemblePotential::to_json() const {
  nlohmann::json m = nlohmann::json::array();
  for (const auto& p : members_) m.push_back(p->to_json());
  return {{"members", m}};
}

std::shared_ptr<EnsemblePotential> EnsemblePotential::from_json(const nlohmann::json& j) {
  std::vector<DescriptorPtr> members;
  for (const auto& m : j.at("members")) members.push_back(DescriptorPotential::from_json(m));
  return std::make_shared<EnsemblePotential>(std::move(members));
}

EnsembleStats ensemble_stats(const std::vector<EvalResult>& members, std::size_t natoms) {
  if (members.empty()) throw InvalidArgument("ensemble_stats: no members");
  const double k = static_cast<double>(members.size());
  const double n = static_cast<double>(natoms);
  EnsembleStats st;
  st.mean.forces.assign(natoms, Vec3::Zero());
  for (const auto& m : members) {
    if (m.forces.size() != natoms) throw InvalidArgument("ensemble_stats: force count mismatch");
    st.mean.energy += m.energy / k;
    st.mean.stress += m.stress / k;
    for (std::size_t i = 0; i < natoms; ++i) st.mean.forces[i] += m.forces[i] / k;
  }
  double ev = 0.0;
  for (const auto& m : members) {
    const double d = (m.energy - st.mean.energy) / n;
    ev += d * d;
  }
  st.energy_std = std::sqrt(ev / k);
  for (std::size_t i = 0; i < natoms; ++i) {
    double mean = 0.0;
    for (const auto& m : members) mean += m.forces[i].norm() / k;
    double var = 0.0;
    for (const auto& m : members) {
      const double d = m.forces[i].norm() - mean;
      var += d * d;
    }
    st.force_std = std::max(st.force_std, std::sqrt(var / k));
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double var = 0.0;
      for (const auto& m : members) {
        const double d = m.stress(a, b) - st.mean.stress(a, b);
        var += d * d;
      }
      st.stress_std = std::max(st.stress_std, std::sqrt(var / k));
    }
  return st;
}

EnsembleStats ensemble_stats(const EnsemblePotential& e, const Structure& s) {
  e.check_coverage(s);
  return ensemble_stats(e.member_results(s), s.size());
}

}  // namespace matscreen
