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

#include "matscreen/explore.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "matscreen/elements.hpp"
#include "matscreen/error.hpp"
#include "matscreen/units.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

int GeneratorSpec::atom_count() const {
  int n = 0;
  for (const auto& [sym, c] : composition) n += c;
  return n;
}

double GeneratorSpec::min_distance(const std::string& a, const std::string& b) const {
  if (auto it = min_distance_overrides.find(std::minmax(a, b)); it != min_distance_overrides.end())
    return it->second;
  return min_distance_scale * (element(a).covalent_radius + element(b).covalent_radius);
}

void GeneratorSpec::validate() const {
  if (composition.empty()) throw InvalidArgument("generator: composition is empty");
  std::set<std::string> seen;
  for (const auto& [sym, c] : composition) {
    element(sym);
    if (!seen.insert(sym).second) throw InvalidArgument("generator: element " + sym + " listed twice");
    if (c < 1) throw InvalidArgument("generator: count of " + sym + " must be >= 1");
  }
  if (atom_count() > max_atoms)
    throw InvalidArgument("generator: composition has " + std::to_string(atom_count()) +
                          " atoms, above max_atoms " + std::to_string(max_atoms));
  if (!(volume_min > 0.0 && volume_max >= volume_min))
    throw InvalidArgument("generator: volume range must be positive and ordered");
  if (!(angle_min > 0.0 && angle_max < 180.0 && angle_max >= angle_min))
    throw InvalidArgument("generator: angle range must lie inside (0, 180) and be ordered");
  if (!(length_ratio_max >= 1.0)) throw InvalidArgument("generator: length_ratio_max must be >= 1");
  if (!(min_distance_scale > 0.0)) throw InvalidArgument("generator: min_distance_scale must be positive");
  for (const auto& [k, v] : min_distance_overrides)
    if (!(v > 0.0)) throw InvalidArgument("generator: minimum distances must be positive");
  if (max_attempts < 1 || placement_attempts < 1) throw InvalidArgument("generator: attempt caps must be >= 1");
}

nlohmann::json to_json(const GeneratorSpec& g) {
  nlohmann::json comp = nlohmann::json::array();
  for (const auto& [sym, c] : g.composition) comp.push_back({sym, c});
  nlohmann::json md = nlohmann::json::array();
  for (const auto& [k, v] : g.min_distance_overrides) md.push_back({k.first, k.second, v});
  return {{"composition", comp},
          {"max_atoms", g.max_atoms},
          {"volume_per_atom", {g.volume_min, g.volume_max}},
          {"angle_range", {g.angle_min, g.angle_max}},
          {"length_ratio_max", g.length_ratio_max},
          {"min_distance_scale", g.min_distance_scale},
          {"min_distance", md},
          {"max_attempts", g.max_attempts},
          {"placement_attempts", g.placement_attempts},
          {"seed", g.seed}};
}

GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  GeneratorSpec g;
  const auto& comp = j.at("composition");
  if (comp.is_object()) {
    // Object keys are unordered in JSON; sort by element for determinism.
    for (const auto& [sym, c] : comp.items()) g.composition.emplace_back(sym, c.get<int>());
  } else {
    for (const auto& e : comp) g.composition.emplace_back(e.at(0).get<std::string>(), e.at(1).get<int>());
  }
  g.max_atoms = j.value("max_atoms", g.max_atoms);
  if (j.contains("volume_per_atom")) {
    g.volume_min = j.at("volume_per_atom").at(0).get<double>();
    g.volume_max = j.at("volume_per_atom").at(1).get<double>();
  }
  if (j.contains("angle_range")) {
    g.angle_min = j.at("angle_range").at(0).get<double>();
    g.angle_max = j.at("angle_range").at(1).get<double>();
  }
  g.length_ratio_max = j.value("length_ratio_max", g.length_ratio_max);
  g.min_distance_scale = j.value("min_distance_scale", g.min_distance_scale);
  if (j.contains("min_distance"))
    for (const auto& e : j.at("min_distance"))
      g.min_distance_overrides[std::minmax(e.at(0).get<std::string>(), e.at(1).get<std::string>())] =
          e.at(2).get<double>();
  g.max_attempts = j.value("max_attempts", g.max_attempts);
  g.placement_attempts = j.value("placement_attempts", g.placement_attempts);
  g.seed = j.value("seed", g.seed);
  g.validate();
  return g;
}

namespace {

Mat3 lattice_from_parameters(double a, double b, double c, double al, double be, double ga) {
  const double ca = std::cos(al), cb = std::cos(be), cg = std::cos(ga), sg = std::sin(ga);
  const double cx = cb;
  const double cy = (ca - cb * cg) / sg;
  const double cz2 = 1.0 - cx * cx - cy * cy;
  if (cz2 <= 0.0) return Mat3::Zero();
  Mat3 L;
  L << a, 0.0, 0.0,
       b * cg, b * sg, 0.0,
       c * cx, c * cy, c * std::sqrt(cz2);
  return L;
}

/// Shortest periodic distance over the 27 nearest images of the wrapped
/// fractional difference.
double near_image_distance(const Mat3& L, const Vec3& fa, const Vec3& fb) {
  Vec3 d = fb - fa;
  for (int k = 0; k < 3; ++k) d[k] -= std::round(d[k]);
  double best = std::numeric_limits<double>::infinity();
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = -1; k <= 1; ++k) {
        const Vec3 f = d + Vec3(i, j, k);
        best = std::min(best, (f.transpose() * L).norm());
      }
  return best;
}

}  // namespace

GenerationResult generate_candidates(const GeneratorSpec& spec, std::size_t count,
                                     std::size_t first_index) {
  spec.validate();
  const int n = spec.atom_count();
  std::vector<std::string> species;
  for (const auto& [sym, c] : spec.composition)
    for (int k = 0; k < c; ++k) species.push_back(sym);
  // Pair minimum distances by species index for the hot loop.
  std::vector<double> dmin(static_cast<std::size_t>(n) * n);
  double self_min = 0.0;
  for (int i = 0; i < n; ++i) {
    self_min = std::max(self_min, spec.min_distance(species[i], species[i]));
    for (int j = 0; j < n; ++j) dmin[i * n + j] = spec.min_distance(species[i], species[j]);
  }

  const double deg = units::kPi / 180.0;
  std::vector<Structure> out(count);
  std::vector<GenerationStats> stats(count);
  parallel_for(count, [&](std::size_t k) {
    const std::size_t index = first_index + k;
    Rng rng(spec.seed, index);
    GenerationStats& st = stats[k];
    for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
      ++st.lattice_draws;
      const double al = rng.uniform(spec.angle_min, spec.angle_max) * deg;
      const double be = rng.uniform(spec.angle_min, spec.angle_max) * deg;
      const double ga = rng.uniform(spec.angle_min, spec.angle_max) * deg;
      const double lr = std::log(spec.length_ratio_max);
      const double rb = std::exp(rng.uniform(-lr, lr));
      const double rc = std::exp(rng.uniform(-lr, lr));
      const double vpa = rng.uniform(spec.volume_min, spec.volume_max);
      const double lo = std::min({1.0, rb, rc}), hi = std::max({1.0, rb, rc});
      if (hi / lo > spec.length_ratio_max) continue;
      Mat3 L = lattice_from_parameters(1.0, rb, rc, al, be, ga);
      const double v1 = L.determinant();
      if (!(v1 > 1e-3)) continue;
      L *= std::cbrt(vpa * n / v1);
      const Vec3 w = (L.inverse().transpose().rowwise().norm()).cwiseInverse();
      if (w.minCoeff() < self_min) continue;

      std::vector<Vec3> frac;
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        bool placed = false;
        for (int t = 0; t < spec.placement_attempts; ++t) {
          ++st.placement_draws;
          const Vec3 f(rng.uniform(), rng.uniform(), rng.uniform());
          bool clear = true;
          for (int j = 0; j < i && clear; ++j)
            clear = near_image_distance(L, frac[j], f) >= dmin[i * n + j];
          if (clear) {
            frac.push_back(f);
            placed = true;
            break;
          }
        }
        ok = placed;
      }
      if (!ok) continue;
      Structure s(species, frac, L,
                  {{"id", "gen-" + std::to_string(spec.seed) + "-" + std::to_string(index)}});
      bool valid = true;
      for (int i = 0; i < n && valid; ++i)
        for (int j = i + 1; j < n && valid; ++j)
          valid = min_image_distance(s, i, j) >= dmin[i * n + j];
      if (!valid) continue;
      out[k] = std::move(s);
      st.accepted = 1;
      return;
    }
    throw RuntimeError("generator: attempt cap exhausted for structure " + std::to_string(index) +
                       " (acceptance rate " + format_double(st.acceptance_rate()) + ")");
  });

  GenerationResult res;
  for (const auto& st : stats) {
    res.stats.accepted += st.accepted;
    res.stats.lattice_draws += st.lattice_draws;
    res.stats.placement_draws += st.placement_draws;
  }
  std::set<std::string> hashes;
  for (const auto& s : out)
    if (!hashes.insert(s.content_hash()).second)
      throw RuntimeError("generator: produced two identical structures");
  res.structures = std::move(out);
  return res;
}

// ---------------------------------------------------------------------------
// Substitutions
// ---------------------------------------------------------------------------

std::size_t substitution_size(std::size_t site_count, double concentration) {
  if (!(concentration > 0.0 && concentration <= 1.0))
    throw InvalidArgument("substitution: concentration must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::llround(concentration * static_cast<double>(site_count)));
  if (k < 1)
    throw InvalidArgument("substitution: concentration " + format_double(concentration) + " of " +
                          std::to_string(site_count) + " sites rounds to zero substitutions");
  return k;
}

namespace {

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace

std::vector<Substitution> enumerate_substitutions(const SubstitutionSpec& spec) {
  element(spec.dopant);
  if (spec.dopant == spec.site) throw InvalidArgument("substitution: dopant equals the target species");
  if (spec.occupations < 1) throw InvalidArgument("substitution: occupations must be >= 1");
  std::vector<std::size_t> sites;
  for (std::size_t i = 0; i < spec.host.size(); ++i)
    if (spec.host.species(i) == spec.site) sites.push_back(i);
  if (sites.empty()) throw InvalidArgument("substitution: host has no " + spec.site + " sites");
  const std::size_t M = sites.size();
  const std::size_t k = substitution_size(M, spec.concentration);
  const double total = binomial(M, k);
  if (static_cast<double>(spec.occupations) > total)
    throw InvalidArgument("substitution: " + std::to_string(spec.occupations) + " occupations requested but only " +
                          format_double(total) + " distinct ones exist");

  std::vector<std::vector<std::size_t>> subsets;  // positions within `sites`
  const std::size_t want = static_cast<std::size_t>(spec.occupations);
  Rng rng(spec.seed, 0x5b);
  if (total <= 20000.0) {
    std::vector<std::size_t> c(k);
    for (std::size_t i = 0; i < k; ++i) c[i] = i;
    std::vector<std::vector<std::size_t>> all;
    while (true) {
      all.push_back(c);
      std::size_t i = k;
      while (i > 0 && c[i - 1] == M - k + i - 1) --i;
      if (i == 0) break;
      ++c[i - 1];
      for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
    }
    if (want < all.size())
      for (std::size_t i = 0; i < want; ++i) std::swap(all[i], all[i + rng.index(all.size() - i)]);
    all.resize(want);
    subsets = std::move(all);
  } else {
    std::set<std::vector<std::size_t>> seen;
    while (subsets.size() < want) {
      std::vector<std::size_t> pool(M);
      for (std::size_t i = 0; i < M; ++i) pool[i] = i;
      for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.index(M - i)]);
      std::vector<std::size_t> pick(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(pick.begin(), pick.end());
      if (seen.insert(pick).second) subsets.push_back(std::move(pick));
    }
  }
  std::sort(subsets.begin(), subsets.end());

  std::vector<Substitution> out;
  for (const auto& sub : subsets) {
    Substitution s;
    auto species = spec.host.species();
    std::string label;
    for (std::size_t pos : sub) {
      s.sites.push_back(sites[pos]);
      species[sites[pos]] = spec.dopant;
      label += (label.empty() ? "" : ",") + std::to_string(sites[pos]);
    }
    s.structure = spec.host.with_species(std::move(species))
                      .with_tag("dopant", spec.dopant)
                      .with_tag("site", spec.site)
                      .with_tag("sites", label);
    out.push_back(std::move(s));
  }
  return out;
}

std::string stabilization_bucket(double ddg) {
  if (ddg < 0.0) return "blue";
  if (ddg > 0.0) return "red";
  return "white";
}

StabilizationRow rank_stabilization(const FormationFreeEnergy& host,
                                    const std::vector<FormationFreeEnergy>& doped,
                                    const std::string& dopant, const std::string& site) {
  if (doped.empty()) throw InvalidArgument("rank_stabilization: no doped occupations");
  StabilizationRow row;
  row.dopant = dopant;
  row.site = site;
  row.temperature = host.temperature;
  for (std::size_t k = 0; k < doped.size(); ++k) {
    if (doped[k].temperature != host.temperature || doped[k].pressure != host.pressure)
      throw InvalidArgument("rank_stabilization: temperature or pressure differs from the host");
    const double d = doped[k].value - host.value;
    if (k == 0 || d < row.ddg) {
      row.ddg = d;
      row.best_occupation = k;
    }
  }
  row.bucket = stabilization_bucket(row.ddg);
  return row;
}

}  // namespace matscreen
