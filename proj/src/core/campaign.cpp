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

#include "matscreen/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "matscreen/error.hpp"
#include "matscreen/io.hpp"
#include "matscreen/md.hpp"
#include "matscreen/phonon.hpp"
#include "matscreen/relax.hpp"
#include "matscreen/util.hpp"

namespace fs = std::filesystem;

namespace matscreen {

// ---------------------------------------------------------------------------
// Free energies
// ---------------------------------------------------------------------------

FormationFreeEnergyCurve formation_free_energy(const Structure& s, const Potential& p,
                                               const std::vector<double>& temperatures, double pressure,
                                               const std::map<std::string, double>& references,
                                               const PhononSettings& settings) {
  p.check_coverage(s);
  FormationFreeEnergyCurve out;
  out.energy = p.compute(s).energy;
  out.formation_energy = compute_formation_energy(out.energy, s, references);
  out.temperatures = temperatures;
  const IVec3 rep = repeat_for_width(s, settings.supercell_width);
  const ForceConstants fc = force_constants(s, p, rep, settings.amplitude);
  PhononResult ph = dispersion(fc, monkhorst_pack(settings.mesh));
  out.imaginary = ph.has_imaginary();
  out.min_frequency = ph.frequencies.minCoeff();
  if (out.imaginary) {
    // Flagged candidates still get a value from their real modes only.
    ph.frequencies = ph.frequencies.cwiseMax(0.0);
    ph.imaginary_q.clear();
  }
  const double pv = pressure * s.volume();
  for (double T : temperatures)
    out.dg.push_back(compute_formation_energy(out.energy + helmholtz_free_energy(ph, T) + pv, s, references));
  return out;
}

// ---------------------------------------------------------------------------
// Cost accounting
// ---------------------------------------------------------------------------

void CostLedger::validate() const {
  if (oracle_seconds < 0.0 || surrogate_seconds < 0.0 || training_seconds < 0.0)
    throw InvalidArgument("cost ledger: times must be non-negative");
}

CostLedger& CostLedger::operator+=(const CostLedger& o) {
  oracle_evaluations += o.oracle_evaluations;
  surrogate_evaluations += o.surrogate_evaluations;
  training_runs += o.training_runs;
  training_labels += o.training_labels;
  structures_screened += o.structures_screened;
  oracle_seconds += o.oracle_seconds;
  surrogate_seconds += o.surrogate_seconds;
  training_seconds += o.training_seconds;
  return *this;
}

nlohmann::json to_json(const CostLedger& l) {
  return {{"oracle_evaluations", l.oracle_evaluations}, {"surrogate_evaluations", l.surrogate_evaluations},
          {"training_runs", l.training_runs},           {"training_labels", l.training_labels},
          {"structures_screened", l.structures_screened}, {"oracle_seconds", l.oracle_seconds},
          {"surrogate_seconds", l.surrogate_seconds},   {"training_seconds", l.training_seconds}};
}

CostLedger cost_ledger_from_json(const nlohmann::json& j) {
  CostLedger l;
  l.oracle_evaluations = j.value("oracle_evaluations", l.oracle_evaluations);
  l.surrogate_evaluations = j.value("surrogate_evaluations", l.surrogate_evaluations);
  l.training_runs = j.value("training_runs", l.training_runs);
  l.training_labels = j.value("training_labels", l.training_labels);
  l.structures_screened = j.value("structures_screened", l.structures_screened);
  l.oracle_seconds = j.value("oracle_seconds", l.oracle_seconds);
  l.surrogate_seconds = j.value("surrogate_seconds", l.surrogate_seconds);
  l.training_seconds = j.value("training_seconds", l.training_seconds);
  l.validate();
  return l;
}

CostModel cost_model(const CostLedger& ledger, const CostSettings& settings) {
  ledger.validate();
  CostModel m;
  const double screened = static_cast<double>(ledger.structures_screened);
  const double evals_per_structure =
      screened > 0.0 ? static_cast<double>(ledger.surrogate_evaluations) / screened : 0.0;
  if (settings.surrogate_cost) {
    m.surrogate_cost = *settings.surrogate_cost;
  } else if (screened > 0.0) {
    m.surrogate_cost = ledger.surrogate_seconds / screened;
  } else {
    throw InvalidArgument("cost: missing surrogate cost (no measured screening and no cost.surrogate_cost)");
  }
  if (settings.oracle_cost) {
    m.oracle_cost = *settings.oracle_cost;
  } else if (ledger.oracle_evaluations > 0 && evals_per_structure > 0.0) {
    m.oracle_cost = evals_per_structure * ledger.oracle_seconds / static_cast<double>(ledger.oracle_evaluations);
  } else {
    throw InvalidArgument("cost: missing oracle cost model (no measured oracle timings and no cost.oracle_cost)");
  }
  m.training_cost = settings.training_cost ? *settings.training_cost : ledger.training_seconds;
  m.training_labels = settings.training_labels ? *settings.training_labels : ledger.training_labels;
  if (m.oracle_cost < 0.0 || m.surrogate_cost < 0.0 || m.training_cost < 0.0)
    throw InvalidArgument("cost: costs must be non-negative");
  return m;
}

CostReport cost_report(const CostModel& m, std::size_t scan_points) {
  if (m.oracle_cost < 0.0 || m.surrogate_cost < 0.0 || m.training_cost < 0.0)
    throw InvalidArgument("cost: costs must be non-negative");
  if (scan_points < 2) throw InvalidArgument("cost: scan needs at least two points");
  CostReport r;
  r.model = m;
  const double fixed = static_cast<double>(m.training_labels) * m.oracle_cost + m.training_cost;
  if (m.oracle_cost > m.surrogate_cost) {
    r.crossover = fixed / (m.oracle_cost - m.surrogate_cost);
    r.crossover_count = static_cast<std::size_t>(std::ceil(*r.crossover - 1e-9));
  }
  r.speedup = m.surrogate_cost > 0.0 ? m.oracle_cost / m.surrogate_cost : 0.0;
  const double top = r.crossover ? std::max(10.0, 2.0 * *r.crossover)
                                 : std::max<double>(10.0, 2.0 * static_cast<double>(m.training_labels));
  for (std::size_t k = 0; k < scan_points; ++k) {
    const auto M = static_cast<std::size_t>(
        std::llround(top * static_cast<double>(k) / static_cast<double>(scan_points - 1)));
    if (!r.scan_size.empty() && M == r.scan_size.back()) continue;
    r.scan_size.push_back(M);
    r.oracle_path.push_back(static_cast<double>(M) * m.oracle_cost);
    r.surrogate_path.push_back(fixed + static_cast<double>(M) * m.surrogate_cost);
  }
  return r;
}

nlohmann::json to_json(const CostReport& r) {
  nlohmann::json j{{"oracle_cost", r.model.oracle_cost},
                   {"surrogate_cost", r.model.surrogate_cost},
                   {"training_cost", r.model.training_cost},
                   {"training_labels", r.model.training_labels},
                   {"speedup", r.speedup},
                   {"scan_size", r.scan_size},
                   {"oracle_path", r.oracle_path},
                   {"surrogate_path", r.surrogate_path}};
  j["crossover"] = r.crossover ? nlohmann::json(*r.crossover) : nlohmann::json(nullptr);
  j["crossover_count"] = r.crossover_count ? nlohmann::json(*r.crossover_count) : nlohmann::json(nullptr);
  return j;
}

std::string cost_csv(const CostReport& r) {
  std::string out = "structures,oracle_only,surrogate_path\n";
  for (std::size_t k = 0; k < r.scan_size.size(); ++k)
    out += std::to_string(r.scan_size[k]) + "," + format_double(r.oracle_path[k]) + "," +
           format_double(r.surrogate_path[k]) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

bool ranks_before(const PolymorphRow& a, const PolymorphRow& b) {
  if (a.imaginary != b.imaginary) return !a.imaginary;
  if (a.dg_tstar != b.dg_tstar) return a.dg_tstar < b.dg_tstar;
  return a.hash < b.hash;
}

IVec3 doping_repeat(const Structure& s, const std::string& site, double concentration) {
  const std::size_t M = s.count(site);
  if (M == 0) throw InvalidArgument("doping: host has no " + site + " sites");
  IVec3 rep{1, 1, 1};
  for (int guard = 0; guard < 64; ++guard) {
    const std::size_t total = M * static_cast<std::size_t>(rep[0] * rep[1] * rep[2]);
    if (std::llround(concentration * static_cast<double>(total)) >= 1) return rep;
    // Grow along the direction with the smallest current width.
    const Vec3 w = s.perpendicular_widths();
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (w[k] * rep[k] < w[best] * rep[best]) best = k;
    ++rep[best];
  }
  throw InvalidArgument("doping: concentration too small for any practical supercell");
}

// ---------------------------------------------------------------------------
// Pipeline internals
// ---------------------------------------------------------------------------

namespace {

class StageCache {
 public:
  StageCache() = default;
  explicit StageCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::optional<nlohmann::json> get(const std::string& key) const {
    if (dir_.empty()) return std::nullopt;
    const fs::path f = dir_ / (key + ".json");
    if (!fs::exists(f)) return std::nullopt;
    try {
      return nlohmann::json::parse(io::read_file(f.string()));
    } catch (const std::exception&) {
      return std::nullopt;  // a torn entry is recomputed
    }
  }

  void put(const std::string& key, const nlohmann::json& value) const {
    if (dir_.empty()) return;
    const fs::path f = dir_ / (key + ".json");
    const fs::path tmp = dir_ / (key + ".json.tmp" + std::to_string(mix_seed(0, std::hash<std::string>{}(key))));
    io::write_file(tmp.string(), value.dump() + "\n");
    fs::rename(tmp, f);
  }

  bool enabled() const { return !dir_.empty(); }

 private:
  fs::path dir_;
};

std::string stage_key(std::string_view stage, const std::vector<std::string>& parts) {
  std::string joined(stage);
  for (const auto& p : parts) joined += '\x1f' + p;
  return std::string(stage) + "-" + hash_hex(joined) + hash_hex(joined + "\x1e");
}

struct RelaxOutcome {
  Structure structure;
  double energy = 0.0;
  bool converged = false;
};

RelaxOutcome relax_stage(const Structure& s, const Potential& p, const CampaignConfig& cfg, const StageCache& cache,
                         const std::string& potential_hash) {
  nlohmann::json opts = to_json(cfg.relax);
  opts["cell"] = cfg.relax_cell;
  const std::string key = stage_key("relax", {s.content_hash(), potential_hash, opts.dump()});
  nlohmann::json payload;
  if (auto hit = cache.get(key)) {
    payload = std::move(*hit);
  } else {
    RelaxResult r = cfg.relax_cell ? relax_cell(s, p, cfg.relax) : relax_positions(s, p, cfg.relax.positions);
    Structure canonical(r.structure.species(), r.structure.frac_coords(), r.structure.lattice(), s.tags());
    const std::string poscar = io::write_poscar(canonical);
    const Structure parsed = io::read_poscar(poscar);
    payload = {{"poscar", poscar},
               {"energy", p.compute(parsed).energy},
               {"converged", r.converged},
               {"iterations", r.iterations},
               {"max_force", r.max_force}};
    cache.put(key, payload);
  }
  RelaxOutcome out;
  auto tags = s.tags();
  const Structure parsed = io::read_poscar(payload.at("poscar").get<std::string>());
  out.structure = Structure(parsed.species(), parsed.frac_coords(), parsed.lattice(), tags);
  out.energy = payload.at("energy").get<double>();
  out.converged = payload.at("converged").get<bool>();
  return out;
}

nlohmann::json free_energy_json(const FormationFreeEnergyCurve& c) {
  return {{"energy", c.energy},
          {"formation_energy", c.formation_energy},
          {"temperatures", c.temperatures},
          {"dg", c.dg},
          {"imaginary", c.imaginary},
          {"min_frequency", c.min_frequency}};
}

FormationFreeEnergyCurve free_energy_from_json(const nlohmann::json& j) {
  FormationFreeEnergyCurve c;
  c.energy = j.at("energy").get<double>();
  c.formation_energy = j.at("formation_energy").get<double>();
  c.temperatures = j.at("temperatures").get<std::vector<double>>();
  c.dg = j.at("dg").get<std::vector<double>>();
  c.imaginary = j.at("imaginary").get<bool>();
  c.min_frequency = j.at("min_frequency").get<double>();
  return c;
}

/// The config grid with T* and 0 K appended.
std::vector<double> free_energy_temperatures(const CampaignConfig& cfg) {
  std::vector<double> t = cfg.temperatures;
  t.push_back(cfg.t_star);
  t.push_back(0.0);
  return t;
}

FormationFreeEnergyCurve phonon_stage(const Structure& s, const Potential& p, const CampaignConfig& cfg,
                                      const StageCache& cache, const std::string& potential_hash) {
  const auto temps = free_energy_temperatures(cfg);
  nlohmann::json opts{{"mesh", {cfg.phonon.mesh[0], cfg.phonon.mesh[1], cfg.phonon.mesh[2]}},
                      {"width", cfg.phonon.supercell_width},
                      {"amplitude", cfg.phonon.amplitude},
                      {"temperatures", temps},
                      {"pressure", cfg.pressure},
                      {"references", cfg.references}};
  const std::string key = stage_key("phonon", {s.content_hash(), potential_hash, opts.dump()});
  if (auto hit = cache.get(key)) return free_energy_from_json(*hit);
  auto c = formation_free_energy(s, p, temps, cfg.pressure, cfg.references, cfg.phonon);
  cache.put(key, free_energy_json(c));
  return c;
}

std::uint64_t md_seed(const CampaignConfig& cfg, const std::string& id) {
  Fnv1a h;
  h.update(id);
  return mix_seed(cfg.seed, h.digest());
}

DiffusivityRow md_compute(const std::string& id, const Structure& s, const Potential& p, const CampaignConfig& cfg) {
  MdOptions o;
  o.temperature = cfg.md.temperature;
  o.dt = cfg.md.dt;
  o.steps = cfg.md.steps;
  o.friction = cfg.md.friction;
  o.stride = cfg.md.stride;
  o.seed = md_seed(cfg, id);
  const Trajectory traj = run_nvt(s, p, o);
  const DiffusivityReport d = einstein_diffusivity(traj);
  DiffusivityRow row;
  row.id = id;
  for (const auto& [sym, sd] : d.species) {
    row.D[sym] = sd.D;
    row.mobility[sym] = to_string(classify_mobility(sd.D));
  }
  row.D_total = d.D;
  row.mobility_total = to_string(classify_mobility(d.D));
  return row;
}

DiffusivityRow md_stage(const std::string& id, const Structure& s, const Potential& p, const CampaignConfig& cfg,
                        const StageCache& cache, const std::string& potential_hash) {
  nlohmann::json opts{{"temperature", cfg.md.temperature}, {"dt", cfg.md.dt},         {"steps", cfg.md.steps},
                      {"friction", cfg.md.friction},       {"stride", cfg.md.stride}, {"seed", md_seed(cfg, id)}};
  const std::string key = stage_key("md", {s.content_hash(), potential_hash, opts.dump()});
  DiffusivityRow row;
  if (auto hit = cache.get(key)) {
    row.id = id;
    row.D = hit->at("D").get<std::map<std::string, double>>();
    row.D_total = hit->at("D_total").get<double>();
    for (const auto& [sym, D] : row.D) row.mobility[sym] = to_string(classify_mobility(D));
    row.mobility_total = to_string(classify_mobility(row.D_total));
    return row;
  }
  row = md_compute(id, s, p, cfg);
  cache.put(key, {{"D", row.D}, {"D_total", row.D_total}});
  return row;
}

/// One (host, dopant, site) cell of the heatmap.
HeatmapRow dopant_row(const CampaignConfig& cfg, const Potential& p, const std::string& host_id,
                      const Structure& host, const std::string& dopant, const std::string& site,
                      const StageCache& cache, const std::string& potential_hash) {
  HeatmapRow row;
  row.host = host_id;
  row.dopant = dopant;
  row.site = site;
  if (dopant == site) {
    // Identity substitution.
    row.bucket_tstar = row.bucket_zero = stabilization_bucket(0.0);
    return row;
  }
  if (!p.covers(dopant)) throw InvalidArgument("dopant analysis: potential does not cover dopant " + dopant);
  if (!cfg.references.count(dopant))
    throw InvalidArgument("dopant analysis: missing reference energy for dopant " + dopant);
  const IVec3 rep = doping_repeat(host, site, cfg.dopants.concentration);
  Structure sc = make_supercell(host, rep).structure;

  SubstitutionSpec spec;
  spec.host = sc;
  spec.dopant = dopant;
  spec.site = site;
  spec.concentration = cfg.dopants.concentration;
  Fnv1a h;
  h.update(host_id + "/" + dopant + "/" + site);
  spec.seed = mix_seed(cfg.seed, h.digest());
  // Cap occupations at the number of distinct subsets.
  {
    const std::size_t M = sc.count(site);
    const std::size_t k = substitution_size(M, spec.concentration);
    double total = 1.0;
    for (std::size_t i = 1; i <= k; ++i) total = total * static_cast<double>(M - k + i) / static_cast<double>(i);
    spec.occupations = static_cast<int>(std::min<double>(cfg.dopants.occupations, total));
    row.substituted = k;
  }
  const auto variants = enumerate_substitutions(spec);
  row.occupations = variants.size();

  const FormationFreeEnergyCurve host_g = phonon_stage(sc, p, cfg, cache, potential_hash);
  std::vector<FormationFreeEnergyCurve> doped(variants.size());
  parallel_for(variants.size(), [&](std::size_t k) {
    const RelaxOutcome r = relax_stage(variants[k].structure, p, cfg, cache, potential_hash);
    doped[k] = phonon_stage(r.structure, p, cfg, cache, potential_hash);
  });
  const std::size_t it_star = cfg.temperatures.size(), it_zero = it_star + 1;
  auto pick = [&](std::size_t it, double T) {
    std::vector<FormationFreeEnergy> d;
    for (const auto& g : doped) d.push_back({g.dg[it], T, cfg.pressure});
    return rank_stabilization({host_g.dg[it], T, cfg.pressure}, d, dopant, site);
  };
  const StabilizationRow hot = pick(it_star, cfg.t_star);
  const StabilizationRow cold = pick(it_zero, 0.0);
  row.ddg_tstar = hot.ddg;
  row.ddg_zero = cold.ddg;
  row.bucket_tstar = hot.bucket;
  row.bucket_zero = cold.bucket;
  row.best_occupation = hot.best_occupation;
  return row;
}

std::vector<HeatmapRow> dopant_rows(const CampaignConfig& cfg, const Potential& p,
                                    const std::vector<std::pair<std::string, Structure>>& hosts,
                                    const StageCache& cache, const std::string& potential_hash,
                                    std::vector<FailureRow>* failures) {
  std::vector<HeatmapRow> rows;
  for (const auto& [id, host] : hosts)
    for (const auto& site : cfg.dopants.sites)
      for (const auto& dopant : cfg.dopants.dopants) {
        if (!failures) {
          rows.push_back(dopant_row(cfg, p, id, host, dopant, site, cache, potential_hash));
          continue;
        }
        try {
          rows.push_back(dopant_row(cfg, p, id, host, dopant, site, cache, potential_hash));
        } catch (const std::exception& e) {
          failures->push_back({id, "dope:" + dopant + "@" + site, e.what()});
        }
      }
  return rows;
}

fs::path out_path(const CampaignConfig& cfg, const std::string& name) { return fs::path(cfg.output_dir) / name; }

std::string structure_file(const std::string& id) { return "structures/" + id + ".vasp"; }

}  // namespace

std::vector<HeatmapRow> dopant_analysis(const CampaignConfig& config, const Potential& p,
                                        const std::vector<std::pair<std::string, Structure>>& hosts) {
  for (const auto& d : config.dopants.dopants)
    if (!p.covers(d)) throw InvalidArgument("dopant analysis: potential does not cover dopant " + d);
  return dopant_rows(config, p, hosts, StageCache(), hash_hex(save_potential(p)), nullptr);
}

PotentialPtr campaign_potential(const CampaignConfig& cfg) {
  const fs::path stored = out_path(cfg, "surrogate.json");
  if (fs::exists(stored)) return load_potential(io::read_file(stored.string()));
  if (cfg.potential_source == "oracle") return potential_from_json(cfg.oracle);
  if (cfg.potential_source == "checkpoint") return load_potential(io::read_file(cfg.potential_path));
  throw Error(ErrorCode::kNotFound, "campaign: no stored surrogate at " + stored.string());
}

// ---------------------------------------------------------------------------
// screen
// ---------------------------------------------------------------------------

ScreenOutcome screen(const CampaignConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  set_num_threads(cfg.workers);
  fs::create_directories(out_path(cfg, "structures"));
  const StageCache cache(out_path(cfg, "cache"));
  std::vector<nlohmann::json> events;
  auto event = [&](const std::string& stage, const std::string& id, const std::string& status,
                   const nlohmann::json& detail = nullptr) {
    nlohmann::json e{{"stage", stage}, {"id", id}, {"status", status}};
    if (!detail.is_null()) e["detail"] = detail;
    events.push_back(std::move(e));
  };

  ScreenOutcome out;
  ScreenReport& rep = out.report;
  CostLedger& ledger = out.ledger;
  rep.config_hash = cfg.hash();
  rep.seed = cfg.seed;
  rep.potential_source = cfg.potential_source;
  rep.t_star = cfg.t_star;
  rep.pressure = cfg.pressure;
  rep.temperatures = cfg.temperatures;
  io::write_file(out_path(cfg, "config.effective.json").string(), cfg.to_json().dump(1) + "\n");

  // Surrogate.
  PotentialPtr oracle_model = cfg.oracle.is_null() ? nullptr : potential_from_json(cfg.oracle);
  auto oracle = oracle_model ? std::make_shared<CountingPotential>(oracle_model) : nullptr;
  PotentialPtr surrogate;
  if (cfg.potential_source == "oracle") {
    surrogate = oracle_model;
  } else if (cfg.potential_source == "checkpoint") {
    surrogate = load_potential(io::read_file(cfg.potential_path));
  } else {
    const std::string key = stage_key("al", {to_json(cfg.active_learning).dump(), cfg.oracle.dump()});
    nlohmann::json payload;
    if (auto hit = cache.get(key)) {
      payload = std::move(*hit);
    } else {
      const auto t0 = Clock::now();
      AlResult al = run_al_loop(*oracle, cfg.active_learning);
      const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      nlohmann::json records = nlohmann::json::array();
      for (const auto& r : al.records) records.push_back(to_json(r));
      payload = {{"checkpoint", nlohmann::json::parse(save_potential(*al.ensemble))},
                 {"records", records},
                 {"training_labels", al.training.size()},
                 {"training_runs", al.counters.training_runs},
                 {"surrogate_evaluations", al.counters.surrogate_evaluations},
                 {"seconds", seconds},
                 {"oracle_seconds", oracle->seconds()}};
      cache.put(key, payload);
      ledger.oracle_evaluations += oracle->calls();
      ledger.oracle_seconds += oracle->seconds();
      ledger.training_runs += al.counters.training_runs;
      // Wall time of the loop minus its labeling approximates training time.
      ledger.training_seconds += std::max(0.0, seconds - oracle->seconds());
    }
    surrogate = potential_from_json(payload.at("checkpoint"));
    ledger.training_labels = payload.at("training_labels").get<std::size_t>();
    std::string lines;
    for (const auto& r : payload.at("records")) {
      rep.al_cycles.push_back(al_cycle_record_from_json(r));
      lines += r.dump() + "\n";
    }
    io::write_file(out_path(cfg, "al_cycles.jsonl").string(), lines);
    event("active_learning", "", "done", {{"cycles", rep.al_cycles.size()}});
  }
  const std::string surrogate_text = save_potential(*surrogate);
  io::write_file(out_path(cfg, "surrogate.json").string(), surrogate_text);
  rep.potential_hash = hash_hex(surrogate_text);
  const bool surrogate_is_oracle = cfg.potential_source == "oracle";
  auto counted = std::make_shared<CountingPotential>(surrogate_is_oracle ? PotentialPtr(oracle) : surrogate);
  const Potential& p = *counted;

  // Generate.
  const GenerationResult gen = generate_candidates(cfg.generator, cfg.candidates);
  io::write_file(out_path(cfg, "candidates.extxyz").string(), io::write_extxyz_structures(gen.structures));
  rep.candidates = gen.structures.size();
  event("generate", "", "done",
        {{"count", gen.structures.size()},
         {"lattice_draws", gen.stats.lattice_draws},
         {"acceptance_rate", gen.stats.acceptance_rate()}});

  // Relax.
  const std::size_t n = gen.structures.size();
  std::vector<std::optional<RelaxOutcome>> relaxed(n);
  std::vector<std::string> relax_error(n);
  parallel_for(n, [&](std::size_t i) {
    try {
      relaxed[i] = relax_stage(gen.structures[i], p, cfg, cache, rep.potential_hash);
    } catch (const std::exception& e) {
      relax_error[i] = e.what();
    }
  });
  std::vector<std::size_t> ok;
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = gen.structures[i].tags().at("id");
    if (!relaxed[i]) {
      rep.failures.push_back({id, "relax", relax_error[i]});
      event("relax", id, "failed");
      continue;
    }
    try {
      StaticRow row{id, relaxed[i]->structure.content_hash(),
                    compute_formation_energy(relaxed[i]->energy, relaxed[i]->structure, cfg.references),
                    relaxed[i]->converged};
      rep.relaxed.push_back(row);
      by_id[id] = i;
      io::write_file(out_path(cfg, structure_file(id)).string(), io::write_poscar(relaxed[i]->structure));
      event("relax", id, relaxed[i]->converged ? "converged" : "unconverged");
    } catch (const std::exception& e) {
      rep.failures.push_back({id, "relax", e.what()});
      event("relax", id, "failed");
    }
  }
  std::sort(rep.relaxed.begin(), rep.relaxed.end(), [](const StaticRow& a, const StaticRow& b) {
    if (a.formation_energy != b.formation_energy) return a.formation_energy < b.formation_energy;
    return a.hash < b.hash;
  });

  // Phonons and free energies for the statically most stable candidates.
  const std::size_t nph = std::min(cfg.phonon.top_k, rep.relaxed.size());
  std::vector<std::optional<PolymorphRow>> prow(nph);
  std::vector<std::string> ph_error(nph);
  parallel_for(nph, [&](std::size_t k) {
    const std::string& id = rep.relaxed[k].id;
    const RelaxOutcome& r = *relaxed[by_id.at(id)];
    try {
      const auto g = phonon_stage(r.structure, p, cfg, cache, rep.potential_hash);
      PolymorphRow row;
      row.id = id;
      row.hash = rep.relaxed[k].hash;
      row.formula = r.structure.formula();
      row.natoms = r.structure.size();
      row.formation_energy = g.formation_energy;
      row.dg.assign(g.dg.begin(), g.dg.begin() + static_cast<std::ptrdiff_t>(cfg.temperatures.size()));
      row.dg_tstar = g.dg[cfg.temperatures.size()];
      row.lattice = lattice_parameters(r.structure.lattice());
      row.volume = r.structure.volume();
      row.converged = r.converged;
      row.imaginary = g.imaginary;
      prow[k] = row;
    } catch (const std::exception& e) {
      ph_error[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < nph; ++k) {
    const std::string& id = rep.relaxed[k].id;
    if (prow[k]) {
      rep.ranked.push_back(*prow[k]);
      event("phonon", id, prow[k]->imaginary ? "imaginary" : "done");
    } else {
      rep.failures.push_back({id, "phonon", ph_error[k]});
      event("phonon", id, "failed");
    }
  }
  std::sort(rep.ranked.begin(), rep.ranked.end(), ranks_before);

  // Diffusivity for the most stable dynamically stable candidates.
  std::vector<std::string> md_ids;
  for (const auto& row : rep.ranked)
    if (!row.imaginary && md_ids.size() < cfg.md.top_k) md_ids.push_back(row.id);
  std::vector<std::optional<DiffusivityRow>> drow(md_ids.size());
  std::vector<std::string> md_error(md_ids.size());
  parallel_for(md_ids.size(), [&](std::size_t k) {
    try {
      drow[k] = md_stage(md_ids[k], relaxed[by_id.at(md_ids[k])]->structure, p, cfg, cache, rep.potential_hash);
    } catch (const std::exception& e) {
      md_error[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < md_ids.size(); ++k) {
    if (drow[k]) {
      rep.diffusivity.push_back(*drow[k]);
      event("md", md_ids[k], drow[k]->mobility_total);
    } else {
      rep.failures.push_back({md_ids[k], "md", md_error[k]});
      event("md", md_ids[k], "failed");
    }
  }

  // Dopant heatmap.
  if (cfg.dopants.hosts > 0) {
    std::vector<std::pair<std::string, Structure>> hosts;
    for (const auto& row : rep.ranked)
      if (!row.imaginary && hosts.size() < cfg.dopants.hosts)
        hosts.emplace_back(row.id, relaxed[by_id.at(row.id)]->structure);
    rep.dopants = dopant_rows(cfg, p, hosts, cache, rep.potential_hash, &rep.failures);
    for (const auto& r : rep.dopants) event("dope", r.host, r.bucket_tstar, {{"dopant", r.dopant}, {"site", r.site}});
  }

  // Ledger.
  ledger.structures_screened += rep.relaxed.size();
  if (surrogate_is_oracle) {
    ledger.oracle_evaluations += oracle->calls();
    ledger.oracle_seconds += oracle->seconds();
  } else {
    ledger.surrogate_evaluations += counted->calls();
    ledger.surrogate_seconds += counted->seconds();
  }

  // Artifacts.
  io::write_file(out_path(cfg, "report.json").string(), to_json(rep).dump(1) + "\n");
  io::write_file(out_path(cfg, "polymorphs.csv").string(), polymorph_csv(rep));
  io::write_file(out_path(cfg, "diffusivity.csv").string(), diffusivity_csv(rep));
  io::write_file(out_path(cfg, "dopants.csv").string(), dopant_csv(rep));
  std::string ev;
  for (const auto& e : events) ev += e.dump() + "\n";
  io::write_file(out_path(cfg, "events.jsonl").string(), ev);
  io::write_file(out_path(cfg, "ledger.json").string(), to_json(ledger).dump(1) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> sample_rows(std::size_t n, double fraction, Rng& rng) {
  if (n == 0) return {};
  const auto k = std::min(n, std::max<std::size_t>(1, static_cast<std::size_t>(
                                                          std::ceil(fraction * static_cast<double>(n)))));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

VerifyResult verify(const CampaignConfig& cfg, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("verify: fraction must lie in (0, 1]");
  set_num_threads(cfg.workers);
  const fs::path report_path = out_path(cfg, "report.json");
  if (!fs::exists(report_path)) throw Error(ErrorCode::kNotFound, "verify: no report at " + report_path.string());
  const ScreenReport rep = screen_report_from_json(nlohmann::json::parse(io::read_file(report_path.string())));
  VerifyResult res;
  if (rep.config_hash != cfg.hash()) res.mismatches.push_back("config hash differs from the report");
  const PotentialPtr p = campaign_potential(cfg);
  if (hash_hex(save_potential(*p)) != rep.potential_hash) res.mismatches.push_back("stored potential hash differs");
  auto load = [&](const std::string& id) {
    Structure s = io::read_poscar(io::read_file(out_path(cfg, structure_file(id)).string()));
    return Structure(s.species(), s.frac_coords(), s.lattice(), {{"id", id}});
  };
  auto same = [&](const std::string& what, double a, double b) {
    if (a != b) res.mismatches.push_back(what + ": report " + format_double(a) + " vs recomputed " + format_double(b));
  };
  Rng rng(cfg.seed, 0x7e1f);

  for (std::size_t k : sample_rows(rep.ranked.size(), fraction, rng)) {
    const PolymorphRow& row = rep.ranked[k];
    const Structure s = load(row.id);
    ++res.checked;
    if (s.content_hash() != row.hash) res.mismatches.push_back(row.id + ": structure hash differs");
    const auto g = formation_free_energy(s, *p, free_energy_temperatures(cfg), cfg.pressure, cfg.references, cfg.phonon);
    same(row.id + " formation_energy", row.formation_energy, g.formation_energy);
    same(row.id + " dg_tstar", row.dg_tstar, g.dg[cfg.temperatures.size()]);
    for (std::size_t t = 0; t < row.dg.size(); ++t) same(row.id + " dg[" + std::to_string(t) + "]", row.dg[t], g.dg[t]);
    if (g.imaginary != row.imaginary) res.mismatches.push_back(row.id + ": imaginary flag differs");
  }
  for (std::size_t k : sample_rows(rep.diffusivity.size(), fraction, rng)) {
    const DiffusivityRow& row = rep.diffusivity[k];
    ++res.checked;
    const DiffusivityRow d = md_compute(row.id, load(row.id), *p, cfg);
    same(row.id + " D_total", row.D_total, d.D_total);
    for (const auto& [sym, D] : row.D) same(row.id + " D[" + sym + "]", D, d.D.count(sym) ? d.D.at(sym) : NAN);
  }
  for (std::size_t k : sample_rows(rep.dopants.size(), fraction, rng)) {
    const HeatmapRow& row = rep.dopants[k];
    ++res.checked;
    const HeatmapRow d = dopant_row(cfg, *p, row.host, load(row.host), row.dopant, row.site, StageCache(),
                                    rep.potential_hash);
    const std::string tag = row.host + " " + row.dopant + "@" + row.site;
    same(tag + " ddg_tstar", row.ddg_tstar, d.ddg_tstar);
    same(tag + " ddg_zero", row.ddg_zero, d.ddg_zero);
  }
  return res;
}

}  // namespace matscreen
