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

#include "matscreen/active.hpp"

#include <cmath>
#include <set>

#include "matscreen/error.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

void Thresholds::validate() const {
  if (!(energy_std_max > 0.0)) throw InvalidArgument("thresholds: energy_std_max must be positive");
  if (!(force_std_max > 0.0)) throw InvalidArgument("thresholds: force_std_max must be positive");
  if (!(stress_std_max > 0.0)) throw InvalidArgument("thresholds: stress_std_max must be positive");
  if (!(pass_fraction_min >= 0.0 && pass_fraction_min <= 1.0))
    throw InvalidArgument("thresholds: pass_fraction_min must lie in [0, 1]");
  if (max_cycles < 1) throw InvalidArgument("thresholds: max_cycles must be >= 1");
}

nlohmann::json to_json(const Thresholds& t) {
  nlohmann::json j{{"energy_std_max", t.energy_std_max},
                   {"force_std_max", t.force_std_max},
                   {"pass_fraction_min", t.pass_fraction_min},
                   {"max_cycles", t.max_cycles}};
  j["stress_std_max"] = std::isinf(t.stress_std_max) ? nlohmann::json(nullptr) : nlohmann::json(t.stress_std_max);
  return j;
}

Thresholds thresholds_from_json(const nlohmann::json& j) {
  Thresholds t;
  t.energy_std_max = j.value("energy_std_max", t.energy_std_max);
  t.force_std_max = j.value("force_std_max", t.force_std_max);
  if (j.contains("stress_std_max") && !j.at("stress_std_max").is_null())
    t.stress_std_max = j.at("stress_std_max").get<double>();
  t.pass_fraction_min = j.value("pass_fraction_min", t.pass_fraction_min);
  t.max_cycles = j.value("max_cycles", t.max_cycles);
  t.validate();
  return t;
}

bool is_flagged(const EnsembleStats& st, const Thresholds& th) {
  const bool finite = std::isfinite(st.energy_std) && std::isfinite(st.force_std) && std::isfinite(st.stress_std);
  return !finite || st.energy_std > th.energy_std_max || st.force_std > th.force_std_max ||
         st.stress_std > th.stress_std_max;
}

bool should_terminate(double pass_fraction, const Thresholds& th) { return pass_fraction >= th.pass_fraction_min; }

FlagResult flag_uncertain(const EnsemblePotential& e, const std::vector<Structure>& structures,
                          const Thresholds& th) {
  th.validate();
  FlagResult out;
  out.stats.resize(structures.size());
  std::vector<char> flag(structures.size(), 0);
  parallel_for(structures.size(), [&](std::size_t i) {
    try {
      out.stats[i] = ensemble_stats(e, structures[i]);
      flag[i] = is_flagged(out.stats[i], th);
    } catch (const std::exception&) {
      const double inf = std::numeric_limits<double>::infinity();
      out.stats[i].energy_std = out.stats[i].force_std = out.stats[i].stress_std = inf;
      flag[i] = 1;
    }
  });
  for (std::size_t i = 0; i < structures.size(); ++i)
    if (flag[i]) out.flagged.push_back(i);
  if (!structures.empty())
    out.pass_fraction = 1.0 - static_cast<double>(out.flagged.size()) / static_cast<double>(structures.size());
  return out;
}

nlohmann::json to_json(const ALCycleRecord& r) {
  return {{"cycle", r.cycle},
          {"candidates", r.candidates},
          {"flagged", r.flagged},
          {"pass_fraction", r.pass_fraction},
          {"validation_energy_mae_mev_per_atom", r.validation_energy_mae},
          {"validation_force_mae_ev_per_a", r.validation_force_mae},
          {"labeled", r.labeled},
          {"training_size", r.training_size},
          {"terminated", r.terminated}};
}

ALCycleRecord al_cycle_record_from_json(const nlohmann::json& j) {
  ALCycleRecord r;
  r.cycle = j.at("cycle").get<int>();
  r.candidates = j.at("candidates").get<std::size_t>();
  r.flagged = j.at("flagged").get<std::size_t>();
  r.pass_fraction = j.at("pass_fraction").get<double>();
  r.validation_energy_mae = j.at("validation_energy_mae_mev_per_atom").get<double>();
  r.validation_force_mae = j.at("validation_force_mae_ev_per_a").get<double>();
  r.labeled = j.at("labeled").get<std::size_t>();
  r.training_size = j.at("training_size").get<std::size_t>();
  r.terminated = j.at("terminated").get<bool>();
  return r;
}

void AlOptions::validate() const {
  generator.validate();
  thresholds.validate();
  fit.validate();
  if (seed_count < 10) throw InvalidArgument("active learning: seed_count must be >= 10");
  if (per_cycle < 1) throw InvalidArgument("active learning: per_cycle must be >= 1");
  if (validation_count < 1) throw InvalidArgument("active learning: validation_count must be >= 1");
  if (std::set<std::uint64_t>(member_seeds.begin(), member_seeds.end()).size() < 2 ||
      member_seeds.size() != std::set<std::uint64_t>(member_seeds.begin(), member_seeds.end()).size())
    throw InvalidArgument("active learning: member_seeds must hold at least two distinct seeds");
  if (!(collapse_fraction > 0.0 && collapse_fraction <= 1.0))
    throw InvalidArgument("active learning: collapse_fraction must lie in (0, 1]");
}

nlohmann::json to_json(const AlOptions& o) {
  return {{"generator", to_json(o.generator)},
          {"thresholds", to_json(o.thresholds)},
          {"seed_count", o.seed_count},
          {"per_cycle", o.per_cycle},
          {"validation_count", o.validation_count},
          {"member_seeds", o.member_seeds},
          {"fit", to_json(o.fit)},
          {"relax_candidates", o.relax_candidates},
          {"relax", to_json(o.relax)},
          {"collapse_fraction", o.collapse_fraction}};
}

AlOptions al_options_from_json(const nlohmann::json& j) {
  AlOptions o;
  o.generator = generator_spec_from_json(j.at("generator"));
  if (j.contains("thresholds")) o.thresholds = thresholds_from_json(j.at("thresholds"));
  o.seed_count = j.value("seed_count", o.seed_count);
  o.per_cycle = j.value("per_cycle", o.per_cycle);
  o.validation_count = j.value("validation_count", o.validation_count);
  if (j.contains("member_seeds")) o.member_seeds = j.at("member_seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("fit")) o.fit = fit_hyperparams_from_json(j.at("fit"));
  o.relax_candidates = j.value("relax_candidates", o.relax_candidates);
  if (j.contains("relax")) o.relax = relax_options_from_json(j.at("relax"));
  o.collapse_fraction = j.value("collapse_fraction", o.collapse_fraction);
  o.validate();
  return o;
}

LabeledFrame oracle_label(const Potential& oracle, const Structure& s) {
  const EvalResult r = oracle.compute(s);
  LabeledFrame f;
  f.structure = s;
  f.energy = r.energy;
  f.forces = r.forces;
  f.stress = 0.5 * (r.stress + r.stress.transpose());
  f.provenance = Provenance::kOracle;
  return f;
}

namespace {

bool collapsed(const Structure& s, const GeneratorSpec& g, double fraction) {
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (min_image_distance(s, i, j) < fraction * g.min_distance(s.species(i), s.species(j))) return true;
  return false;
}

}  // namespace

AlResult run_al_loop(const Potential& oracle, const AlOptions& opt,
                     const std::function<void(const ALCycleRecord&)>& on_cycle) {
  opt.validate();
  for (const auto& [sym, c] : opt.generator.composition)
    if (!oracle.covers(sym)) throw InvalidArgument("active learning: oracle does not cover element " + sym);

  AlResult res;
  std::set<std::string> labeled;
  auto label_all = [&](const std::vector<Structure>& ss) {
    std::vector<LabeledFrame> out(ss.size());
    parallel_for(ss.size(), [&](std::size_t i) { out[i] = oracle_label(oracle, ss[i]); });
    res.counters.oracle_evaluations += ss.size();
    return out;
  };
  auto fit = [&](int cycle) {
    try {
      auto r = train_ensemble(res.training, opt.fit, opt.member_seeds);
      res.counters.training_runs += opt.member_seeds.size();
      return r.ensemble;
    } catch (const std::exception& e) {
      throw RuntimeError("active learning: training failed at cycle " + std::to_string(cycle) + ": " + e.what());
    }
  };

  const auto seeds = generate_candidates(opt.generator, opt.seed_count, 0).structures;
  for (const auto& s : seeds) labeled.insert(s.content_hash());
  res.training = label_all(seeds);
  const auto val = generate_candidates(opt.generator, opt.validation_count, kValidationIndexBase).structures;
  for (const auto& s : val) labeled.insert(s.content_hash());
  res.validation = label_all(val);

  std::shared_ptr<EnsemblePotential> ensemble = fit(0);
  for (int cycle = 1; cycle <= opt.thresholds.max_cycles; ++cycle) {
    const auto candidates =
        generate_candidates(opt.generator, opt.per_cycle, static_cast<std::size_t>(cycle) * kCycleIndexStride)
            .structures;
    std::vector<Structure> relaxed = candidates;
    std::vector<char> failed(candidates.size(), 0);
    CountingPotential counted(ensemble);
    if (opt.relax_candidates) {
      parallel_for(candidates.size(), [&](std::size_t i) {
        try {
          relaxed[i] = relax_positions(candidates[i], counted, opt.relax).structure;
          if (collapsed(relaxed[i], opt.generator, opt.collapse_fraction)) failed[i] = 1;
        } catch (const std::exception&) {
          failed[i] = 1;
        }
      });
    }
    res.counters.surrogate_evaluations += counted.calls();
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (failed[i]) relaxed[i] = candidates[i];
    FlagResult flags = flag_uncertain(*ensemble, relaxed, opt.thresholds);
    res.counters.surrogate_evaluations += relaxed.size();

    std::vector<EvalResult> preds(res.validation.size());
    parallel_for(res.validation.size(), [&](std::size_t i) { preds[i] = ensemble->evaluate(res.validation[i].structure); });
    res.counters.surrogate_evaluations += res.validation.size();
    const TargetErrors err = target_errors(res.validation, preds);

    ALCycleRecord rec;
    rec.cycle = cycle;
    rec.candidates = candidates.size();
    rec.flagged = flags.flagged.size();
    rec.pass_fraction = flags.pass_fraction;
    rec.validation_energy_mae = err.energy_mae * 1000.0;
    rec.validation_force_mae = err.force_mae;
    rec.terminated = should_terminate(flags.pass_fraction, opt.thresholds);
    if (!rec.terminated) {
      std::vector<Structure> fresh;
      for (std::size_t i : flags.flagged)
        if (labeled.insert(relaxed[i].content_hash()).second) fresh.push_back(relaxed[i]);
      auto frames = label_all(fresh);
      rec.labeled = frames.size();
      res.training.insert(res.training.end(), frames.begin(), frames.end());
      if (!frames.empty()) ensemble = fit(cycle);
    }
    rec.training_size = res.training.size();
    res.records.push_back(rec);
    if (on_cycle) on_cycle(rec);
    if (rec.terminated) {
      res.converged = true;
      break;
    }
  }
  res.ensemble = ensemble;
  return res;
}

}  // namespace matscreen
