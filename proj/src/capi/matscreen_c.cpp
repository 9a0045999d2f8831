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

#include "matscreen/matscreen.h"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "matscreen/active.hpp"
#include "matscreen/campaign.hpp"
#include "matscreen/config.hpp"
#include "matscreen/error.hpp"
#include "matscreen/explore.hpp"
#include "matscreen/fit.hpp"
#include "matscreen/io.hpp"
#include "matscreen/md.hpp"
#include "matscreen/mech.hpp"
#include "matscreen/phonon.hpp"
#include "matscreen/potential.hpp"
#include "matscreen/relax.hpp"
#include "matscreen/util.hpp"

struct ms_structure {
  matscreen::Structure value;
};

struct ms_potential {
  matscreen::PotentialPtr value;
};

struct ms_result {
  std::string text;
  std::vector<std::pair<std::string, std::string>> parts;
};

namespace {

using json = nlohmann::json;
using namespace matscreen;

thread_local std::string t_last_error;

ms_status status_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument: return MS_ERR_INVALID_ARGUMENT;
    case ErrorCode::kParse: return MS_ERR_PARSE;
    case ErrorCode::kRuntime: return MS_ERR_RUNTIME;
    case ErrorCode::kIo: return MS_ERR_IO;
    case ErrorCode::kNotFound: return MS_ERR_NOT_FOUND;
  }
  return MS_ERR_INTERNAL;
}

template <class F>
ms_status guarded(F&& f) {
  t_last_error.clear();
  try {
    f();
    return MS_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return status_of(e.code());
  } catch (const json::exception& e) {
    t_last_error = std::string("json: ") + e.what();
    return MS_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return MS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return MS_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return MS_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " must not be NULL");
}

json options(const char* text) {
  if (!text || !*text) return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("options: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("options must be a JSON object");
  return j;
}

ms_result* make_result(std::string text) {
  auto* r = new ms_result;
  r->text = std::move(text);
  return r;
}

Vec3 vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

IVec3 ivec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument("expected three integers");
  IVec3 v{j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
  for (int x : v)
    if (x < 1) throw InvalidArgument("repeat and mesh entries must be >= 1");
  return v;
}

std::string dump(const json& j) { return j.dump(1) + "\n"; }

}  // namespace

extern "C" {

const char* ms_version(void) { return "1.0.0"; }

const char* ms_last_error(void) { return t_last_error.c_str(); }

const char* ms_status_name(ms_status s) {
  switch (s) {
    case MS_OK: return "ok";
    case MS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MS_ERR_PARSE: return "parse error";
    case MS_ERR_RUNTIME: return "runtime error";
    case MS_ERR_IO: return "io error";
    case MS_ERR_NOT_FOUND: return "not found";
    case MS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

ms_status ms_set_threads(int n) {
  return guarded([&] {
    if (n < 1) throw InvalidArgument("thread count must be >= 1");
    set_num_threads(n);
  });
}

// ---- results --------------------------------------------------------------

const char* ms_result_text(const ms_result* r) { return r ? r->text.c_str() : nullptr; }
size_t ms_result_size(const ms_result* r) { return r ? r->text.size() : 0; }

const char* ms_result_part(const ms_result* r, const char* name) {
  if (!r || !name) return nullptr;
  for (const auto& [k, v] : r->parts)
    if (k == name) return v.c_str();
  return nullptr;
}

size_t ms_result_part_count(const ms_result* r) { return r ? r->parts.size() : 0; }

const char* ms_result_part_name(const ms_result* r, size_t index) {
  if (!r || index >= r->parts.size()) return nullptr;
  return r->parts[index].first.c_str();
}

void ms_result_free(ms_result* r) { delete r; }

// ---- structures -----------------------------------------------------------

ms_status ms_structure_read(const char* text, const char* format, ms_structure** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = nullptr;
    const std::string f = format ? format : "poscar";
    Structure s;
    if (f == "poscar") {
      s = io::read_poscar(text);
    } else if (f == "extxyz") {
      auto frames = io::read_extxyz_structures(text);
      if (frames.empty()) throw ParseError("extxyz: no frames");
      s = frames.front();
    } else {
      throw InvalidArgument("unknown structure format '" + f + "'");
    }
    *out = new ms_structure{std::move(s)};
  });
}

ms_status ms_structure_write(const ms_structure* s, const char* format, ms_result** out) {
  return guarded([&] {
    require(s, "structure");
    require(out, "out");
    const std::string f = format ? format : "poscar";
    if (f == "poscar")
      *out = make_result(io::write_poscar(s->value));
    else if (f == "extxyz")
      *out = make_result(io::write_extxyz_structures({s->value}));
    else
      throw InvalidArgument("unknown structure format '" + f + "'");
  });
}

ms_status ms_structure_size(const ms_structure* s, size_t* natoms) {
  return guarded([&] {
    require(s, "structure");
    require(natoms, "natoms");
    *natoms = s->value.size();
  });
}

ms_status ms_structure_volume(const ms_structure* s, double* volume) {
  return guarded([&] {
    require(s, "structure");
    require(volume, "volume");
    *volume = s->value.volume();
  });
}

ms_status ms_structure_positions(const ms_structure* s, double* xyz, size_t capacity) {
  return guarded([&] {
    require(s, "structure");
    require(xyz, "xyz");
    if (capacity < 3 * s->value.size()) throw InvalidArgument("positions buffer too small");
    const auto c = s->value.cart_coords();
    for (std::size_t i = 0; i < c.size(); ++i)
      for (int k = 0; k < 3; ++k) xyz[3 * i + k] = c[i][k];
  });
}

void ms_structure_free(ms_structure* s) { delete s; }

// ---- potentials -----------------------------------------------------------

ms_status ms_potential_load(const char* checkpoint_json, ms_potential** out) {
  return guarded([&] {
    require(checkpoint_json, "checkpoint");
    require(out, "out");
    *out = nullptr;
    *out = new ms_potential{load_potential(checkpoint_json)};
  });
}

ms_status ms_potential_save(const ms_potential* p, ms_result** out) {
  return guarded([&] {
    require(p, "potential");
    require(out, "out");
    *out = make_result(save_potential(*p->value));
  });
}

ms_status ms_potential_kind(const ms_potential* p, ms_result** out) {
  return guarded([&] {
    require(p, "potential");
    require(out, "out");
    *out = make_result(p->value->kind());
  });
}

void ms_potential_free(ms_potential* p) { delete p; }

ms_status ms_evaluate(const ms_potential* p, const ms_structure* s, ms_result** out) {
  return guarded([&] {
    require(p, "potential");
    require(s, "structure");
    require(out, "out");
    const EvalResult r = p->value->compute(s->value);
    json f = json::array();
    for (const auto& v : r.forces) f.push_back({v[0], v[1], v[2]});
    json st = json::array();
    for (int a = 0; a < 3; ++a) st.push_back({r.stress(a, 0), r.stress(a, 1), r.stress(a, 2)});
    *out = make_result(dump({{"energy", r.energy}, {"forces", f}, {"stress", st}, {"max_force", r.max_force()}}));
  });
}

// ---- operations -----------------------------------------------------------

ms_status ms_fit(const char* extxyz_text, const char* options_json, ms_result** out) {
  return guarded([&] {
    require(extxyz_text, "data");
    require(out, "out");
    const json o = options(options_json);
    const auto frames = io::read_extxyz(extxyz_text);
    const FitHyperparams hp = fit_hyperparams_from_json(o.value("hyperparams", json::object()));
    const auto seeds = o.value("seeds", std::vector<std::uint64_t>{0});
    if (seeds.empty()) throw InvalidArgument("fit: seeds must not be empty");
    json report;
    std::string checkpoint;
    if (seeds.size() == 1) {
      FitResult r = train(frames, hp, seeds[0]);
      report = {{"kind", "descriptor"}, {"members", json::array({to_json(r.report)})}};
      checkpoint = save_potential(*r.model);
    } else {
      EnsembleFitResult r = train_ensemble(frames, hp, seeds);
      json members = json::array();
      for (const auto& m : r.reports) members.push_back(to_json(m));
      report = {{"kind", "ensemble"}, {"members", members}};
      checkpoint = save_potential(*r.ensemble);
    }
    report["frames"] = frames.size();
    report["hyperparams"] = to_json(hp);
    auto* res = make_result(dump(report));
    res->parts.emplace_back("checkpoint", std::move(checkpoint));
    *out = res;
  });
}

ms_status ms_relax(const ms_potential* p, const ms_structure* s, const char* options_json, ms_structure** relaxed,
                   ms_result** out) {
  return guarded([&] {
    require(p, "potential");
    require(s, "structure");
    require(out, "out");
    const json o = options(options_json);
    const bool cell = o.value("cell", false);
    RelaxResult r;
    if (cell) {
      json c = o;
      c.erase("cell");
      r = relax_cell(s->value, *p->value, cell_relax_options_from_json(c));
    } else {
      json pos = o.value("positions", o);
      pos.erase("cell");
      r = relax_positions(s->value, *p->value, relax_options_from_json(pos));
    }
    const auto lp = lattice_parameters(r.structure.lattice());
    json report{{"converged", r.converged},
                {"iterations", r.iterations},
                {"energy", r.result.energy},
                {"max_force", r.max_force},
                {"cell", cell},
                {"volume", r.structure.volume()},
                {"lattice", lp}};
    if (cell) {
      report["cell_steps"] = r.cell_steps;
      report["max_stress_residual"] = r.max_stress_residual;
    }
    auto* res = make_result(dump(report));
    res->parts.emplace_back("poscar", io::write_poscar(r.structure));
    if (relaxed) *relaxed = new ms_structure{r.structure};
    *out = res;
  });
}

ms_status ms_phonon(const ms_potential* p, const ms_structure* s, const char* options_json, ms_result** out) {
  return guarded([&] {
    require(p, "potential");
    require(s, "structure");
    require(out, "out");
    const json o = options(options_json);
    const IVec3 rep = o.contains("repeat") ? ivec3(o.at("repeat"))
                                           : repeat_for_width(s->value, o.value("supercell_width", 10.0));
    const ForceConstants fc = force_constants(s->value, *p->value, rep, o.value("amplitude", 0.01));
    const IVec3 mesh = ivec3(o.value("mesh", json::array({8, 8, 8})));
    const PhononResult grid = dispersion(fc, monkhorst_pack(mesh));
    const auto temps = parse_temperature_grid(o.value("temperatures", json("0..1000 step 100")));

    json report{{"repeat", rep},
                {"mesh", mesh},
                {"natoms", s->value.size()},
                {"imaginary", grid.has_imaginary()},
                {"min_frequency_thz", grid.frequencies.minCoeff()},
                {"max_frequency_thz", grid.frequencies.maxCoeff()},
                {"sum_rule_error", fc.sum_rule_error()},
                {"symmetry_error", fc.symmetry_error()}};
    std::string thermo = "temperature_k,free_energy_ev,entropy_ev_per_k,heat_capacity_ev_per_k\n";
    if (!grid.has_imaginary()) {
      json rows = json::array();
      for (double T : temps) {
        const double F = helmholtz_free_energy(grid, T), S = entropy(grid, T), C = heat_capacity(grid, T);
        rows.push_back({{"temperature", T}, {"free_energy", F}, {"entropy", S}, {"heat_capacity", C}});
        thermo += format_double(T) + "," + format_double(F) + "," + format_double(S) + "," + format_double(C) + "\n";
      }
      report["thermodynamics"] = rows;
      std::optional<double> smear;
      if (o.contains("smearing")) smear = o.at("smearing").get<double>();
      const DosTable d = dos(grid, o.value("dos_spacing", 0.05), smear);
      report["dos_integral"] = d.integral();
    }
    auto* res = make_result("");
    if (!grid.has_imaginary()) {
      std::optional<double> smear;
      if (o.contains("smearing")) smear = o.at("smearing").get<double>();
      res->parts.emplace_back("dos.csv", dos_csv(dos(grid, o.value("dos_spacing", 0.05), smear)));
      res->parts.emplace_back("thermo.csv", thermo);
    }
    if (o.contains("path")) {
      std::vector<Vec3> corners;
      for (const auto& c : o.at("path")) corners.push_back(vec3(c));
      const PhononResult path = dispersion(fc, qpath(corners, o.value("path_points", 50)));
      report["dispersion"] = to_json(path);
      res->parts.emplace_back("dispersion.csv", dispersion_csv(path));
    } else {
      res->parts.emplace_back("dispersion.csv", dispersion_csv(grid));
    }
    res->text = dump(report);
    *out = res;
  });
}

ms_status ms_elastic(const ms_potential* p, const ms_structure* s, const char* options_json, ms_result** out) {
  return guarded([&] {
    require(p, "potential");
    require(s, "structure");
    require(out, "out");
    const json o = options(options_json);
    ElasticOptions eo;
    eo.delta = o.value("delta", eo.delta);
    eo.relax_ions = o.value("relax_ions", eo.relax_ions);
    if (o.contains("relax")) eo.relax = relax_options_from_json(o.at("relax"));
    const ElasticTensor c = elastic_tensor(s->value, *p->value, eo);
    std::string csv = "row,c1,c2,c3,c4,c5,c6\n";
    const Matrix6 g = c.gpa();
    for (int i = 0; i < 6; ++i) {
      csv += std::to_string(i + 1);
      for (int j = 0; j < 6; ++j) csv += "," + format_double(g(i, j));
      csv += "\n";
    }
    auto* res = make_result(dump(to_json(c)));
    res->parts.emplace_back("elastic.csv", csv);
    *out = res;
  });
}

ms_status ms_shear(const ms_potential* p, const ms_structure* s, const char* options_json, ms_result** out) {
  return guarded([&] {
    require(p, "potential");
    require(s, "structure");
    require(out, "out");
    const json o = options(options_json);
    ShearOptions so;
    if (o.contains("normal")) so.normal = vec3(o.at("normal"));
    if (o.contains("direction")) so.direction = vec3(o.at("direction"));
    so.dgamma = o.value("dgamma", so.dgamma);
    so.steps = o.value("steps", so.steps);
    so.relax_ions = o.value("relax_ions", so.relax_ions);
    if (o.contains("relax")) so.relax = relax_options_from_json(o.at("relax"));
    const ShearCurve c = ideal_shear(s->value, *p->value, so);
    json j = to_json(c);
    j["normal"] = {so.normal[0], so.normal[1], so.normal[2]};
    j["direction"] = {so.direction[0], so.direction[1], so.direction[2]};
    auto* res = make_result(dump(j));
    res->parts.emplace_back("shear.csv", shear_csv(c));
    *out = res;
  });
}

ms_status ms_md(const ms_potential* p, const ms_structure* s, const char* options_json, ms_result** out) {
  return guarded([&] {
    require(p, "potential");
    require(s, "structure");
    require(out, "out");
    const json o = options(options_json);
    const MdOptions mo = md_options_from_json(o);
    const Trajectory t = run_nvt(s->value, *p->value, mo);
    DiffusivityOptions d;
    if (o.contains("species")) d.species = o.at("species").get<std::vector<std::string>>();
    d.dimension = o.value("dimension", d.dimension);
    d.remove_drift = o.value("remove_drift", d.remove_drift);
    if (o.contains("t_min")) d.t_min = o.at("t_min").get<double>();
    if (o.contains("t_max")) d.t_max = o.at("t_max").get<double>();
    const DiffusivityReport r = einstein_diffusivity(t, d);
    json j = to_json(r);
    j["md"] = to_json(mo);
    j["mobility"] = to_string(classify_mobility(r.D));
    double tsum = 0.0;
    for (std::size_t k = 0; k < t.frames(); ++k) tsum += t.temperature_at(k);
    j["mean_temperature"] = t.frames() ? tsum / static_cast<double>(t.frames()) : 0.0;
    auto* res = make_result(dump(j));
    res->parts.emplace_back("msd.csv", msd_csv(r));
    if (o.value("write_trajectory", false)) res->parts.emplace_back("trajectory.extxyz", trajectory_extxyz(t));
    *out = res;
  });
}

ms_status ms_generate(const char* spec_json, size_t count, ms_result** out) {
  return guarded([&] {
    require(spec_json, "spec");
    require(out, "out");
    const json j = options(spec_json);
    const GeneratorSpec spec = generator_spec_from_json(j);
    const GenerationResult g = generate_candidates(spec, count, j.value("first_index", std::size_t{0}));
    json ids = json::array();
    for (const auto& s : g.structures) ids.push_back(s.tags().at("id"));
    auto* res = make_result(dump({{"count", g.structures.size()},
                                  {"ids", ids},
                                  {"lattice_draws", g.stats.lattice_draws},
                                  {"placement_draws", g.stats.placement_draws},
                                  {"acceptance_rate", g.stats.acceptance_rate()},
                                  {"spec", to_json(spec)}}));
    res->parts.emplace_back("extxyz", io::write_extxyz_structures(g.structures));
    *out = res;
  });
}

ms_status ms_active_learning(const char* config_json, ms_result** out) {
  return guarded([&] {
    require(config_json, "config");
    require(out, "out");
    const CampaignConfig cfg = load_config(config_json);
    if (cfg.oracle.is_null()) throw InvalidArgument("active learning needs an oracle");
    const PotentialPtr oracle = potential_from_json(cfg.oracle);
    const AlResult r = run_al_loop(*oracle, cfg.active_learning);
    json recs = json::array();
    std::string lines;
    for (const auto& c : r.records) {
      recs.push_back(to_json(c));
      lines += to_json(c).dump() + "\n";
    }
    auto* res = make_result(dump({{"cycles", recs},
                                  {"converged", r.converged},
                                  {"training_size", r.training.size()},
                                  {"validation_size", r.validation.size()},
                                  {"oracle_evaluations", r.counters.oracle_evaluations},
                                  {"training_runs", r.counters.training_runs}}));
    res->parts.emplace_back("cycles.jsonl", lines);
    res->parts.emplace_back("checkpoint", save_potential(*r.ensemble));
    *out = res;
  });
}

ms_status ms_screen(const char* config_json, ms_result** out) {
  return guarded([&] {
    require(config_json, "config");
    require(out, "out");
    const CampaignConfig cfg = load_config(config_json);
    const ScreenOutcome s = screen(cfg);
    auto* res = make_result(dump(to_json(s.report)));
    res->parts.emplace_back("polymorphs.csv", polymorph_csv(s.report));
    res->parts.emplace_back("diffusivity.csv", diffusivity_csv(s.report));
    res->parts.emplace_back("dopants.csv", dopant_csv(s.report));
    res->parts.emplace_back("ledger", dump(to_json(s.ledger)));
    *out = res;
  });
}

ms_status ms_dope(const char* config_json, const char* const* host_ids, const char* const* host_poscars,
                  size_t n_hosts, ms_result** out) {
  return guarded([&] {
    require(config_json, "config");
    require(out, "out");
    CampaignConfig cfg = load_config(config_json);
    if (cfg.dopants.dopants.empty() || cfg.dopants.sites.empty())
      throw InvalidArgument("dope: config needs dopants.dopants and dopants.sites");
    set_num_threads(cfg.workers);
    std::vector<std::pair<std::string, Structure>> hosts;
    if (n_hosts > 0) {
      require(host_ids, "host_ids");
      require(host_poscars, "host_poscars");
      for (size_t i = 0; i < n_hosts; ++i) {
        require(host_ids[i], "host id");
        require(host_poscars[i], "host structure");
        hosts.emplace_back(host_ids[i], io::read_poscar(host_poscars[i]));
      }
    } else {
      const auto dir = std::filesystem::path(cfg.output_dir);
      const auto report_path = dir / "report.json";
      if (!std::filesystem::exists(report_path))
        throw Error(ErrorCode::kNotFound, "dope: no hosts given and no report at " + report_path.string());
      const ScreenReport rep = screen_report_from_json(json::parse(io::read_file(report_path.string())));
      const std::size_t want = cfg.dopants.hosts ? cfg.dopants.hosts : 1;
      for (const auto& row : rep.ranked)
        if (!row.imaginary && hosts.size() < want)
          hosts.emplace_back(row.id, io::read_poscar(io::read_file((dir / "structures" / (row.id + ".vasp")).string())));
      if (hosts.empty()) throw RuntimeError("dope: the campaign report has no dynamically stable host");
    }
    const PotentialPtr p = campaign_potential(cfg);
    ScreenReport rep;
    rep.dopants = dopant_analysis(cfg, *p, hosts);
    json rows = to_json(rep).at("dopants");
    auto* res = make_result(dump({{"t_star", cfg.t_star}, {"rows", rows}}));
    res->parts.emplace_back("dopants.csv", dopant_csv(rep));
    *out = res;
  });
}

ms_status ms_cost(const char* config_json, const char* ledger_json, ms_result** out) {
  return guarded([&] {
    require(out, "out");
    CostSettings settings;
    CostLedger ledger;
    bool have_ledger = false;
    if (ledger_json && *ledger_json) {
      ledger = cost_ledger_from_json(options(ledger_json));
      have_ledger = true;
    }
    if (config_json && *config_json) {
      const json j = options(config_json);
      // Either a full campaign config or a bare cost section.
      if (j.contains("generator")) {
        const CampaignConfig cfg = campaign_config_from_json(j);
        settings = cfg.cost;
        const auto lp = std::filesystem::path(cfg.output_dir) / "ledger.json";
        if (!have_ledger && std::filesystem::exists(lp)) {
          ledger = cost_ledger_from_json(json::parse(io::read_file(lp.string())));
          have_ledger = true;
        }
      } else {
        const json c = j.value("cost", j);
        if (c.contains("oracle_cost")) settings.oracle_cost = c.at("oracle_cost").get<double>();
        if (c.contains("surrogate_cost")) settings.surrogate_cost = c.at("surrogate_cost").get<double>();
        if (c.contains("training_cost")) settings.training_cost = c.at("training_cost").get<double>();
        if (c.contains("training_labels")) settings.training_labels = c.at("training_labels").get<std::size_t>();
      }
    }
    const CostReport r = cost_report(cost_model(ledger, settings));
    json j = to_json(r);
    j["ledger_measured"] = have_ledger;
    auto* res = make_result(dump(j));
    res->parts.emplace_back("cost.csv", cost_csv(r));
    *out = res;
  });
}

ms_status ms_verify(const char* config_json, double fraction, ms_result** out) {
  return guarded([&] {
    require(config_json, "config");
    require(out, "out");
    const CampaignConfig cfg = load_config(config_json);
    const VerifyResult v = verify(cfg, fraction);
    *out = make_result(dump({{"checked", v.checked}, {"mismatches", v.mismatches}, {"ok", v.ok()}}));
  });
}

}  // extern "C"
