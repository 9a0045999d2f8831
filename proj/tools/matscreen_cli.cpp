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

// Command-line front end. Talks to the engine only through the C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "matscreen/matscreen.h"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ApiError : std::runtime_error {
  ApiError(ms_status s, const std::string& msg) : std::runtime_error(msg), status(s) {}
  ms_status status;
};

int exit_code(ms_status s) {
  switch (s) {
    case MS_OK: return kExitOk;
    case MS_ERR_INVALID_ARGUMENT:
    case MS_ERR_PARSE:
    case MS_ERR_NOT_FOUND: return kExitUsage;
    default: return kExitRuntime;
  }
}

void check(ms_status s) {
  if (s != MS_OK) throw ApiError(s, std::string(ms_status_name(s)) + ": " + ms_last_error());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw ApiError(MS_ERR_IO, "cannot write '" + path.string() + "'");
}

json parse_object(const std::string& text, const std::string& what) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw UsageError(what + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError(what + ": expected a JSON object");
  return j;
}

struct ResultHandle {
  ms_result* r = nullptr;
  ~ResultHandle() { ms_result_free(r); }
};

struct StructureHandle {
  ms_structure* s = nullptr;
  ~StructureHandle() { ms_structure_free(s); }
};

struct PotentialHandle {
  ms_potential* p = nullptr;
  ~PotentialHandle() { ms_potential_free(p); }
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  std::string format = "json";
};

// Writes the primary document and every part under --out when given, and
// prints either the primary JSON or the named CSV part.
void emit(const Globals& g, const ms_result* r, const std::string& csv_part, const std::string& primary_name) {
  if (!g.out.empty()) {
    const fs::path dir(g.out);
    write_file(dir / primary_name, ms_result_text(r));
    for (size_t i = 0; i < ms_result_part_count(r); ++i) {
      const std::string name = ms_result_part_name(r, i);
      std::string file = name;
      if (name == "checkpoint") file = "checkpoint.json";
      else if (name == "poscar") file = "relaxed.vasp";
      else if (name == "extxyz") file = "structures.extxyz";
      else if (name == "ledger") file = "ledger.json";
      write_file(dir / file, ms_result_part(r, name.c_str()));
    }
  }
  if (g.format == "csv") {
    if (csv_part.empty()) throw UsageError("this command has no CSV output");
    const char* t = ms_result_part(r, csv_part.c_str());
    if (!t) throw UsageError("no '" + csv_part + "' table was produced");
    std::cout << t;
  } else {
    std::cout << ms_result_text(r);
  }
}

std::string options_text(const Globals& g, const std::map<std::string, json>& overrides) {
  json o = g.config.empty() ? json::object() : parse_object(read_file(g.config), g.config);
  for (const auto& [k, v] : overrides) o[k] = v;
  return o.dump();
}

// Campaign configuration text with command-line overrides applied.
std::string campaign_text(const Globals& g) {
  if (g.config.empty()) throw UsageError("--config is required");
  json c = parse_object(read_file(g.config), g.config);
  if (g.seed) c["seed"] = *g.seed;
  if (!g.out.empty()) c["output_dir"] = g.out;
  if (g.threads) c["workers"] = *g.threads;
  return c.dump();
}

std::string structure_format(const std::string& path, const std::string& fmt) {
  if (!fmt.empty()) return fmt;
  const auto ext = fs::path(path).extension().string();
  return ext == ".xyz" || ext == ".extxyz" ? "extxyz" : "poscar";
}

struct StructureArgs {
  std::string potential;
  std::string structure;
  std::string format;
};

void add_structure_args(CLI::App* sc, StructureArgs& a) {
  sc->add_option("-p,--potential", a.potential, "Potential checkpoint (JSON)")->required();
  sc->add_option("-s,--structure", a.structure, "Input structure (POSCAR or extended XYZ)")->required();
  sc->add_option("--structure-format", a.format, "poscar or extxyz; inferred from the extension by default")
      ->check(CLI::IsMember({"poscar", "extxyz"}));
}

void load_inputs(const StructureArgs& a, PotentialHandle& p, StructureHandle& s) {
  check(ms_potential_load(read_file(a.potential).c_str(), &p.p));
  const std::string text = read_file(a.structure);
  check(ms_structure_read(text.c_str(), structure_format(a.structure, a.format).c_str(), &s.s));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matscreen: surrogate-driven materials screening"};
  app.set_version_flag("--version", std::string(ms_version()));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("-c,--config", g.config, "JSON options or campaign configuration file");
  app.add_option("--seed", g.seed, "Random seed override");
  app.add_option("-o,--out", g.out, "Output directory");
  app.add_option("-j,--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "Stdout format")->check(CLI::IsMember({"json", "csv"}));

  // fit
  std::string fit_data;
  int fit_members = 1;
  auto* fit = app.add_subcommand("fit", "Train a descriptor potential or ensemble on labeled extended XYZ");
  fit->add_option("-d,--data", fit_data, "Labeled frames (extended XYZ)")->required();
  fit->add_option("--members", fit_members, "Ensemble size; seeds are consecutive from --seed")
      ->check(CLI::PositiveNumber);

  // per-structure operations
  StructureArgs relax_a, phonon_a, elastic_a, shear_a, md_a;
  bool relax_cell = false;
  auto* relax = app.add_subcommand("relax", "Relax a structure");
  add_structure_args(relax, relax_a);
  relax->add_flag("--cell", relax_cell, "Relax the cell as well as the positions");
  auto* phonon = app.add_subcommand("phonon", "Phonon dispersion, DOS and harmonic thermodynamics");
  add_structure_args(phonon, phonon_a);
  auto* elastic = app.add_subcommand("elastic", "Elastic constants by finite strain");
  add_structure_args(elastic, elastic_a);
  auto* shear = app.add_subcommand("shear", "Ideal shear stress-strain curve");
  add_structure_args(shear, shear_a);
  auto* md = app.add_subcommand("md", "Langevin NVT run and Einstein diffusivity");
  add_structure_args(md, md_a);

  // generation and campaigns
  std::size_t gen_count = 10;
  auto* generate = app.add_subcommand("generate", "Random crystal candidates from a generator spec (--config)");
  generate->add_option("-n,--count", gen_count, "Number of structures")->check(CLI::PositiveNumber);
  auto* al = app.add_subcommand("al", "Active-learning loop from a campaign configuration");
  auto* screen = app.add_subcommand("screen", "Full screening campaign");
  std::vector<std::string> dope_hosts;
  auto* dope = app.add_subcommand("dope", "Dopant stabilization analysis");
  dope->add_option("--host", dope_hosts, "Host as ID=POSCAR; default: top hosts of the campaign report");
  std::string cost_ledger;
  auto* cost = app.add_subcommand("cost", "Cost crossover analysis");
  cost->add_option("--ledger", cost_ledger, "Cost ledger JSON; default: the campaign ledger");
  double verify_fraction = 0.1;
  auto* verify = app.add_subcommand("verify", "Re-derive a sample of report numbers and require equality");
  verify->add_option("--fraction", verify_fraction, "Sampled fraction of rows")->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g.threads) check(ms_set_threads(*g.threads));
    ResultHandle res;

    if (fit->parsed()) {
      std::map<std::string, json> ov;
      const std::uint64_t s0 = g.seed.value_or(0);
      if (g.seed || fit_members > 1) {
        json seeds = json::array();
        for (int k = 0; k < fit_members; ++k) seeds.push_back(s0 + static_cast<std::uint64_t>(k));
        ov["seeds"] = seeds;
      }
      const std::string data = read_file(fit_data);
      check(ms_fit(data.c_str(), options_text(g, ov).c_str(), &res.r));
      emit(g, res.r, "", "fit.json");
    } else if (relax->parsed()) {
      PotentialHandle p;
      StructureHandle s;
      load_inputs(relax_a, p, s);
      std::map<std::string, json> ov;
      if (relax_cell) ov["cell"] = true;
      check(ms_relax(p.p, s.s, options_text(g, ov).c_str(), nullptr, &res.r));
      if (g.out.empty() && g.format == "json") {
        std::cout << ms_result_text(res.r);
      } else {
        emit(g, res.r, "", "relax.json");
      }
    } else if (phonon->parsed() || elastic->parsed() || shear->parsed() || md->parsed()) {
      PotentialHandle p;
      StructureHandle s;
      std::map<std::string, json> ov;
      if (phonon->parsed()) {
        load_inputs(phonon_a, p, s);
        check(ms_phonon(p.p, s.s, options_text(g, ov).c_str(), &res.r));
        emit(g, res.r, "dispersion.csv", "phonon.json");
      } else if (elastic->parsed()) {
        load_inputs(elastic_a, p, s);
        check(ms_elastic(p.p, s.s, options_text(g, ov).c_str(), &res.r));
        emit(g, res.r, "elastic.csv", "elastic.json");
      } else if (shear->parsed()) {
        load_inputs(shear_a, p, s);
        check(ms_shear(p.p, s.s, options_text(g, ov).c_str(), &res.r));
        emit(g, res.r, "shear.csv", "shear.json");
      } else {
        load_inputs(md_a, p, s);
        if (g.seed) ov["seed"] = *g.seed;
        check(ms_md(p.p, s.s, options_text(g, ov).c_str(), &res.r));
        emit(g, res.r, "msd.csv", "md.json");
      }
    } else if (generate->parsed()) {
      if (g.config.empty()) throw UsageError("generate: --config with a generator spec is required");
      std::map<std::string, json> ov;
      if (g.seed) ov["seed"] = *g.seed;
      check(ms_generate(options_text(g, ov).c_str(), gen_count, &res.r));
      if (g.out.empty() && g.format == "json") {
        std::cout << ms_result_part(res.r, "extxyz");
      } else {
        emit(g, res.r, "", "generate.json");
      }
    } else if (al->parsed()) {
      const std::string cfg = campaign_text(g);
      check(ms_active_learning(cfg.c_str(), &res.r));
      emit(g, res.r, "", "active_learning.json");
    } else if (screen->parsed()) {
      // screen writes its own artifacts under the configured output directory.
      const std::string cfg = campaign_text(g);
      check(ms_screen(cfg.c_str(), &res.r));
      Globals quiet = g;
      quiet.out.clear();
      emit(quiet, res.r, "polymorphs.csv", "");
    } else if (dope->parsed()) {
      const std::string cfg = campaign_text(g);
      std::vector<std::string> ids, texts;
      for (const auto& h : dope_hosts) {
        const auto eq = h.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--host expects ID=PATH, got '" + h + "'");
        ids.push_back(h.substr(0, eq));
        texts.push_back(read_file(h.substr(eq + 1)));
      }
      std::vector<const char*> id_ptr, text_ptr;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        id_ptr.push_back(ids[i].c_str());
        text_ptr.push_back(texts[i].c_str());
      }
      check(ms_dope(cfg.c_str(), id_ptr.data(), text_ptr.data(), ids.size(), &res.r));
      emit(g, res.r, "dopants.csv", "dopants.json");
    } else if (cost->parsed()) {
      std::string cfg;
      if (!g.config.empty()) cfg = read_file(g.config);
      const std::string ledger = cost_ledger.empty() ? std::string() : read_file(cost_ledger);
      check(ms_cost(cfg.empty() ? nullptr : cfg.c_str(), ledger.empty() ? nullptr : ledger.c_str(), &res.r));
      emit(g, res.r, "cost.csv", "cost.json");
    } else if (verify->parsed()) {
      const std::string cfg = campaign_text(g);
      check(ms_verify(cfg.c_str(), verify_fraction, &res.r));
      std::cout << ms_result_text(res.r);
      if (!json::parse(ms_result_text(res.r)).at("ok").get<bool>()) {
        std::cerr << "verify: mismatches found\n";
        return kExitRuntime;
      }
    }
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ApiError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
