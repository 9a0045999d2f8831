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

#include "matscreen/config.hpp"

#include <cmath>
#include <regex>
#include <set>

#include "matscreen/elements.hpp"
#include "matscreen/potential.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "invalid config";
  for (std::size_t i = 0; i < issues.size(); ++i) out += (i ? "; " : ": ") + issues[i];
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : InvalidArgument(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<double> parse_temperature_grid(std::string_view text) {
  static const std::regex re(
      R"(^\s*([-+0-9.eE]+)\s*\.\.\s*([-+0-9.eE]+)\s*step\s*([-+0-9.eE]+)\s*$)");
  const std::string s(text);
  std::smatch m;
  double lo = 0, hi = 0, step = 0;
  if (!std::regex_match(s, m, re) || !parse_double(m[1].str(), lo) || !parse_double(m[2].str(), hi) ||
      !parse_double(m[3].str(), step))
    throw InvalidArgument("temperature grid must look like \"lo..hi step dt\", got \"" + s + "\"");
  if (!(step > 0.0)) throw InvalidArgument("temperature grid step must be positive");
  if (!(hi >= lo)) throw InvalidArgument("temperature grid upper bound is below the lower bound");
  const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  if (n > 1000000) throw InvalidArgument("temperature grid has too many points");
  std::vector<double> out;
  for (long long k = 0; k <= n; ++k) out.push_back(lo + static_cast<double>(k) * step);
  return out;
}

std::vector<double> parse_temperature_grid(const nlohmann::json& j) {
  if (j.is_string()) return parse_temperature_grid(std::string_view(j.get_ref<const std::string&>()));
  if (j.is_number()) return {j.get<double>()};
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number()) throw InvalidArgument("temperature grid entries must be numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  throw InvalidArgument("temperature grid must be a string, number or array");
}

namespace {

/// Reads optional typed fields of one JSON object, collecting every problem
/// under its dotted path.
class Section {
 public:
  Section(const nlohmann::json* j, std::string path, std::vector<std::string>& issues)
      : j_(j), path_(std::move(path)), issues_(issues) {
    if (j_ && !j_->is_object()) {
      issues_.push_back(path_ + ": expected an object");
      j_ = nullptr;
    }
  }

  bool has(const char* key) const { return j_ && j_->contains(key); }
  const nlohmann::json* raw(const char* key) const { return has(key) ? &j_->at(key) : nullptr; }
  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void issue(const std::string& key, const std::string& msg) { issues_.push_back(path(key) + ": " + msg); }

  template <class T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = j_->at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      issue(key, "has the wrong type");
    }
  }

  Section sub(const char* key) { return Section(raw(key), path(key), issues_); }

  void reject_unknown(std::initializer_list<const char*> known) {
    if (!j_) return;
    std::set<std::string> ok(known.begin(), known.end());
    for (const auto& [k, v] : j_->items())
      if (!ok.count(k)) issue(k, "unknown field");
  }

 private:
  const nlohmann::json* j_;
  std::string path_;
  std::vector<std::string>& issues_;
};

nlohmann::json normalize_checkpoint(nlohmann::json j) {
  if (j.is_object() && !j.contains("format")) {
    j["format"] = "matscreen-potential";
    if (!j.contains("version")) j["version"] = 1;
  }
  return j;
}

}  // namespace

CampaignConfig campaign_config_from_json(const nlohmann::json& root) {
  std::vector<std::string> issues;
  CampaignConfig c;
  Section top(&root, "", issues);
  top.reject_unknown({"seed", "output_dir", "workers", "generator", "candidates", "temperatures", "t_star",
                      "pressure", "thresholds", "references", "oracle", "potential", "active_learning", "relax",
                      "phonon", "md", "dopants", "cost"});
  top.get("seed", c.seed);
  top.get("output_dir", c.output_dir);
  top.get("workers", c.workers);
  if (c.workers < 1) top.issue("workers", "must be >= 1");

  // Generator; its seed defaults to the campaign seed.
  if (!top.has("generator")) {
    top.issue("generator", "required");
  } else {
    nlohmann::json g = root.at("generator");
    if (g.is_object() && !g.contains("seed")) g["seed"] = c.seed;
    try {
      c.generator = generator_spec_from_json(g);
    } catch (const std::exception& e) {
      top.issue("generator", e.what());
    }
  }
  top.get("candidates", c.candidates);
  if (c.candidates < 1) top.issue("candidates", "must be >= 1");

  try {
    c.temperatures = top.has("temperatures") ? parse_temperature_grid(root.at("temperatures"))
                                             : parse_temperature_grid(std::string_view("0..2000 step 50"));
    for (std::size_t i = 0; i < c.temperatures.size(); ++i) {
      if (!(c.temperatures[i] >= 0.0)) throw InvalidArgument("temperatures must be non-negative");
      if (i && !(c.temperatures[i] > c.temperatures[i - 1])) throw InvalidArgument("grid must be ascending");
    }
    if (c.temperatures.empty()) throw InvalidArgument("grid is empty");
  } catch (const std::exception& e) {
    top.issue("temperatures", e.what());
  }
  top.get("t_star", c.t_star);
  if (!(c.t_star >= 0.0)) top.issue("t_star", "must be non-negative");
  top.get("pressure", c.pressure);
  if (!std::isfinite(c.pressure)) top.issue("pressure", "must be finite");

  {
    Section th = top.sub("thresholds");
    th.reject_unknown({"energy_std", "force_std", "stress_std", "pass_fraction", "max_cycles"});
    th.get("energy_std", c.thresholds.energy_std_max);
    th.get("force_std", c.thresholds.force_std_max);
    if (th.has("stress_std") && !th.raw("stress_std")->is_null()) th.get("stress_std", c.thresholds.stress_std_max);
    th.get("pass_fraction", c.thresholds.pass_fraction_min);
    th.get("max_cycles", c.thresholds.max_cycles);
    if (!(c.thresholds.energy_std_max > 0.0)) th.issue("energy_std", "must be positive");
    if (!(c.thresholds.force_std_max > 0.0)) th.issue("force_std", "must be positive");
    if (!(c.thresholds.stress_std_max > 0.0)) th.issue("stress_std", "must be positive");
    if (!(c.thresholds.pass_fraction_min > 0.0 && c.thresholds.pass_fraction_min <= 1.0))
      th.issue("pass_fraction", "must lie in (0, 1]");
    if (c.thresholds.max_cycles < 1) th.issue("max_cycles", "must be >= 1");
  }

  top.get("references", c.references);
  std::set<std::string> needed;
  for (const auto& [sym, n] : c.generator.composition) needed.insert(sym);

  // Potential source and oracle.
  {
    Section pot = top.sub("potential");
    pot.reject_unknown({"source", "path"});
    pot.get("source", c.potential_source);
    pot.get("path", c.potential_path);
    static const std::set<std::string> kSources{"oracle", "checkpoint", "active_learning"};
    if (!kSources.count(c.potential_source))
      pot.issue("source", "must be one of oracle, checkpoint, active_learning");
    if (c.potential_source == "checkpoint" && c.potential_path.empty()) pot.issue("path", "required for checkpoint");
  }
  if (top.has("oracle")) {
    c.oracle = normalize_checkpoint(root.at("oracle"));
    try {
      potential_from_json(c.oracle);
    } catch (const std::exception& e) {
      top.issue("oracle", e.what());
    }
  } else if (c.potential_source != "checkpoint") {
    top.issue("oracle", "required unless potential.source is checkpoint");
  }

  // Active learning; generator and thresholds come from the top level.
  {
    Section al = top.sub("active_learning");
    al.reject_unknown({"seed_count", "per_cycle", "validation_count", "members", "member_seeds", "fit", "relax",
                       "relax_candidates", "collapse_fraction"});
    AlOptions& o = c.active_learning;
    o.generator = c.generator;
    o.thresholds = c.thresholds;
    al.get("seed_count", o.seed_count);
    al.get("per_cycle", o.per_cycle);
    al.get("validation_count", o.validation_count);
    int members = 4;
    al.get("members", members);
    o.member_seeds.clear();
    if (al.has("member_seeds")) {
      al.get("member_seeds", o.member_seeds);
    } else {
      for (int k = 0; k < members; ++k) o.member_seeds.push_back(mix_seed(c.seed, 0x3e3b0000ULL + k));
    }
    if (std::set<std::uint64_t>(o.member_seeds.begin(), o.member_seeds.end()).size() != o.member_seeds.size() ||
        o.member_seeds.size() < 2)
      al.issue(al.has("member_seeds") ? "member_seeds" : "members", "need at least two distinct members");
    if (const auto* f = al.raw("fit")) {
      try {
        o.fit = fit_hyperparams_from_json(*f);
      } catch (const std::exception& e) {
        al.issue("fit", e.what());
      }
    }
    if (!al.has("fit") || !al.raw("fit")->contains("split_seed")) o.fit.split_seed = mix_seed(c.seed, 0x5e7);
    if (const auto* r = al.raw("relax")) {
      try {
        o.relax = relax_options_from_json(*r);
      } catch (const std::exception& e) {
        al.issue("relax", e.what());
      }
    }
    al.get("relax_candidates", o.relax_candidates);
    al.get("collapse_fraction", o.collapse_fraction);
    if (o.seed_count < 10) al.issue("seed_count", "must be >= 10");
    if (o.per_cycle < 1) al.issue("per_cycle", "must be >= 1");
    if (o.validation_count < 1) al.issue("validation_count", "must be >= 1");
    if (!(o.collapse_fraction > 0.0 && o.collapse_fraction <= 1.0)) al.issue("collapse_fraction", "must lie in (0, 1]");
  }

  // Relaxation.
  if (const auto* r = top.raw("relax")) {
    Section rs = top.sub("relax");
    rs.get("cell", c.relax_cell);
    nlohmann::json rest = r->is_object() ? *r : nlohmann::json::object();
    rest.erase("cell");
    if (rest.contains("pressure")) rs.issue("pressure", "set the top-level pressure instead");
    try {
      c.relax = cell_relax_options_from_json(rest);
    } catch (const std::exception& e) {
      top.issue("relax", e.what());
    }
  }
  c.relax.pressure = c.pressure;

  {
    Section ph = top.sub("phonon");
    ph.reject_unknown({"mesh", "supercell_width", "amplitude", "top_k"});
    std::vector<int> mesh{c.phonon.mesh[0], c.phonon.mesh[1], c.phonon.mesh[2]};
    ph.get("mesh", mesh);
    if (mesh.size() != 3 || *std::min_element(mesh.begin(), mesh.end()) < 1)
      ph.issue("mesh", "must hold three positive integers");
    else
      c.phonon.mesh = {mesh[0], mesh[1], mesh[2]};
    ph.get("supercell_width", c.phonon.supercell_width);
    ph.get("amplitude", c.phonon.amplitude);
    ph.get("top_k", c.phonon.top_k);
    if (!(c.phonon.supercell_width > 0.0)) ph.issue("supercell_width", "must be positive");
    if (!(c.phonon.amplitude > 0.0)) ph.issue("amplitude", "must be positive");
  }
  {
    Section md = top.sub("md");
    md.reject_unknown({"top_k", "temperature", "dt", "steps", "friction", "stride"});
    md.get("top_k", c.md.top_k);
    md.get("temperature", c.md.temperature);
    md.get("dt", c.md.dt);
    md.get("steps", c.md.steps);
    md.get("friction", c.md.friction);
    md.get("stride", c.md.stride);
    if (!(c.md.temperature > 0.0)) md.issue("temperature", "must be positive");
    if (!(c.md.dt > 0.0 && c.md.dt <= 2.0)) md.issue("dt", "must lie in (0, 2] fs");
    if (c.md.steps < 1) md.issue("steps", "must be >= 1");
    if (!(c.md.friction >= 0.0)) md.issue("friction", "must be non-negative");
    if (c.md.stride < 1) md.issue("stride", "must be >= 1");
  }
  {
    Section dp = top.sub("dopants");
    dp.reject_unknown({"hosts", "dopants", "sites", "concentration", "occupations"});
    dp.get("hosts", c.dopants.hosts);
    dp.get("dopants", c.dopants.dopants);
    dp.get("sites", c.dopants.sites);
    dp.get("concentration", c.dopants.concentration);
    dp.get("occupations", c.dopants.occupations);
    if (!(c.dopants.concentration > 0.0 && c.dopants.concentration <= 1.0))
      dp.issue("concentration", "must lie in (0, 1]");
    if (c.dopants.occupations < 1) dp.issue("occupations", "must be >= 1");
    for (std::size_t i = 0; i < c.dopants.dopants.size(); ++i) {
      if (!is_element(c.dopants.dopants[i]))
        dp.issue("dopants[" + std::to_string(i) + "]", "unknown element " + c.dopants.dopants[i]);
      if (c.dopants.hosts > 0) needed.insert(c.dopants.dopants[i]);
    }
    for (std::size_t i = 0; i < c.dopants.sites.size(); ++i)
      if (!c.generator.composition.empty() &&
          std::none_of(c.generator.composition.begin(), c.generator.composition.end(),
                       [&](const auto& e) { return e.first == c.dopants.sites[i]; }))
        dp.issue("sites[" + std::to_string(i) + "]", c.dopants.sites[i] + " is not in the composition");
    if (c.dopants.hosts > 0 && (c.dopants.dopants.empty() || c.dopants.sites.empty()))
      dp.issue("hosts", "dopant analysis needs dopants and sites");
  }
  {
    Section cs = top.sub("cost");
    cs.reject_unknown({"oracle_cost", "surrogate_cost", "training_cost", "training_labels"});
    auto opt_num = [&](const char* key, std::optional<double>& out) {
      double v = 0.0;
      if (!cs.has(key)) return;
      cs.get(key, v);
      if (!(v >= 0.0)) cs.issue(key, "must be non-negative");
      out = v;
    };
    opt_num("oracle_cost", c.cost.oracle_cost);
    opt_num("surrogate_cost", c.cost.surrogate_cost);
    opt_num("training_cost", c.cost.training_cost);
    if (cs.has("training_labels")) {
      std::size_t n = 0;
      cs.get("training_labels", n);
      c.cost.training_labels = n;
    }
  }

  for (const auto& sym : needed)
    if (!c.references.count(sym)) issues.push_back("references." + sym + ": missing chemical potential");

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

CampaignConfig load_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return campaign_config_from_json(j);
}

nlohmann::json CampaignConfig::to_json() const {
  nlohmann::json gen = matscreen::to_json(generator);
  nlohmann::json th{{"energy_std", thresholds.energy_std_max},
                    {"force_std", thresholds.force_std_max},
                    {"pass_fraction", thresholds.pass_fraction_min},
                    {"max_cycles", thresholds.max_cycles}};
  th["stress_std"] = std::isinf(thresholds.stress_std_max) ? nlohmann::json(nullptr)
                                                           : nlohmann::json(thresholds.stress_std_max);
  nlohmann::json al{{"seed_count", active_learning.seed_count},
                    {"per_cycle", active_learning.per_cycle},
                    {"validation_count", active_learning.validation_count},
                    {"member_seeds", active_learning.member_seeds},
                    {"fit", matscreen::to_json(active_learning.fit)},
                    {"relax", matscreen::to_json(active_learning.relax)},
                    {"relax_candidates", active_learning.relax_candidates},
                    {"collapse_fraction", active_learning.collapse_fraction}};
  nlohmann::json relax_j = matscreen::to_json(relax);
  relax_j.erase("pressure");
  relax_j["cell"] = relax_cell;
  nlohmann::json cost_j = nlohmann::json::object();
  if (cost.oracle_cost) cost_j["oracle_cost"] = *cost.oracle_cost;
  if (cost.surrogate_cost) cost_j["surrogate_cost"] = *cost.surrogate_cost;
  if (cost.training_cost) cost_j["training_cost"] = *cost.training_cost;
  if (cost.training_labels) cost_j["training_labels"] = *cost.training_labels;
  nlohmann::json pot{{"source", potential_source}};
  if (!potential_path.empty()) pot["path"] = potential_path;
  return {{"seed", seed},
          {"output_dir", output_dir},
          {"workers", workers},
          {"generator", gen},
          {"candidates", candidates},
          {"temperatures", temperatures},
          {"t_star", t_star},
          {"pressure", pressure},
          {"thresholds", th},
          {"references", references},
          {"oracle", oracle.is_null() ? nlohmann::json(nullptr) : oracle},
          {"potential", pot},
          {"active_learning", al},
          {"relax", relax_j},
          {"phonon",
           {{"mesh", {phonon.mesh[0], phonon.mesh[1], phonon.mesh[2]}},
            {"supercell_width", phonon.supercell_width},
            {"amplitude", phonon.amplitude},
            {"top_k", phonon.top_k}}},
          {"md",
           {{"top_k", md.top_k},
            {"temperature", md.temperature},
            {"dt", md.dt},
            {"steps", md.steps},
            {"friction", md.friction},
            {"stride", md.stride}}},
          {"dopants",
           {{"hosts", dopants.hosts},
            {"dopants", dopants.dopants},
            {"sites", dopants.sites},
            {"concentration", dopants.concentration},
            {"occupations", dopants.occupations}}},
          {"cost", cost_j}};
}

std::string CampaignConfig::hash() const {
  nlohmann::json j = to_json();
  j.erase("output_dir");
  j.erase("workers");
  return hash_hex(j.dump());
}

}  // namespace matscreen
