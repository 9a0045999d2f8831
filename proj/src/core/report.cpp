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

#include <set>

#include "matscreen/campaign.hpp"
#include "matscreen/error.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

nlohmann::json to_json(const ScreenReport& r) {
  nlohmann::json relaxed = nlohmann::json::array();
  for (const auto& s : r.relaxed)
    relaxed.push_back({{"id", s.id}, {"hash", s.hash}, {"formation_energy", s.formation_energy},
                       {"converged", s.converged}});
  nlohmann::json ranked = nlohmann::json::array();
  for (std::size_t k = 0; k < r.ranked.size(); ++k) {
    const auto& p = r.ranked[k];
    ranked.push_back({{"rank", k + 1},
                      {"id", p.id},
                      {"hash", p.hash},
                      {"formula", p.formula},
                      {"natoms", p.natoms},
                      {"formation_energy", p.formation_energy},
                      {"dg_tstar", p.dg_tstar},
                      {"dg", p.dg},
                      {"lattice", {{"a", p.lattice[0]},
                                   {"b", p.lattice[1]},
                                   {"c", p.lattice[2]},
                                   {"alpha", p.lattice[3]},
                                   {"beta", p.lattice[4]},
                                   {"gamma", p.lattice[5]}}},
                      {"volume", p.volume},
                      {"converged", p.converged},
                      {"imaginary", p.imaginary},
                      {"structure", "structures/" + p.id + ".vasp"}});
  }
  nlohmann::json diff = nlohmann::json::array();
  for (const auto& d : r.diffusivity)
    diff.push_back({{"id", d.id}, {"D", d.D}, {"mobility", d.mobility}, {"D_total", d.D_total},
                    {"mobility_total", d.mobility_total}});
  nlohmann::json dop = nlohmann::json::array();
  for (const auto& h : r.dopants)
    dop.push_back({{"host", h.host},
                   {"dopant", h.dopant},
                   {"site", h.site},
                   {"substituted", h.substituted},
                   {"occupations", h.occupations},
                   {"ddg_tstar", h.ddg_tstar},
                   {"ddg_zero", h.ddg_zero},
                   {"bucket_tstar", h.bucket_tstar},
                   {"bucket_zero", h.bucket_zero},
                   {"best_occupation", h.best_occupation}});
  nlohmann::json fail = nlohmann::json::array();
  for (const auto& f : r.failures) fail.push_back({{"id", f.id}, {"stage", f.stage}, {"message", f.message}});
  nlohmann::json al = nlohmann::json::array();
  for (const auto& c : r.al_cycles) al.push_back(to_json(c));
  return {{"schema_version", r.schema_version},
          {"provenance",
           {{"config_hash", r.config_hash},
            {"seed", r.seed},
            {"potential_source", r.potential_source},
            {"potential_hash", r.potential_hash}}},
          {"conditions", {{"t_star", r.t_star}, {"pressure", r.pressure}, {"temperatures", r.temperatures}}},
          {"candidates", r.candidates},
          {"relaxed", relaxed},
          {"ranked", ranked},
          {"diffusivity", diff},
          {"dopants", dop},
          {"failures", fail},
          {"active_learning", al}};
}

ScreenReport screen_report_from_json(const nlohmann::json& j) {
  try {
    ScreenReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion)
      throw ParseError("report: unsupported schema_version " + std::to_string(r.schema_version));
    const auto& pv = j.at("provenance");
    r.config_hash = pv.at("config_hash").get<std::string>();
    r.seed = pv.at("seed").get<std::uint64_t>();
    r.potential_source = pv.at("potential_source").get<std::string>();
    r.potential_hash = pv.at("potential_hash").get<std::string>();
    const auto& cond = j.at("conditions");
    r.t_star = cond.at("t_star").get<double>();
    r.pressure = cond.at("pressure").get<double>();
    r.temperatures = cond.at("temperatures").get<std::vector<double>>();
    r.candidates = j.at("candidates").get<std::size_t>();
    for (const auto& s : j.at("relaxed"))
      r.relaxed.push_back({s.at("id").get<std::string>(), s.at("hash").get<std::string>(),
                           s.at("formation_energy").get<double>(), s.at("converged").get<bool>()});
    for (const auto& p : j.at("ranked")) {
      PolymorphRow row;
      row.id = p.at("id").get<std::string>();
      row.hash = p.at("hash").get<std::string>();
      row.formula = p.at("formula").get<std::string>();
      row.natoms = p.at("natoms").get<std::size_t>();
      row.formation_energy = p.at("formation_energy").get<double>();
      row.dg_tstar = p.at("dg_tstar").get<double>();
      row.dg = p.at("dg").get<std::vector<double>>();
      const auto& l = p.at("lattice");
      row.lattice = {l.at("a").get<double>(),     l.at("b").get<double>(),    l.at("c").get<double>(),
                     l.at("alpha").get<double>(), l.at("beta").get<double>(), l.at("gamma").get<double>()};
      row.volume = p.at("volume").get<double>();
      row.converged = p.at("converged").get<bool>();
      row.imaginary = p.at("imaginary").get<bool>();
      r.ranked.push_back(std::move(row));
    }
    for (const auto& d : j.at("diffusivity")) {
      DiffusivityRow row;
      row.id = d.at("id").get<std::string>();
      row.D = d.at("D").get<std::map<std::string, double>>();
      row.mobility = d.at("mobility").get<std::map<std::string, std::string>>();
      row.D_total = d.at("D_total").get<double>();
      row.mobility_total = d.at("mobility_total").get<std::string>();
      r.diffusivity.push_back(std::move(row));
    }
    for (const auto& h : j.at("dopants")) {
      HeatmapRow row;
      row.host = h.at("host").get<std::string>();
      row.dopant = h.at("dopant").get<std::string>();
      row.site = h.at("site").get<std::string>();
      row.substituted = h.at("substituted").get<std::size_t>();
      row.occupations = h.at("occupations").get<std::size_t>();
      row.ddg_tstar = h.at("ddg_tstar").get<double>();
      row.ddg_zero = h.at("ddg_zero").get<double>();
      row.bucket_tstar = h.at("bucket_tstar").get<std::string>();
      row.bucket_zero = h.at("bucket_zero").get<std::string>();
      row.best_occupation = h.at("best_occupation").get<std::size_t>();
      r.dopants.push_back(std::move(row));
    }
    for (const auto& f : j.at("failures"))
      r.failures.push_back({f.at("id").get<std::string>(), f.at("stage").get<std::string>(),
                            f.at("message").get<std::string>()});
    for (const auto& c : j.at("active_learning")) r.al_cycles.push_back(al_cycle_record_from_json(c));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::string polymorph_csv(const ScreenReport& r) {
  std::string out = "rank,id,formula,natoms,dg_tstar_ev_per_atom,formation_energy_ev_per_atom,a,b,c,alpha,beta,gamma,"
                    "volume,converged,imaginary";
  for (double T : r.temperatures) out += ",dg_" + format_double(T) + "K";
  out += "\n";
  for (std::size_t k = 0; k < r.ranked.size(); ++k) {
    const auto& p = r.ranked[k];
    out += std::to_string(k + 1) + "," + csv_field(p.id) + "," + p.formula + "," + std::to_string(p.natoms) + "," +
           format_double(p.dg_tstar) + "," + format_double(p.formation_energy);
    for (double x : p.lattice) out += "," + format_double(x);
    out += "," + format_double(p.volume) + "," + (p.converged ? "true" : "false") + "," +
           (p.imaginary ? "true" : "false");
    for (double g : p.dg) out += "," + format_double(g);
    out += "\n";
  }
  return out;
}

std::string diffusivity_csv(const ScreenReport& r) {
  std::set<std::string> species;
  for (const auto& d : r.diffusivity)
    for (const auto& [sym, D] : d.D) species.insert(sym);
  std::string out = "id,D_total_cm2_per_s,mobility";
  for (const auto& s : species) out += ",D_" + s + ",mobility_" + s;
  out += "\n";
  for (const auto& d : r.diffusivity) {
    out += csv_field(d.id) + "," + format_double(d.D_total) + "," + d.mobility_total;
    for (const auto& s : species) {
      auto it = d.D.find(s);
      out += it == d.D.end() ? ",," : "," + format_double(it->second) + "," + d.mobility.at(s);
    }
    out += "\n";
  }
  return out;
}

std::string dopant_csv(const ScreenReport& r) {
  std::string out =
      "host,dopant,site,substituted,occupations,ddg_tstar_ev_per_atom,bucket_tstar,ddg_0K_ev_per_atom,bucket_0K,"
      "best_occupation\n";
  for (const auto& h : r.dopants)
    out += csv_field(h.host) + "," + h.dopant + "," + h.site + "," + std::to_string(h.substituted) + "," +
           std::to_string(h.occupations) + "," + format_double(h.ddg_tstar) + "," + h.bucket_tstar + "," +
           format_double(h.ddg_zero) + "," + h.bucket_zero + "," + std::to_string(h.best_occupation) + "\n";
  return out;
}

}  // namespace matscreen
