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

#include <filesystem>

#include "helpers.hpp"
#include "matscreen/campaign.hpp"
#include "matscreen/io.hpp"

using namespace matscreen;
using namespace matscreen::testing;
namespace fs = std::filesystem;

namespace {

CostModel model(double co, double cs, std::size_t labels, double train = 0.0) {
  CostModel m;
  m.oracle_cost = co;
  m.surrogate_cost = cs;
  m.training_labels = labels;
  m.training_cost = train;
  return m;
}

Structure rocksalt(double a) {
  const std::vector<Vec3> ca{{0, 0, 0}, {0.5, 0.5, 0}, {0.5, 0, 0.5}, {0, 0.5, 0.5}};
  std::vector<std::string> sp;
  std::vector<Vec3> f;
  for (const auto& x : ca) {
    sp.push_back("Ca");
    f.push_back(x);
    sp.push_back("O");
    f.push_back((x + Vec3(0.5, 0, 0)).unaryExpr([](double v) { return v - std::floor(v); }));
  }
  return Structure(sp, f, cubic(a));
}

nlohmann::json lj_oracle(double mg_o_epsilon) {
  return nlohmann::json::parse(R"({"kind":"lennard_jones","model":{"epsilon":0.1,"sigma":2.4,"cutoff":6.0,"shift":true,
    "pairs":[{"a":"Ca","b":"O","epsilon":0.4,"sigma":2.1},{"a":"Mg","b":"O","epsilon":)" +
                               std::to_string(mg_o_epsilon) + R"(,"sigma":2.1}]}})");
}

nlohmann::json toy_config(const std::string& dir) {
  nlohmann::json j = nlohmann::json::parse(R"({
    "seed": 7,
    "generator": {"composition": {"Ca": 2, "O": 2}, "volume_per_atom": [10, 25],
                  "min_distance": [["O", "O", 2.0], ["Ca", "Ca", 2.2], ["Ca", "O", 1.8]]},
    "candidates": 20,
    "temperatures": "0..1000 step 500",
    "references": {"Ca": -0.5, "O": -0.5},
    "potential": {"source": "oracle"},
    "phonon": {"top_k": 4, "mesh": [2, 2, 2], "supercell_width": 6.0},
    "md": {"top_k": 2, "steps": 400}
  })");
  j["oracle"] = lj_oracle(0.4);
  j["output_dir"] = dir;
  return j;
}

}  // namespace

TEST_SUITE("campaign") {

TEST_CASE("cost crossover") {
  const auto free = cost_report(model(1.0, 0.0, 100));
  REQUIRE(free.crossover);
  CHECK(*free.crossover == doctest::Approx(100.0));
  CHECK(*free.crossover_count == 100);

  const auto fifty = cost_report(model(50.0, 1.0, 100));
  CHECK(*fifty.crossover == doctest::Approx(100.0 * 50.0 / 49.0).epsilon(1e-12));
  CHECK(*fifty.crossover_count == 103);
  CHECK(fifty.speedup == 50.0);

  double previous = 1e300;
  for (double co = 2.0; co < 5000.0; co *= 2) {
    const auto r = cost_report(model(co, 1.0, 100, 30.0));
    CHECK(*r.crossover <= previous);
    previous = *r.crossover;
  }
  CHECK_FALSE(cost_report(model(1.0, 2.0, 10)).crossover);

  // Paths cross at the reported size.
  for (std::size_t k = 0; k < fifty.scan_size.size(); ++k) {
    const bool after = static_cast<double>(fifty.scan_size[k]) > *fifty.crossover;
    CHECK((fifty.oracle_path[k] > fifty.surrogate_path[k]) == after);
  }
}

TEST_CASE("cost model from a ledger") {
  CostLedger l;
  l.oracle_evaluations = 10;
  l.oracle_seconds = 5.0;
  l.surrogate_evaluations = 40;
  l.surrogate_seconds = 0.4;
  l.structures_screened = 4;
  l.training_labels = 12;
  const auto m = cost_model(l, {});
  CHECK(m.surrogate_cost == doctest::Approx(0.1));
  CHECK(m.oracle_cost == doctest::Approx(10 * 0.5));
  CHECK(m.training_labels == 12);
  CostSettings s;
  s.oracle_cost = 3.0;
  CHECK(cost_model(l, s).oracle_cost == 3.0);
  CHECK_THROWS_AS(cost_model(CostLedger{}, {}), InvalidArgument);
  CHECK(cost_ledger_from_json(to_json(l)).oracle_seconds == l.oracle_seconds);
}

TEST_CASE("ranking order") {
  PolymorphRow a, b, c;
  a.dg_tstar = -1.0;
  a.hash = "b";
  b.dg_tstar = -1.0;
  b.hash = "a";
  c.dg_tstar = -2.0;
  c.imaginary = true;
  CHECK(ranks_before(b, a));
  CHECK_FALSE(ranks_before(a, b));
  CHECK(ranks_before(a, c));
  CHECK_FALSE(ranks_before(c, a));
}

TEST_CASE("doping supercells") {
  const auto s = rocksalt(4.7);
  const IVec3 r = doping_repeat(s, "Ca", 0.10);
  CHECK(r[0] * r[1] * r[2] == 2);
  const IVec3 one = doping_repeat(s, "Ca", 0.5);
  CHECK(one[0] * one[1] * one[2] == 1);
  CHECK_THROWS_AS(doping_repeat(s, "Si", 0.1), InvalidArgument);
}

TEST_CASE("planted stabilizing dopant") {
  auto j = toy_config("/tmp/unused");
  j["oracle"] = lj_oracle(0.8);
  j["references"] = {{"Ca", -0.5}, {"O", -0.5}, {"Mg", -0.5}};
  j["dopants"] = {{"dopants", {"Mg", "Ca"}}, {"sites", {"Ca"}}, {"occupations", 2}};
  const auto cfg = load_config(j.dump());
  const auto p = potential_from_json(cfg.oracle);
  const auto host = relax_cell(rocksalt(4.7), *p, cfg.relax).structure;
  const auto rows = dopant_analysis(cfg, *p, {{"rs", host}});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].dopant == "Mg");
  CHECK(rows[0].ddg_tstar < 0.0);
  CHECK(rows[0].ddg_zero < 0.0);
  CHECK(rows[0].bucket_tstar == "blue");
  CHECK(rows[1].dopant == "Ca");
  CHECK(rows[1].ddg_tstar == 0.0);
  CHECK(rows[1].bucket_tstar == "white");
}

TEST_CASE("toy screen is deterministic, restartable and verifiable") {
  const fs::path root = fs::temp_directory_path() / "matscreen-unit-screen";
  fs::remove_all(root);
  const auto c1 = load_config(toy_config((root / "a").string()).dump());
  const auto c2 = load_config(toy_config((root / "b").string()).dump());
  const auto r1 = screen(c1);
  const auto r2 = screen(c2);
  CHECK(r1.report.ranked.size() == 4);
  CHECK(r1.report.diffusivity.size() == 2);
  CHECK(r1.report.relaxed.size() + r1.report.failures.size() >= 1);
  CHECK(r1.ledger.oracle_evaluations > 0);
  for (const char* name : {"report.json", "polymorphs.csv", "diffusivity.csv", "dopants.csv"})
    CHECK(io::read_file((root / "a" / name).string()) == io::read_file((root / "b" / name).string()));

  const auto again = screen(c1);
  CHECK(again.ledger.oracle_evaluations == 0);
  CHECK(nlohmann::json(to_json(again.report)) == to_json(r1.report));

  const auto report = screen_report_from_json(nlohmann::json::parse(io::read_file((root / "a" / "report.json").string())));
  CHECK(to_json(report) == to_json(r1.report));
  for (std::size_t k = 1; k < report.ranked.size(); ++k) CHECK_FALSE(ranks_before(report.ranked[k], report.ranked[k - 1]));

  const auto v = verify(c1, 1.0);
  CHECK(v.ok());
  CHECK(v.checked > 0);
  fs::remove_all(root);
}

}  // TEST_SUITE
