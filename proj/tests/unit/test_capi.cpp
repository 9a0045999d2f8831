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

#include <cmath>
#include <string>

#include <json.hpp>

#include "matscreen/matscreen.h"

namespace {

const char* kPoscar =
    "dimer\n1.0\n30 0 0\n0 30 0\n0 0 30\nAr\n2\nCartesian\n1 1 1\n2.2 1 1\n";

const char* kLj = R"({"format":"matscreen-potential","version":1,"kind":"lennard_jones",
  "model":{"epsilon":0.0104,"sigma":3.4,"cutoff":8.0,"shift":false}})";

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("status names and errors") {
  CHECK(std::string(ms_status_name(MS_OK)) == "ok");
  CHECK(std::string(ms_version()).size() > 0);
  ms_structure* s = nullptr;
  CHECK(ms_structure_read("garbage", "poscar", &s) == MS_ERR_PARSE);
  CHECK(s == nullptr);
  CHECK(std::string(ms_last_error()).size() > 0);
  CHECK(ms_structure_read(kPoscar, "cif", &s) == MS_ERR_INVALID_ARGUMENT);
  CHECK(ms_structure_read(nullptr, "poscar", &s) == MS_ERR_INVALID_ARGUMENT);
  ms_potential* p = nullptr;
  CHECK(ms_potential_load("{}", &p) == MS_ERR_PARSE);
  CHECK(ms_set_threads(0) == MS_ERR_INVALID_ARGUMENT);
  CHECK(ms_set_threads(1) == MS_OK);
}

TEST_CASE("structure and potential round trip") {
  ms_structure* s = nullptr;
  REQUIRE(ms_structure_read(kPoscar, "poscar", &s) == MS_OK);
  size_t n = 0;
  CHECK(ms_structure_size(s, &n) == MS_OK);
  CHECK(n == 2);
  double v = 0;
  CHECK(ms_structure_volume(s, &v) == MS_OK);
  CHECK(v == doctest::Approx(27000.0));
  double xyz[6];
  CHECK(ms_structure_positions(s, xyz, 6) == MS_OK);
  CHECK(xyz[3] == doctest::Approx(2.2));
  CHECK(ms_structure_positions(s, xyz, 5) == MS_ERR_INVALID_ARGUMENT);

  ms_result* text = nullptr;
  REQUIRE(ms_structure_write(s, "extxyz", &text) == MS_OK);
  ms_structure* back = nullptr;
  CHECK(ms_structure_read(ms_result_text(text), "extxyz", &back) == MS_OK);
  ms_result_free(text);
  ms_structure_free(back);

  ms_potential* p = nullptr;
  REQUIRE(ms_potential_load(kLj, &p) == MS_OK);
  ms_result* kind = nullptr;
  CHECK(ms_potential_kind(p, &kind) == MS_OK);
  CHECK(std::string(ms_result_text(kind)) == "lennard_jones");
  ms_result_free(kind);

  ms_result* eval = nullptr;
  REQUIRE(ms_evaluate(p, s, &eval) == MS_OK);
  const std::string json = ms_result_text(eval);
  CHECK(json.find("\"energy\"") != std::string::npos);
  CHECK(ms_result_size(eval) == json.size());
  ms_result_free(eval);

  ms_structure* relaxed = nullptr;
  ms_result* rr = nullptr;
  REQUIRE(ms_relax(p, s, R"({"f_tol": 1e-6})", &relaxed, &rr) == MS_OK);
  CHECK(ms_result_part(rr, "poscar") != nullptr);
  CHECK(ms_result_part(rr, "missing") == nullptr);
  CHECK(ms_result_part_count(rr) == 1);
  CHECK(std::string(ms_result_part_name(rr, 0)) == "poscar");
  double r[6];
  ms_structure_positions(relaxed, r, 6);
  const double dx = std::remainder(r[3] - r[0], 30.0);
  CHECK(std::abs(dx) == doctest::Approx(3.4 * 1.122462048309373).epsilon(1e-4));
  ms_result_free(rr);
  ms_structure_free(relaxed);

  CHECK(ms_relax(p, s, "[1,2]", nullptr, &rr) == MS_ERR_INVALID_ARGUMENT);
  CHECK(ms_relax(p, s, "{bad", nullptr, &rr) == MS_ERR_PARSE);
  ms_potential_free(p);
  ms_structure_free(s);
}

TEST_CASE("operations through the C interface") {
  ms_result* gen = nullptr;
  REQUIRE(ms_generate(R"({"composition": {"Ca": 1, "O": 1}, "seed": 4})", 3, &gen) == MS_OK);
  const std::string frames = ms_result_part(gen, "extxyz");
  CHECK(frames.find("Lattice=") != std::string::npos);
  ms_result_free(gen);

  ms_result* cost = nullptr;
  REQUIRE(ms_cost(R"({"oracle_cost": 50, "surrogate_cost": 1, "training_labels": 100})", nullptr, &cost) == MS_OK);
  const auto j = nlohmann::json::parse(ms_result_text(cost));
  CHECK(j.at("crossover_count") == 103);
  CHECK(ms_result_part(cost, "cost.csv") != nullptr);
  ms_result_free(cost);
  CHECK(ms_cost(R"({"oracle_cost": -1, "surrogate_cost": 1})", nullptr, &cost) == MS_ERR_INVALID_ARGUMENT);
}

}  // TEST_SUITE
