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

#include <set>

#include "helpers.hpp"
#include "matscreen/active.hpp"
#include "matscreen/error.hpp"

using namespace matscreen;
using namespace matscreen::testing;

namespace {

EnsembleStats stats(double e, double f) {
  EnsembleStats s;
  s.energy_std = e;
  s.force_std = f;
  return s;
}

AlOptions tiny_options() {
  AlOptions o;
  o.generator.composition = {{"Ca", 2}, {"O", 2}};
  o.generator.seed = 3;
  o.generator.min_distance_scale = 0.85;
  o.generator.volume_min = 12;
  o.generator.volume_max = 22;
  o.seed_count = 12;
  o.per_cycle = 6;
  o.validation_count = 8;
  o.member_seeds = {1, 2};
  o.fit.epochs = 15;
  o.fit.descriptor.species = {"Ca", "O"};
  o.fit.descriptor.hidden = {8, 8};
  o.relax.max_iter = 20;
  return o;
}

}  // namespace

TEST_SUITE("active") {

TEST_CASE("flagging rule") {
  const Thresholds th;
  CHECK(th.energy_std_max == 0.040);
  CHECK(th.force_std_max == 1.0);
  CHECK(th.pass_fraction_min == 0.90);
  CHECK(is_flagged(stats(0.045, 0.5), th));
  CHECK_FALSE(is_flagged(stats(0.010, 0.2), th));
  CHECK(is_flagged(stats(0.010, 1.5), th));
  CHECK_FALSE(is_flagged(stats(0.040, 1.0), th));
}

TEST_CASE("termination rule") {
  const Thresholds th;
  CHECK(should_terminate(1.0 - 8.0 / 100.0, th));
  CHECK_FALSE(should_terminate(0.89, th));
  Thresholds zero;
  zero.pass_fraction_min = 0.0;
  CHECK(should_terminate(0.0, zero));
  Thresholds bad;
  bad.pass_fraction_min = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("flagging is monotone in the thresholds") {
  DescriptorSpec spec;
  spec.species = {"Ca", "O"};
  std::vector<DescriptorPtr> members;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto m = std::make_shared<DescriptorPotential>(spec, seed);
    m->energy_scale = 0.05;
    members.push_back(m);
  }
  EnsemblePotential e(members);
  const auto structures = random_structures({{"Ca", 2}, {"O", 2}}, 40, 8, 1.9, 12, 22);
  Thresholds th;
  th.energy_std_max = 0.01;
  th.force_std_max = 0.05;
  std::set<std::size_t> previous;
  bool first = true;
  for (int k = 0; k < 6; ++k) {
    const auto r = flag_uncertain(e, structures, th);
    const std::set<std::size_t> now(r.flagged.begin(), r.flagged.end());
    CHECK(r.pass_fraction == doctest::Approx(1.0 - static_cast<double>(now.size()) / 40.0));
    if (!first)
      for (auto i : now) CHECK(previous.count(i) == 1);
    previous = now;
    first = false;
    if (k % 2) th.energy_std_max *= 2;
    else th.force_std_max *= 2;
  }
}

TEST_CASE("loop with zero pass fraction runs one cycle") {
  auto oracle = oracle_potential({});
  auto opt = tiny_options();
  opt.thresholds.pass_fraction_min = 0.0;
  const auto r = run_al_loop(*oracle, opt);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].terminated);
  CHECK(r.converged);
  CHECK(r.records[0].cycle == 1);
}

TEST_CASE("loop records are consistent and labels are unique") {
  auto oracle = oracle_potential({});
  auto opt = tiny_options();
  opt.thresholds.max_cycles = 3;
  opt.thresholds.energy_std_max = 0.005;
  std::vector<ALCycleRecord> seen;
  const auto r = run_al_loop(*oracle, opt, [&](const ALCycleRecord& c) { seen.push_back(c); });
  REQUIRE(!r.records.empty());
  CHECK(r.converged == r.records.back().terminated);
  if (!r.converged) CHECK(r.records.size() == static_cast<std::size_t>(opt.thresholds.max_cycles));
  CHECK(seen.size() == r.records.size());
  std::size_t size = opt.seed_count;
  for (const auto& c : r.records) {
    CHECK(c.pass_fraction == doctest::Approx(1.0 - static_cast<double>(c.flagged) / static_cast<double>(c.candidates)));
    // Replayable from the record alone.
    CHECK(c.terminated == should_terminate(c.pass_fraction, opt.thresholds));
    CHECK(c.labeled <= c.flagged);
    size += c.labeled;
    CHECK(c.training_size == size);
    // Records survive a JSON round trip.
    CHECK(to_json(al_cycle_record_from_json(to_json(c))) == to_json(c));
  }
  std::set<std::string> hashes;
  for (const auto& f : r.training) hashes.insert(f.structure.content_hash());
  for (const auto& f : r.validation) hashes.insert(f.structure.content_hash());
  CHECK(hashes.size() == r.training.size() + r.validation.size());
  CHECK(r.counters.oracle_evaluations == r.training.size() + r.validation.size());
}

}  // TEST_SUITE
