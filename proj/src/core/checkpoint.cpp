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

#include "matscreen/descriptor.hpp"
#include "matscreen/error.hpp"
#include "matscreen/potential.hpp"

namespace matscreen {

namespace {
constexpr const char* kFormat = "matscreen-potential";
constexpr int kVersion = 1;
}  // namespace

std::string save_potential(const Potential& p) {
  nlohmann::json j{{"format", kFormat}, {"version", kVersion}, {"kind", p.kind()},
                   {"model", p.to_json()}};
  return j.dump(1) + "\n";
}

PotentialPtr potential_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("checkpoint: expected a JSON object");
  if (j.value("format", std::string()) != kFormat)
    throw ParseError(std::string("checkpoint: format must be \"") + kFormat + "\"");
  if (j.value("version", 0) != kVersion)
    throw ParseError("checkpoint: unsupported version " + j.value("version", nlohmann::json()).dump());
  if (!j.contains("kind") || !j.contains("model")) throw ParseError("checkpoint: missing kind or model");
  const std::string kind = j.at("kind").get<std::string>();
  const auto& m = j.at("model");
  try {
    if (kind == "lennard_jones") return LennardJones::from_json(m);
    if (kind == "harmonic_pair")
      return std::make_shared<HarmonicPair>(m.at("k").get<double>(), m.at("r0").get<double>(),
                                            m.at("cutoff").get<double>());
    if (kind == "zero") return std::make_shared<ZeroPotential>();
    if (kind == "oracle") return oracle_potential(oracle_spec_from_json(m));
    if (kind == "descriptor") return DescriptorPotential::from_json(m);
    if (kind == "ensemble") return EnsemblePotential::from_json(m);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint (" + kind + "): " + e.what());
  }
  throw ParseError("checkpoint: unknown potential kind '" + kind + "'");
}

PotentialPtr load_potential(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  return potential_from_json(j);
}

}  // namespace matscreen
