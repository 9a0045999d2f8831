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

#include "matscreen/mech.hpp"

#include <cmath>

#include "matscreen/error.hpp"
#include "matscreen/units.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

Mat3 voigt_strain(const Vector6& e) {
  Mat3 m;
  m << e[0], 0.5 * e[5], 0.5 * e[4],
       0.5 * e[5], e[1], 0.5 * e[3],
       0.5 * e[4], 0.5 * e[3], e[2];
  return m;
}

Vector6 voigt_stress(const Mat3& s) {
  Vector6 v;
  v << s(0, 0), s(1, 1), s(2, 2), 0.5 * (s(1, 2) + s(2, 1)), 0.5 * (s(0, 2) + s(2, 0)),
      0.5 * (s(0, 1) + s(1, 0));
  return v;
}

Matrix6 ElasticTensor::gpa() const { return C * units::kEvPerA3ToGPa; }

double ElasticTensor::bulk_modulus_voigt() const {
  return (C(0, 0) + C(1, 1) + C(2, 2) + 2.0 * (C(0, 1) + C(1, 2) + C(0, 2))) / 9.0;
}

double ElasticTensor::shear_modulus_voigt() const {
  return (C(0, 0) + C(1, 1) + C(2, 2) - (C(0, 1) + C(1, 2) + C(0, 2)) +
          3.0 * (C(3, 3) + C(4, 4) + C(5, 5))) /
         15.0;
}

Vector6 ElasticTensor::eigenvalues() const {
  const Matrix6 sym = 0.5 * (C + C.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix6>(sym).eigenvalues();
}

bool ElasticTensor::positive_definite() const { return eigenvalues().minCoeff() > 0.0; }

double ElasticTensor::symmetry_error() const {
  const double scale = C.cwiseAbs().maxCoeff();
  return scale > 0.0 ? (C - C.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
}

namespace {

struct StrainPoint {
  double energy = 0.0;
  Mat3 stress = Mat3::Zero();
};

StrainPoint strained(const Structure& s, const Potential& p, const Vector6& e, const ElasticOptions& opt,
                     const std::string& label) {
  Structure st = s.deformed(Mat3::Identity() + voigt_strain(e));
  if (opt.relax_ions) {
    auto r = relax_positions(st, p, opt.relax);
    if (!r.converged) throw RuntimeError("elastic_tensor: ionic relaxation failed at strain " + label);
    return {r.result.energy, r.result.stress};
  }
  auto r = p.evaluate(st);
  if (!std::isfinite(r.energy)) throw RuntimeError("elastic_tensor: non-finite energy at strain " + label);
  return {r.energy, r.stress};
}

}  // namespace

ElasticTensor elastic_tensor(const Structure& s, const Potential& p, const ElasticOptions& opt) {
  if (!(opt.delta > 0.0 && opt.delta < 0.1)) throw InvalidArgument("elastic_tensor: delta must lie in (0, 0.1)");
  p.check_coverage(s);
  const double d = opt.delta;

  // Strain points: index 0 is the reference; then +/- along each axis; then
  // the four sign combinations of every pair.
  std::vector<Vector6> strains{Vector6::Zero()};
  std::vector<std::string> labels{"0"};
  for (int i = 0; i < 6; ++i)
    for (double sg : {1.0, -1.0}) {
      Vector6 e = Vector6::Zero();
      e[i] = sg * d;
      strains.push_back(e);
      labels.push_back("e" + std::to_string(i + 1) + (sg > 0 ? "+" : "-"));
    }
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j)
      for (double si : {1.0, -1.0})
        for (double sj : {1.0, -1.0}) {
          Vector6 e = Vector6::Zero();
          e[i] = si * d;
          e[j] = sj * d;
          strains.push_back(e);
          labels.push_back("e" + std::to_string(i + 1) + (si > 0 ? "+" : "-") + "e" +
                           std::to_string(j + 1) + (sj > 0 ? "+" : "-"));
        }
  std::vector<StrainPoint> pts(strains.size());
  Structure base = s;
  if (opt.relax_ions) {
    auto r = relax_positions(s, p, opt.relax);
    if (!r.converged) throw RuntimeError("elastic_tensor: ionic relaxation failed at strain 0");
    base = r.structure;
  }
  parallel_for(strains.size(), [&](std::size_t k) { pts[k] = strained(base, p, strains[k], opt, labels[k]); });

  ElasticTensor out;
  out.volume = s.volume();
  out.delta = d;
  out.relax_ions = opt.relax_ions;
  auto axis = [&](int i, bool plus) { return pts[1 + 2 * i + (plus ? 0 : 1)]; };
  const double E0 = pts[0].energy;
  for (int i = 0; i < 6; ++i)
    out.C(i, i) = (axis(i, true).energy - 2.0 * E0 + axis(i, false).energy) / (d * d * out.volume);
  std::size_t k = 13;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) {
      const double epp = pts[k].energy, epm = pts[k + 1].energy;
      const double emp = pts[k + 2].energy, emm = pts[k + 3].energy;
      k += 4;
      out.C(i, j) = out.C(j, i) = (epp - epm - emp + emm) / (4.0 * d * d * out.volume);
    }
  for (int j = 0; j < 6; ++j) {
    const Vector6 sp = voigt_stress(axis(j, true).stress);
    const Vector6 sm = voigt_stress(axis(j, false).stress);
    out.C_stress.col(j) = (sp - sm) / (2.0 * d);
  }
  return out;
}

nlohmann::json to_json(const ElasticTensor& c) {
  auto rows = [](const Matrix6& m) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < 6; ++i) {
      std::vector<double> r(6);
      for (int j = 0; j < 6; ++j) r[j] = m(i, j);
      a.push_back(r);
    }
    return a;
  };
  const auto ev = c.eigenvalues();
  return {{"C_ev_per_a3", rows(c.C)},
          {"C_gpa", rows(c.gpa())},
          {"C_stress_ev_per_a3", rows(c.C_stress)},
          {"volume", c.volume},
          {"delta", c.delta},
          {"relax_ions", c.relax_ions},
          {"bulk_modulus_voigt_gpa", c.bulk_modulus_voigt() * units::kEvPerA3ToGPa},
          {"shear_modulus_voigt_gpa", c.shear_modulus_voigt() * units::kEvPerA3ToGPa},
          {"eigenvalues_ev_per_a3", std::vector<double>(ev.data(), ev.data() + 6)},
          {"mechanically_stable", c.positive_definite()}};
}

Structure sheared(const Structure& s, const Vec3& normal, const Vec3& direction, double gamma) {
  const Vec3 n = normal.normalized();
  const Vec3 d = direction.normalized();
  // Row-vector convention: r' = r (I + gamma n d^T).
  return s.deformed(Mat3::Identity() + gamma * n * d.transpose());
}

ShearCurve ideal_shear(const Structure& s, const Potential& p, const ShearOptions& opt) {
  if (!(opt.dgamma >= 0.01 - 1e-12 && opt.dgamma <= 0.10 + 1e-12))
    throw InvalidArgument("ideal_shear: dgamma must lie in [0.01, 0.10]");
  if (opt.steps < 1) throw InvalidArgument("ideal_shear: steps must be >= 1");
  if (!(opt.normal.norm() > 0.0) || !(opt.direction.norm() > 0.0))
    throw InvalidArgument("ideal_shear: normal and direction must be nonzero");
  if (std::abs(opt.normal.normalized().dot(opt.direction.normalized())) > 1e-8)
    throw InvalidArgument("ideal_shear: direction must lie in the shear plane");
  p.check_coverage(s);

  const int K = opt.steps;
  std::vector<double> energies(static_cast<std::size_t>(K + 3));
  std::vector<char> failed(energies.size(), 0);
  // Index k holds gamma = (k - 1) * dgamma, covering -dgamma .. (K+1) dgamma.
  parallel_for(energies.size(), [&](std::size_t k) {
    const double g = (static_cast<double>(k) - 1.0) * opt.dgamma;
    Structure st = sheared(s, opt.normal, opt.direction, g);
    if (opt.relax_ions) {
      auto r = relax_positions(st, p, opt.relax);
      failed[k] = !r.converged;
      energies[k] = r.result.energy;
    } else {
      energies[k] = p.evaluate(st).energy;
    }
  });

  ShearCurve c;
  c.volume = s.volume();
  c.relax_ions = opt.relax_ions;
  for (int k = 0; k <= K; ++k) {
    c.gamma.push_back(k * opt.dgamma);
    c.energy.push_back(energies[k + 1]);
    c.stress.push_back((energies[k + 2] - energies[k]) / (2.0 * opt.dgamma * c.volume));
    if (failed[k + 1]) c.unconverged.push_back(k);
  }
  for (int k = 0; k < K; ++k)
    if (c.stress[k + 1] - c.stress[k] <= 0.0) {
      c.tau_max = c.stress[k];
      c.gamma_max = c.gamma[k];
      c.maximum_found = true;
      break;
    }
  if (!c.maximum_found) {
    c.tau_max = c.stress.back();
    c.gamma_max = c.gamma.back();
  }
  return c;
}

nlohmann::json to_json(const ShearCurve& c) {
  return {{"gamma", c.gamma},
          {"energy", c.energy},
          {"tau_ev_per_a3", c.stress},
          {"tau_max_ev_per_a3", c.tau_max},
          {"tau_max_gpa", c.tau_max * units::kEvPerA3ToGPa},
          {"gamma_max", c.gamma_max},
          {"maximum_found", c.maximum_found},
          {"relax_ions", c.relax_ions},
          {"volume", c.volume},
          {"unconverged", c.unconverged}};
}

std::string shear_csv(const ShearCurve& c) {
  std::string out = "gamma,energy_ev,tau_ev_per_a3,tau_gpa\n";
  for (std::size_t k = 0; k < c.gamma.size(); ++k)
    out += format_double(c.gamma[k]) + "," + format_double(c.energy[k]) + "," + format_double(c.stress[k]) +
           "," + format_double(c.stress[k] * units::kEvPerA3ToGPa) + "\n";
  return out;
}

}  // namespace matscreen
