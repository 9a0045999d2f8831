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

#include "matscreen/phonon.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "matscreen/error.hpp"
#include "matscreen/units.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

namespace {

std::size_t cell_index(const IVec3& c, const IVec3& rep) {
  return (static_cast<std::size_t>(c[0]) * rep[1] + c[1]) * rep[2] + c[2];
}

int wrap_cell(int c, int r) { return ((c % r) + r) % r; }

std::size_t column_of(std::size_t base, const IVec3& cell, const IVec3& rep, std::size_t n) {
  const IVec3 w{wrap_cell(cell[0], rep[0]), wrap_cell(cell[1], rep[1]), wrap_cell(cell[2], rep[2])};
  return cell_index(w, rep) * n + base;
}

}  // namespace

double ForceConstants::at(std::size_t i, int a, std::size_t j, int b) const {
  const std::size_t n = primitive_atoms();
  const auto& sc = supercell;
  const IVec3& ci = sc.cell_offset[i];
  const IVec3& cj = sc.cell_offset[j];
  const IVec3 d{cj[0] - ci[0], cj[1] - ci[1], cj[2] - ci[2]};
  const std::size_t col = column_of(sc.base_index[j], d, sc.repeat, n);
  return phi(3 * sc.base_index[i] + a, 3 * col + b);
}

double ForceConstants::symmetry_error() const {
  const std::size_t n = primitive_atoms();
  const std::size_t N = supercell.structure.size();
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < N; ++j)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          err = std::max(err, std::abs(phi(3 * i + a, 3 * j + b) - at(j, b, i, a)));
  return err;
}

double ForceConstants::sum_rule_error() const {
  const std::size_t n = primitive_atoms();
  const std::size_t N = supercell.structure.size();
  double err = 0.0;
  for (std::size_t r = 0; r < 3 * n; ++r)
    for (int b = 0; b < 3; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < N; ++j) s += phi(r, 3 * j + b);
      err = std::max(err, std::abs(s));
    }
  return err;
}

IVec3 repeat_for_width(const Structure& s, double min_width) {
  const Vec3 w = s.perpendicular_widths();
  IVec3 r{};
  for (int k = 0; k < 3; ++k) r[k] = std::max(1, static_cast<int>(std::ceil(min_width / w[k] - 1e-9)));
  return r;
}

namespace {

void symmetrize(ForceConstants& fc) {
  const std::size_t n = fc.primitive_atoms();
  const std::size_t N = fc.supercell.structure.size();
  const auto& sc = fc.supercell;
  Eigen::MatrixXd out = fc.phi;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      const IVec3& c = sc.cell_offset[j];
      const std::size_t mirror = column_of(i, {-c[0], -c[1], -c[2]}, sc.repeat, n);
      const std::size_t bj = sc.base_index[j];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          out(3 * i + a, 3 * j + b) =
              0.5 * (fc.phi(3 * i + a, 3 * j + b) + fc.phi(3 * bj + b, 3 * mirror + a));
    }
  fc.phi = std::move(out);
}

void apply_sum_rule(ForceConstants& fc) {
  const std::size_t n = fc.primitive_atoms();
  const std::size_t N = fc.supercell.structure.size();
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < N; ++j) s += fc.phi(3 * i + a, 3 * j + b);
        fc.phi(3 * i + a, 3 * i + b) -= s;  // home atom i is supercell atom i
      }
}

}  // namespace

ForceConstants force_constants(const Structure& s, const Potential& p, const IVec3& repeat,
                               double amplitude) {
  if (!(amplitude > 0.0)) throw InvalidArgument("force_constants: amplitude must be positive");
  p.check_coverage(s);
  ForceConstants fc;
  fc.supercell = make_supercell(s, repeat);
  fc.amplitude = amplitude;
  const std::size_t n = s.size();
  const std::size_t N = fc.supercell.structure.size();
  const auto base_cart = fc.supercell.structure.cart_coords();
  fc.phi.setZero(3 * n, 3 * N);

  std::vector<std::vector<Vec3>> forces(6 * n);
  parallel_for(6 * n, [&](std::size_t k) {
    const std::size_t i = k / 6;
    const int a = static_cast<int>((k / 2) % 3);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    auto cart = base_cart;
    cart[i][a] += sign * amplitude;
    const auto r = p.evaluate(fc.supercell.structure.with_cart_coords(cart));
    for (const auto& f : r.forces)
      if (!f.allFinite()) throw RuntimeError("force_constants: non-finite forces");
    forces[k] = r.forces;
  });
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) {
      const auto& fp = forces[6 * i + 2 * a];
      const auto& fm = forces[6 * i + 2 * a + 1];
      for (std::size_t j = 0; j < N; ++j)
        for (int b = 0; b < 3; ++b)
          fc.phi(3 * i + a, 3 * j + b) = -(fp[j][b] - fm[j][b]) / (2.0 * amplitude);
    }
  for (int round = 0; round < 10; ++round) {
    symmetrize(fc);
    apply_sum_rule(fc);
  }
  return fc;
}

// ---------------------------------------------------------------------------
// Dispersion
// ---------------------------------------------------------------------------

namespace {

/// Lattice translations (in primitive cells) of the shortest periodic images
/// of each supercell column relative to each home atom.
struct ImageTable {
  std::vector<std::vector<std::vector<Vec3>>> shifts;  // [i][j] -> list of R (fractional)
};

ImageTable build_images(const ForceConstants& fc) {
  const auto& sc = fc.supercell;
  const std::size_t n = fc.primitive_atoms();
  const std::size_t N = sc.structure.size();
  const Mat3& L = sc.base.lattice();
  ImageTable t;
  t.shifts.assign(n, std::vector<std::vector<Vec3>>(N));
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 xi = sc.base.cart(i);
    for (std::size_t j = 0; j < N; ++j) {
      const std::size_t bj = sc.base_index[j];
      const Vec3 xj = sc.base.cart(bj);
      std::vector<std::pair<double, Vec3>> cands;
      double best = std::numeric_limits<double>::infinity();
      for (int m0 = -2; m0 <= 2; ++m0)
        for (int m1 = -2; m1 <= 2; ++m1)
          for (int m2 = -2; m2 <= 2; ++m2) {
            const Vec3 R(sc.cell_offset[j][0] + m0 * sc.repeat[0], sc.cell_offset[j][1] + m1 * sc.repeat[1],
                         sc.cell_offset[j][2] + m2 * sc.repeat[2]);
            const Vec3 d = xj + (R.transpose() * L).transpose() - xi;
            const double dist = d.norm();
            cands.emplace_back(dist, R);
            best = std::min(best, dist);
          }
      for (const auto& [dist, R] : cands)
        if (dist <= best + 1e-5 * std::max(1.0, best)) t.shifts[i][j].push_back(R);
    }
  }
  return t;
}

Eigen::MatrixXcd dynamical_matrix_with(const ForceConstants& fc, const ImageTable& t,
                                       const Vec3& q, const std::vector<double>& inv_sqrt_m) {
  const std::size_t n = fc.primitive_atoms();
  const std::size_t N = fc.supercell.structure.size();
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(3 * n, 3 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      const auto& shifts = t.shifts[i][j];
      std::complex<double> phase(0.0, 0.0);
      for (const auto& R : shifts) {
        const double arg = 2.0 * units::kPi * q.dot(R);
        phase += std::complex<double>(std::cos(arg), std::sin(arg));
      }
      phase /= static_cast<double>(shifts.size());
      const std::size_t bj = fc.supercell.base_index[j];
      const double w = inv_sqrt_m[i] * inv_sqrt_m[bj];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) D(3 * i + a, 3 * bj + b) += fc.phi(3 * i + a, 3 * j + b) * w * phase;
    }
  return D;
}

std::vector<double> inverse_sqrt_masses(const Structure& s) {
  std::vector<double> out;
  for (double m : s.masses()) out.push_back(1.0 / std::sqrt(m));
  return out;
}

Eigen::VectorXd frequencies_of(const Eigen::MatrixXcd& D, Eigen::MatrixXcd* vecs) {
  const Eigen::MatrixXcd H = 0.5 * (D + D.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, vecs ? Eigen::ComputeEigenvectors
                                                             : Eigen::EigenvaluesOnly);
  Eigen::VectorXd nu(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < nu.size(); ++k) {
    const double lam = es.eigenvalues()[k];
    nu[k] = (lam < 0.0 ? -1.0 : 1.0) * std::sqrt(std::abs(lam)) * units::kSqrtEvA2AmuToThz;
  }
  if (vecs) *vecs = es.eigenvectors();
  return nu;
}

}  // namespace

Eigen::MatrixXcd dynamical_matrix(const ForceConstants& fc, const Vec3& q_frac) {
  return dynamical_matrix_with(fc, build_images(fc), q_frac, inverse_sqrt_masses(fc.supercell.base));
}

PhononResult dispersion(const ForceConstants& fc, const std::vector<Vec3>& qpoints,
                        const DispersionOptions& opt) {
  const auto table = build_images(fc);
  const auto ism = inverse_sqrt_masses(fc.supercell.base);
  const std::size_t n = fc.primitive_atoms();
  PhononResult ph;
  ph.qpoints = qpoints;
  ph.natoms = n;
  ph.volume = fc.supercell.base.volume();
  ph.frequencies.resize(static_cast<Eigen::Index>(qpoints.size()), static_cast<Eigen::Index>(3 * n));
  if (opt.eigenvectors) ph.eigenvectors.resize(qpoints.size());
  if (opt.velocities) ph.velocities.assign(qpoints.size(), std::vector<Vec3>(3 * n, Vec3::Zero()));
  const Mat3 Lt = fc.supercell.base.lattice().transpose();
  parallel_for(qpoints.size(), [&](std::size_t k) {
    const Vec3& q = qpoints[k];
    Eigen::MatrixXcd vecs;
    const auto nu = frequencies_of(dynamical_matrix_with(fc, table, q, ism),
                                   opt.eigenvectors ? &vecs : nullptr);
    ph.frequencies.row(static_cast<Eigen::Index>(k)) = nu.transpose();
    if (opt.eigenvectors) ph.eigenvectors[k] = std::move(vecs);
    if (opt.velocities) {
      const double h = opt.velocity_step;
      for (int c = 0; c < 3; ++c) {
        // Cartesian step h along axis c in fractional reciprocal units.
        const Vec3 dq = Lt.row(c).transpose() * (h / (2.0 * units::kPi));
        const auto plus = frequencies_of(dynamical_matrix_with(fc, table, q + dq, ism), nullptr);
        const auto minus = frequencies_of(dynamical_matrix_with(fc, table, q - dq, ism), nullptr);
        for (std::size_t b = 0; b < 3 * n; ++b)
          ph.velocities[k][b][c] = 2.0 * units::kPi * 1e-3 * (plus[b] - minus[b]) / (2.0 * h);
      }
    }
  });
  for (std::size_t k = 0; k < qpoints.size(); ++k)
    if (ph.frequencies.row(static_cast<Eigen::Index>(k)).minCoeff() < -kZeroFrequencyTol)
      ph.imaginary_q.push_back(k);
  return ph;
}

std::vector<Vec3> monkhorst_pack(const IVec3& mesh) {
  for (int m : mesh)
    if (m < 1) throw InvalidArgument("q mesh dimensions must be >= 1");
  std::vector<Vec3> q;
  for (int a = 0; a < mesh[0]; ++a)
    for (int b = 0; b < mesh[1]; ++b)
      for (int c = 0; c < mesh[2]; ++c)
        q.emplace_back(static_cast<double>(a) / mesh[0], static_cast<double>(b) / mesh[1],
                       static_cast<double>(c) / mesh[2]);
  return q;
}

std::vector<Vec3> qpath(const std::vector<Vec3>& corners, int points) {
  if (corners.size() < 2 || points < 2) throw InvalidArgument("qpath needs 2 corners and 2 points");
  std::vector<Vec3> out;
  for (std::size_t s = 0; s + 1 < corners.size(); ++s)
    for (int k = (s == 0 ? 0 : 1); k < points; ++k)
      out.push_back(corners[s] + (corners[s + 1] - corners[s]) * (static_cast<double>(k) / (points - 1)));
  return out;
}

// ---------------------------------------------------------------------------
// Thermodynamics
// ---------------------------------------------------------------------------

namespace {

void require_real(const PhononResult& ph, const char* what) {
  if (!ph.has_imaginary()) return;
  std::ostringstream os;
  os << what << ": imaginary modes at q index";
  for (std::size_t k = 0; k < std::min<std::size_t>(ph.imaginary_q.size(), 10); ++k)
    os << ' ' << ph.imaginary_q[k];
  if (ph.imaginary_q.size() > 10) os << " ...";
  throw RuntimeError(os.str());
}

void require_temperature(double T) {
  if (!(T >= 0.0)) throw InvalidArgument("temperature must be >= 0 K");
}

template <typename F>
double mode_sum(const PhononResult& ph, F&& f) {
  double s = 0.0;
  for (Eigen::Index q = 0; q < ph.frequencies.rows(); ++q)
    for (Eigen::Index b = 0; b < ph.frequencies.cols(); ++b) {
      const double nu = ph.frequencies(q, b);
      if (std::abs(nu) < kZeroFrequencyTol) continue;
      s += f(nu);
    }
  return s / static_cast<double>(ph.qcount());
}

double mode_cv(double nu, double T) {
  if (T == 0.0) return 0.0;
  const double x = units::kPlanckEvPerThz * nu / (units::kBoltzmann * T);
  if (x > 700.0) return 0.0;
  const double em = std::exp(-x);
  const double d = -std::expm1(-x);
  return units::kBoltzmann * x * x * em / (d * d);
}

}  // namespace

double helmholtz_free_energy(const PhononResult& ph, double T) {
  require_temperature(T);
  require_real(ph, "helmholtz_free_energy");
  const double kT = units::kBoltzmann * T;
  return mode_sum(ph, [&](double nu) {
    const double e = units::kPlanckEvPerThz * nu;
    double f = 0.5 * e;
    if (T > 0.0) f += kT * std::log(-std::expm1(-e / kT));
    return f;
  });
}

double heat_capacity(const PhononResult& ph, double T) {
  require_temperature(T);
  require_real(ph, "heat_capacity");
  return mode_sum(ph, [&](double nu) { return mode_cv(nu, T); });
}

double entropy(const PhononResult& ph, double T) {
  require_temperature(T);
  require_real(ph, "entropy");
  if (T == 0.0) return 0.0;
  return mode_sum(ph, [&](double nu) {
    const double x = units::kPlanckEvPerThz * nu / (units::kBoltzmann * T);
    if (x > 700.0) return 0.0;
    return units::kBoltzmann * (x / std::expm1(x) - std::log(-std::expm1(-x)));
  });
}

Eigen::MatrixXd mode_heat_capacities(const PhononResult& ph, double T) {
  require_temperature(T);
  require_real(ph, "mode_heat_capacities");
  Eigen::MatrixXd c(ph.frequencies.rows(), ph.frequencies.cols());
  for (Eigen::Index q = 0; q < c.rows(); ++q)
    for (Eigen::Index b = 0; b < c.cols(); ++b) {
      const double nu = ph.frequencies(q, b);
      c(q, b) = std::abs(nu) < kZeroFrequencyTol ? 0.0 : mode_cv(nu, T);
    }
  return c;
}

double DosTable::integral() const {
  double s = 0.0;
  for (std::size_t k = 1; k < density.size(); ++k) s += 0.5 * (density[k] + density[k - 1]) * spacing;
  return s;
}

DosTable dos(const PhononResult& ph, double spacing, std::optional<double> smearing) {
  if (!(spacing > 0.0)) throw InvalidArgument("dos: spacing must be positive");
  require_real(ph, "dos");
  DosTable t;
  t.spacing = spacing;
  t.smearing = smearing.value_or(2.0 * spacing);
  if (!(t.smearing > 0.0)) throw InvalidArgument("dos: smearing must be positive");
  const double lo = ph.frequencies.minCoeff() - 8.0 * t.smearing;
  const double hi = ph.frequencies.maxCoeff() + 8.0 * t.smearing;
  const std::size_t count = static_cast<std::size_t>(std::ceil((hi - lo) / spacing)) + 1;
  t.frequency.resize(count);
  t.density.assign(count, 0.0);
  for (std::size_t g = 0; g < count; ++g) t.frequency[g] = lo + spacing * static_cast<double>(g);
  const double norm = 1.0 / (t.smearing * std::sqrt(2.0 * units::kPi) * static_cast<double>(ph.qcount()));
  const double reach = 8.0 * t.smearing;
  for (Eigen::Index q = 0; q < ph.frequencies.rows(); ++q)
    for (Eigen::Index b = 0; b < ph.frequencies.cols(); ++b) {
      const double nu = ph.frequencies(q, b);
      const std::size_t g0 = static_cast<std::size_t>(std::max(0.0, std::floor((nu - reach - lo) / spacing)));
      const std::size_t g1 = std::min(count - 1, static_cast<std::size_t>(std::ceil((nu + reach - lo) / spacing)));
      for (std::size_t g = g0; g <= g1; ++g) {
        const double x = (t.frequency[g] - nu) / t.smearing;
        t.density[g] += norm * std::exp(-0.5 * x * x);
      }
    }
  return t;
}

// ---------------------------------------------------------------------------
// Quasi-harmonic minimization
// ---------------------------------------------------------------------------

QhaResult minimize_quartic(const std::vector<double>& volumes, const std::vector<double>& values) {
  if (volumes.size() != values.size()) throw InvalidArgument("qha: volume and value counts differ");
  if (volumes.size() < 5) throw InvalidArgument("qha: at least 5 volume points are required");
  const auto [vmin_it, vmax_it] = std::minmax_element(volumes.begin(), volumes.end());
  const double vmin = *vmin_it, vmax = *vmax_it;
  if (!(vmax > vmin)) throw InvalidArgument("qha: volumes must span a nonzero interval");
  const double c = 0.5 * (vmin + vmax), h = 0.5 * (vmax - vmin);
  const Eigen::Index m = static_cast<Eigen::Index>(volumes.size());
  Eigen::MatrixXd A(m, 5);
  Eigen::VectorXd b(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double u = (volumes[r] - c) / h;
    double p = 1.0;
    for (int k = 0; k < 5; ++k) {
      A(r, k) = p;
      p *= u;
    }
    b[r] = values[r];
  }
  const Eigen::VectorXd a = A.colPivHouseholderQr().solve(b);
  auto poly = [&](double u) { return a[0] + u * (a[1] + u * (a[2] + u * (a[3] + u * a[4]))); };
  auto deriv = [&](double u) { return a[1] + u * (2 * a[2] + u * (3 * a[3] + u * 4 * a[4])); };

  double best_u = -1.0, best = poly(-1.0);
  bool interior = false;
  if (poly(1.0) < best) {
    best = poly(1.0);
    best_u = 1.0;
  }
  const int grid = 4000;
  for (int k = 0; k < grid; ++k) {
    double lo = -1.0 + 2.0 * k / grid, hi = -1.0 + 2.0 * (k + 1) / grid;
    double dlo = deriv(lo), dhi = deriv(hi);
    if (!(dlo < 0.0 && dhi >= 0.0)) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (deriv(mid) < 0.0) lo = mid;
      else hi = mid;
    }
    const double u = 0.5 * (lo + hi);
    if (poly(u) <= best) {
      best = poly(u);
      best_u = u;
      interior = true;
    }
  }
  if (!interior || best_u <= -1.0 || best_u >= 1.0)
    throw RuntimeError("qha: minimum lies at the boundary of the volume scan; widen the scan");
  return {best, c + h * best_u};
}

QhaResult gibbs_qha(const std::vector<QhaSample>& samples, double T, double p) {
  std::vector<double> v, phi;
  for (const auto& s : samples) {
    v.push_back(s.volume);
    phi.push_back(s.energy + helmholtz_free_energy(s.phonons, T) + p * s.volume);
  }
  return minimize_quartic(v, phi);
}

Mat3 kappa_crta(const PhononResult& ph, const Eigen::MatrixXd& mode_cv, const std::vector<double>& tau) {
  if (ph.velocities.empty()) throw InvalidArgument("kappa_crta: group velocities are required");
  const std::size_t modes = ph.qcount() * ph.bands();
  if (tau.empty()) throw InvalidArgument("kappa_crta: missing lifetimes");
  if (tau.size() != 1 && tau.size() != modes)
    throw InvalidArgument("kappa_crta: lifetimes must be one constant or one per mode");
  if (mode_cv.rows() != static_cast<Eigen::Index>(ph.qcount()) ||
      mode_cv.cols() != static_cast<Eigen::Index>(ph.bands()))
    throw InvalidArgument("kappa_crta: mode heat capacity table has the wrong shape");
  Mat3 k = Mat3::Zero();
  for (std::size_t q = 0; q < ph.qcount(); ++q)
    for (std::size_t b = 0; b < ph.bands(); ++b) {
      const double t = tau.size() == 1 ? tau[0] : tau[q * ph.bands() + b];
      const Vec3& v = ph.velocities[q][b];
      k += mode_cv(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(b)) * t * (v * v.transpose());
    }
  return k * (units::kConductivityToSI / (static_cast<double>(ph.qcount()) * ph.volume));
}

nlohmann::json to_json(const PhononResult& ph) {
  nlohmann::json q = nlohmann::json::array(), f = nlohmann::json::array();
  for (std::size_t k = 0; k < ph.qcount(); ++k) {
    q.push_back({ph.qpoints[k][0], ph.qpoints[k][1], ph.qpoints[k][2]});
    std::vector<double> row(ph.bands());
    for (std::size_t b = 0; b < ph.bands(); ++b) row[b] = ph.frequencies(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b));
    f.push_back(row);
  }
  return {{"natoms", ph.natoms},
          {"volume", ph.volume},
          {"qpoints", q},
          {"frequencies_thz", f},
          {"imaginary_q", ph.imaginary_q}};
}

std::string dispersion_csv(const PhononResult& ph) {
  std::string out = "q_index,q1,q2,q3";
  for (std::size_t b = 0; b < ph.bands(); ++b) out += ",nu" + std::to_string(b) + "_thz";
  out += "\n";
  for (std::size_t k = 0; k < ph.qcount(); ++k) {
    out += std::to_string(k);
    for (int c = 0; c < 3; ++c) out += "," + format_double(ph.qpoints[k][c]);
    for (std::size_t b = 0; b < ph.bands(); ++b)
      out += "," + format_double(ph.frequencies(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b)));
    out += "\n";
  }
  return out;
}

std::string dos_csv(const DosTable& d) {
  std::string out = "frequency_thz,dos_per_thz\n";
  for (std::size_t g = 0; g < d.frequency.size(); ++g)
    out += format_double(d.frequency[g]) + "," + format_double(d.density[g]) + "\n";
  return out;
}

}  // namespace matscreen
