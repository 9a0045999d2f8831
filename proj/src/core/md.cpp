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

#include "matscreen/md.hpp"

#include <algorithm>
#include <cmath>

#include "matscreen/error.hpp"
#include "matscreen/io.hpp"
#include "matscreen/units.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

nlohmann::json to_json(const MdOptions& o) {
  return {{"temperature", o.temperature}, {"dt", o.dt},     {"steps", o.steps},
          {"friction", o.friction},       {"seed", o.seed}, {"stride", o.stride}};
}

MdOptions md_options_from_json(const nlohmann::json& j) {
  MdOptions o;
  o.temperature = j.value("temperature", o.temperature);
  o.dt = j.value("dt", o.dt);
  o.steps = j.value("steps", o.steps);
  o.friction = j.value("friction", o.friction);
  o.seed = j.value("seed", o.seed);
  o.stride = j.value("stride", o.stride);
  return o;
}

std::size_t Trajectory::degrees_of_freedom() const {
  const std::size_t n = initial.size();
  return (friction == 0.0 && n > 1) ? 3 * n - 3 : 3 * n;
}

double Trajectory::temperature_at(std::size_t k) const {
  return 2.0 * kinetic_energy.at(k) / (static_cast<double>(degrees_of_freedom()) * units::kBoltzmann);
}

namespace {

double kinetic(const std::vector<Vec3>& v, const std::vector<double>& m) {
  double e = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) e += 0.5 * m[i] * v[i].squaredNorm();
  return e / units::kForceToAccel;
}

}  // namespace

Trajectory run_nvt(const Structure& s, const Potential& p, const MdOptions& opt) {
  if (!(opt.dt > 0.0) || opt.dt > 2.0) throw InvalidArgument("md: dt must lie in (0, 2] fs");
  if (opt.steps < 0) throw InvalidArgument("md: steps must be >= 0");
  if (!(opt.temperature >= 0.0)) throw InvalidArgument("md: temperature must be >= 0");
  if (!(opt.friction >= 0.0)) throw InvalidArgument("md: friction must be >= 0");
  if (opt.stride < 1) throw InvalidArgument("md: stride must be >= 1");
  p.check_coverage(s);

  const std::size_t n = s.size();
  const auto m = s.masses();
  Trajectory t;
  t.dt = opt.dt;
  t.stride = opt.stride;
  t.temperature = opt.temperature;
  t.friction = opt.friction;
  t.seed = opt.seed;
  t.initial = s;

  Rng rng(opt.seed, 0x3d);
  std::vector<Vec3> x = s.cart_coords(), v(n);
  if (!opt.velocities.empty()) {
    if (opt.velocities.size() != n) throw InvalidArgument("md: initial velocity count mismatch");
    v = opt.velocities;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double sd = std::sqrt(units::kBoltzmann * opt.temperature / m[i] * units::kForceToAccel);
      for (int c = 0; c < 3; ++c) v[i][c] = sd * rng.normal();
    }
    if (n > 1) {
      Vec3 P = Vec3::Zero();
      double M = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        P += m[i] * v[i];
        M += m[i];
      }
      for (std::size_t i = 0; i < n; ++i) v[i] -= P / M;
    }
  }

  auto forces_at = [&](const std::vector<Vec3>& pos, long long step) {
    auto r = p.evaluate(Structure::from_cartesian(s.species(), pos, s.lattice(), s.tags()));
    bool ok = std::isfinite(r.energy);
    for (const auto& f : r.forces) ok = ok && f.allFinite();
    if (!ok) throw RuntimeError("md: non-finite forces at step " + std::to_string(step));
    return r;
  };

  EvalResult r = forces_at(x, 0);
  auto record = [&](double epot) {
    t.positions.push_back(x);
    t.velocities.push_back(v);
    t.potential_energy.push_back(epot);
    t.kinetic_energy.push_back(kinetic(v, m));
  };
  record(r.energy);

  const double h = 0.5 * opt.dt;
  const double c1 = std::exp(-opt.friction * opt.dt);
  const double c2 = std::sqrt(std::max(0.0, 1.0 - c1 * c1));
  std::vector<double> accel_scale(n), noise_scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    accel_scale[i] = units::kForceToAccel / m[i];
    noise_scale[i] = c2 * std::sqrt(units::kBoltzmann * opt.temperature / m[i] * units::kForceToAccel);
  }
  const double dof = static_cast<double>(t.degrees_of_freedom());
  double smoothed_t = opt.temperature;
  const double blend = 0.01;

  for (long long step = 1; step <= opt.steps; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      v[i] += h * accel_scale[i] * r.forces[i];
      x[i] += h * v[i];
    }
    if (opt.friction > 0.0)
      for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) v[i][c] = c1 * v[i][c] + noise_scale[i] * rng.normal();
    for (std::size_t i = 0; i < n; ++i) x[i] += h * v[i];
    r = forces_at(x, step);
    for (std::size_t i = 0; i < n; ++i) v[i] += h * accel_scale[i] * r.forces[i];

    if (opt.temperature > 0.0) {
      const double inst = 2.0 * kinetic(v, m) / (dof * units::kBoltzmann);
      smoothed_t += blend * (inst - smoothed_t);
      if (smoothed_t > 10.0 * opt.temperature)
        throw RuntimeError("md: temperature blow-up at step " + std::to_string(step));
    }
    if (step % opt.stride == 0) record(r.energy);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Diffusivity
// ---------------------------------------------------------------------------

namespace {

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - (f.intercept + f.slope * x[k]);
    ss_res += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

/// MSD for lags 0..max_lag frames over the given atoms.
std::vector<double> msd_curve(const std::vector<std::vector<Vec3>>& positions,
                              const std::vector<std::size_t>& atoms, int dim, std::size_t max_lag) {
  const std::size_t F = positions.size();
  std::vector<double> out(max_lag + 1, 0.0);
  // Origins are thinned so that the cost stays near 2e8 pair updates.
  const double work = static_cast<double>(F) * static_cast<double>(max_lag + 1) * atoms.size();
  const std::size_t origin_stride = std::max<std::size_t>(1, static_cast<std::size_t>(work / 2e8));
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t o = 0; o + lag < F; o += origin_stride) {
      const auto& a = positions[o];
      const auto& b = positions[o + lag];
      for (std::size_t i : atoms) {
        double s = 0.0;
        for (int c = 0; c < dim; ++c) {
          const double d = b[i][c] - a[i][c];
          s += d * d;
        }
        acc += s;
      }
      count += atoms.size();
    }
    out[lag] = count ? acc / static_cast<double>(count) : 0.0;
  }
  return out;
}

SpeciesDiffusivity fit_window(const std::vector<double>& msd, double dt_frame, std::size_t lo,
                              std::size_t hi, int dim) {
  std::vector<double> x, y, lx, ly;
  for (std::size_t k = lo; k <= hi; ++k) {
    const double tk = dt_frame * static_cast<double>(k);
    x.push_back(tk);
    y.push_back(msd[k]);
    if (msd[k] > 0.0 && tk > 0.0) {
      lx.push_back(std::log(tk));
      ly.push_back(std::log(msd[k]));
    }
  }
  const LineFit f = fit_line(x, y);
  SpeciesDiffusivity r;
  r.slope = f.slope;
  r.r2 = f.r2;
  r.D = std::max(0.0, f.slope / (2.0 * dim)) * units::kA2PerFsToCm2PerS;
  r.exponent = lx.size() >= 2 ? fit_line(lx, ly).slope : 0.0;
  r.diffusive = r.r2 >= 0.95 && std::abs(r.exponent - 1.0) < 0.2;
  return r;
}

}  // namespace

DiffusivityReport einstein_diffusivity(const Trajectory& traj, const DiffusivityOptions& opt) {
  if (opt.dimension < 1 || opt.dimension > 3) throw InvalidArgument("diffusivity: dimension must be 1, 2 or 3");
  if (traj.frames() < 4) throw InvalidArgument("diffusivity: trajectory needs at least 4 frames");
  const double dtf = traj.frame_interval();
  const double span = traj.span();
  const double t_max = opt.t_max.value_or(0.8 * span / 4.0);
  const double t_min = opt.t_min.value_or(0.2 * span / 4.0);
  if (!(t_min >= 0.0) || !(t_max > t_min)) throw InvalidArgument("diffusivity: require 0 <= t_min < t_max");
  if (t_max > span + 1e-9) throw InvalidArgument("diffusivity: fit window exceeds the trajectory span");
  const std::size_t hi = static_cast<std::size_t>(std::floor(t_max / dtf + 1e-9));
  const std::size_t lo = static_cast<std::size_t>(std::ceil(t_min / dtf - 1e-9));
  if (hi < lo + 1) throw InvalidArgument("diffusivity: fit window holds fewer than 2 frames");

  // Positions with the mass-weighted centre-of-mass displacement removed.
  std::vector<std::vector<Vec3>> corrected;
  if (opt.remove_drift) {
    const auto m = traj.initial.masses();
    double mtot = 0.0;
    for (double x : m) mtot += x;
    corrected = traj.positions;
    for (auto& frame : corrected) {
      Vec3 shift = Vec3::Zero();
      for (std::size_t i = 0; i < frame.size(); ++i) shift += m[i] * (frame[i] - traj.positions[0][i]);
      shift /= mtot;
      for (auto& r : frame) r -= shift;
    }
  }
  const auto& positions = opt.remove_drift ? corrected : traj.positions;

  std::vector<std::string> wanted = opt.species;
  if (wanted.empty()) wanted = traj.initial.unique_species();
  std::vector<std::size_t> all;
  DiffusivityReport rep;
  rep.dimension = opt.dimension;
  rep.t_min = lo * dtf;
  rep.t_max = hi * dtf;
  for (const auto& sp : wanted) {
    std::vector<std::size_t> atoms;
    for (std::size_t i = 0; i < traj.initial.size(); ++i)
      if (traj.initial.species(i) == sp) atoms.push_back(i);
    if (atoms.empty()) throw InvalidArgument("diffusivity: species " + sp + " is not in the trajectory");
    const auto curve = msd_curve(positions, atoms, opt.dimension, hi);
    rep.species[sp] = fit_window(curve, dtf, lo, hi, opt.dimension);
    all.insert(all.end(), atoms.begin(), atoms.end());
  }
  std::sort(all.begin(), all.end());
  rep.msd = msd_curve(positions, all, opt.dimension, hi);
  for (std::size_t k = 0; k <= hi; ++k) rep.lag_time.push_back(dtf * static_cast<double>(k));
  const auto overall = fit_window(rep.msd, dtf, lo, hi, opt.dimension);
  rep.D = overall.D;
  rep.r2 = overall.r2;
  rep.exponent = overall.exponent;
  return rep;
}

Mobility classify_mobility(double D, double threshold) {
  if (!(D >= 0.0)) throw InvalidArgument("classify_mobility: D must be >= 0");
  return D < threshold ? Mobility::kInert : Mobility::kMobile;
}

std::string to_string(Mobility m) { return m == Mobility::kInert ? "inert" : "mobile"; }

nlohmann::json to_json(const DiffusivityReport& r) {
  nlohmann::json sp = nlohmann::json::object();
  for (const auto& [name, d] : r.species)
    sp[name] = {{"D_cm2_per_s", d.D},
                {"slope_a2_per_fs", d.slope},
                {"r2", d.r2},
                {"exponent", d.exponent},
                {"diffusive", d.diffusive},
                {"mobility", to_string(classify_mobility(d.D))}};
  return {{"species", sp},         {"D_cm2_per_s", r.D},  {"r2", r.r2},
          {"exponent", r.exponent}, {"t_min_fs", r.t_min}, {"t_max_fs", r.t_max},
          {"dimension", r.dimension}};
}

std::string msd_csv(const DiffusivityReport& r) {
  std::string out = "lag_fs,msd_a2\n";
  for (std::size_t k = 0; k < r.msd.size(); ++k)
    out += format_double(r.lag_time[k]) + "," + format_double(r.msd[k]) + "\n";
  return out;
}

std::string trajectory_extxyz(const Trajectory& t) {
  std::vector<Structure> frames;
  for (std::size_t k = 0; k < t.frames(); ++k)
    frames.push_back(Structure::from_cartesian(t.initial.species(), t.positions[k], t.initial.lattice())
                         .with_tag("id", std::to_string(k)));
  return io::write_extxyz_structures(frames);
}

}  // namespace matscreen
