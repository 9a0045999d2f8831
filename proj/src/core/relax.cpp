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

#include "matscreen/relax.hpp"

#include <cmath>
#include <limits>

#include "matscreen/error.hpp"

namespace matscreen {

nlohmann::json to_json(const RelaxOptions& o) {
  return {{"f_tol", o.f_tol},           {"max_iter", o.max_iter},
          {"max_step", o.max_step},     {"hessian_scale", o.hessian_scale},
          {"armijo_c", o.armijo_c},     {"shrink", o.shrink},
          {"record_trajectory", o.record_trajectory}};
}

RelaxOptions relax_options_from_json(const nlohmann::json& j) {
  RelaxOptions o;
  o.f_tol = j.value("f_tol", o.f_tol);
  o.max_iter = j.value("max_iter", o.max_iter);
  o.max_step = j.value("max_step", o.max_step);
  o.hessian_scale = j.value("hessian_scale", o.hessian_scale);
  o.armijo_c = j.value("armijo_c", o.armijo_c);
  o.shrink = j.value("shrink", o.shrink);
  o.record_trajectory = j.value("record_trajectory", o.record_trajectory);
  if (!(o.f_tol > 0.0)) throw InvalidArgument("relax: f_tol must be positive");
  if (o.max_iter < 0) throw InvalidArgument("relax: max_iter must be >= 0");
  if (!(o.max_step > 0.0)) throw InvalidArgument("relax: max_step must be positive");
  if (!(o.hessian_scale > 0.0)) throw InvalidArgument("relax: hessian_scale must be positive");
  if (!(o.shrink > 0.0 && o.shrink < 1.0)) throw InvalidArgument("relax: shrink must lie in (0, 1)");
  return o;
}

nlohmann::json to_json(const CellRelaxOptions& o) {
  nlohmann::json j{{"positions", to_json(o.positions)},
                   {"pressure", o.pressure},
                   {"max_cell_steps", o.max_cell_steps},
                   {"max_strain_step", o.max_strain_step}};
  j["stress_tol"] = std::isfinite(o.stress_tol) ? nlohmann::json(o.stress_tol) : nlohmann::json("inf");
  return j;
}

CellRelaxOptions cell_relax_options_from_json(const nlohmann::json& j) {
  CellRelaxOptions o;
  if (j.contains("positions")) o.positions = relax_options_from_json(j.at("positions"));
  if (j.contains("stress_tol")) {
    const auto& t = j.at("stress_tol");
    o.stress_tol = t.is_string() && t.get<std::string>() == "inf"
                       ? std::numeric_limits<double>::infinity()
                       : t.get<double>();
  }
  o.pressure = j.value("pressure", o.pressure);
  o.max_cell_steps = j.value("max_cell_steps", o.max_cell_steps);
  o.max_strain_step = j.value("max_strain_step", o.max_strain_step);
  if (!(o.stress_tol > 0.0)) throw InvalidArgument("relax: stress_tol must be positive");
  if (o.max_cell_steps < 0) throw InvalidArgument("relax: max_cell_steps must be >= 0");
  return o;
}

namespace {

struct Point {
  Eigen::VectorXd x;  // unwrapped Cartesian positions, 3n
  Structure s;
  EvalResult r;
  Eigen::VectorXd g;  // dE/dx
};

Point evaluate_at(const Eigen::VectorXd& x, const Structure& like, const Potential& p, int step) {
  const std::size_t n = like.size();
  std::vector<Vec3> cart(n);
  for (std::size_t i = 0; i < n; ++i) cart[i] = x.segment<3>(3 * i);
  Point pt{x, Structure::from_cartesian(like.species(), cart, like.lattice(), like.tags()), {}, {}};
  pt.r = p.evaluate(pt.s);
  bool finite = std::isfinite(pt.r.energy);
  pt.g.resize(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    finite = finite && pt.r.forces[i].allFinite();
    pt.g.segment<3>(3 * i) = -pt.r.forces[i];
  }
  if (!finite) throw RuntimeError("relax: non-finite energy or forces at step " + std::to_string(step));
  return pt;
}

LabeledFrame as_frame(const Point& pt) {
  return {pt.s, pt.r.energy, pt.r.forces, pt.r.stress, Provenance::kPredicted};
}

}  // namespace

RelaxResult relax_positions(const Structure& s, const Potential& p, const RelaxOptions& opt) {
  p.check_coverage(s);
  const std::size_t n = s.size();
  const Eigen::Index dim = static_cast<Eigen::Index>(3 * n);
  Eigen::VectorXd x0(dim);
  for (std::size_t i = 0; i < n; ++i) x0.segment<3>(3 * i) = s.cart(i);

  RelaxResult out;
  Point cur = evaluate_at(x0, s, p, 0);
  if (opt.record_trajectory) out.trajectory.push_back(as_frame(cur));
  const Eigen::MatrixXd H0 = Eigen::MatrixXd::Identity(dim, dim) / opt.hessian_scale;
  Eigen::MatrixXd H = H0;
  bool fresh = true;

  int it = 0;
  while (cur.r.max_force() >= opt.f_tol && it < opt.max_iter) {
    Eigen::VectorXd dir = -H * cur.g;
    if (dir.dot(cur.g) >= 0.0) {
      H = H0;
      fresh = true;
      dir = -H * cur.g;
    }
    double longest = 0.0;
    for (std::size_t i = 0; i < n; ++i) longest = std::max(longest, dir.segment<3>(3 * i).norm());
    if (longest > opt.max_step) dir *= opt.max_step / longest;

    const double slope = dir.dot(cur.g);
    double alpha = 1.0;
    bool accepted = false;
    Point next;
    while (alpha > 1e-10) {
      next = evaluate_at(cur.x + alpha * dir, s, p, it + 1);
      if (next.r.energy <= cur.r.energy + opt.armijo_c * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= opt.shrink;
    }
    if (!accepted) {
      if (fresh) break;  // steepest descent made no progress either
      H = H0;
      fresh = true;
      continue;
    }
    ++it;
    const Eigen::VectorXd sv = next.x - cur.x;
    const Eigen::VectorXd yv = next.g - cur.g;
    const double sy = sv.dot(yv);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * yv;
      const double yHy = yv.dot(Hy);
      H += ((sy + yHy) * rho * rho) * (sv * sv.transpose()) -
           rho * (Hy * sv.transpose() + sv * Hy.transpose());
      fresh = false;
    }
    cur = std::move(next);
    if (opt.record_trajectory) out.trajectory.push_back(as_frame(cur));
  }

  out.structure = cur.s;
  out.result = cur.r;
  out.iterations = it;
  out.max_force = cur.r.max_force();
  out.converged = out.max_force < opt.f_tol;
  return out;
}

RelaxResult relax_cell(const Structure& s, const Potential& p, const CellRelaxOptions& opt) {
  p.check_coverage(s);
  const double v0 = s.volume();
  const Mat3 pI = opt.pressure * Mat3::Identity();
  auto residual = [&](const EvalResult& r) {
    const Mat3 m = 0.5 * (r.stress + r.stress.transpose()) + pI;
    return m;
  };
  auto enthalpy = [&](const Structure& st, double e) { return e + opt.pressure * st.volume(); };

  RelaxResult out = relax_positions(s, p, opt.positions);
  int total_iter = out.iterations;
  Mat3 R = residual(out.result);
  double eta = 0.0;
  Mat3 prev_step = Mat3::Zero();
  Mat3 prev_R = R;
  int steps = 0;
  std::vector<LabeledFrame> traj = std::move(out.trajectory);

  while (R.cwiseAbs().maxCoeff() >= opt.stress_tol && steps < opt.max_cell_steps) {
    const double rmax = R.cwiseAbs().maxCoeff();
    if (steps > 0) {
      const Mat3 y = R - prev_R;
      const double sy = (prev_step.array() * y.array()).sum();
      if (sy > 0.0) eta = (prev_step.array() * prev_step.array()).sum() / sy;
    }
    if (!(eta > 0.0)) eta = 1.0;  // strain per eV/A^3, about a 160 GPa modulus
    if (eta * rmax > opt.max_strain_step) eta = opt.max_strain_step / rmax;

    const Structure& base = out.structure;
    const double h0 = enthalpy(base, out.result.energy);
    const double slope = -base.volume() * (R.array() * R.array()).sum();
    double t = eta;
    bool accepted = false;
    Structure trial;
    EvalResult tr;
    while (t * rmax > 1e-9) {
      trial = base.deformed(Mat3::Identity() - t * R);
      if (trial.volume() < 0.1 * v0)
        throw RuntimeError("relax_cell: cell collapsed below 10% of its initial volume");
      tr = p.evaluate(trial);
      if (!std::isfinite(tr.energy))
        throw RuntimeError("relax_cell: non-finite energy at cell step " + std::to_string(steps + 1));
      if (enthalpy(trial, tr.energy) <= h0 + opt.positions.armijo_c * t * slope) {
        accepted = true;
        break;
      }
      t *= opt.positions.shrink;
    }
    if (!accepted) break;
    ++steps;
    prev_step = -t * R;
    prev_R = R;
    eta = t;
    RelaxResult inner = relax_positions(trial, p, opt.positions);
    total_iter += inner.iterations;
    for (auto& f : inner.trajectory) traj.push_back(std::move(f));
    out.structure = std::move(inner.structure);
    out.result = std::move(inner.result);
    out.max_force = inner.max_force;
    R = residual(out.result);
  }
  out.trajectory = std::move(traj);
  out.iterations = total_iter;
  out.cell_steps = steps;
  out.max_force = out.result.max_force();
  out.max_stress_residual = R.cwiseAbs().maxCoeff();
  out.converged = out.max_force < opt.positions.f_tol &&
                  (out.max_stress_residual < opt.stress_tol || !std::isfinite(opt.stress_tol));
  return out;
}

}  // namespace matscreen
