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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "matscreen/active.hpp"
#include "matscreen/campaign.hpp"
#include "matscreen/elements.hpp"
#include "matscreen/explore.hpp"
#include "matscreen/fit.hpp"
#include "matscreen/io.hpp"
#include "matscreen/md.hpp"
#include "matscreen/mech.hpp"
#include "matscreen/phonon.hpp"
#include "matscreen/relax.hpp"
#include "matscreen/util.hpp"

using namespace matscreen;
namespace fs = std::filesystem;

namespace {

constexpr double kEv = 1.602176634e-19;     // J
constexpr double kAmu = 1.66053906660e-27;  // kg
constexpr double kKb = 8.617333262e-5;      // eV/K
constexpr double kH = 4.135667696e-15;      // eV s
constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

Mat3 cubic(double a) { return a * Mat3::Identity(); }

Structure fcc_conventional(const std::string& sym, double a) {
  return Structure(std::vector<std::string>(4, sym), {{0, 0, 0}, {0.5, 0.5, 0}, {0.5, 0, 0.5}, {0, 0.5, 0.5}}, cubic(a));
}

Structure fcc_primitive(const std::string& sym, double a) {
  Mat3 L;
  L << 0, a / 2, a / 2, a / 2, 0, a / 2, a / 2, a / 2, 0;
  return Structure({sym}, {Vec3::Zero()}, L);
}

GeneratorSpec random_spec(std::uint64_t seed) {
  GeneratorSpec g;
  g.composition = {{"Ca", 2}, {"O", 3}};
  g.seed = seed;
  g.volume_min = 12;
  g.volume_max = 22;
  g.min_distance_scale = 0.85;
  return g;
}

std::vector<Structure> random_structures(std::size_t count, std::uint64_t seed) {
  return generate_candidates(random_spec(seed), count).structures;
}

bool same_geometry(const Structure& a, const Structure& b, double tol) {
  if (a.size() != b.size() || a.species() != b.species() || a.lattice() != b.lattice()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if ((a.cart(i) - b.cart(i)).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

double max_force_fd_error(const Potential& p, const Structure& s, double h = 1e-4) {
  const auto r = p.evaluate(s);
  const auto cart = s.cart_coords();
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      auto plus = cart, minus = cart;
      plus[i][k] += h;
      minus[i][k] -= h;
      const double fd = -(p.energy(s.with_cart_coords(plus)) - p.energy(s.with_cart_coords(minus))) / (2 * h);
      worst = std::max(worst, std::abs(r.forces[i][k] - fd));
    }
  return worst;
}

// LJ parameters shared by the crystal checks.
LennardJones fcc_lj() { return LennardJones({0.2, 2.3}, 6.0, true); }

Structure relaxed_fcc(const Potential& p) {
  CellRelaxOptions opt;
  opt.stress_tol = 1e-7;
  opt.positions.f_tol = 1e-8;
  return relax_cell(fcc_primitive("Cu", 1.09 * 2.3 * std::sqrt(2.0)), p, opt).structure;
}

// ---------------------------------------------------------------------------

void force_consistency(Outcome& o) {
  const auto structures = random_structures(20, 101);
  // Per-pair sigma puts each minimum at the generator's unscaled contact distance.
  const auto spec = random_spec(101);
  LennardJones lj({0.01, 2.5}, 8.0, true);
  for (const char* a : {"Ca", "O"})
    for (const char* b : {"Ca", "O"})
      lj.set_pair(a, b, {0.01, spec.min_distance(a, b) / spec.min_distance_scale * std::pow(2.0, -1.0 / 6.0)});
  const auto oracle = oracle_potential({});

  std::vector<LabeledFrame> frames;
  for (const auto& s : random_structures(40, 202)) frames.push_back(oracle_label(*oracle, s));
  FitHyperparams hp;
  hp.epochs = 60;
  const auto trained = train(frames, hp, 1).model;

  double e_lj = 0, e_or = 0, e_nn = 0;
  for (const auto& s : structures) {
    e_lj = std::max(e_lj, max_force_fd_error(lj, s));
    e_or = std::max(e_or, max_force_fd_error(*oracle, s));
    e_nn = std::max(e_nn, max_force_fd_error(*trained, s));
  }
  o.detail << "max |F - FD|: LJ " << e_lj << ", oracle " << e_or << ", trained " << e_nn << " eV/A";
  o.require(e_lj < 1e-5, "LJ");
  o.require(e_or < 1e-5, "oracle");
  o.require(e_nn < 1e-3, "trained descriptor");
}

void relaxation(Outcome& o) {
  const LennardJones lj({1.0, 1.0}, 4.0);
  const Structure d = Structure::from_cartesian({"Ar", "Ar"}, {Vec3(5, 5, 5), Vec3(6.3, 5, 5)}, cubic(20.0));
  RelaxOptions tight;
  tight.f_tol = 1e-6;
  const auto r = relax_positions(d, lj, tight);
  const double dist = (r.structure.cart(1) - r.structure.cart(0)).norm();
  const double dr = std::abs(dist - std::pow(2.0, 1.0 / 6.0)), de = std::abs(r.result.energy + 1.0);
  o.require(r.converged && dr < 1e-4 && de < 1e-8, "dimer");

  const auto oracle = oracle_potential({});
  int converged = 0;
  double worst = 0.0;
  for (const auto& s : random_structures(20, 303)) {
    const auto q = relax_positions(s, *oracle);
    if (!q.converged) continue;
    ++converged;
    worst = std::max(worst, q.result.max_force());
  }
  o.require(worst < 0.05, "converged max force");
  o.detail << "dimer |dr| " << dr << " A, |dE| " << de << " eV; " << converged
           << "/20 oracle relaxations converged, worst max force " << worst << " eV/A";
}

void phonons(Outcome& o) {
  // Chain along x with a harmonic nearest-neighbour spring.
  const double a = 2.5, k = 1.7;
  const HarmonicPair hp(k, a, 1.5 * a);
  const Structure chain({"Ar"}, {Vec3::Zero()}, Vec3(a, 12.0, 12.0).asDiagonal());
  const auto fc_chain = force_constants(chain, hp, {10, 1, 1});
  const double w0 = std::sqrt(k * kEv / (1e-20 * element("Ar").mass * kAmu));  // rad/s
  std::vector<Vec3> qs;
  for (int i = 1; i <= 20; ++i) qs.push_back(Vec3(0.5 * i / 20.0, 0, 0));
  const auto ph_chain = dispersion(fc_chain, qs);
  double rel = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const double expected = 2 * w0 * std::abs(std::sin(kPi * qs[i][0])) / (2 * kPi) * 1e-12;
    rel = std::max(rel, std::abs(ph_chain.frequencies(static_cast<Eigen::Index>(i), 2) - expected) / expected);
  }
  o.require(rel < 1e-6, "chain dispersion");

  const auto lj = fcc_lj();
  const auto s = relaxed_fcc(lj);
  const auto fc = force_constants(s, lj, {6, 6, 6});
  const auto gamma = dispersion(fc, {Vec3::Zero()});
  const double acoustic = gamma.frequencies.row(0).head(3).cwiseAbs().maxCoeff();
  o.require(acoustic < 1e-3, "Gamma acoustic modes");

  const auto ph = dispersion(fc, monkhorst_pack({8, 8, 8}));
  const double integral = dos(ph, 0.02).integral();
  o.require(std::abs(integral - 3.0) < 1e-6, "DOS integral");

  const double T_high = kH * ph.frequencies.maxCoeff() * 1e12 / kKb / 0.05;
  const double dp = heat_capacity(ph, T_high) / (3 * kKb) - 1.0;
  o.require(std::abs(dp) < 5e-3, "Dulong-Petit");

  const double T = 300.0, h = 1.0;
  const double d2F = (helmholtz_free_energy(ph, T + h) - 2 * helmholtz_free_energy(ph, T) +
                      helmholtz_free_energy(ph, T - h)) / (h * h);
  const double cv_rel = std::abs(-T * d2F / heat_capacity(ph, T) - 1.0);
  o.require(cv_rel < 1e-3, "C_V consistency");
  o.detail << "chain rel err " << rel << "; Gamma max " << acoustic << " THz; DOS integral - 3 = " << integral - 3.0
           << "; C_V/3k_B - 1 = " << dp << " at " << T_high << " K; |-T F''/C_V - 1| = " << cv_rel;
}

void qha(Outcome& o) {
  const double V0 = 20.0, p = 0.3;
  std::vector<QhaSample> parabola;
  for (int i = 0; i < 7; ++i) {
    const double V = V0 - 1.5 + 0.5 * i;
    PhononResult none;
    none.qpoints = {Vec3::Zero()};
    none.natoms = 1;
    none.frequencies = Eigen::MatrixXd::Zero(1, 3);
    parabola.push_back({V, (V - V0) * (V - V0), none});
  }
  const double err = std::abs(gibbs_qha(parabola, 0.0, p).volume - (V0 - p / 2));
  o.require(err < 1e-6, "parabola");

  const auto lj = fcc_lj();
  const auto s0 = relaxed_fcc(lj);
  std::vector<QhaSample> samples;
  for (int i = -6; i <= 6; ++i) {
    const double scale = 1.0 + 0.01 * i;
    const Structure s = s0.with_lattice(s0.lattice() * scale);
    const auto fc = force_constants(s, lj, {4, 4, 4});
    samples.push_back({s.volume(), lj.energy(s), dispersion(fc, monkhorst_pack({8, 8, 8}))});
  }
  std::vector<double> volumes;
  for (double T = 100.0; T <= 800.0; T += 100.0) volumes.push_back(gibbs_qha(samples, T, 0.0).volume);
  bool increasing = true;
  for (std::size_t k = 1; k < volumes.size(); ++k) increasing = increasing && volumes[k] > volumes[k - 1];
  o.require(increasing, "thermal expansion");
  o.detail << "parabola |V* - (V0 - p/2)| = " << err << "; V*(100 K) = " << volumes.front()
           << ", V*(800 K) = " << volumes.back() << " A^3";
}

void elasticity(Outcome& o) {
  const auto lj = fcc_lj();
  const Structure p = relaxed_fcc(lj);
  const double a = std::sqrt(2.0) * p.lattice().row(0).norm();
  const Structure s = fcc_conventional("Cu", a);
  const auto c = elastic_tensor(s, lj);
  const Matrix6& C = c.C;
  const double c11 = C(0, 0);
  double dual = 0.0, cubic_err = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      if (std::abs(C(i, j)) > 0.01 * c11) dual = std::max(dual, std::abs(c.C_stress(i, j) / C(i, j) - 1.0));
      const bool block = (i < 3 && j < 3) || i == j;
      if (!block) cubic_err = std::max(cubic_err, std::abs(C(i, j)) / c11);
    }
  for (int i = 1; i < 3; ++i) cubic_err = std::max(cubic_err, std::abs(C(i, i) / c11 - 1.0));
  cubic_err = std::max({cubic_err, std::abs(C(0, 2) / C(0, 1) - 1.0), std::abs(C(1, 2) / C(0, 1) - 1.0),
                        std::abs(C(4, 4) / C(3, 3) - 1.0), std::abs(C(5, 5) / C(3, 3) - 1.0)});
  ShearOptions so;
  so.steps = 3;
  const auto curve = ideal_shear(s, lj, so);
  const double slope = curve.stress[1] / curve.gamma[1];
  const double shear_err = std::abs(slope / C(3, 3) - 1.0);
  o.require(dual < 0.02, "energy vs stress");
  o.require(cubic_err < 0.01, "cubic relations");
  o.require(shear_err < 0.05, "shear slope");
  o.detail << "C11 " << c.gpa()(0, 0) << " GPa, C12 " << c.gpa()(0, 1) << " GPa, C44 " << c.gpa()(3, 3)
           << " GPa; energy/stress max rel diff " << dual << "; cubic max rel dev " << cubic_err
           << "; shear slope / C44 - 1 = " << shear_err;
}

void diffusivity(Outcome& o) {
  const ZeroPotential zero;
  const Structure one({"Ar"}, {Vec3(5, 5, 5)}, cubic(10.0));
  MdOptions md;
  md.temperature = 300.0;
  md.friction = 0.01;
  md.steps = 1000000;
  md.stride = 100;
  md.seed = 2026;
  const auto traj = run_nvt(one, zero, md);
  DiffusivityOptions opt;
  opt.remove_drift = false;
  opt.t_min = 10.0 / md.friction;
  opt.t_max = 50.0 / md.friction;
  const double D = einstein_diffusivity(traj, opt).D;
  // kT/(m gamma) in SI (m^2/s), then cm^2/s.
  const double D_si = kKb * kEv * md.temperature / (element("Ar").mass * kAmu * md.friction * 1e15);
  const double D_ref = D_si * 1e4;
  const double rel = std::abs(D / D_ref - 1.0);
  o.require(rel < 0.15, "Langevin D");

  Structure frozen({"Ar", "Ar"}, {Vec3::Zero(), Vec3(0.5, 0.5, 0.5)}, cubic(6.0));
  MdOptions still;
  still.friction = 0.0;
  still.steps = 400;
  still.velocities = {Vec3::Zero(), Vec3::Zero()};
  const double D0 = einstein_diffusivity(run_nvt(frozen, zero, still)).D;
  o.require(D0 == 0.0, "frozen D");

  const bool boundary = classify_mobility(kMobilityThreshold) == Mobility::kMobile &&
                        classify_mobility(std::nextafter(kMobilityThreshold, 0.0)) == Mobility::kInert &&
                        classify_mobility(5e-8) == Mobility::kInert && classify_mobility(1e-6) == Mobility::kMobile;
  o.require(boundary, "mobility boundary");
  o.detail << "D = " << D << " cm^2/s vs kT/(m gamma) = " << D_ref << " (rel " << rel << "); frozen D = " << D0;
}

void active_learning(Outcome& o) {
  OracleSpec os;
  os.three_body_scale = 0.0;
  os.pair_cutoff = 5.0;
  const auto oracle = oracle_potential(os);
  AlOptions opt;
  opt.generator.composition = {{"Ca", 2}, {"O", 2}};
  opt.generator.seed = 11;
  opt.generator.min_distance_scale = 0.85;
  opt.generator.volume_min = 12;
  opt.generator.volume_max = 22;
  opt.fit.descriptor.species = {"Ca", "O"};
  const auto r = run_al_loop(*oracle, opt);
  const auto& first = r.records.front();
  const auto& last = r.records.back();
  o.require(r.converged, "terminated on pass fraction");
  o.require(last.pass_fraction >= 0.90, "final pass fraction");
  o.require(last.validation_energy_mae < first.validation_energy_mae, "MAE improvement");
  o.detail << r.records.size() << " cycles; pass fraction " << last.pass_fraction << "; validation MAE "
           << first.validation_energy_mae << " -> " << last.validation_energy_mae << " meV/atom";
}

nlohmann::json toy_config(const std::string& dir) {
  auto j = nlohmann::json::parse(R"({
    "seed": 42,
    "generator": {"composition": {"Ca": 2, "O": 2}, "volume_per_atom": [10, 25],
                  "min_distance": [["O", "O", 2.0], ["Ca", "Ca", 2.2], ["Ca", "O", 1.8]]},
    "candidates": 60,
    "temperatures": "0..2000 step 250",
    "references": {"Ca": -0.5, "O": -0.5, "Mg": -0.5},
    "oracle": {"kind": "lennard_jones", "model": {"epsilon": 0.1, "sigma": 2.4, "cutoff": 6.0, "shift": true,
               "pairs": [{"a": "Ca", "b": "O", "epsilon": 0.4, "sigma": 2.1}]}},
    "potential": {"source": "oracle"},
    "phonon": {"top_k": 50},
    "md": {"top_k": 10},
    "dopants": {"hosts": 2, "dopants": ["Mg"], "sites": ["Ca"]}
  })");
  j["output_dir"] = dir;
  return j;
}

std::vector<std::string> tree_files(const fs::path& root) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root).string());
  std::sort(files.begin(), files.end());
  return files;
}

void determinism_and_parsers(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "matscreen-acceptance";
  fs::remove_all(root);
  screen(load_config(toy_config((root / "run1").string()).dump()));
  screen(load_config(toy_config((root / "run2").string()).dump()));
  const auto f1 = tree_files(root / "run1"), f2 = tree_files(root / "run2");
  std::size_t compared = 0, differing = 0;
  o.require(f1 == f2, "same artifact set");
  for (const auto& f : f1) {
    if (f == "config.effective.json" || f == "ledger.json") continue;  // output path, timings
    ++compared;
    if (io::read_file((root / "run1" / f).string()) != io::read_file((root / "run2" / f).string())) ++differing;
  }
  o.require(differing == 0, "byte identity");
  const auto report = nlohmann::json::parse(io::read_file((root / "run1" / "report.json").string()));
  o.require(report.at("ranked").size() > 0, "populated report");

  const char* species[] = {"H", "O", "Ca", "Si", "Na", "Mg", "Al", "Fe"};
  Rng rng(2026, 8);
  std::size_t poscar_ok = 0, xyz_ok = 0;
  for (int k = 0; k < 1000; ++k) {
    Mat3 L;
    do {
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) L(a, b) = (a == b ? rng.uniform(2.0, 12.0) : 0.0) + rng.uniform(-2.0, 2.0);
    } while (L.determinant() < 1.0);
    const std::size_t n = 1 + rng.index(12);
    std::vector<std::string> sp;
    std::vector<Vec3> f;
    for (std::size_t i = 0; i < n; ++i) {
      sp.push_back(species[rng.index(8)]);
      f.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
    }
    const Structure s(sp, f, L);
    const std::string text = io::write_poscar(s);
    const Structure back = io::read_poscar(text);
    if (back.content_hash() == s.content_hash() && io::write_poscar(back) == text) ++poscar_ok;

    LabeledFrame fr;
    fr.structure = s;
    fr.energy = rng.uniform(-100.0, 100.0);
    for (std::size_t i = 0; i < n; ++i) fr.forces.emplace_back(rng.normal(), rng.normal(), rng.normal());
    Mat3 st;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) st(a, b) = rng.normal() * 0.01;
    fr.stress = 0.5 * (st + st.transpose());
    const std::string xyz = io::write_extxyz({fr});
    const auto frames = io::read_extxyz(xyz);
    // Positions are stored Cartesian, so fractional coordinates may move by an ulp.
    if (frames.size() == 1 && frames[0].energy == fr.energy && frames[0].stress == fr.stress &&
        frames[0].forces == fr.forces && same_geometry(frames[0].structure, s, 1e-12) &&
        io::write_extxyz(frames) == xyz)
      ++xyz_ok;
  }
  o.require(poscar_ok == 1000, "POSCAR round trip");
  o.require(xyz_ok == 1000, "extxyz round trip");
  o.detail << compared << " artifacts compared, " << differing << " differ; " << report.at("ranked").size()
           << " ranked polymorphs; round trips POSCAR " << poscar_ok << "/1000, extxyz " << xyz_ok << "/1000";
  fs::remove_all(root);
}

void cost_crossover(Outcome& o) {
  CostModel m;
  m.oracle_cost = 50.0;
  m.surrogate_cost = 1.0;
  m.training_labels = 100;
  const auto r = cost_report(m);
  const double closed = 100.0 * 50.0 / 49.0;
  const bool within = r.crossover_count && std::abs(static_cast<double>(*r.crossover_count) - closed) <= 5.0;
  o.require(within, "crossover");
  bool monotone = true;
  double previous = 1e300;
  for (double co = 1.5; co < 1e4; co *= 1.3) {
    CostModel q = m;
    q.oracle_cost = co;
    q.training_cost = 20.0;
    const auto x = cost_report(q);
    monotone = monotone && x.crossover && *x.crossover <= previous;
    if (x.crossover) previous = *x.crossover;
  }
  o.require(monotone, "monotone");
  o.detail << "crossover " << (r.crossover_count ? std::to_string(*r.crossover_count) : std::string("none"))
           << " structures vs closed form " << closed;
}

}  // namespace

int main() {
  set_num_threads(4);
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"force consistency", force_consistency},
      {"relaxation", relaxation},
      {"phonons", phonons},
      {"quasi-harmonic", qha},
      {"elasticity", elasticity},
      {"diffusivity", diffusivity},
      {"active learning", active_learning},
      {"campaign determinism and parsers", determinism_and_parsers},
      {"cost crossover", cost_crossover},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s criterion %zu (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.str().c_str(), sec);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
