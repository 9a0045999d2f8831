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

#include "matscreen/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "matscreen/elements.hpp"
#include "matscreen/error.hpp"
#include "matscreen/units.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

double wrap_fractional(double x) {
  double w = x - std::floor(x);
  // x slightly below an integer can round up to exactly 1.0.
  if (w >= 1.0) w = 0.0;
  return w;
}

Structure::Structure(std::vector<std::string> species, std::vector<Vec3> frac_coords,
                     const Mat3& lattice, Tags tags)
    : species_(std::move(species)), frac_(std::move(frac_coords)), lattice_(lattice),
      tags_(std::move(tags)) {
  for (auto& f : frac_)
    for (int k = 0; k < 3; ++k) f[k] = wrap_fractional(f[k]);
  validate();
}

Structure Structure::from_cartesian(std::vector<std::string> species,
                                    const std::vector<Vec3>& cart_coords, const Mat3& lattice,
                                    Tags tags) {
  const Mat3 inv = lattice.inverse();
  std::vector<Vec3> frac;
  frac.reserve(cart_coords.size());
  bool exact = true;
  for (const auto& r : cart_coords) {
    Vec3 f = (r.transpose() * inv).transpose();
    for (int k = 0; k < 3; ++k) {
      // Rounding noise at the cell faces is snapped instead of wrapped, so
      // the atom is not moved by a full lattice vector.
      if (f[k] < 0.0 && f[k] > -1e-12) f[k] = 0.0;
      if (f[k] >= 1.0 && f[k] < 1.0 + 1e-12) f[k] = std::nextafter(1.0, 0.0);
      if (f[k] < 0.0 || f[k] >= 1.0) exact = false;
    }
    frac.push_back(f);
  }
  Structure out(std::move(species), std::move(frac), lattice, std::move(tags));
  if (exact) out.cart_cache_ = cart_coords;
  return out;
}

void Structure::validate() const {
  if (species_.empty()) throw InvalidArgument("structure must contain at least one atom");
  if (species_.size() != frac_.size())
    throw InvalidArgument("species count " + std::to_string(species_.size()) +
                          " does not match coordinate count " + std::to_string(frac_.size()));
  if (!lattice_.allFinite()) throw InvalidArgument("lattice contains non-finite values");
  if (!(lattice_.determinant() > 0.0))
    throw InvalidArgument("lattice must be right-handed with nonzero volume");
  for (const auto& f : frac_)
    if (!f.allFinite()) throw InvalidArgument("non-finite fractional coordinate");
  for (const auto& sym : species_) element(sym);
}

Vec3 Structure::perpendicular_widths() const {
  const Mat3 rec = reciprocal();
  return {1.0 / rec.row(0).norm(), 1.0 / rec.row(1).norm(), 1.0 / rec.row(2).norm()};
}

Vec3 Structure::cart(std::size_t i) const {
  if (!cart_cache_.empty()) return cart_cache_.at(i);
  return (frac_.at(i).transpose() * lattice_).transpose();
}

std::vector<Vec3> Structure::cart_coords() const {
  if (!cart_cache_.empty()) return cart_cache_;
  std::vector<Vec3> out;
  out.reserve(size());
  for (const auto& f : frac_) out.emplace_back((f.transpose() * lattice_).transpose());
  return out;
}

std::vector<double> Structure::masses() const {
  std::vector<double> m;
  m.reserve(size());
  for (const auto& s : species_) m.push_back(element(s).mass);
  return m;
}

std::vector<std::string> Structure::unique_species() const {
  std::vector<std::string> out;
  for (const auto& s : species_)
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  return out;
}

std::size_t Structure::count(const std::string& symbol) const {
  return static_cast<std::size_t>(std::count(species_.begin(), species_.end(), symbol));
}

Structure Structure::with_lattice(const Mat3& lattice) const {
  return Structure(species_, frac_, lattice, tags_);
}

Structure Structure::with_frac_coords(std::vector<Vec3> frac) const {
  return Structure(species_, std::move(frac), lattice_, tags_);
}

Structure Structure::with_cart_coords(const std::vector<Vec3>& cart) const {
  return from_cartesian(species_, cart, lattice_, tags_);
}

Structure Structure::with_species(std::vector<std::string> species) const {
  return Structure(std::move(species), frac_, lattice_, tags_);
}

Structure Structure::with_tag(const std::string& key, const std::string& value) const {
  Structure out = *this;
  out.tags_[key] = value;
  return out;
}

Structure Structure::deformed(const Mat3& deformation) const {
  return Structure(species_, frac_, lattice_ * deformation, tags_);
}

std::string Structure::content_hash() const {
  Fnv1a h;
  for (std::size_t i = 0; i < size(); ++i) {
    h.update(species_[i]);
    h.update(std::string_view("|"));
    for (int k = 0; k < 3; ++k) h.update(frac_[i][k]);
  }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) h.update(lattice_(r, c));
  return h.hex();
}

std::string Structure::formula() const {
  std::string out;
  for (const auto& s : unique_species()) {
    out += s;
    const auto n = count(s);
    if (n != 1) out += std::to_string(n);
  }
  return out;
}

Vec3 frac_to_cart(const Structure& s, std::size_t i) {
  if (i >= s.size()) throw InvalidArgument("atom index " + std::to_string(i) + " out of range");
  return s.cart(i);
}

namespace {

Vec3 centered_frac_delta(const Structure& s, std::size_t i, std::size_t j) {
  Vec3 df = s.frac(j) - s.frac(i);
  for (int k = 0; k < 3; ++k) df[k] -= std::round(df[k]);
  return df;
}

}  // namespace

Vec3 min_image_vector(const Structure& s, std::size_t i, std::size_t j) {
  if (i >= s.size() || j >= s.size()) throw InvalidArgument("atom index out of range");
  const Vec3 df = centered_frac_delta(s, i, j);
  const Mat3& L = s.lattice();

  auto search = [&](const IVec3& range, Vec3& best, double& best_d2) {
    for (int a = -range[0]; a <= range[0]; ++a)
      for (int b = -range[1]; b <= range[1]; ++b)
        for (int c = -range[2]; c <= range[2]; ++c) {
          const Vec3 f = df + Vec3(a, b, c);
          const Vec3 d = (f.transpose() * L).transpose();
          const double d2 = d.squaredNorm();
          if (d2 < best_d2) {
            best_d2 = d2;
            best = d;
          }
        }
  };

  Vec3 best = Vec3::Zero();
  double best_d2 = std::numeric_limits<double>::infinity();
  search({1, 1, 1}, best, best_d2);

  // Any image closer than the current best has |frac_k| <= d / width_k.
  const Vec3 w = s.perpendicular_widths();
  const double d = std::sqrt(best_d2);
  IVec3 range{};
  bool wider = false;
  for (int k = 0; k < 3; ++k) {
    range[k] = static_cast<int>(std::ceil(d / w[k] + 0.5));
    wider = wider || range[k] > 1;
  }
  if (wider) search(range, best, best_d2);
  return best;
}

double min_image_distance(const Structure& s, std::size_t i, std::size_t j) {
  if (i == j) return 0.0;
  return min_image_vector(s, i, j).norm();
}

namespace {

void finalize(NeighborList& nl, std::size_t n) {
  std::sort(nl.pairs.begin(), nl.pairs.end(), [](const NeighborPair& x, const NeighborPair& y) {
    return std::tie(x.i, x.j, x.offset) < std::tie(y.i, y.j, y.offset);
  });
  nl.begin.assign(n + 1, 0);
  for (const auto& p : nl.pairs) ++nl.begin[p.i + 1];
  for (std::size_t i = 0; i < n; ++i) nl.begin[i + 1] += nl.begin[i];
}

}  // namespace

NeighborList build_neighbor_list_brute_force(const Structure& s, double cutoff) {
  if (!(cutoff > 0.0)) throw InvalidArgument("neighbor cutoff must be positive");
  NeighborList nl;
  nl.cutoff = cutoff;
  const Vec3 w = s.perpendicular_widths();
  IVec3 range{};
  for (int k = 0; k < 3; ++k) range[k] = static_cast<int>(std::ceil(cutoff / w[k])) + 1;

  const auto cart = s.cart_coords();
  const Mat3& L = s.lattice();
  const double rc2 = cutoff * cutoff;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      for (int a = -range[0]; a <= range[0]; ++a)
        for (int b = -range[1]; b <= range[1]; ++b)
          for (int c = -range[2]; c <= range[2]; ++c) {
            if (i == j && a == 0 && b == 0 && c == 0) continue;
            const Vec3 shift = (Vec3(a, b, c).transpose() * L).transpose();
            const Vec3 d = cart[j] + shift - cart[i];
            const double d2 = d.squaredNorm();
            if (d2 <= rc2) nl.pairs.push_back({i, j, {a, b, c}, std::sqrt(d2), d});
          }
  finalize(nl, s.size());
  return nl;
}

NeighborList build_neighbor_list(const Structure& s, double cutoff) {
  if (!(cutoff > 0.0)) throw InvalidArgument("neighbor cutoff must be positive");
  const Vec3 w = s.perpendicular_widths();
  IVec3 nbin{};
  for (int k = 0; k < 3; ++k) nbin[k] = static_cast<int>(std::floor(w[k] / cutoff));
  if (*std::min_element(nbin.begin(), nbin.end()) < 3) return build_neighbor_list_brute_force(s, cutoff);

  const std::size_t n = s.size();
  const std::size_t total_bins = static_cast<std::size_t>(nbin[0]) * nbin[1] * nbin[2];
  auto flat = [&](const IVec3& b) {
    return (static_cast<std::size_t>(b[0]) * nbin[1] + b[1]) * nbin[2] + b[2];
  };

  std::vector<IVec3> atom_bin(n);
  std::vector<std::vector<std::size_t>> bins(total_bins);
  for (std::size_t i = 0; i < n; ++i) {
    IVec3 b{};
    for (int k = 0; k < 3; ++k)
      b[k] = std::min(nbin[k] - 1, static_cast<int>(std::floor(s.frac(i)[k] * nbin[k])));
    atom_bin[i] = b;
    bins[flat(b)].push_back(i);
  }

  NeighborList nl;
  nl.cutoff = cutoff;
  const auto cart = s.cart_coords();
  const Mat3& L = s.lattice();
  const double rc2 = cutoff * cutoff;
  for (std::size_t i = 0; i < n; ++i) {
    for (int da = -1; da <= 1; ++da)
      for (int db = -1; db <= 1; ++db)
        for (int dc = -1; dc <= 1; ++dc) {
          IVec3 cell{atom_bin[i][0] + da, atom_bin[i][1] + db, atom_bin[i][2] + dc};
          IVec3 image{};
          for (int k = 0; k < 3; ++k) {
            image[k] = cell[k] < 0 ? -1 : (cell[k] >= nbin[k] ? 1 : 0);
            cell[k] -= image[k] * nbin[k];
          }
          const Vec3 shift = (Vec3(image[0], image[1], image[2]).transpose() * L).transpose();
          for (std::size_t j : bins[flat(cell)]) {
            if (i == j && image[0] == 0 && image[1] == 0 && image[2] == 0) continue;
            const Vec3 d = cart[j] + shift - cart[i];
            const double d2 = d.squaredNorm();
            if (d2 <= rc2) nl.pairs.push_back({i, j, image, std::sqrt(d2), d});
          }
        }
  }
  finalize(nl, n);
  return nl;
}

Supercell make_supercell(const Structure& s, const IVec3& repeat, std::size_t max_atoms) {
  for (int r : repeat)
    if (r < 1) throw InvalidArgument("supercell repeats must be >= 1");
  const std::size_t cells = static_cast<std::size_t>(repeat[0]) * repeat[1] * repeat[2];
  if (cells > max_atoms / s.size())
    throw InvalidArgument("supercell would contain more than " + std::to_string(max_atoms) +
                          " atoms");

  Supercell sc;
  sc.base = s;
  sc.repeat = repeat;
  Mat3 lattice = s.lattice();
  for (int k = 0; k < 3; ++k) lattice.row(k) *= repeat[k];

  std::vector<std::string> species;
  std::vector<Vec3> frac;
  species.reserve(cells * s.size());
  frac.reserve(cells * s.size());
  for (int a = 0; a < repeat[0]; ++a)
    for (int b = 0; b < repeat[1]; ++b)
      for (int c = 0; c < repeat[2]; ++c)
        for (std::size_t i = 0; i < s.size(); ++i) {
          const Vec3& f = s.frac(i);
          species.push_back(s.species(i));
          frac.emplace_back((f[0] + a) / repeat[0], (f[1] + b) / repeat[1], (f[2] + c) / repeat[2]);
          sc.base_index.push_back(i);
          sc.cell_offset.push_back({a, b, c});
        }
  sc.structure = Structure(std::move(species), std::move(frac), lattice, s.tags());
  return sc;
}

std::array<double, 6> lattice_parameters(const Mat3& lattice) {
  const Vec3 a = lattice.row(0), b = lattice.row(1), c = lattice.row(2);
  auto angle = [](const Vec3& u, const Vec3& v) {
    return std::acos(std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0)) * 180.0 / units::kPi;
  };
  return {a.norm(), b.norm(), c.norm(), angle(b, c), angle(a, c), angle(a, b)};
}

Mat3 rotation_matrix(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace matscreen
