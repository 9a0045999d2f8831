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

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace matscreen {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using IVec3 = std::array<int, 3>;

/// Wraps a fractional coordinate into [0, 1).
double wrap_fractional(double x);

/// Periodic crystal: species, fractional coordinates, lattice.
///
/// The lattice stores lattice vectors as rows, so Cartesian positions are
/// the row product frac * lattice. Fractional coordinates are wrapped into
/// [0, 1) on construction. Values are immutable; "with_*" members return
/// modified copies.
class Structure {
 public:
  using Tags = std::map<std::string, std::string>;

  Structure() = default;
  Structure(std::vector<std::string> species, std::vector<Vec3> frac_coords, const Mat3& lattice,
            Tags tags = {});

  static Structure from_cartesian(std::vector<std::string> species,
                                  const std::vector<Vec3>& cart_coords, const Mat3& lattice,
                                  Tags tags = {});

  std::size_t size() const { return species_.size(); }
  const std::vector<std::string>& species() const { return species_; }
  const std::string& species(std::size_t i) const { return species_.at(i); }
  const std::vector<Vec3>& frac_coords() const { return frac_; }
  const Vec3& frac(std::size_t i) const { return frac_.at(i); }
  const Mat3& lattice() const { return lattice_; }
  const Tags& tags() const { return tags_; }

  double volume() const { return lattice_.determinant(); }
  /// Rows b_k satisfy a_i . b_k = delta_ik (no 2 pi factor).
  Mat3 reciprocal() const { return lattice_.inverse().transpose(); }
  /// Plane spacing along each lattice direction, 1/|b_k|.
  Vec3 perpendicular_widths() const;

  Vec3 cart(std::size_t i) const;
  std::vector<Vec3> cart_coords() const;
  std::vector<double> masses() const;
  /// Distinct species in order of first appearance.
  std::vector<std::string> unique_species() const;
  std::size_t count(const std::string& symbol) const;

  Structure with_lattice(const Mat3& lattice) const;  // fractional kept
  Structure with_frac_coords(std::vector<Vec3> frac) const;
  Structure with_cart_coords(const std::vector<Vec3>& cart) const;
  Structure with_species(std::vector<std::string> species) const;
  Structure with_tag(const std::string& key, const std::string& value) const;
  /// Homogeneous deformation: L -> L F and r -> r F (fractional kept).
  Structure deformed(const Mat3& deformation) const;

  /// Stable hex digest of species, coordinates and lattice. Tags excluded.
  std::string content_hash() const;

  /// Chemical formula in order of first appearance, e.g. "Ca3SiO5".
  std::string formula() const;

 private:
  void validate() const;

  std::vector<std::string> species_;
  std::vector<Vec3> frac_;
  Mat3 lattice_ = Mat3::Identity();
  Tags tags_;
  // Exact Cartesian input, kept only while it agrees with frac_ (no atom was
  // shifted by wrapping). Lets Cartesian file formats round-trip bit-exactly.
  std::vector<Vec3> cart_cache_;
};

Vec3 frac_to_cart(const Structure& s, std::size_t i);

/// Shortest periodic distance between atoms i and j. Starts from the 27
/// nearest images and widens the image search whenever the cell is too
/// skewed for those to be sufficient, so the result is always exact.
double min_image_distance(const Structure& s, std::size_t i, std::size_t j);

/// Shortest periodic displacement vector r_j - r_i.
Vec3 min_image_vector(const Structure& s, std::size_t i, std::size_t j);

struct NeighborPair {
  std::size_t i;
  std::size_t j;
  IVec3 offset;      // lattice image of j
  double distance;   // A
  Vec3 displacement; // r_j + offset . L - r_i, A
};

/// Full (both directions) periodic neighbor list, sorted by (i, j, offset).
struct NeighborList {
  double cutoff = 0.0;
  std::vector<NeighborPair> pairs;
  /// pairs[begin[i] .. begin[i+1]) have center atom i.
  std::vector<std::size_t> begin;

  std::size_t size() const { return pairs.size(); }
};

/// Cell-list build; falls back to direct image enumeration when any
/// perpendicular width fits fewer than three bins of the cutoff.
NeighborList build_neighbor_list(const Structure& s, double cutoff);

/// Reference O(n^2 * images) enumeration.
NeighborList build_neighbor_list_brute_force(const Structure& s, double cutoff);

struct Supercell {
  Structure structure;
  Structure base;
  IVec3 repeat{1, 1, 1};
  std::vector<std::size_t> base_index;  // supercell atom -> base atom
  std::vector<IVec3> cell_offset;       // supercell atom -> cell offset
};

inline constexpr std::size_t kDefaultMaxSupercellAtoms = 200000;

/// Tiles the base cell; atoms are ordered cell-major with the base index
/// fastest, so atoms 0..n-1 form the home cell.
Supercell make_supercell(const Structure& s, const IVec3& repeat,
                         std::size_t max_atoms = kDefaultMaxSupercellAtoms);

/// Lattice parameters (a, b, c, alpha, beta, gamma) in A and degrees.
std::array<double, 6> lattice_parameters(const Mat3& lattice);

/// Rotation matrix from axis and angle (radians).
Mat3 rotation_matrix(const Vec3& axis, double angle);

}  // namespace matscreen
