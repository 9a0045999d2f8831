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

#include <sstream>

#include "helpers.hpp"
#include "matscreen/error.hpp"
#include "matscreen/io.hpp"
#include "matscreen/util.hpp"

using namespace matscreen;
using namespace matscreen::testing;

namespace {

const char* kSpecies[] = {"H", "O", "Ca", "Si", "Na", "Mg", "Al", "Fe"};

Structure random_cell(Rng& rng) {
  Mat3 L;
  do {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) L(a, b) = (a == b ? rng.uniform(2.0, 12.0) : 0.0) + rng.uniform(-2.0, 2.0);
  } while (L.determinant() < 1.0);
  const std::size_t n = 1 + rng.index(12);
  std::vector<std::string> sp;
  std::vector<Vec3> f;
  for (std::size_t i = 0; i < n; ++i) {
    sp.push_back(kSpecies[rng.index(8)]);
    Vec3 x(rng.uniform(), rng.uniform(), rng.uniform());
    if (rng.index(10) == 0) x[rng.index(3)] = 0.0;
    if (rng.index(10) == 0) x[rng.index(3)] = std::nextafter(1.0, 0.0);
    f.push_back(x);
  }
  return Structure(sp, f, L);
}

LabeledFrame random_frame(Rng& rng) {
  LabeledFrame fr;
  fr.structure = random_cell(rng);
  fr.energy = rng.uniform(-500.0, 500.0) * std::pow(10.0, rng.uniform(-6.0, 3.0));
  for (std::size_t i = 0; i < fr.structure.size(); ++i)
    fr.forces.emplace_back(rng.normal(), rng.normal() * 1e-7, rng.normal() * 1e4);
  Mat3 s;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) s(a, b) = rng.normal() * 0.01;
  fr.stress = 0.5 * (s + s.transpose());
  fr.provenance = rng.index(2) ? Provenance::kOracle : Provenance::kExternal;
  return fr;
}

template <class F>
void expect_clean_failure(F&& f) {
  try {
    f();
  } catch (const Error&) {
  } catch (const std::exception& e) {
    FAIL("unexpected exception type: " << e.what());
  }
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("minimal POSCAR") {
  const auto s = io::read_poscar("cubic\n1.0\n3 0 0\n0 3 0\n0 0 3\nAr\n1\nDirect\n0 0 0\n");
  CHECK(s.size() == 1);
  CHECK(s.volume() == doctest::Approx(27.0));
}

TEST_CASE("Cartesian and Direct blocks describe the same structure") {
  Mat3 L;
  L << 4, 0, 0, 1, 5, 0, 0.5, 0.5, 6;
  Structure ref({"Na", "Cl"}, {Vec3(0.1, 0.2, 0.3), Vec3(0.6, 0.7, 0.8)}, L);
  std::ostringstream text;
  text << "test\n1.0\n4 0 0\n1 5 0\n0.5 0.5 6\nNa Cl\n1 1\nCartesian\n";
  for (std::size_t i = 0; i < 2; ++i) {
    const Vec3 r = frac_to_cart(ref, i);
    text << format_double(r[0]) << " " << format_double(r[1]) << " " << format_double(r[2]) << "\n";
  }
  const auto s = io::read_poscar(text.str());
  for (std::size_t i = 0; i < 2; ++i) CHECK((s.frac(i) - ref.frac(i)).norm() < 1e-12);
}

TEST_CASE("scale factors") {
  const auto s = io::read_poscar("x\n2.0\n1 0 0\n0 1 0\n0 0 1\nAr\n1\nCartesian\n0.5 0 0\n");
  CHECK(s.volume() == doctest::Approx(8.0));
  CHECK(s.frac(0)[0] == doctest::Approx(0.5));
  const auto v = io::read_poscar("x\n-64\n1 0 0\n0 1 0\n0 0 1\nAr\n1\nDirect\n0 0 0\n");
  CHECK(v.volume() == doctest::Approx(64.0));
}

TEST_CASE("missing species line names line 6") {
  try {
    io::read_poscar("old\n1.0\n3 0 0\n0 3 0\n0 0 3\n1\nDirect\n0 0 0\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 6);
    CHECK(std::string(e.what()).find("line 6") != std::string::npos);
  }
}

TEST_CASE("extended XYZ single frame") {
  const std::string text =
      "2\nLattice=\"5 0 0 0 5 0 0 0 5\" Properties=species:S:1:pos:R:3:forces:R:3 energy=-3.5 "
      "stress=\"0 0 0 0 0 0 0 0 0\" pbc=\"T T T\"\nO 0 0 0 0.1 0 0\nH 1 0 0 -0.1 0 0\n";
  const auto frames = io::read_extxyz(text);
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].structure.size() == 2);
  CHECK(frames[0].forces.size() == 2);
  CHECK(frames[0].energy == -3.5);
  CHECK(frames[0].forces[1][0] == -0.1);
}

TEST_CASE("frame without forces") {
  const std::string text =
      "1\nLattice=\"5 0 0 0 5 0 0 0 5\" Properties=species:S:1:pos:R:3 energy=-3.5 "
      "stress=\"0 0 0 0 0 0 0 0 0\"\nO 0 0 0\n";
  try {
    io::read_extxyz(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("missing forces") != std::string::npos);
  }
  CHECK(io::read_extxyz_structures(text).size() == 1);
}

TEST_CASE("POSCAR round trip property (1000 random cells)") {
  Rng rng(2026, 1);
  for (int k = 0; k < 1000; ++k) {
    const Structure s = random_cell(rng);
    const std::string a = io::write_poscar(s);
    const Structure r = io::read_poscar(a);
    REQUIRE(r.content_hash() == s.content_hash());
    REQUIRE(io::write_poscar(r) == a);
  }
}

TEST_CASE("extended XYZ round trip property (1000 random frames)") {
  Rng rng(2026, 2);
  for (int k = 0; k < 1000; ++k) {
    const LabeledFrame f = random_frame(rng);
    const std::string a = io::write_extxyz({f});
    const auto r = io::read_extxyz(a);
    REQUIRE(r.size() == 1);
    REQUIRE(r[0].energy == f.energy);
    for (std::size_t i = 0; i < f.forces.size(); ++i) REQUIRE(r[0].forces[i] == f.forces[i]);
    REQUIRE(r[0].stress == f.stress);
    REQUIRE(r[0].provenance == f.provenance);
    REQUIRE(r[0].structure.species() == f.structure.species());
    REQUIRE(r[0].structure.lattice() == f.structure.lattice());
    for (std::size_t i = 0; i < f.structure.size(); ++i)
      REQUIRE((r[0].structure.cart(i) - f.structure.cart(i)).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE(io::write_extxyz(r) == a);
  }
}

TEST_CASE("multi-frame files keep frame order") {
  Rng rng(5);
  std::vector<LabeledFrame> frames;
  for (int k = 0; k < 7; ++k) frames.push_back(random_frame(rng));
  const auto text = io::write_extxyz(frames);
  const auto back = io::read_extxyz(text);
  REQUIRE(back.size() == frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) CHECK(back[k].energy == frames[k].energy);
}

TEST_CASE("line deletion fuzzing fails cleanly") {
  Rng rng(77);
  for (int k = 0; k < 300; ++k) {
    const Structure s = random_cell(rng);
    for (const std::string& text : {io::write_poscar(s), io::write_extxyz({random_frame(rng)})}) {
      std::vector<std::string> lines;
      std::istringstream in(text);
      for (std::string l; std::getline(in, l);) lines.push_back(l);
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(rng.index(lines.size())));
      std::string cut;
      for (const auto& l : lines) cut += l + "\n";
      expect_clean_failure([&] { io::read_poscar(cut); });
      expect_clean_failure([&] { io::read_extxyz(cut); });
    }
  }
}

TEST_CASE("truncation and garbage fail cleanly") {
  Rng rng(78);
  const std::string text = io::write_extxyz({random_frame(rng)});
  for (std::size_t n = 0; n < text.size(); n += 7) {
    expect_clean_failure([&] { io::read_extxyz(text.substr(0, n)); });
    expect_clean_failure([&] { io::read_poscar(text.substr(0, n)); });
  }
  expect_clean_failure([&] { io::read_poscar("\x01\x02\x03"); });
  CHECK_THROWS_AS(io::read_file("/nonexistent/path/file"), Error);
}

}  // TEST_SUITE
