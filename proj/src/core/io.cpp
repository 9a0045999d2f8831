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

#include "matscreen/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "matscreen/elements.hpp"
#include "matscreen/error.hpp"
#include "matscreen/util.hpp"

namespace matscreen {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kOracle: return "oracle";
    case Provenance::kExternal: return "external";
    case Provenance::kPredicted: return "predicted";
  }
  return "external";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "oracle") return Provenance::kOracle;
  if (s == "external") return Provenance::kExternal;
  if (s == "predicted") return Provenance::kPredicted;
  throw InvalidArgument("unknown provenance '" + std::string(s) + "'");
}

void LabeledFrame::validate() const {
  if (forces.size() != structure.size())
    throw InvalidArgument("frame has " + std::to_string(forces.size()) + " force rows for " +
                          std::to_string(structure.size()) + " atoms");
  if ((stress - stress.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw InvalidArgument("frame stress is not symmetric");
}

namespace io {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  // A trailing newline does not start another line.
  if (!lines.empty() && lines.back().empty() && !text.empty() && text.back() == '\n')
    lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double number(std::string_view tok, std::size_t line, const char* what) {
  double v = 0.0;
  if (!parse_double(tok, v))
    throw ParseError(line, std::string("expected ") + what + ", got '" + std::string(tok) + "'");
  return v;
}

bool looks_numeric(std::string_view tok) {
  double v;
  return parse_double(tok, v);
}

std::string element_from_label(std::string_view tok, std::size_t line) {
  // POTCAR-style labels such as "Ca_sv" or "O/abc123".
  std::string sym(tok.substr(0, tok.find_first_of("_/")));
  if (!is_element(sym)) throw ParseError(line, "unknown element symbol '" + sym + "'");
  return sym;
}

std::string join_numbers(std::initializer_list<double> values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ' ';
    out += format_double(v);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// POSCAR
// ---------------------------------------------------------------------------

Structure read_poscar(std::string_view text) {
  const auto lines = split_lines(text);
  auto line_at = [&](std::size_t lineno, const char* what) -> std::string_view {
    if (lineno > lines.size())
      throw ParseError(lineno, std::string("unexpected end of file, expected ") + what);
    return lines[lineno - 1];
  };

  std::string comment(line_at(1, "comment line"));
  while (!comment.empty() && std::isspace(static_cast<unsigned char>(comment.back())))
    comment.pop_back();

  const auto scale_tokens = split_ws(line_at(2, "scale factor"));
  if (scale_tokens.size() != 1 && scale_tokens.size() != 3)
    throw ParseError(2, "expected one or three scale factors");
  Vec3 axis_scale = Vec3::Ones();
  double scale = 1.0;
  if (scale_tokens.size() == 1) {
    scale = number(scale_tokens[0], 2, "scale factor");
    if (scale == 0.0) throw ParseError(2, "scale factor must be nonzero");
  } else {
    for (int k = 0; k < 3; ++k) {
      axis_scale[k] = number(scale_tokens[k], 2, "scale factor");
      if (axis_scale[k] <= 0.0) throw ParseError(2, "per-axis scale factors must be positive");
    }
  }

  Mat3 lattice;
  for (int r = 0; r < 3; ++r) {
    const std::size_t lineno = 3 + r;
    const auto toks = split_ws(line_at(lineno, "lattice vector"));
    if (toks.size() < 3) throw ParseError(lineno, "lattice vector needs three components");
    for (int c = 0; c < 3; ++c) lattice(r, c) = number(toks[c], lineno, "lattice component");
  }

  const auto species_toks = split_ws(line_at(6, "species line"));
  if (species_toks.empty() || looks_numeric(species_toks[0]))
    throw ParseError(6, "species line missing (VASP 5 format required)");
  std::vector<std::string> group_species;
  for (auto tok : species_toks) group_species.push_back(element_from_label(tok, 6));

  const auto count_toks = split_ws(line_at(7, "atom counts"));
  if (count_toks.size() != group_species.size())
    throw ParseError(7, "expected " + std::to_string(group_species.size()) +
                            " atom counts, found " + std::to_string(count_toks.size()));
  std::vector<std::string> species;
  for (std::size_t g = 0; g < count_toks.size(); ++g) {
    long long n = 0;
    if (!parse_int(count_toks[g], n) || n < 1)
      throw ParseError(7, "invalid atom count '" + std::string(count_toks[g]) + "'");
    species.insert(species.end(), static_cast<std::size_t>(n), group_species[g]);
  }

  std::size_t lineno = 8;
  auto mode_line = split_ws(line_at(lineno, "coordinate mode"));
  if (!mode_line.empty() && (mode_line[0][0] == 'S' || mode_line[0][0] == 's')) {
    ++lineno;
    mode_line = split_ws(line_at(lineno, "coordinate mode"));
  }
  if (mode_line.empty()) throw ParseError(lineno, "missing coordinate mode line");
  const char mode = static_cast<char>(std::tolower(static_cast<unsigned char>(mode_line[0][0])));
  const bool cartesian = mode == 'c' || mode == 'k';
  if (!cartesian && mode != 'd')
    throw ParseError(lineno, "coordinate mode must be Direct or Cartesian, got '" +
                                 std::string(mode_line[0]) + "'");

  std::vector<Vec3> coords;
  coords.reserve(species.size());
  for (std::size_t a = 0; a < species.size(); ++a) {
    const std::size_t ln = lineno + 1 + a;
    const auto toks = split_ws(line_at(ln, "atomic coordinates"));
    if (toks.size() < 3) throw ParseError(ln, "coordinate line needs three values");
    coords.emplace_back(number(toks[0], ln, "coordinate"), number(toks[1], ln, "coordinate"),
                        number(toks[2], ln, "coordinate"));
  }

  // Scaling: a single negative value is the target volume.
  Mat3 scaled = lattice;
  double factor = 1.0;
  if (scale_tokens.size() == 3) {
    for (int c = 0; c < 3; ++c) scaled.col(c) *= axis_scale[c];
  } else if (scale < 0.0) {
    const double v = lattice.determinant();
    if (!(v > 0.0)) throw ParseError(3, "lattice must be right-handed with nonzero volume");
    factor = std::cbrt(-scale / v);
    scaled *= factor;
  } else if (scale != 1.0) {
    factor = scale;
    scaled *= factor;
  }
  if (!(scaled.determinant() > 0.0))
    throw ParseError(3, "lattice must be right-handed with nonzero volume");

  Structure::Tags tags;
  if (!comment.empty()) tags["comment"] = comment;
  if (cartesian) {
    for (auto& r : coords) {
      if (scale_tokens.size() == 3)
        r = r.cwiseProduct(axis_scale);
      else if (factor != 1.0)
        r *= factor;
    }
    return Structure::from_cartesian(std::move(species), coords, scaled, std::move(tags));
  }
  return Structure(std::move(species), std::move(coords), scaled, std::move(tags));
}

std::string write_poscar(const Structure& s) {
  std::string comment = s.formula();
  if (auto it = s.tags().find("comment"); it != s.tags().end() && !it->second.empty())
    comment = it->second;
  std::replace(comment.begin(), comment.end(), '\n', ' ');

  std::ostringstream out;
  out << comment << "\n1.0\n";
  const Mat3& L = s.lattice();
  for (int r = 0; r < 3; ++r) out << "  " << join_numbers({L(r, 0), L(r, 1), L(r, 2)}) << "\n";

  // Consecutive runs keep the atom order intact.
  std::vector<std::pair<std::string, std::size_t>> runs;
  for (const auto& sym : s.species()) {
    if (runs.empty() || runs.back().first != sym)
      runs.emplace_back(sym, 1);
    else
      ++runs.back().second;
  }
  for (std::size_t g = 0; g < runs.size(); ++g) out << (g ? " " : "  ") << runs[g].first;
  out << "\n";
  for (std::size_t g = 0; g < runs.size(); ++g) out << (g ? " " : "  ") << runs[g].second;
  out << "\nDirect\n";
  for (const auto& f : s.frac_coords()) out << "  " << join_numbers({f[0], f[1], f[2]}) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Extended XYZ
// ---------------------------------------------------------------------------

namespace {

struct Property {
  std::string name;
  char type;
  int columns;
};

struct XyzHeader {
  std::map<std::string, std::string> values;  // lower-cased keys
  std::vector<Property> properties;
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

XyzHeader parse_comment_line(std::string_view line, std::size_t lineno) {
  XyzHeader h;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    std::size_t k = i;
    while (k < line.size() && line[k] != '=' && !std::isspace(static_cast<unsigned char>(line[k])))
      ++k;
    const std::string key = lower(line.substr(i, k - i));
    std::string value = "T";
    if (k < line.size() && line[k] == '=') {
      ++k;
      if (k < line.size() && line[k] == '"') {
        const std::size_t close = line.find('"', k + 1);
        if (close == std::string_view::npos)
          throw ParseError(lineno, "unterminated quoted value for key '" + key + "'");
        value = std::string(line.substr(k + 1, close - k - 1));
        k = close + 1;
      } else {
        std::size_t e = k;
        while (e < line.size() && !std::isspace(static_cast<unsigned char>(line[e]))) ++e;
        value = std::string(line.substr(k, e - k));
        k = e;
      }
    }
    if (key.empty()) throw ParseError(lineno, "empty key on comment line");
    h.values[key] = value;
    i = k;
  }

  if (auto it = h.values.find("properties"); it != h.values.end()) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : it->second) {
      if (c == ':') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    parts.push_back(cur);
    if (parts.size() % 3 != 0) throw ParseError(lineno, "malformed Properties specification");
    for (std::size_t p = 0; p < parts.size(); p += 3) {
      long long cols = 0;
      if (parts[p + 1].size() != 1 || !parse_int(parts[p + 2], cols) || cols < 1)
        throw ParseError(lineno, "malformed Properties entry '" + parts[p] + "'");
      h.properties.push_back({parts[p], parts[p + 1][0], static_cast<int>(cols)});
    }
  }
  return h;
}

std::vector<double> number_list(const std::string& value, std::size_t expected, std::size_t lineno,
                                const char* key) {
  const auto toks = split_ws(value);
  if (toks.size() != expected)
    throw ParseError(lineno, std::string(key) + " needs " + std::to_string(expected) +
                                 " values, found " + std::to_string(toks.size()));
  std::vector<double> out;
  for (auto t : toks) out.push_back(number(t, lineno, key));
  return out;
}

struct RawFrame {
  Structure structure;
  std::optional<std::vector<Vec3>> forces;
  XyzHeader header;
  std::size_t comment_line = 0;
};

std::vector<RawFrame> parse_frames(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<RawFrame> frames;
  std::size_t ln = 0;  // zero-based index of the next line
  while (ln < lines.size()) {
    if (split_ws(lines[ln]).empty()) {  // blank separator lines
      ++ln;
      continue;
    }
    const std::size_t count_line = ln + 1;
    const auto count_toks = split_ws(lines[ln]);
    long long n = 0;
    if (count_toks.size() != 1 || !parse_int(count_toks[0], n) || n < 1)
      throw ParseError(count_line, "expected atom count");
    if (ln + 1 >= lines.size()) throw ParseError(count_line + 1, "missing comment line");
    const std::size_t comment_line = ln + 2;
    RawFrame frame;
    frame.header = parse_comment_line(lines[ln + 1], comment_line);
    frame.comment_line = comment_line;
    const auto& values = frame.header.values;

    auto lat_it = values.find("lattice");
    if (lat_it == values.end()) throw ParseError(comment_line, "missing Lattice");
    const auto lat = number_list(lat_it->second, 9, comment_line, "Lattice");
    Mat3 lattice;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) lattice(r, c) = lat[3 * r + c];
    if (!(lattice.determinant() > 0.0))
      throw ParseError(comment_line, "lattice must be right-handed with nonzero volume");

    if (frame.header.properties.empty()) throw ParseError(comment_line, "missing Properties");
    int total_cols = 0;
    int species_col = -1, pos_col = -1, force_col = -1;
    for (const auto& p : frame.header.properties) {
      const std::string name = lower(p.name);
      if (name == "species" && p.type == 'S' && p.columns == 1) species_col = total_cols;
      if (name == "pos" && p.type == 'R' && p.columns == 3) pos_col = total_cols;
      if (name == "forces" && p.type == 'R' && p.columns == 3) force_col = total_cols;
      total_cols += p.columns;
    }
    if (species_col < 0) throw ParseError(comment_line, "missing species property");
    if (pos_col < 0) throw ParseError(comment_line, "missing pos property");

    std::vector<std::string> species;
    std::vector<Vec3> pos;
    std::vector<Vec3> forces;
    for (long long a = 0; a < n; ++a) {
      const std::size_t idx = ln + 2 + static_cast<std::size_t>(a);
      if (idx >= lines.size())
        throw ParseError(idx + 1, "count mismatch: expected " + std::to_string(n) + " atom lines");
      const auto toks = split_ws(lines[idx]);
      if (static_cast<int>(toks.size()) != total_cols)
        throw ParseError(idx + 1, "expected " + std::to_string(total_cols) + " columns, found " +
                                      std::to_string(toks.size()));
      species.push_back(element_from_label(toks[species_col], idx + 1));
      pos.emplace_back(number(toks[pos_col], idx + 1, "position"),
                       number(toks[pos_col + 1], idx + 1, "position"),
                       number(toks[pos_col + 2], idx + 1, "position"));
      if (force_col >= 0)
        forces.emplace_back(number(toks[force_col], idx + 1, "force"),
                            number(toks[force_col + 1], idx + 1, "force"),
                            number(toks[force_col + 2], idx + 1, "force"));
    }
    frame.structure = Structure::from_cartesian(std::move(species), pos, lattice);
    if (force_col >= 0) frame.forces = std::move(forces);
    frames.push_back(std::move(frame));
    ln += 2 + static_cast<std::size_t>(n);
  }
  return frames;
}

std::string lattice_value(const Mat3& L) {
  return join_numbers({L(0, 0), L(0, 1), L(0, 2), L(1, 0), L(1, 1), L(1, 2), L(2, 0), L(2, 1),
                       L(2, 2)});
}

}  // namespace

std::vector<LabeledFrame> read_extxyz(std::string_view text) {
  auto raw = parse_frames(text);
  std::vector<LabeledFrame> frames;
  frames.reserve(raw.size());
  for (auto& r : raw) {
    const auto& values = r.header.values;
    if (!r.forces) throw ParseError(r.comment_line, "missing forces");
    auto e_it = values.find("energy");
    if (e_it == values.end()) throw ParseError(r.comment_line, "missing energy");
    auto s_it = values.find("stress");
    if (s_it == values.end()) throw ParseError(r.comment_line, "missing stress");

    LabeledFrame f;
    f.structure = std::move(r.structure);
    f.forces = std::move(*r.forces);
    f.energy = number(e_it->second, r.comment_line, "energy");
    const auto st = number_list(s_it->second, 9, r.comment_line, "stress");
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) f.stress(a, b) = st[3 * a + b];
    f.stress = 0.5 * (f.stress + f.stress.transpose()).eval();
    if (auto p = values.find("provenance"); p != values.end()) {
      try {
        f.provenance = provenance_from_string(p->second);
      } catch (const InvalidArgument& e) {
        throw ParseError(r.comment_line, e.what());
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

std::string write_extxyz(const std::vector<LabeledFrame>& frames) {
  std::ostringstream out;
  for (const auto& f : frames) {
    f.validate();
    const auto& s = f.structure;
    const Mat3& S = f.stress;
    out << s.size() << "\n";
    out << "Lattice=\"" << lattice_value(s.lattice())
        << "\" Properties=species:S:1:pos:R:3:forces:R:3 energy=" << format_double(f.energy)
        << " stress=\"" << lattice_value(S) << "\" provenance=" << to_string(f.provenance)
        << " pbc=\"T T T\"\n";
    const auto cart = s.cart_coords();
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.species(i) << " "
          << join_numbers({cart[i][0], cart[i][1], cart[i][2], f.forces[i][0], f.forces[i][1],
                           f.forces[i][2]})
          << "\n";
    }
  }
  return out.str();
}

std::vector<Structure> read_extxyz_structures(std::string_view text) {
  auto raw = parse_frames(text);
  std::vector<Structure> out;
  out.reserve(raw.size());
  for (auto& r : raw) {
    Structure::Tags tags;
    for (const char* key : {"id", "comment"})
      if (auto it = r.header.values.find(key); it != r.header.values.end()) tags[key] = it->second;
    out.push_back(Structure::from_cartesian(r.structure.species(), r.structure.cart_coords(),
                                            r.structure.lattice(), std::move(tags)));
  }
  return out;
}

std::string write_extxyz_structures(const std::vector<Structure>& structures) {
  std::ostringstream out;
  for (const auto& s : structures) {
    out << s.size() << "\n";
    out << "Lattice=\"" << lattice_value(s.lattice()) << "\" Properties=species:S:1:pos:R:3";
    if (auto it = s.tags().find("id"); it != s.tags().end()) out << " id=" << it->second;
    out << " pbc=\"T T T\"\n";
    const auto cart = s.cart_coords();
    for (std::size_t i = 0; i < s.size(); ++i)
      out << s.species(i) << " " << join_numbers({cart[i][0], cart[i][1], cart[i][2]}) << "\n";
  }
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace io
}  // namespace matscreen
