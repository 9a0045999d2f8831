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

#include "matscreen/elements.hpp"

#include <array>
#include <string>

#include "matscreen/error.hpp"

namespace matscreen {

namespace {

// Standard atomic weights; covalent radii from Cordero et al. (2008).
constexpr std::array kElements = {
    Element{"H", 1, 1.008, 0.31},     Element{"He", 2, 4.0026, 0.28},
    Element{"Li", 3, 6.94, 1.28},     Element{"Be", 4, 9.0122, 0.96},
    Element{"B", 5, 10.81, 0.84},     Element{"C", 6, 12.011, 0.76},
    Element{"N", 7, 14.007, 0.71},    Element{"O", 8, 15.999, 0.66},
    Element{"F", 9, 18.998, 0.57},    Element{"Ne", 10, 20.180, 0.58},
    Element{"Na", 11, 22.990, 1.66},  Element{"Mg", 12, 24.305, 1.41},
    Element{"Al", 13, 26.982, 1.21},  Element{"Si", 14, 28.085, 1.11},
    Element{"P", 15, 30.974, 1.07},   Element{"S", 16, 32.06, 1.05},
    Element{"Cl", 17, 35.45, 1.02},   Element{"Ar", 18, 39.948, 1.06},
    Element{"K", 19, 39.098, 2.03},   Element{"Ca", 20, 40.078, 1.76},
    Element{"Sc", 21, 44.956, 1.70},  Element{"Ti", 22, 47.867, 1.60},
    Element{"V", 23, 50.942, 1.53},   Element{"Cr", 24, 51.996, 1.39},
    Element{"Mn", 25, 54.938, 1.39},  Element{"Fe", 26, 55.845, 1.32},
    Element{"Co", 27, 58.933, 1.26},  Element{"Ni", 28, 58.693, 1.24},
    Element{"Cu", 29, 63.546, 1.32},  Element{"Zn", 30, 65.38, 1.22},
    Element{"Ga", 31, 69.723, 1.22},  Element{"Ge", 32, 72.630, 1.20},
    Element{"As", 33, 74.922, 1.19},  Element{"Se", 34, 78.971, 1.20},
    Element{"Br", 35, 79.904, 1.20},  Element{"Kr", 36, 83.798, 1.16},
    Element{"Rb", 37, 85.468, 2.20},  Element{"Sr", 38, 87.62, 1.95},
    Element{"Y", 39, 88.906, 1.90},   Element{"Zr", 40, 91.224, 1.75},
    Element{"Nb", 41, 92.906, 1.64},  Element{"Mo", 42, 95.95, 1.54},
    Element{"Ru", 44, 101.07, 1.46},  Element{"Rh", 45, 102.91, 1.42},
    Element{"Pd", 46, 106.42, 1.39},  Element{"Ag", 47, 107.87, 1.45},
    Element{"Cd", 48, 112.41, 1.44},  Element{"In", 49, 114.82, 1.42},
    Element{"Sn", 50, 118.71, 1.39},  Element{"Sb", 51, 121.76, 1.39},
    Element{"Te", 52, 127.60, 1.38},  Element{"I", 53, 126.90, 1.39},
    Element{"Xe", 54, 131.29, 1.40},  Element{"Cs", 55, 132.91, 2.44},
    Element{"Ba", 56, 137.33, 2.15},  Element{"La", 57, 138.91, 2.07},
    Element{"W", 74, 183.84, 1.62},   Element{"Pt", 78, 195.08, 1.36},
    Element{"Au", 79, 196.97, 1.36},  Element{"Pb", 82, 207.2, 1.46},
};

}  // namespace

const Element* find_element(std::string_view symbol) {
  for (const auto& e : kElements)
    if (e.symbol == symbol) return &e;
  return nullptr;
}

const Element& element(std::string_view symbol) {
  const Element* e = find_element(symbol);
  if (e == nullptr) throw InvalidArgument("unknown element symbol '" + std::string(symbol) + "'");
  return *e;
}

}  // namespace matscreen
