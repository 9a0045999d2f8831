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

#include <string_view>

namespace matscreen {

struct Element {
  std::string_view symbol;
  int number;
  double mass;             // amu
  double covalent_radius;  // A
};

/// Looks up an element by symbol; returns nullptr when unknown.
const Element* find_element(std::string_view symbol);

/// Throws InvalidArgument for unknown symbols.
const Element& element(std::string_view symbol);

inline bool is_element(std::string_view symbol) { return find_element(symbol) != nullptr; }

}  // namespace matscreen
