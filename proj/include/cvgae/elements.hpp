//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <optional>
#include <string_view>

namespace cvgae {

struct ElementInfo {
  std::string_view symbol;
  int atomic_number;
  double standard_weight;  // g/mol, conventional IUPAC value
};

/// Lookup by case-sensitive symbol ("Cl", not "CL").
std::optional<ElementInfo> find_element(std::string_view symbol);

/// Accepts all-caps or lowercase spellings found in some molfiles.
std::optional<ElementInfo> find_element_relaxed(std::string_view symbol);

}  // namespace cvgae
