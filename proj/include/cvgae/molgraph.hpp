//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvgae/tensor.hpp"

namespace cvgae {

using Vec3 = std::array<double, 3>;

enum class BondOrder : int { kSingle = 0, kDouble = 1, kTriple = 2, kAromatic = 3 };

/// Number of edge classes: the four bond orders plus "not bonded".
inline constexpr std::size_t kEdgeClasses = 5;
inline constexpr std::size_t kNoBondClass = 4;

std::string_view bond_order_name(BondOrder order);

struct Atom {
  std::string element;
  int formal_charge = 0;

  bool is_heavy() const { return element != "H"; }
};

struct Bond {
  std::size_t begin = 0;
  std::size_t end = 0;
  BondOrder order = BondOrder::kSingle;
};

/// Atoms plus bond topology. Edge features are defined on the complete graph
/// over the atoms, independent of which pairs are bonded.
struct MolecularGraph {
  std::string id;
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;

  std::size_t atom_count() const { return atoms.size(); }
  std::size_t heavy_atom_count() const;
  std::vector<bool> heavy_mask() const;

  /// Neighbour lists of the bond graph.
  std::vector<std::vector<std::size_t>> adjacency() const;
  std::size_t connected_components() const;
  bool is_connected() const { return connected_components() <= 1; }

  /// Throws std::invalid_argument if a bond endpoint is out of range or a
  /// bond joins an atom to itself.
  void validate() const;
};

struct Conformation {
  std::vector<Vec3> coords;

  std::size_t size() const { return coords.size(); }
  bool all_finite() const;

  friend bool operator==(const Conformation &, const Conformation &) = default;
};

/// Number of unordered pairs on M atoms.
constexpr std::size_t pair_count(std::size_t m) {
  return m < 2 ? 0 : m * (m - 1) / 2;
}

/// Index of the unordered pair {i, j} in lexicographic (i < j) order.
std::size_t pair_index(std::size_t i, std::size_t j, std::size_t m);

/// All unordered pairs (i < j) in lexicographic order.
std::vector<std::pair<std::size_t, std::size_t>> complete_pairs(std::size_t m);

class FeaturizationError: public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Element vocabulary, ordered by atomic number.
struct Vocabulary {
  std::vector<std::string> elements;

  static Vocabulary from_elements(const std::set<std::string> &elements);

  std::optional<std::size_t> index_of(std::string_view element) const;
  std::size_t node_dim() const { return elements.size() + 2; }
  static constexpr std::size_t edge_dim() { return kEdgeClasses; }

  /// Stable 64-bit FNV-1a hash of the vocabulary contents.
  std::uint64_t fingerprint() const;

  friend bool operator==(const Vocabulary &, const Vocabulary &) = default;
};

struct GraphFeatures {
  Tensor node;  // M x node_dim
  Tensor edge;  // pair_count(M) x edge_dim
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  std::size_t atom_count() const { return node.rows(); }
};

/// Node rows are [element one-hot | formal charge | heavy-neighbour count];
/// edge rows are a one-hot over {single, double, triple, aromatic, none}.
GraphFeatures featurize(const MolecularGraph &graph, const Vocabulary &vocab);

/// Symmetric M x M Euclidean distance matrix.
Tensor distance_matrix(const Conformation &conf);

struct FilterProfile {
  std::string name = "custom";
  std::size_t max_heavy = 50;
  /// Permitted elements; empty means any element.
  std::set<std::string> allowed_elements;

  static FilterProfile qm9();
  static FilterProfile cod();
  static FilterProfile csd();
  static FilterProfile by_name(std::string_view name);
};

struct FilterResult {
  bool accepted = true;
  std::string reason;
};

FilterResult filter_molecule(const MolecularGraph &graph,
                             const FilterProfile &profile);

}  // namespace cvgae
