//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/molgraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cvgae/elements.hpp"

namespace cvgae {

std::string_view bond_order_name(BondOrder order) {
  switch (order) {
  case BondOrder::kSingle:
    return "single";
  case BondOrder::kDouble:
    return "double";
  case BondOrder::kTriple:
    return "triple";
  case BondOrder::kAromatic:
    return "aromatic";
  }
  return "unknown";
}

std::size_t MolecularGraph::heavy_atom_count() const {
  return static_cast<std::size_t>(std::count_if(
      atoms.begin(), atoms.end(), [](const Atom &a) { return a.is_heavy(); }));
}

std::vector<bool> MolecularGraph::heavy_mask() const {
  std::vector<bool> mask(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i)
    mask[i] = atoms[i].is_heavy();
  return mask;
}

std::vector<std::vector<std::size_t>> MolecularGraph::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(atoms.size());
  for (const auto &b: bonds) {
    adj[b.begin].push_back(b.end);
    adj[b.end].push_back(b.begin);
  }
  return adj;
}

std::size_t MolecularGraph::connected_components() const {
  const std::size_t m = atoms.size();
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), std::size_t { 0 });
  auto find = [&](std::size_t x) {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = m;
  for (const auto &b: bonds) {
    const std::size_t ra = find(b.begin), rb = find(b.end);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components;
}

void MolecularGraph::validate() const {
  for (const auto &b: bonds) {
    if (b.begin >= atoms.size() || b.end >= atoms.size())
      throw std::invalid_argument("bond endpoint out of range");
    if (b.begin == b.end)
      throw std::invalid_argument("bond joins an atom to itself");
  }
}

bool Conformation::all_finite() const {
  return std::all_of(coords.begin(), coords.end(), [](const Vec3 &x) {
    return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
  });
}

std::size_t pair_index(std::size_t i, std::size_t j, std::size_t m) {
  if (i > j)
    std::swap(i, j);
  if (i == j || j >= m)
    throw std::out_of_range("pair_index: invalid pair");
  return i * m - i * (i + 1) / 2 + (j - i - 1);
}

std::vector<std::pair<std::size_t, std::size_t>> complete_pairs(std::size_t m) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(pair_count(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      pairs.emplace_back(i, j);
  return pairs;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::from_elements(const std::set<std::string> &elements) {
  Vocabulary vocab;
  vocab.elements.assign(elements.begin(), elements.end());
  auto z = [](const std::string &s) {
    auto e = find_element(s);
    return e ? e->atomic_number : 1000;
  };
  std::stable_sort(vocab.elements.begin(), vocab.elements.end(),
                   [&](const std::string &a, const std::string &b) {
                     const int za = z(a), zb = z(b);
                     return za != zb ? za < zb : a < b;
                   });
  return vocab;
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view element) const {
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (elements[i] == element)
      return i;
  return std::nullopt;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto &e: elements) {
    for (char c: e)
      mix(static_cast<unsigned char>(c));
    mix(0);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Features

GraphFeatures featurize(const MolecularGraph &graph, const Vocabulary &vocab) {
  graph.validate();
  const std::size_t m = graph.atom_count();
  const std::size_t dv = vocab.node_dim();

  GraphFeatures f;
  f.node = Tensor(m, dv);
  f.pairs = complete_pairs(m);
  f.edge = Tensor(f.pairs.size(), Vocabulary::edge_dim());

  std::vector<int> heavy_neighbours(m, 0);
  for (const auto &b: graph.bonds) {
    if (graph.atoms[b.end].is_heavy())
      ++heavy_neighbours[b.begin];
    if (graph.atoms[b.begin].is_heavy())
      ++heavy_neighbours[b.end];
  }

  for (std::size_t i = 0; i < m; ++i) {
    const auto &atom = graph.atoms[i];
    auto slot = vocab.index_of(atom.element);
    if (!slot)
      throw FeaturizationError("element '" + atom.element
                               + "' is not in the vocabulary");
    f.node(i, *slot) = 1.0;
    f.node(i, dv - 2) = atom.formal_charge;
    f.node(i, dv - 1) = heavy_neighbours[i];
  }

  for (std::size_t p = 0; p < f.pairs.size(); ++p)
    f.edge(p, kNoBondClass) = 1.0;
  for (const auto &b: graph.bonds) {
    const std::size_t p = pair_index(b.begin, b.end, m);
    f.edge(p, kNoBondClass) = 0.0;
    f.edge(p, static_cast<std::size_t>(b.order)) = 1.0;
  }
  return f;
}

Tensor distance_matrix(const Conformation &conf) {
  const std::size_t m = conf.size();
  Tensor d(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double dx = conf.coords[i][0] - conf.coords[j][0];
      const double dy = conf.coords[i][1] - conf.coords[j][1];
      const double dz = conf.coords[i][2] - conf.coords[j][2];
      const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
      d(i, j) = r;
      d(j, i) = r;
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Filters

FilterProfile FilterProfile::qm9() {
  return { "qm9", 9, { "C", "N", "O", "F" } };
}

FilterProfile FilterProfile::cod() {
  return { "cod",
           50,
           { "B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Ge", "As", "Se",
             "Br", "Te", "I" } };
}

FilterProfile FilterProfile::csd() {
  return { "csd",
           50,
           { "S",  "N",  "P",  "Be", "Tc", "Xe", "Br", "Rh", "Os", "Zr",
             "In", "As", "Mo", "Dy", "Nb", "La", "Te", "Th", "Ga", "Tl",
             "Y",  "Cr", "F",  "Fe", "Sb", "Yb", "Tb", "Pu", "Am", "Re",
             "Eu", "Hg", "Mn", "Lu", "Nd", "Ce", "Ge", "Sc", "Gd", "Ca",
             "Ti", "Sn", "Ir", "Al", "K",  "Tm", "Ni", "Er", "Co", "Bi",
             "Pr", "Rb", "Sm", "O",  "Pt", "Hf", "Se", "Np", "Cd", "Pd",
             "Pb", "Ho", "Ag", "Mg", "Zn", "Ta", "V",  "B",  "Ru", "W",
             "Cl", "Au", "U",  "Si", "Li", "C",  "I" } };
}

FilterProfile FilterProfile::by_name(std::string_view name) {
  if (name == "qm9")
    return qm9();
  if (name == "cod")
    return cod();
  if (name == "csd")
    return csd();
  throw std::invalid_argument("unknown filter profile: " + std::string(name));
}

FilterResult filter_molecule(const MolecularGraph &graph,
                             const FilterProfile &profile) {
  const std::size_t heavy = graph.heavy_atom_count();
  if (heavy > profile.max_heavy)
    return { false, "heavy-atom cap: " + std::to_string(heavy) + " > "
                        + std::to_string(profile.max_heavy) };
  if (!profile.allowed_elements.empty()) {
    for (const auto &a: graph.atoms) {
      if (a.is_heavy() && !profile.allowed_elements.contains(a.element))
        return { false, "element not allowed: " + a.element };
    }
  }
  if (!graph.is_connected())
    return { false, "disconnected: "
                        + std::to_string(graph.connected_components())
                        + " fragments" };
  return { true, {} };
}

}  // namespace cvgae
