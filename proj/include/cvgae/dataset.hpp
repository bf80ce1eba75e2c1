//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cvgae/io.hpp"
#include "cvgae/molgraph.hpp"

namespace cvgae {

struct DatasetEntry {
  MolecularGraph graph;
  Conformation conformation;
  GraphFeatures features;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

struct Dataset {
  std::vector<DatasetEntry> entries;
  Splits splits;
  Vocabulary vocab;

  std::size_t size() const { return entries.size(); }

  /// Indices of a named split: "train", "valid", "test" or "all".
  std::vector<std::size_t> split(std::string_view name) const;

  /// Hash over ids, atoms, bonds, coordinates, vocab and splits.
  std::uint64_t fingerprint() const;
};

/// Derives the element vocabulary from the records, featurizes them and
/// makes ids unique. No splits are assigned.
Dataset build_dataset(std::vector<MoleculeRecord> records);

/// Uniform random disjoint valid/test selection under @p seed; the
/// remainder (sorted) becomes the training split.
void split_dataset(Dataset &dataset, std::size_t n_valid, std::size_t n_test,
                   std::uint64_t seed);

inline constexpr std::string_view kBundleFormat = "cvgae-dataset";
inline constexpr int kBundleVersion = 1;

/// JSON bundle holding vocab, per-entry atoms, bonds, coordinates, node
/// features, edge classes and split indices.
void save_bundle(std::ostream &os, const Dataset &dataset);
Dataset load_bundle(std::istream &is);

void save_bundle_file(const std::string &path, const Dataset &dataset);
Dataset load_bundle_file(const std::string &path);

}  // namespace cvgae
