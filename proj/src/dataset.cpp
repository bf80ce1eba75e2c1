//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"

#include "cvgae/hash.hpp"
#include "cvgae/random.hpp"

namespace cvgae {
namespace {
  using nlohmann::json;
}  // namespace

std::vector<std::size_t> Dataset::split(std::string_view name) const {
  if (name == "train")
    return splits.train;
  if (name == "valid")
    return splits.valid;
  if (name == "test")
    return splits.test;
  if (name == "all") {
    std::vector<std::size_t> all(entries.size());
    std::iota(all.begin(), all.end(), std::size_t { 0 });
    return all;
  }
  throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

std::uint64_t Dataset::fingerprint() const {
  Fnv1a h;
  h.u64(vocab.fingerprint());
  for (const auto &e: entries) {
    h.str(e.graph.id);
    for (const auto &a: e.graph.atoms) {
      h.str(a.element);
      h.u64(static_cast<std::uint64_t>(a.formal_charge));
    }
    for (const auto &b: e.graph.bonds) {
      h.u64(b.begin);
      h.u64(b.end);
      h.u64(static_cast<std::uint64_t>(b.order));
    }
    for (const auto &x: e.conformation.coords)
      for (double v: x)
        h.f64(v);
  }
  for (const auto *s: { &splits.train, &splits.valid, &splits.test }) {
    h.u64(s->size());
    for (auto i: *s)
      h.u64(i);
  }
  return h.value();
}

Dataset build_dataset(std::vector<MoleculeRecord> records) {
  std::set<std::string> elements;
  for (const auto &r: records)
    for (const auto &a: r.graph.atoms)
      elements.insert(a.element);

  Dataset ds;
  ds.vocab = Vocabulary::from_elements(elements);
  std::map<std::string, int> id_uses;
  ds.entries.reserve(records.size());
  for (auto &r: records) {
    if (r.graph.atom_count() != r.conformation.size())
      throw std::invalid_argument("conformation size does not match graph for "
                                  + r.graph.id);
    if (!r.conformation.all_finite())
      throw std::invalid_argument("non-finite coordinates in " + r.graph.id);
    int &uses = id_uses[r.graph.id];
    if (uses++ > 0)
      r.graph.id += "_" + std::to_string(uses);
    DatasetEntry e;
    e.features = featurize(r.graph, ds.vocab);
    e.graph = std::move(r.graph);
    e.conformation = std::move(r.conformation);
    ds.entries.push_back(std::move(e));
  }
  ds.splits.train.resize(ds.entries.size());
  std::iota(ds.splits.train.begin(), ds.splits.train.end(), std::size_t { 0 });
  return ds;
}

void split_dataset(Dataset &dataset, std::size_t n_valid, std::size_t n_test,
                   std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (n_valid + n_test > n)
    throw std::invalid_argument(
        "split sizes " + std::to_string(n_valid) + " + " + std::to_string(n_test)
        + " exceed dataset size " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t { 0 });
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Splits s;
  s.valid.assign(order.begin(), order.begin() + static_cast<long>(n_valid));
  s.test.assign(order.begin() + static_cast<long>(n_valid),
                order.begin() + static_cast<long>(n_valid + n_test));
  s.train.assign(order.begin() + static_cast<long>(n_valid + n_test),
                 order.end());
  std::sort(s.valid.begin(), s.valid.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  dataset.splits = std::move(s);
}

// ---------------------------------------------------------------------------
// Bundle

void save_bundle(std::ostream &os, const Dataset &dataset) {
  json root;
  root["format"] = kBundleFormat;
  root["version"] = kBundleVersion;
  root["vocab"] = { { "elements", dataset.vocab.elements },
                    { "edge_classes",
                      { "single", "double", "triple", "aromatic", "none" } } };
  json entries = json::array();
  for (const auto &e: dataset.entries) {
    json atoms = json::array();
    for (const auto &a: e.graph.atoms)
      atoms.push_back({ a.element, a.formal_charge });
    json bonds = json::array();
    for (const auto &b: e.graph.bonds)
      bonds.push_back({ b.begin, b.end, bond_order_name(b.order) });
    json coords = json::array();
    for (const auto &x: e.conformation.coords)
      coords.push_back({ x[0], x[1], x[2] });
    json node = json::array();
    for (std::size_t i = 0; i < e.features.node.rows(); ++i) {
      json row = json::array();
      for (std::size_t c = 0; c < e.features.node.cols(); ++c)
        row.push_back(e.features.node(i, c));
      node.push_back(std::move(row));
    }
    std::vector<int> edge_classes(e.features.edge.rows());
    for (std::size_t p = 0; p < e.features.edge.rows(); ++p)
      for (std::size_t c = 0; c < kEdgeClasses; ++c)
        if (e.features.edge(p, c) == 1.0)
          edge_classes[p] = static_cast<int>(c);
    entries.push_back({ { "id", e.graph.id },
                        { "atoms", std::move(atoms) },
                        { "bonds", std::move(bonds) },
                        { "coords", std::move(coords) },
                        { "node_features", std::move(node) },
                        { "edge_classes", std::move(edge_classes) } });
  }
  root["entries"] = std::move(entries);
  root["splits"] = { { "train", dataset.splits.train },
                     { "valid", dataset.splits.valid },
                     { "test", dataset.splits.test } };
  os << root.dump(1) << '\n';
}

Dataset load_bundle(std::istream &is) {
  json root;
  try {
    root = json::parse(is);
  } catch (const json::exception &e) {
    throw std::runtime_error(std::string("dataset bundle is not valid JSON: ")
                             + e.what());
  }
  try {
    if (root.at("format").get<std::string>() != kBundleFormat)
      throw std::runtime_error("not a cvgae dataset bundle");
    if (root.at("version").get<int>() != kBundleVersion)
      throw std::runtime_error("unsupported dataset bundle version "
                               + std::to_string(root.at("version").get<int>()));
    Dataset ds;
    ds.vocab.elements =
        root.at("vocab").at("elements").get<std::vector<std::string>>();
    for (const auto &je: root.at("entries")) {
      DatasetEntry e;
      e.graph.id = je.at("id").get<std::string>();
      for (const auto &ja: je.at("atoms"))
        e.graph.atoms.push_back(
            Atom { ja.at(0).get<std::string>(), ja.at(1).get<int>() });
      for (const auto &jb: je.at("bonds")) {
        const std::string order = jb.at(2).get<std::string>();
        BondOrder bo;
        if (order == "single")
          bo = BondOrder::kSingle;
        else if (order == "double")
          bo = BondOrder::kDouble;
        else if (order == "triple")
          bo = BondOrder::kTriple;
        else if (order == "aromatic")
          bo = BondOrder::kAromatic;
        else
          throw std::runtime_error("unknown bond order '" + order + "'");
        e.graph.bonds.push_back(
            Bond { jb.at(0).get<std::size_t>(), jb.at(1).get<std::size_t>(), bo });
      }
      for (const auto &jc: je.at("coords"))
        e.conformation.coords.push_back(
            { jc.at(0).get<double>(), jc.at(1).get<double>(),
              jc.at(2).get<double>() });
      if (e.conformation.size() != e.graph.atom_count())
        throw std::runtime_error("entry " + e.graph.id
                                 + ": coordinate count mismatch");
      e.features = featurize(e.graph, ds.vocab);
      const auto &jn = je.at("node_features");
      const auto &jcls = je.at("edge_classes");
      bool consistent = jn.size() == e.features.node.rows()
                        && jcls.size() == e.features.edge.rows();
      for (std::size_t i = 0; consistent && i < jn.size(); ++i)
        for (std::size_t c = 0; consistent && c < e.features.node.cols(); ++c)
          consistent = jn.at(i).at(c).get<double>() == e.features.node(i, c);
      for (std::size_t p = 0; consistent && p < jcls.size(); ++p)
        consistent =
            e.features.edge(p, jcls.at(p).get<std::size_t>()) == 1.0;
      if (!consistent)
        throw std::runtime_error("entry " + e.graph.id
                                 + ": stored features disagree with topology");
      ds.entries.push_back(std::move(e));
    }
    const auto &js = root.at("splits");
    ds.splits.train = js.at("train").get<std::vector<std::size_t>>();
    ds.splits.valid = js.at("valid").get<std::vector<std::size_t>>();
    ds.splits.test = js.at("test").get<std::vector<std::size_t>>();
    std::set<std::size_t> seen;
    for (const auto *s: { &ds.splits.train, &ds.splits.valid, &ds.splits.test })
      for (auto i: *s)
        if (i >= ds.size() || !seen.insert(i).second)
          throw std::runtime_error("split indices overlap or are out of range");
    return ds;
  } catch (const json::exception &e) {
    throw std::runtime_error(std::string("malformed dataset bundle: ")
                             + e.what());
  } catch (const std::invalid_argument &e) {
    throw std::runtime_error(std::string("malformed dataset bundle: ")
                             + e.what());
  }
}

void save_bundle_file(const std::string &path, const Dataset &dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write '" + path + "'");
  save_bundle(out, dataset);
  if (!out)
    throw std::runtime_error("failed writing '" + path + "'");
}

Dataset load_bundle_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open dataset bundle '" + path + "'");
  return load_bundle(in);
}

}  // namespace cvgae
