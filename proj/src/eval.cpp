//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "cvgae/align.hpp"
#include "cvgae/elements.hpp"
#include "cvgae/io.hpp"

namespace cvgae {
namespace {
  // Heavy atoms, or every atom for molecules without any (H2).
  std::vector<bool> eval_mask(const MolecularGraph &graph) {
    std::vector<bool> mask = graph.heavy_mask();
    if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; }))
      mask.assign(mask.size(), true);
    return mask;
  }

  bool produced(const Conformation &c, std::size_t atoms) {
    return c.size() == atoms && c.all_finite();
  }
}  // namespace

double mean_of(std::span<const double> xs) {
  if (xs.empty())
    return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
  if (xs.empty())
    return 0.0;
  const double mu = mean_of(xs);
  double ss = 0.0;
  for (double x: xs)
    ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double median_of(std::vector<double> xs) {
  if (xs.empty())
    throw std::invalid_argument("median of an empty set");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

MoleculeEval evaluate_molecule(const std::string &id, const MolecularGraph &graph,
                               const Conformation &reference,
                               const std::vector<Conformation> &samples) {
  if (reference.size() != graph.atom_count())
    throw std::invalid_argument("reference for " + id + " has wrong atom count");
  const std::vector<bool> mask = eval_mask(graph);
  MoleculeEval me;
  me.id = id;
  me.heavy_atoms = graph.heavy_atom_count();
  for (const auto &s: samples)
    if (produced(s, graph.atom_count()))
      me.rmsds.push_back(aligned_rmsd(s, reference, mask));
  if (!me.rmsds.empty()) {
    me.mean = mean_of(me.rmsds);
    me.std = population_std(me.rmsds);
    me.best = *std::min_element(me.rmsds.begin(), me.rmsds.end());
    me.median = median_of(me.rmsds);
  }
  return me;
}

std::vector<EvalReport> eval_methods(const std::vector<MethodSamples> &methods,
                                     const Dataset &dataset,
                                     const std::vector<std::size_t> &indices) {
  if (indices.empty())
    throw std::invalid_argument("evaluation needs at least one reference");
  std::map<std::string, std::size_t> ref_of;
  for (auto i: indices)
    ref_of.emplace(dataset.entries.at(i).graph.id, i);
  for (const auto &m: methods)
    for (const auto &[id, _]: m.by_id)
      if (!ref_of.contains(id))
        throw std::invalid_argument("method '" + m.method + "': no reference for '"
                                    + id + "'");

  // evals[method][k] for the k-th reference in indices.
  std::vector<std::vector<MoleculeEval>> evals(methods.size());
  std::vector<bool> common(indices.size(), true);
  std::vector<EvalReport> reports(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const MethodSamples &ms = methods[m];
    double any = 0.0, fraction = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const DatasetEntry &e = dataset.entries[indices[k]];
      const auto it = ms.by_id.find(e.graph.id);
      static const std::vector<Conformation> kNone;
      const auto &samples = it == ms.by_id.end() ? kNone : it->second;
      MoleculeEval me = evaluate_molecule(e.graph.id, e.graph, e.conformation, samples);
      const std::size_t want = std::max(ms.requested, samples.size());
      if (!me.rmsds.empty())
        any += 1.0;
      else
        common[k] = false;
      if (want > 0)
        fraction += static_cast<double>(me.rmsds.size()) / static_cast<double>(want);
      evals[m].push_back(std::move(me));
    }
    const double n = static_cast<double>(indices.size());
    reports[m].method = ms.method;
    reports[m].success_per_test_set = any / n;
    reports[m].success_per_molecule = fraction / n;
  }

  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<double> means, stds, bests;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (!common[k])
        continue;
      means.push_back(evals[m][k].mean);
      stds.push_back(evals[m][k].std);
      bests.push_back(evals[m][k].best);
      reports[m].molecules.push_back(std::move(evals[m][k]));
    }
    if (!means.empty()) {
      reports[m].median_of_mean = median_of(means);
      reports[m].median_of_std = median_of(stds);
      reports[m].median_of_best = median_of(bests);
    }
  }
  return reports;
}

EvalReport eval_method(const MethodSamples &samples, const Dataset &dataset,
                       const std::vector<std::size_t> &indices) {
  return eval_methods({ samples }, dataset, indices).front();
}

DiversityStats diversity(const std::vector<std::vector<Conformation>> &samples,
                         const std::vector<std::vector<bool>> &masks) {
  if (masks.size() != samples.size())
    throw std::invalid_argument("diversity: one mask per molecule required");
  std::vector<double> all;
  DiversityStats out;
  for (std::size_t m = 0; m < samples.size(); ++m) {
    const std::size_t n = std::min(samples[m].size(), kMaxDiversitySamples);
    if (n < 2)
      continue;
    ++out.molecules;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        all.push_back(aligned_rmsd(samples[m][a], samples[m][b], masks[m]));
  }
  out.pairs = all.size();
  out.mean = mean_of(all);
  out.std = population_std(all);
  return out;
}

Grouping group_by_heavy_atoms(const std::vector<MoleculeEval> &molecules) {
  std::map<std::size_t, std::vector<const MoleculeEval *>> groups;
  for (const auto &m: molecules)
    groups[m.heavy_atoms].push_back(&m);
  Grouping out;
  if (groups.empty())
    return out;
  const double mean_size =
      static_cast<double>(molecules.size()) / static_cast<double>(groups.size());
  for (const auto &[heavy, members]: groups) {
    std::vector<double> best, median;
    for (const auto *m: members) {
      best.push_back(m->best);
      median.push_back(m->median);
    }
    GroupStats g { heavy, members.size(), mean_of(best), population_std(best),
                   mean_of(median), population_std(median) };
    if (static_cast<double>(g.count) < 0.01 * mean_size)
      out.omitted.push_back(g);
    else
      out.kept.push_back(g);
  }
  return out;
}

std::size_t rotatable_bonds(const MolecularGraph &graph) {
  const auto adj = graph.adjacency();
  auto heavy_degree = [&](std::size_t a) {
    return std::count_if(adj[a].begin(), adj[a].end(),
                         [&](std::size_t b) { return graph.atoms[b].is_heavy(); });
  };
  // Reachability from begin to end with the bond itself removed.
  auto in_cycle = [&](const Bond &bond) {
    std::vector<bool> seen(graph.atom_count(), false);
    std::vector<std::size_t> stack { bond.begin };
    seen[bond.begin] = true;
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (auto b: adj[a]) {
        if ((a == bond.begin && b == bond.end) || (a == bond.end && b == bond.begin))
          continue;
        if (b == bond.end)
          return true;
        if (!seen[b]) {
          seen[b] = true;
          stack.push_back(b);
        }
      }
    }
    return false;
  };
  std::size_t n = 0;
  for (const auto &bond: graph.bonds) {
    if (bond.order != BondOrder::kSingle)
      continue;
    if (!graph.atoms[bond.begin].is_heavy() || !graph.atoms[bond.end].is_heavy())
      continue;
    if (heavy_degree(bond.begin) < 2 || heavy_degree(bond.end) < 2)
      continue;
    if (!in_cycle(bond))
      ++n;
  }
  return n;
}

double molecular_mass(const MolecularGraph &graph) {
  double mass = 0.0;
  for (const auto &a: graph.atoms) {
    const auto info = find_element(a.element);
    if (!info)
      throw std::invalid_argument("unknown element '" + a.element + "'");
    mass += info->standard_weight;
  }
  return mass;
}

DatasetStats dataset_stats(const Dataset &dataset,
                           const std::vector<std::size_t> &indices) {
  DatasetStats out;
  for (auto i: indices) {
    const MolecularGraph &g = dataset.entries.at(i).graph;
    MoleculeStats s;
    s.id = g.id;
    s.atoms = g.atom_count();
    s.heavy_atoms = g.heavy_atom_count();
    s.bonds = g.bonds.size();
    s.rotatable = rotatable_bonds(g);
    s.mass = molecular_mass(g);
    for (const auto &a: g.atoms)
      ++s.element_counts[a.element];
    for (const auto &[el, c]: s.element_counts) {
      out.element_totals[el] += c;
      ++out.element_molecules[el];
    }
    out.molecules.push_back(std::move(s));
  }
  return out;
}

std::vector<Conformation> random_baseline(const MolecularGraph &graph,
                                          std::size_t count, Rng &rng,
                                          double scale) {
  if (count == 0)
    throw std::invalid_argument("random_baseline: count must be >= 1");
  if (!(scale >= 0.0))
    throw std::invalid_argument("random_baseline: scale must be >= 0");
  const std::size_t m = graph.atom_count();
  const double sd = scale * std::cbrt(static_cast<double>(m));
  std::vector<Conformation> out(count);
  for (auto &c: out) {
    c.coords.resize(m);
    for (auto &x: c.coords)
      for (auto &v: x)
        v = sd * standard_normal(rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

void write_molecule_eval_csv(std::ostream &os, const EvalReport &report) {
  os << "method,id,heavy_atoms,samples,mean,std,best,median\n";
  for (const auto &m: report.molecules)
    os << report.method << ',' << m.id << ',' << m.heavy_atoms << ','
       << m.rmsds.size() << ',' << format_double(m.mean) << ','
       << format_double(m.std) << ',' << format_double(m.best) << ','
       << format_double(m.median) << '\n';
}

void write_aggregate_csv(std::ostream &os, const std::vector<EvalReport> &reports) {
  os << "method,molecules,median_of_mean,median_of_std,median_of_best,"
        "success_per_test_set,success_per_molecule\n";
  for (const auto &r: reports)
    os << r.method << ',' << r.molecules.size() << ','
       << format_double(r.median_of_mean) << ',' << format_double(r.median_of_std)
       << ',' << format_double(r.median_of_best) << ','
       << format_double(r.success_per_test_set) << ','
       << format_double(r.success_per_molecule) << '\n';
}

void write_diversity_csv(std::ostream &os, const std::vector<std::string> &methods,
                         const std::vector<DiversityStats> &stats) {
  os << "method,molecules,pairs,mean,std\n";
  for (std::size_t i = 0; i < methods.size() && i < stats.size(); ++i)
    os << methods[i] << ',' << stats[i].molecules << ',' << stats[i].pairs << ','
       << format_double(stats[i].mean) << ',' << format_double(stats[i].std) << '\n';
}

void write_group_csv(std::ostream &os, const std::string &method,
                     const Grouping &grouping, bool header) {
  if (header)
    os << "method,heavy_atoms,count,best_mean,best_std,median_mean,median_std,"
          "omitted\n";
  auto rows = [&](const std::vector<GroupStats> &gs, int omitted) {
    for (const auto &g: gs)
      os << method << ',' << g.heavy_atoms << ',' << g.count << ','
         << format_double(g.best_mean) << ',' << format_double(g.best_std) << ','
         << format_double(g.median_mean) << ',' << format_double(g.median_std)
         << ',' << omitted << '\n';
  };
  rows(grouping.kept, 0);
  rows(grouping.omitted, 1);
}

void write_molecule_stats_csv(std::ostream &os, const DatasetStats &stats) {
  os << "id,atoms,heavy_atoms,bonds,rotatable_bonds,mass\n";
  for (const auto &m: stats.molecules)
    os << m.id << ',' << m.atoms << ',' << m.heavy_atoms << ',' << m.bonds << ','
       << m.rotatable << ',' << format_double(m.mass) << '\n';
}

void write_element_stats_csv(std::ostream &os, const DatasetStats &stats) {
  os << "element,atoms,molecules\n";
  for (const auto &[el, n]: stats.element_totals)
    os << el << ',' << n << ',' << stats.element_molecules.at(el) << '\n';
}

}  // namespace cvgae
