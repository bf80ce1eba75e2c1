//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cvgae/dataset.hpp"
#include "cvgae/molgraph.hpp"
#include "cvgae/random.hpp"

namespace cvgae {

double mean_of(std::span<const double> xs);
/// Population standard deviation (divides by n).
double population_std(std::span<const double> xs);
/// Middle value, or the average of the two middle values for even n.
double median_of(std::vector<double> xs);

struct MoleculeEval {
  std::string id;
  std::size_t heavy_atoms = 0;
  std::vector<double> rmsds;  // heavy-atom aligned, one per successful sample
  double mean = 0.0;
  double std = 0.0;
  double best = 0.0;
  double median = 0.0;
};

/// Heavy-atom aligned RMSD of each sample against @p reference.
MoleculeEval evaluate_molecule(const std::string &id, const MolecularGraph &graph,
                               const Conformation &reference,
                               const std::vector<Conformation> &samples);

/// Output of one generation method: per molecule id, the conformations it
/// produced, plus how many it was asked for.
struct MethodSamples {
  std::string method;
  std::size_t requested = 0;
  std::map<std::string, std::vector<Conformation>> by_id;
};

struct EvalReport {
  std::string method;
  std::vector<MoleculeEval> molecules;  // only molecules in the common set
  double median_of_mean = 0.0;
  double median_of_std = 0.0;
  double median_of_best = 0.0;
  double success_per_test_set = 0.0;
  double success_per_molecule = 0.0;
};

/// Evaluates every method against the references selected by @p indices.
/// A conformation counts as produced when it has the right atom count and
/// finite coordinates. Medians use only molecules for which every method
/// produced at least one conformation. Sample ids that are not among the
/// references are an error.
std::vector<EvalReport> eval_methods(const std::vector<MethodSamples> &methods,
                                     const Dataset &dataset,
                                     const std::vector<std::size_t> &indices);

EvalReport eval_method(const MethodSamples &samples, const Dataset &dataset,
                       const std::vector<std::size_t> &indices);

struct DiversityStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t pairs = 0;
  std::size_t molecules = 0;
};

inline constexpr std::size_t kMaxDiversitySamples = 100;

/// Pooled mean and population std of heavy-atom aligned RMSD over every
/// unordered pair of samples (first kMaxDiversitySamples per molecule).
/// Molecules with fewer than two samples are skipped.
DiversityStats diversity(const std::vector<std::vector<Conformation>> &samples,
                         const std::vector<std::vector<bool>> &masks);

struct GroupStats {
  std::size_t heavy_atoms = 0;
  std::size_t count = 0;
  double best_mean = 0.0;
  double best_std = 0.0;
  double median_mean = 0.0;
  double median_std = 0.0;
};

struct Grouping {
  std::vector<GroupStats> kept;
  std::vector<GroupStats> omitted;
};

/// Groups molecules by heavy-atom count. A group is omitted when its size
/// is below 1% of the mean group size.
Grouping group_by_heavy_atoms(const std::vector<MoleculeEval> &molecules);

/// Acyclic single bonds between heavy atoms that each have at least two
/// heavy neighbours. A bond is cyclic when its endpoints stay connected
/// without it.
std::size_t rotatable_bonds(const MolecularGraph &graph);

/// Sum of standard atomic weights (g/mol).
double molecular_mass(const MolecularGraph &graph);

struct MoleculeStats {
  std::string id;
  std::size_t atoms = 0;
  std::size_t heavy_atoms = 0;
  std::size_t bonds = 0;
  std::size_t rotatable = 0;
  double mass = 0.0;
  std::map<std::string, std::size_t> element_counts;
};

struct DatasetStats {
  std::vector<MoleculeStats> molecules;
  std::map<std::string, std::size_t> element_totals;
  // Molecules containing each element at least once.
  std::map<std::string, std::size_t> element_molecules;
};

DatasetStats dataset_stats(const Dataset &dataset,
                           const std::vector<std::size_t> &indices);

/// I.i.d. centered normal coordinates with sd = scale * M^(1/3) Angstrom.
std::vector<Conformation> random_baseline(const MolecularGraph &graph,
                                          std::size_t count, Rng &rng,
                                          double scale = 1.0);

void write_molecule_eval_csv(std::ostream &os, const EvalReport &report);
void write_aggregate_csv(std::ostream &os, const std::vector<EvalReport> &reports);
void write_diversity_csv(std::ostream &os, const std::vector<std::string> &methods,
                         const std::vector<DiversityStats> &stats);
void write_group_csv(std::ostream &os, const std::string &method,
                     const Grouping &grouping, bool header = true);
void write_molecule_stats_csv(std::ostream &os, const DatasetStats &stats);
void write_element_stats_csv(std::ostream &os, const DatasetStats &stats);

}  // namespace cvgae
